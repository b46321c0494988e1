//! Event traces of single use-case executions.
//!
//! A trace is a flat, ordered list of events. Calls to service candidates
//! appear as the four-event pattern `Invocation`, `Entry`, ..., `Exit`,
//! `Return`; the gaps `Entry - Invocation` and `Return - Exit` are the
//! observed invocation overhead.

mod io;
mod spans;
mod validate;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

pub use io::{
    read_traces, trace_from_json, trace_to_json, write_traces, FormatError, NameInterner, TraceError, TraceReader,
};
pub use spans::{build_overlays, build_span_tree, OverlayKind, OverlayState, Span, SpanOverlay, SpanTree};
pub use validate::{validate_trace, TraceViolation, ValidationError};

/// Shared, immutable name. Traces repeat the same few names millions of times.
pub type Name = Arc<str>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Demarcation {
    Explicit,
    Implicit,
}

impl Demarcation {
    pub fn as_str(self) -> &'static str {
        match self {
            Demarcation::Explicit => "EXPLICIT",
            Demarcation::Implicit => "IMPLICIT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EntityRef {
    pub entity_type: Name,
    pub entity_id: Name,
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.entity_type, self.entity_id)
    }
}

pub type TxId = u64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    UseCaseStart {
        name: Name,
    },
    UseCaseEnd {
        name: Name,
    },
    Invocation {
        candidate: Name,
    },
    Entry {
        candidate: Name,
        tx_started: bool,
    },
    Exit {
        candidate: Name,
    },
    Return {
        candidate: Name,
    },
    TxStart {
        tx_id: TxId,
        demarcation: Demarcation,
    },
    TxCommit {
        tx_id: TxId,
    },
    /// For an explicitly demarcated transaction this is its rollback. For a
    /// container-managed one it marks the transaction rollback-only; the
    /// transaction ends aborted at its regular commit point.
    TxAbort {
        tx_id: TxId,
        cause: Name,
    },
    EntityRead {
        entity: EntityRef,
    },
    EntityWrite {
        entity: EntityRef,
    },
}

impl EventKind {
    pub fn type_name(&self) -> &'static str {
        match self {
            EventKind::UseCaseStart { .. } => "use_case_start",
            EventKind::UseCaseEnd { .. } => "use_case_end",
            EventKind::Invocation { .. } => "invocation",
            EventKind::Entry { .. } => "entry",
            EventKind::Exit { .. } => "exit",
            EventKind::Return { .. } => "return",
            EventKind::TxStart { .. } => "tx_start",
            EventKind::TxCommit { .. } => "tx_commit",
            EventKind::TxAbort { .. } => "tx_abort",
            EventKind::EntityRead { .. } => "entity_read",
            EventKind::EntityWrite { .. } => "entity_write",
        }
    }

    pub fn is_transaction_event(&self) -> bool {
        matches!(
            self,
            EventKind::TxStart { .. } | EventKind::TxCommit { .. } | EventKind::TxAbort { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub ts: i64,
    pub id: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventTrace {
    pub trace_id: String,
    pub use_case: Name,
    pub events: Vec<TraceEvent>,
}

impl EventTrace {
    pub fn duration(&self) -> i64 {
        match (self.events.first(), self.events.last()) {
            (Some(first), Some(last)) => last.ts - first.ts,
            _ => 0,
        }
    }

    pub fn max_event_id(&self) -> Option<u64> {
        self.events.iter().map(|e| e.id).max()
    }

    pub fn max_tx_id(&self) -> Option<TxId> {
        self.events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::TxStart { tx_id, .. } => Some(tx_id),
                _ => None,
            })
            .max()
    }

    /// Sum of all observed `Entry - Invocation` and `Return - Exit` gaps.
    pub fn observed_overhead(&self) -> i64 {
        let mut total = 0;
        for pair in self.events.windows(2) {
            match (&pair[0].kind, &pair[1].kind) {
                (EventKind::Invocation { .. }, EventKind::Entry { .. })
                | (EventKind::Exit { .. }, EventKind::Return { .. }) => total += pair[1].ts - pair[0].ts,
                _ => {}
            }
        }
        total
    }
}

/// Incremental trace construction, mostly for fixtures and the generator.
#[derive(Debug, Clone)]
pub struct TraceBuilder {
    trace: EventTrace,
    next_id: u64,
}

impl TraceBuilder {
    pub fn new(trace_id: impl Into<String>, use_case: &str, ts: i64) -> Self {
        let use_case: Name = use_case.into();
        let mut builder = TraceBuilder {
            trace: EventTrace {
                trace_id: trace_id.into(),
                use_case: use_case.clone(),
                events: Vec::new(),
            },
            next_id: 0,
        };
        builder.push(ts, EventKind::UseCaseStart { name: use_case });
        builder
    }

    pub fn push(&mut self, ts: i64, kind: EventKind) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.trace.events.push(TraceEvent { ts, id, kind });
        id
    }

    pub fn last_ts(&self) -> i64 {
        self.trace.events.last().map_or(0, |e| e.ts)
    }

    pub fn invoke(&mut self, invocation_ts: i64, entry_ts: i64, candidate: &str) -> u64 {
        let candidate: Name = candidate.into();
        self.push(
            invocation_ts,
            EventKind::Invocation {
                candidate: candidate.clone(),
            },
        );
        self.push(
            entry_ts,
            EventKind::Entry {
                candidate,
                tx_started: false,
            },
        )
    }

    pub fn leave(&mut self, exit_ts: i64, return_ts: i64, candidate: &str) -> u64 {
        let candidate: Name = candidate.into();
        let exit = self.push(
            exit_ts,
            EventKind::Exit {
                candidate: candidate.clone(),
            },
        );
        self.push(return_ts, EventKind::Return { candidate });
        exit
    }

    pub fn read(&mut self, ts: i64, entity_type: &str, entity_id: &str) -> u64 {
        self.push(
            ts,
            EventKind::EntityRead {
                entity: EntityRef {
                    entity_type: entity_type.into(),
                    entity_id: entity_id.into(),
                },
            },
        )
    }

    pub fn write(&mut self, ts: i64, entity_type: &str, entity_id: &str) -> u64 {
        self.push(
            ts,
            EventKind::EntityWrite {
                entity: EntityRef {
                    entity_type: entity_type.into(),
                    entity_id: entity_id.into(),
                },
            },
        )
    }

    /// Marks the current container transaction rollback-only.
    pub fn abort(&mut self, ts: i64, tx_id: TxId, cause: &str) -> u64 {
        self.push(
            ts,
            EventKind::TxAbort {
                tx_id,
                cause: cause.into(),
            },
        )
    }

    pub fn finish(mut self, ts: i64) -> EventTrace {
        let name = self.trace.use_case.clone();
        self.push(ts, EventKind::UseCaseEnd { name });
        self.trace
    }
}
