use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::{Demarcation, EventKind, EventTrace, Name, TxId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TraceViolation {
    BadUseCaseBoundary,
    DuplicateEventId,
    NonMonotonicTimestamp,
    NegativeOverhead,
    MissingEntry,
    MissingReturn,
    UnbalancedCall,
    MismatchedCandidate,
    DuplicateTransaction,
    UnknownTransaction,
    TransactionCrossesSpan,
    EmptyEntityRef,
}

impl TraceViolation {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceViolation::BadUseCaseBoundary => "BAD_USE_CASE_BOUNDARY",
            TraceViolation::DuplicateEventId => "DUPLICATE_EVENT_ID",
            TraceViolation::NonMonotonicTimestamp => "NON_MONOTONIC_TIMESTAMP",
            TraceViolation::NegativeOverhead => "NEGATIVE_OVERHEAD",
            TraceViolation::MissingEntry => "MISSING_ENTRY",
            TraceViolation::MissingReturn => "MISSING_RETURN",
            TraceViolation::UnbalancedCall => "UNBALANCED_CALL",
            TraceViolation::MismatchedCandidate => "MISMATCHED_CANDIDATE",
            TraceViolation::DuplicateTransaction => "DUPLICATE_TRANSACTION",
            TraceViolation::UnknownTransaction => "UNKNOWN_TRANSACTION",
            TraceViolation::TransactionCrossesSpan => "TRANSACTION_CROSSES_SPAN",
            TraceViolation::EmptyEntityRef => "EMPTY_ENTITY_REF",
        }
    }
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace {trace_id}{}: {code}: {message}", .event_id.map(|id| format!(", event {id}")).unwrap_or_default())]
pub struct ValidationError {
    pub trace_id: String,
    pub event_id: Option<u64>,
    pub code: TraceViolation,
    pub message: String,
}

struct Frame {
    candidate: Option<Name>,
    explicit: Vec<TxId>,
}

struct TxInfo {
    demarcation: Demarcation,
    ended: bool,
}

fn check_unique_ids(trace: &EventTrace) -> Option<u64> {
    if trace.events.windows(2).all(|w| w[0].id < w[1].id) {
        return None;
    }
    let mut ids: Vec<u64> = trace.events.iter().map(|e| e.id).collect();
    ids.sort_unstable();
    ids.windows(2).find(|w| w[0] == w[1]).map(|w| w[0])
}

/// Checks the structural invariants of a trace: use-case boundaries,
/// timestamps, balanced four-event call patterns and transaction references.
/// Explicit transactions must start and end inside the same span.
pub fn validate_trace(trace: &EventTrace) -> Result<(), ValidationError> {
    let fail = |event_id: Option<u64>, code: TraceViolation, message: String| {
        Err(ValidationError {
            trace_id: trace.trace_id.clone(),
            event_id,
            code,
            message,
        })
    };

    let events = &trace.events;
    let (Some(first), Some(last)) = (events.first(), events.last()) else {
        return fail(None, TraceViolation::BadUseCaseBoundary, "trace has no events".into());
    };
    match &first.kind {
        EventKind::UseCaseStart { name } if *name == trace.use_case => {}
        _ => {
            return fail(
                Some(first.id),
                TraceViolation::BadUseCaseBoundary,
                format!("first event must be use_case_start of \"{}\"", trace.use_case),
            )
        }
    }
    if events.len() < 2 || !matches!(&last.kind, EventKind::UseCaseEnd { name } if *name == trace.use_case) {
        return fail(
            Some(last.id),
            TraceViolation::BadUseCaseBoundary,
            format!("last event must be use_case_end of \"{}\"", trace.use_case),
        );
    }
    if let Some(id) = check_unique_ids(trace) {
        return fail(
            Some(id),
            TraceViolation::DuplicateEventId,
            format!("event id {id} is not unique"),
        );
    }

    let mut stack = vec![Frame {
        candidate: None,
        explicit: Vec::new(),
    }];
    let mut txs: HashMap<TxId, TxInfo> = HashMap::new();
    let last_index = events.len() - 1;

    for (i, event) in events.iter().enumerate() {
        let id = Some(event.id);
        if i > 0 {
            let previous = &events[i - 1];
            match (&previous.kind, &event.kind) {
                (EventKind::Invocation { candidate: a }, EventKind::Entry { candidate: b, .. }) => {
                    if a != b {
                        return fail(
                            id,
                            TraceViolation::MismatchedCandidate,
                            format!("entry into {b} follows invocation of {a}"),
                        );
                    }
                    if event.ts < previous.ts {
                        return fail(
                            id,
                            TraceViolation::NegativeOverhead,
                            "entry precedes its invocation".into(),
                        );
                    }
                }
                (EventKind::Invocation { candidate }, _) => {
                    return fail(
                        id,
                        TraceViolation::MissingEntry,
                        format!("invocation of {candidate} is not directly followed by its entry"),
                    )
                }
                (EventKind::Exit { candidate: a }, EventKind::Return { candidate: b }) => {
                    if a != b {
                        return fail(
                            id,
                            TraceViolation::MismatchedCandidate,
                            format!("return from {b} follows exit of {a}"),
                        );
                    }
                    if event.ts < previous.ts {
                        return fail(id, TraceViolation::NegativeOverhead, "return precedes its exit".into());
                    }
                }
                (EventKind::Exit { candidate }, _) => {
                    return fail(
                        id,
                        TraceViolation::MissingReturn,
                        format!("exit of {candidate} is not directly followed by its return"),
                    )
                }
                _ => {}
            }
        }

        if i > 0 && event.ts < events[i - 1].ts {
            return fail(
                id,
                TraceViolation::NonMonotonicTimestamp,
                format!("timestamp {} precedes {}", event.ts, events[i - 1].ts),
            );
        }

        match &event.kind {
            EventKind::UseCaseStart { .. } if i != 0 => {
                return fail(id, TraceViolation::BadUseCaseBoundary, "nested use_case_start".into())
            }
            EventKind::UseCaseEnd { .. } if i != last_index => {
                return fail(
                    id,
                    TraceViolation::BadUseCaseBoundary,
                    "use_case_end before the last event".into(),
                )
            }
            EventKind::UseCaseEnd { .. } => {
                if stack.len() != 1 {
                    return fail(
                        id,
                        TraceViolation::UnbalancedCall,
                        "use case ends with open invocations".into(),
                    );
                }
                if let Some(tx) = stack[0].explicit.last() {
                    return fail(
                        id,
                        TraceViolation::TransactionCrossesSpan,
                        format!("explicit transaction {tx} is still open at use case end"),
                    );
                }
            }
            EventKind::Entry { candidate, .. } => {
                if i == 0 || !matches!(events[i - 1].kind, EventKind::Invocation { .. }) {
                    return fail(
                        id,
                        TraceViolation::UnbalancedCall,
                        format!("entry into {candidate} without invocation"),
                    );
                }
                stack.push(Frame {
                    candidate: Some(candidate.clone()),
                    explicit: Vec::new(),
                });
            }
            EventKind::Exit { candidate } => {
                let Some(frame) = stack.pop().filter(|f| f.candidate.is_some()) else {
                    return fail(
                        id,
                        TraceViolation::UnbalancedCall,
                        format!("exit of {candidate} without entry"),
                    );
                };
                if frame.candidate.as_ref() != Some(candidate) {
                    return fail(
                        id,
                        TraceViolation::MismatchedCandidate,
                        format!(
                            "exit of {candidate} while {} is innermost",
                            frame.candidate.as_deref().unwrap_or_default()
                        ),
                    );
                }
                if let Some(tx) = frame.explicit.last() {
                    return fail(
                        id,
                        TraceViolation::TransactionCrossesSpan,
                        format!("explicit transaction {tx} is still open at exit of {candidate}"),
                    );
                }
                if stack.is_empty() {
                    return fail(id, TraceViolation::UnbalancedCall, "exit below use case level".into());
                }
            }
            EventKind::Return { candidate } => {
                if !matches!(events[i - 1].kind, EventKind::Exit { .. }) {
                    return fail(
                        id,
                        TraceViolation::UnbalancedCall,
                        format!("return from {candidate} without exit"),
                    );
                }
            }
            EventKind::TxStart { tx_id, demarcation } => {
                if txs.contains_key(tx_id) {
                    return fail(
                        id,
                        TraceViolation::DuplicateTransaction,
                        format!("transaction {tx_id} started twice"),
                    );
                }
                txs.insert(
                    *tx_id,
                    TxInfo {
                        demarcation: *demarcation,
                        ended: false,
                    },
                );
                if *demarcation == Demarcation::Explicit {
                    stack.last_mut().expect("root frame").explicit.push(*tx_id);
                }
            }
            EventKind::TxCommit { tx_id } | EventKind::TxAbort { tx_id, .. } => {
                let is_commit = matches!(event.kind, EventKind::TxCommit { .. });
                let Some(info) = txs.get_mut(tx_id).filter(|t| !t.ended) else {
                    return fail(
                        id,
                        TraceViolation::UnknownTransaction,
                        format!("transaction {tx_id} is not active"),
                    );
                };
                match info.demarcation {
                    Demarcation::Explicit => {
                        let frame = stack.last_mut().expect("root frame");
                        if frame.explicit.last() != Some(tx_id) {
                            return fail(
                                id,
                                TraceViolation::TransactionCrossesSpan,
                                format!("explicit transaction {tx_id} ends outside the span that started it"),
                            );
                        }
                        frame.explicit.pop();
                        info.ended = true;
                    }
                    Demarcation::Implicit => {
                        if is_commit {
                            info.ended = true;
                        }
                    }
                }
            }
            EventKind::EntityRead { entity } | EventKind::EntityWrite { entity }
                if (entity.entity_type.is_empty() || entity.entity_id.is_empty()) =>
            {
                return fail(
                    id,
                    TraceViolation::EmptyEntityRef,
                    "entity reference has an empty part".into(),
                );
            }
            _ => {}
        }
    }
    Ok(())
}
