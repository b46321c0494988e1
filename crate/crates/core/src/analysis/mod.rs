//! Per-trace analyses and the comparison of original and rewritten corpora.

mod compare;
pub mod stats;

use serde::Serialize;

use crate::model::{ConflictBehavior, ModelIndex};
use crate::trace::{EntityRef, EventTrace, Name, TxId};
use crate::tx::{TxAnnotations, ViolationKind, WriteOutcome};

pub use compare::{
    compare, diff_trace, render_text, CompareError, ComparisonReport, OutcomeChange, ReportBuilder, ReportSummary,
    TraceComparison, TraceDiff, UseCaseReport, SCHEMA_VERSION,
};
pub use stats::{welch_test, SampleStats, StatsError, WelchResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueKind {
    StaleRead,
    WriteConflict,
    PotentialDeadlock,
    TxConfigViolation,
}

impl IssueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueKind::StaleRead => "STALE_READ",
            IssueKind::WriteConflict => "WRITE_CONFLICT",
            IssueKind::PotentialDeadlock => "POTENTIAL_DEADLOCK",
            IssueKind::TxConfigViolation => "TX_CONFIG_VIOLATION",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ConsistencyIssue {
    pub kind: IssueKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entity: Option<EntityRef>,
    pub at_event_id: u64,
    pub conflicting_tx_ids: Vec<TxId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<ViolationKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WriteRecord {
    pub event_id: u64,
    pub entity: EntityRef,
    pub outcome: WriteOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceAnalysis {
    pub trace_id: String,
    pub use_case: Name,
    pub duration: i64,
    pub total_overhead: i64,
    pub remote_invocation_count: u64,
    /// Ordered by event id, then kind.
    pub issues: Vec<ConsistencyIssue>,
    /// Ordered by event id.
    pub write_outcomes: Vec<WriteRecord>,
}

impl TraceAnalysis {
    pub fn write_outcome(&self, event_id: u64) -> Option<WriteOutcome> {
        self.write_outcomes
            .binary_search_by_key(&event_id, |w| w.event_id)
            .ok()
            .map(|i| self.write_outcomes[i].outcome)
    }
}

/// Derives duration, overhead, consistency issues and write outcomes from a
/// trace and its simulation under `model`.
///
/// Issue rules, checked per entity access against transactions outside the
/// accessor's top-level transaction that hold a pending write to the same
/// entity:
/// a blocking store with a holder that is suspended or sits behind a remote
/// hop without propagation is a potential deadlock; otherwise a read from a
/// stale-read store is a stale read and a write is a write conflict.
/// Entities without a data store behave as stale-read.
pub fn analyze_trace(trace: &EventTrace, annotations: &TxAnnotations, model: &ModelIndex) -> TraceAnalysis {
    let mut issues = Vec::new();
    for access in &annotations.accesses {
        let behavior = model
            .entity(&access.entity.entity_type)
            .map_or(ConflictBehavior::StaleRead, |(_, b)| b);
        let blocked_forever: Vec<TxId> = access
            .holders
            .iter()
            .filter(|h| h.suspended || h.across_none_hop)
            .map(|h| h.tx_id)
            .collect();
        let all: Vec<TxId> = access.holders.iter().map(|h| h.tx_id).collect();
        let (kind, conflicting) = if behavior == ConflictBehavior::Block && !blocked_forever.is_empty() {
            (IssueKind::PotentialDeadlock, blocked_forever)
        } else if !access.write && behavior == ConflictBehavior::StaleRead {
            (IssueKind::StaleRead, all)
        } else if access.write {
            (IssueKind::WriteConflict, all)
        } else {
            continue;
        };
        issues.push(ConsistencyIssue {
            kind,
            entity: Some(access.entity.clone()),
            at_event_id: access.event_id,
            conflicting_tx_ids: conflicting,
            violation: None,
        });
    }
    for violation in &annotations.violations {
        issues.push(ConsistencyIssue {
            kind: IssueKind::TxConfigViolation,
            entity: None,
            at_event_id: violation.event_id,
            conflicting_tx_ids: Vec::new(),
            violation: Some(violation.kind),
        });
    }
    issues.sort_unstable_by_key(|a| (a.at_event_id, a.kind));

    let mut write_outcomes: Vec<WriteRecord> = annotations
        .writes
        .iter()
        .map(|w| WriteRecord {
            event_id: w.event_id,
            entity: w.entity.clone(),
            outcome: w.outcome,
        })
        .collect();
    write_outcomes.sort_unstable_by_key(|w| w.event_id);

    TraceAnalysis {
        trace_id: trace.trace_id.clone(),
        use_case: trace.use_case.clone(),
        duration: trace.duration(),
        total_overhead: trace.observed_overhead(),
        remote_invocation_count: annotations.entries.iter().filter(|e| e.remote).count() as u64,
        issues,
        write_outcomes,
    }
}
