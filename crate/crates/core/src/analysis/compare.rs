use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use super::stats::{welch_from_stats, SampleStats, StatsError, WelchResult};
use super::{ConsistencyIssue, IssueKind, TraceAnalysis};
use crate::model::ComponentGroup;
use crate::rewrite::EventMapping;
use crate::trace::{EntityRef, Name};
use crate::tx::WriteOutcome;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error("corpora do not line up: {0}")]
    MismatchedCorpora(String),
    #[error("significance level must lie strictly between 0 and 1 (got {0})")]
    InvalidAlpha(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutcomeChange {
    pub event_id: u64,
    pub rewritten_event_id: u64,
    pub entity: EntityRef,
    pub before: WriteOutcome,
    pub after: WriteOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceDiff {
    pub trace_id: String,
    pub use_case: Name,
    pub original_duration: i64,
    pub rewritten_duration: i64,
    /// Issues of the rewritten trace without a counterpart in the original.
    pub new_issues: Vec<ConsistencyIssue>,
    /// Issues of the original trace without a counterpart after rewriting.
    pub vanished_issues: Vec<ConsistencyIssue>,
    pub outcome_changes: Vec<OutcomeChange>,
}

impl TraceDiff {
    pub fn is_empty(&self) -> bool {
        self.new_issues.is_empty() && self.vanished_issues.is_empty() && self.outcome_changes.is_empty()
    }
}

/// Everything the report needs from one trace pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceComparison {
    pub original_issue_count: usize,
    pub rewritten_issue_count: usize,
    pub diff: TraceDiff,
}

type IssueKey = (IssueKind, Option<EntityRef>, u64);

/// Matches issues on kind, entity and corresponding event, and lists writes
/// whose outcome changed.
pub fn diff_trace(
    original: &TraceAnalysis,
    rewritten: &TraceAnalysis,
    mapping: &EventMapping,
) -> Result<TraceComparison, CompareError> {
    if original.trace_id != rewritten.trace_id {
        return Err(CompareError::MismatchedCorpora(format!(
            "trace \"{}\" paired with \"{}\"",
            original.trace_id, rewritten.trace_id
        )));
    }
    let mut unmatched: BTreeMap<IssueKey, Vec<&ConsistencyIssue>> = BTreeMap::new();
    for issue in &rewritten.issues {
        unmatched
            .entry((issue.kind, issue.entity.clone(), issue.at_event_id))
            .or_default()
            .push(issue);
    }
    let mut vanished_issues = Vec::new();
    for issue in &original.issues {
        let counterpart = mapping.to_rewritten(issue.at_event_id).and_then(|id| {
            let key = (issue.kind, issue.entity.clone(), id);
            let list = unmatched.get_mut(&key)?;
            let found = list.pop();
            if list.is_empty() {
                unmatched.remove(&key);
            }
            found
        });
        if counterpart.is_none() {
            vanished_issues.push(issue.clone());
        }
    }
    let mut new_issues: Vec<ConsistencyIssue> = unmatched.into_values().flatten().cloned().collect();
    new_issues.sort_unstable_by_key(|a| (a.at_event_id, a.kind));

    let mut outcome_changes = Vec::new();
    for write in &original.write_outcomes {
        let Some(rewritten_id) = mapping.to_rewritten(write.event_id) else {
            continue;
        };
        match rewritten.write_outcome(rewritten_id) {
            Some(after) if after != write.outcome => outcome_changes.push(OutcomeChange {
                event_id: write.event_id,
                rewritten_event_id: rewritten_id,
                entity: write.entity.clone(),
                before: write.outcome,
                after,
            }),
            Some(_) => {}
            None => {
                return Err(CompareError::MismatchedCorpora(format!(
                    "write {} of trace \"{}\" is missing after rewriting",
                    write.event_id, original.trace_id
                )))
            }
        }
    }

    Ok(TraceComparison {
        original_issue_count: original.issues.len(),
        rewritten_issue_count: rewritten.issues.len(),
        diff: TraceDiff {
            trace_id: original.trace_id.clone(),
            use_case: original.use_case.clone(),
            original_duration: original.duration,
            rewritten_duration: rewritten.duration,
            new_issues,
            vanished_issues,
            outcome_changes,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UseCaseReport {
    pub use_case: Name,
    pub trace_count: usize,
    pub original: SampleStats,
    pub rewritten: SampleStats,
    /// Absent for use cases with fewer than two traces.
    pub welch: Option<WelchResult>,
    pub significant: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<&'static str>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReportSummary {
    pub trace_count: usize,
    pub use_case_count: usize,
    pub significant_use_cases: usize,
    pub traces_with_changes: usize,
    pub original_issues: usize,
    pub rewritten_issues: usize,
    pub new_issues: usize,
    pub vanished_issues: usize,
    pub outcome_changes: usize,
    pub reverted_to_committed: usize,
    pub committed_to_reverted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub alpha: f64,
    pub use_cases: Vec<UseCaseReport>,
    /// Only traces with at least one issue or outcome difference.
    pub traces: Vec<TraceDiff>,
    pub summary: ReportSummary,
    pub microservice_groups: Vec<ComponentGroup>,
    pub issue_rules: BTreeMap<&'static str, &'static str>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn has_significant_change(&self) -> bool {
        self.summary.significant_use_cases > 0
    }
}

fn issue_rules() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        (
            IssueKind::StaleRead.as_str(),
            "read of an entity with a pending write from outside its top-level transaction, store returns possibly stale data",
        ),
        (
            IssueKind::WriteConflict.as_str(),
            "write to an entity with a pending write from outside its top-level transaction",
        ),
        (
            IssueKind::PotentialDeadlock.as_str(),
            "heuristic: access to an entity in a blocking store while the transaction holding a pending write is suspended or waits behind a remote hop without propagation",
        ),
        (
            IssueKind::TxConfigViolation.as_str(),
            "transaction attribute cannot be honored at entry; execution continues as REQUIRED",
        ),
    ])
}

/// Incremental, order-sensitive aggregation of per-trace comparisons.
/// Adding the same comparisons in the same order yields identical reports.
#[derive(Debug, Clone)]
pub struct ReportBuilder {
    alpha: f64,
    durations: BTreeMap<Name, (Vec<f64>, Vec<f64>)>,
    traces: Vec<TraceDiff>,
    summary: ReportSummary,
}

impl ReportBuilder {
    pub fn new(alpha: f64) -> Result<Self, CompareError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CompareError::InvalidAlpha(alpha));
        }
        Ok(ReportBuilder {
            alpha,
            durations: BTreeMap::new(),
            traces: Vec::new(),
            summary: ReportSummary::default(),
        })
    }

    pub fn add(&mut self, comparison: TraceComparison) {
        let TraceComparison {
            original_issue_count,
            rewritten_issue_count,
            diff,
        } = comparison;
        let s = &mut self.summary;
        s.trace_count += 1;
        s.original_issues += original_issue_count;
        s.rewritten_issues += rewritten_issue_count;
        s.new_issues += diff.new_issues.len();
        s.vanished_issues += diff.vanished_issues.len();
        s.outcome_changes += diff.outcome_changes.len();
        for change in &diff.outcome_changes {
            match (change.before, change.after) {
                (WriteOutcome::Reverted, WriteOutcome::Committed) => s.reverted_to_committed += 1,
                (WriteOutcome::Committed, WriteOutcome::Reverted) => s.committed_to_reverted += 1,
                _ => {}
            }
        }
        let samples = self.durations.entry(diff.use_case.clone()).or_default();
        samples.0.push(diff.original_duration as f64);
        samples.1.push(diff.rewritten_duration as f64);
        if !diff.is_empty() {
            s.traces_with_changes += 1;
            self.traces.push(diff);
        }
    }

    pub fn finish(self, microservice_groups: Vec<ComponentGroup>) -> ComparisonReport {
        let mut summary = self.summary;
        let mut use_cases = Vec::with_capacity(self.durations.len());
        for (use_case, (original, rewritten)) in self.durations {
            let a = SampleStats::from_sample(&original).expect("non-empty");
            let b = SampleStats::from_sample(&rewritten).expect("non-empty");
            let (welch, note) = match welch_from_stats(&a, &b) {
                Ok(w) => (Some(w), None),
                Err(StatsError::DegenerateSample) => (
                    Some(WelchResult {
                        t: 0.0,
                        df: (a.n + b.n - 2) as f64,
                        p_value: 1.0,
                        mean_delta: 0.0,
                        relative_delta: 0.0,
                    }),
                    Some("DEGENERATE_SAMPLE"),
                ),
                Err(StatsError::TooFewObservations(..)) => (None, Some("TOO_FEW_TRACES")),
            };
            let significant = welch.is_some_and(|w| w.p_value < self.alpha);
            summary.significant_use_cases += usize::from(significant);
            use_cases.push(UseCaseReport {
                use_case,
                trace_count: a.n,
                original: a,
                rewritten: b,
                welch,
                significant,
                note,
            });
        }
        summary.use_case_count = use_cases.len();
        ComparisonReport {
            schema_version: SCHEMA_VERSION,
            alpha: self.alpha,
            use_cases,
            traces: self.traces,
            summary,
            microservice_groups,
            issue_rules: issue_rules(),
        }
    }
}

/// Compares aligned original and rewritten analyses. `mappings[i]` relates
/// `originals[i]` to `rewritten[i]`.
pub fn compare(
    originals: &[TraceAnalysis],
    rewritten: &[TraceAnalysis],
    mappings: &[EventMapping],
    alpha: f64,
    microservice_groups: Vec<ComponentGroup>,
) -> Result<ComparisonReport, CompareError> {
    if originals.len() != rewritten.len() || originals.len() != mappings.len() {
        return Err(CompareError::MismatchedCorpora(format!(
            "{} original traces, {} rewritten traces, {} mappings",
            originals.len(),
            rewritten.len(),
            mappings.len()
        )));
    }
    let mut builder = ReportBuilder::new(alpha)?;
    for ((o, r), m) in originals.iter().zip(rewritten).zip(mappings) {
        builder.add(diff_trace(o, r, m)?);
    }
    Ok(builder.finish(microservice_groups))
}

/// Human-readable summary of a report.
pub fn render_text(report: &ComparisonReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<32} {:>7} {:>14} {:>10} {:>12}  significant (alpha = {})",
        "use case", "traces", "mean delta", "relative", "p", report.alpha
    );
    for uc in &report.use_cases {
        let (delta, relative, p) = match &uc.welch {
            Some(w) => (
                format!("{:+.3}", w.mean_delta),
                if w.relative_delta.is_finite() {
                    format!("{:+.2}%", w.relative_delta * 100.0)
                } else {
                    "n/a".into()
                },
                format!("{:.3e}", w.p_value),
            ),
            None => ("n/a".into(), "n/a".into(), "n/a".into()),
        };
        let _ = writeln!(
            out,
            "{:<32} {:>7} {:>14} {:>10} {:>12}  {}",
            uc.use_case,
            uc.trace_count,
            delta,
            relative,
            p,
            if uc.significant { "yes" } else { "no" }
        );
    }
    let s = &report.summary;
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "issues: {} original, {} rewritten, {} new, {} vanished",
        s.original_issues, s.rewritten_issues, s.new_issues, s.vanished_issues
    );
    let _ = writeln!(
        out,
        "write outcome changes: {} ({} reverted -> committed, {} committed -> reverted)",
        s.outcome_changes, s.reverted_to_committed, s.committed_to_reverted
    );
    let _ = writeln!(out, "component groups:");
    for group in &report.microservice_groups {
        let _ = writeln!(
            out,
            "  [{}] {}",
            if group.potential_microservice {
                "potential microservice"
            } else {
                "shares transactions remotely"
            },
            group.components.join(", ")
        );
    }
    out
}
