//! Rewriting traces to a scenario model: first invocation overheads, then
//! container transaction boundaries.
//!
//! Rewriting never renumbers events. Every event kept from the input keeps
//! its id, so the mapping between original and rewritten traces only has to
//! record container transaction events that were dropped or inserted.

use std::collections::{HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::model::{ComponentConnection, ConnectionView, ModelIndex};
use crate::trace::{Demarcation, EventKind, EventTrace, TraceEvent};
use crate::tx::{simulate, SimulationError, TxAnnotations};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("event {event_id}: service candidate \"{candidate}\" is not part of the model")]
    UnknownCandidate { event_id: u64, candidate: String },
    #[error("event {event_id}: components \"{from}\" and \"{to}\" are not connected in the scenario")]
    NotConnected { event_id: u64, from: String, to: String },
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

/// Correspondence between original and rewritten events. Events keep their
/// ids; only container transaction events are ever dropped or inserted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EventMapping {
    dropped: Vec<u64>,
    inserted: Vec<u64>,
}

impl EventMapping {
    pub fn identity() -> Self {
        EventMapping::default()
    }

    pub fn is_identity(&self) -> bool {
        self.dropped.is_empty() && self.inserted.is_empty()
    }

    /// Original event ids with no counterpart in the rewritten trace.
    pub fn dropped(&self) -> &[u64] {
        &self.dropped
    }

    /// Rewritten event ids with no counterpart in the original trace.
    pub fn inserted(&self) -> &[u64] {
        &self.inserted
    }

    pub fn to_rewritten(&self, original_id: u64) -> Option<u64> {
        self.dropped.binary_search(&original_id).is_err().then_some(original_id)
    }

    pub fn to_original(&self, rewritten_id: u64) -> Option<u64> {
        self.inserted
            .binary_search(&rewritten_id)
            .is_err()
            .then_some(rewritten_id)
    }

    /// `(original, rewritten)` pairs of all preserved events of `original`.
    pub fn preserved_pairs(&self, original: &EventTrace) -> Vec<(u64, u64)> {
        original
            .events
            .iter()
            .filter_map(|e| self.to_rewritten(e.id).map(|r| (e.id, r)))
            .collect()
    }

    fn new(mut dropped: Vec<u64>, mut inserted: Vec<u64>) -> Self {
        dropped.sort_unstable();
        inserted.sort_unstable();
        EventMapping { dropped, inserted }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteResult {
    pub trace: EventTrace,
    pub mapping: EventMapping,
    /// Simulation of the rewritten trace under the scenario model.
    pub annotations: TxAnnotations,
}

#[derive(Debug, PartialEq, Eq)]
enum HopKey<'a> {
    Internal,
    Declared((&'a str, &'a str), ComponentConnection),
    NotConnected,
}

fn hop_key<'a>(index: &'a ModelIndex, from: Option<usize>, to: usize) -> (HopKey<'a>, ConnectionView) {
    let Some(from) = from else {
        return (HopKey::Internal, ConnectionView::Internal);
    };
    let view = index.link(from, to);
    let key = match view {
        ConnectionView::Internal => HopKey::Internal,
        ConnectionView::NotConnected => HopKey::NotConnected,
        ConnectionView::Declared(c) => {
            let (a, b) = (index.component_name(from), index.component_name(to));
            HopKey::Declared((a.min(b), a.max(b)), c)
        }
    };
    (key, view)
}

struct HopFrame {
    base: Option<usize>,
    scenario: Option<usize>,
    overhead: Option<i64>,
}

/// Adjusts timestamps for every hop whose connection the scenario modified
/// or created. Such a hop takes the scenario overhead in each direction;
/// all other gaps between consecutive events are kept, so later events shift
/// by the accumulated difference.
pub fn rewrite_overhead(
    trace: &EventTrace,
    base: &ModelIndex,
    scenario: &ModelIndex,
) -> Result<(EventTrace, EventMapping), RewriteError> {
    let mut timed = trace.clone();
    shift_hops(&mut timed, base, scenario)?;
    Ok((timed, EventMapping::identity()))
}

/// In-place form of [`rewrite_overhead`]. Events other than entries and
/// returns only move with the accumulated offset, so container transaction
/// events stay attached to their neighbours.
fn shift_hops(trace: &mut EventTrace, base: &ModelIndex, scenario: &ModelIndex) -> Result<(), RewriteError> {
    let mut frames = vec![HopFrame {
        base: base.use_case_component(&trace.use_case),
        scenario: scenario.use_case_component(&trace.use_case),
        overhead: None,
    }];
    let mut offset = 0i64;
    let mut boundary_ts = 0i64;
    for event in &mut trace.events {
        let mut ts = event.ts + offset;
        match &event.kind {
            EventKind::Invocation { .. } | EventKind::Exit { .. } => boundary_ts = ts,
            EventKind::Entry { candidate, .. } => {
                let unknown = || RewriteError::UnknownCandidate {
                    event_id: event.id,
                    candidate: candidate.to_string(),
                };
                let (base_callee, _) = base.candidate(candidate).ok_or_else(unknown)?;
                let (scenario_callee, _) = scenario.candidate(candidate).ok_or_else(unknown)?;
                let caller = frames.last().expect("root frame");
                let (base_key, _) = hop_key(base, caller.base, base_callee);
                let (scenario_key, view) = hop_key(scenario, caller.scenario, scenario_callee);
                if scenario_key == HopKey::NotConnected {
                    return Err(RewriteError::NotConnected {
                        event_id: event.id,
                        from: scenario.component_name(caller.scenario.expect("declared")).to_owned(),
                        to: scenario.component_name(scenario_callee).to_owned(),
                    });
                }
                let overhead = (base_key != scenario_key).then(|| view.overhead() as i64);
                if let Some(o) = overhead {
                    let target = boundary_ts + o;
                    offset += target - ts;
                    ts = target;
                }
                frames.push(HopFrame {
                    base: Some(base_callee),
                    scenario: Some(scenario_callee),
                    overhead,
                });
            }
            EventKind::Return { .. } if frames.len() > 1 => {
                let frame = frames.pop().expect("checked");
                if let Some(o) = frame.overhead {
                    let target = boundary_ts + o;
                    offset += target - ts;
                    ts = target;
                }
            }
            _ => {}
        }
        event.ts = ts;
    }
    Ok(())
}

/// Writes a simulation back into the trace it was computed on: entry flags
/// are recomputed, container transaction events regenerated and rollback
/// markers retargeted to the transaction they affect. Explicit transaction
/// events and all other events are kept unchanged.
pub fn materialize(trace: &EventTrace, annotations: &TxAnnotations) -> (EventTrace, EventMapping) {
    let explicit: HashSet<u64> = trace
        .events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::TxStart {
                tx_id,
                demarcation: Demarcation::Explicit,
            } => Some(tx_id),
            _ => None,
        })
        .collect();
    let mut input_commits: HashMap<u64, u64> = HashMap::new();
    let mut derived_inputs = Vec::new();
    for e in &trace.events {
        match e.kind {
            EventKind::TxStart {
                demarcation: Demarcation::Implicit,
                ..
            } => derived_inputs.push(e.id),
            EventKind::TxCommit { tx_id } if !explicit.contains(&tx_id) => {
                derived_inputs.push(e.id);
                input_commits.insert(tx_id, e.id);
            }
            _ => {}
        }
    }

    let mut next_id = trace.max_event_id().map_or(0, |m| m + 1);
    let mut reused = HashSet::new();
    let mut inserted = Vec::new();
    let mut dropped = Vec::new();
    let mut events = Vec::with_capacity(trace.events.len() + annotations.planned.len());
    let mut planned = annotations.planned.iter().peekable();
    let mut entries = annotations.entries.iter();
    let mut markers = annotations.markers.iter();

    let mut emit_planned = |events: &mut Vec<TraceEvent>, plan: &crate::tx::PlannedTxEvent| {
        let reuse = if plan.start {
            plan.adopted_event_id
        } else {
            input_commits.remove(&plan.tx_id)
        };
        let id = match reuse {
            Some(id) => {
                reused.insert(id);
                id
            }
            None => {
                let id = next_id;
                next_id += 1;
                inserted.push(id);
                id
            }
        };
        let kind = if plan.start {
            EventKind::TxStart {
                tx_id: plan.tx_id,
                demarcation: Demarcation::Implicit,
            }
        } else {
            EventKind::TxCommit { tx_id: plan.tx_id }
        };
        events.push(TraceEvent { ts: plan.ts, id, kind });
    };

    for (pos, event) in trace.events.iter().enumerate() {
        while let Some(plan) = planned.next_if(|p| p.position == pos && !p.after) {
            emit_planned(&mut events, plan);
        }
        match &event.kind {
            EventKind::TxStart {
                demarcation: Demarcation::Implicit,
                ..
            } => {}
            EventKind::TxCommit { tx_id } if !explicit.contains(tx_id) => {}
            EventKind::TxAbort { tx_id, cause } if !explicit.contains(tx_id) => {
                let target = markers.next().filter(|m| m.position == pos).and_then(|m| m.tx_id);
                match target {
                    Some(tx_id) => events.push(TraceEvent {
                        ts: event.ts,
                        id: event.id,
                        kind: EventKind::TxAbort {
                            tx_id,
                            cause: cause.clone(),
                        },
                    }),
                    None => dropped.push(event.id),
                }
            }
            EventKind::Entry { candidate, .. } => {
                let tx_started = entries.next().is_some_and(|a| a.tx_started);
                events.push(TraceEvent {
                    ts: event.ts,
                    id: event.id,
                    kind: EventKind::Entry {
                        candidate: candidate.clone(),
                        tx_started,
                    },
                });
            }
            _ => events.push(event.clone()),
        }
        while let Some(plan) = planned.next_if(|p| p.position == pos && p.after) {
            emit_planned(&mut events, plan);
        }
    }
    dropped.extend(derived_inputs.into_iter().filter(|id| !reused.contains(id)));
    (
        EventTrace {
            trace_id: trace.trace_id.clone(),
            use_case: trace.use_case.clone(),
            events,
        },
        EventMapping::new(dropped, inserted),
    )
}

/// Re-simulates `trace` under `scenario` and regenerates its container
/// transaction events. Returns the rewritten trace, the mapping and the
/// simulation that produced it.
pub fn rewrite_transactions(
    trace: &EventTrace,
    scenario: &ModelIndex,
) -> Result<(EventTrace, EventMapping, TxAnnotations), RewriteError> {
    let annotations = simulate(trace, scenario)?;
    let (rewritten, mapping) = materialize(trace, &annotations);
    Ok((rewritten, mapping, annotations))
}

/// Overhead rewriting followed by transaction rewriting. A scenario equal
/// to the base model leaves the trace untouched.
pub fn rewrite(trace: &EventTrace, base: &ModelIndex, scenario: &ModelIndex) -> Result<RewriteResult, RewriteError> {
    if base.model() == scenario.model() {
        return Ok(RewriteResult {
            trace: trace.clone(),
            mapping: EventMapping::identity(),
            annotations: simulate(trace, scenario)?,
        });
    }
    // Transaction rewriting does not look at timestamps, so the hops can be
    // shifted afterwards without keeping an intermediate copy.
    let (mut rewritten, mapping) = {
        let annotations = simulate(trace, scenario)?;
        materialize(trace, &annotations)
    };
    shift_hops(&mut rewritten, base, scenario)?;
    let annotations = simulate(&rewritten, scenario)?;
    Ok(RewriteResult {
        trace: rewritten,
        mapping,
        annotations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_delta, parse_model};
    use crate::model::{apply_delta, DeploymentModel};
    use crate::trace::{validate_trace, TraceBuilder};
    use crate::tx::WriteOutcome;

    const MODEL: &str = r#"
component "A" {
  useCase "U"
  serviceCandidate a
  entityType X
}
component "B" {
  serviceCandidate b
  entityType Y
}
local "A" -> "B"
"#;

    fn base_model() -> DeploymentModel {
        parse_model(MODEL).unwrap()
    }

    fn with(delta: &str) -> ModelIndex {
        ModelIndex::new(apply_delta(&base_model(), &parse_delta(delta).unwrap()).unwrap())
    }

    /// Canonical base trace: a(REQUIRED) writes X, calls b locally, b writes Y.
    fn trace(abort_at_end: bool) -> EventTrace {
        let mut b = TraceBuilder::new("t", "U", 0);
        b.invoke(100, 101, "a");
        b.write(102, "X", "1");
        b.invoke(103, 103, "b");
        b.write(104, "Y", "1");
        b.leave(105, 105, "b");
        if abort_at_end {
            b.abort(106, 0, "failure");
        }
        b.leave(107, 108, "a");
        let skeleton = b.finish(109);
        let index = ModelIndex::new(base_model());
        let annotations = simulate(&skeleton, &index).unwrap();
        materialize(&skeleton, &annotations).0
    }

    #[test]
    fn canonical_trace_is_valid_and_stable() {
        let t = trace(true);
        validate_trace(&t).unwrap();
        let index = ModelIndex::new(base_model());
        let (again, mapping, _) = rewrite_transactions(&t, &index).unwrap();
        assert_eq!(again, t);
        assert!(mapping.is_identity());
    }

    #[test]
    fn remote_overhead_shifts_later_events() {
        let scenario = with(r#"remote "A" -> "B" [ overhead = 10 ]"#);
        let base = ModelIndex::new(base_model());
        let original = trace(false);
        let (timed, mapping) = rewrite_overhead(&original, &base, &scenario).unwrap();
        assert!(mapping.is_identity());
        let entry_b = timed
            .events
            .iter()
            .find(|e| matches!(&e.kind, EventKind::Entry { candidate, .. } if &**candidate == "b"))
            .unwrap();
        assert_eq!(entry_b.ts, 113);
        assert_eq!(timed.duration() - original.duration(), 20);
        assert_eq!(timed.events.len(), original.events.len());
    }

    #[test]
    fn remote_to_local_drops_observed_gap() {
        let remote = with(r#"remote "A" -> "B" [ overhead = 25 ]"#);
        let base = ModelIndex::new(base_model());
        let (slow, _) = rewrite_overhead(&trace(false), &base, &remote).unwrap();
        let (fast, _) = rewrite_overhead(&slow, &remote, &base).unwrap();
        assert_eq!(fast, trace(false));
    }

    #[test]
    fn split_without_propagation_inserts_a_transaction() {
        let scenario = with(r#"remote "A" -> "B" [ overhead = 10 ]"#);
        let base = ModelIndex::new(base_model());
        let result = rewrite(&trace(false), &base, &scenario).unwrap();
        validate_trace(&result.trace).unwrap();
        assert_eq!(result.mapping.inserted().len(), 2);
        assert!(result.mapping.dropped().is_empty());
        let flags: Vec<bool> = result
            .trace
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::Entry { tx_started, .. } => Some(tx_started),
                _ => None,
            })
            .collect();
        assert_eq!(flags, vec![true, true]);
    }

    #[test]
    fn split_with_subordinate_commits_after_the_top_level() {
        let scenario = with(r#"remote "A" -> "B" [ overhead = 10, transactionPropagation = subordinate ]"#);
        let base = ModelIndex::new(base_model());
        let result = rewrite(&trace(false), &base, &scenario).unwrap();
        validate_trace(&result.trace).unwrap();
        let kinds: Vec<&str> = result.trace.events.iter().map(|e| e.kind.type_name()).collect();
        let exit_a = kinds.iter().rposition(|k| *k == "exit").unwrap();
        assert_eq!(&kinds[exit_a - 2..=exit_a], &["tx_commit", "tx_commit", "exit"]);
    }

    #[test]
    fn saga_split_commits_early_writes() {
        let scenario = with(r#"remote "A" -> "B" [ overhead = 10 ]"#);
        let base = ModelIndex::new(base_model());
        let original = trace(true);
        let before = simulate(&original, &base).unwrap();
        let after = rewrite(&original, &base, &scenario).unwrap().annotations;
        let y_write = before.writes[1].event_id;
        assert_eq!(before.write_outcome(y_write), Some(WriteOutcome::Reverted));
        assert_eq!(after.write_outcome(y_write), Some(WriteOutcome::Committed));
    }

    #[test]
    fn identical_models_short_circuit() {
        let base = ModelIndex::new(base_model());
        let result = rewrite(&trace(true), &base, &base.clone()).unwrap();
        assert_eq!(result.trace, trace(true));
        assert!(result.mapping.is_identity());
    }
}
