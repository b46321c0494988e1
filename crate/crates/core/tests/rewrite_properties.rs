mod common;

use std::collections::HashMap;

use proptest::prelude::*;
use whatif_core::model::connection_for;
use whatif_core::rewrite::rewrite_transactions;
use whatif_core::trace::{build_span_tree, EventKind};
use whatif_core::tracegen::{generate, GenConfig};
use whatif_core::tx::{TxKind, TxPhase};
use whatif_core::{rewrite, simulate, DeploymentModel, EventTrace, ModelIndex};

fn corpus(seed: u64, base: &ModelIndex) -> Vec<EventTrace> {
    let mut config = GenConfig::new(4, 6, seed);
    config.max_depth = 4;
    config.abort_probability = 0.2;
    config.entity_access_probability = 0.5;
    generate(&config, base).unwrap()
}

/// Expected duration change: every hop whose connection differs between
/// the models takes the scenario overhead in each direction instead of the
/// observed gap.
fn expected_duration_delta(trace: &EventTrace, base: &DeploymentModel, scenario: &DeploymentModel) -> i64 {
    let component_of: HashMap<&str, &str> = base
        .components
        .iter()
        .flat_map(|(name, c)| c.service_candidates.keys().map(move |k| (k.as_str(), name.as_str())))
        .collect();
    let root = base
        .components
        .iter()
        .find(|(_, c)| c.use_cases.contains(&*trace.use_case))
        .map(|(n, _)| n.as_str())
        .unwrap();
    let mut stack = vec![root];
    let mut pending_invocation = 0;
    let mut pending_exit = 0;
    let mut delta = 0;
    for e in &trace.events {
        match &e.kind {
            EventKind::Invocation { .. } => pending_invocation = e.ts,
            EventKind::Entry { candidate, .. } => {
                let (from, to) = (*stack.last().unwrap(), component_of[&**candidate]);
                let before = connection_for(base, from, to).unwrap();
                let after = connection_for(scenario, from, to).unwrap();
                if before != after {
                    delta += after.overhead() as i64 - (e.ts - pending_invocation);
                }
                stack.push(to);
            }
            EventKind::Exit { .. } => {
                pending_exit = e.ts;
            }
            EventKind::Return { .. } => {
                let to = stack.pop().unwrap();
                let from = *stack.last().unwrap();
                let before = connection_for(base, from, to).unwrap();
                let after = connection_for(scenario, from, to).unwrap();
                if before != after {
                    delta += after.overhead() as i64 - (e.ts - pending_exit);
                }
            }
            _ => {}
        }
    }
    delta
}

fn non_tx_events(trace: &EventTrace) -> Vec<(u64, String)> {
    trace
        .events
        .iter()
        .filter(|e| !e.kind.is_transaction_event())
        .map(|e| {
            (
                e.id,
                format!("{:?}", e.kind).replace("tx_started: true", "tx_started: false"),
            )
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn identical_models_leave_traces_untouched(seed in any::<u64>()) {
        let (base, _) = common::model_pair(seed);
        let base = ModelIndex::new(base);
        let same = ModelIndex::new(base.model().clone());
        for trace in corpus(seed, &base) {
            let result = rewrite(&trace, &base, &same).unwrap();
            prop_assert_eq!(&result.trace, &trace);
            prop_assert!(result.mapping.is_identity());
            // the transaction rewrite alone is a fixed point on canonical traces
            let (again, mapping, _) = rewrite_transactions(&trace, &base).unwrap();
            prop_assert_eq!(&again, &trace);
            prop_assert!(mapping.is_identity());
        }
    }

    #[test]
    fn rewriting_conserves_events_and_decomposes_duration(seed in any::<u64>()) {
        let (base_model, scenario_model) = common::model_pair(seed);
        let (base, scenario) = (ModelIndex::new(base_model.clone()), ModelIndex::new(scenario_model.clone()));
        for trace in corpus(seed, &base) {
            let result = rewrite(&trace, &base, &scenario).unwrap();
            let rewritten = &result.trace;

            prop_assert_eq!(non_tx_events(&trace), non_tx_events(rewritten));
            prop_assert_eq!(
                rewritten.duration() - trace.duration(),
                expected_duration_delta(&trace, &base_model, &scenario_model)
            );
            prop_assert!(rewritten.events.windows(2).all(|w| w[0].ts <= w[1].ts));

            for id in result.mapping.dropped() {
                let e = trace.events.iter().find(|e| e.id == *id).unwrap();
                prop_assert!(e.kind.is_transaction_event());
            }
            for id in result.mapping.inserted() {
                let e = rewritten.events.iter().find(|e| e.id == *id).unwrap();
                prop_assert!(e.kind.is_transaction_event());
            }
            for (o, r) in result.mapping.preserved_pairs(&trace) {
                prop_assert_eq!(result.mapping.to_original(r), Some(o));
            }

            let again = rewrite(&trace, &base, &scenario).unwrap();
            prop_assert_eq!(&again.trace, rewritten);
            prop_assert_eq!(&again.mapping, &result.mapping);

            // the rewritten trace is canonical for the scenario
            let (fixed, _, _) = rewrite_transactions(rewritten, &scenario).unwrap();
            prop_assert_eq!(&fixed, rewritten);
            whatif_core::trace::validate_trace(rewritten).unwrap();
        }
    }

    #[test]
    fn span_trees_account_for_every_event(seed in any::<u64>()) {
        let (base, _) = common::model_pair(seed);
        let base = ModelIndex::new(base);
        for trace in corpus(seed, &base) {
            let tree = build_span_tree(&trace);
            prop_assert_eq!(tree.total_overhead(), trace.observed_overhead());
            let owned: usize = tree.spans.iter().map(|s| s.event_ids.len()).sum();
            prop_assert_eq!(owned, trace.events.len());
            for e in &trace.events {
                prop_assert!(tree.span_of(e.id).is_some());
            }
            for span in &tree.spans[1..] {
                let parent = &tree.spans[span.parent.unwrap()];
                prop_assert!(parent.children.contains(&span.id));
                prop_assert!(span.start_ts <= span.end_ts);
                prop_assert!(parent.start_ts <= span.start_ts && span.end_ts <= parent.end_ts);
            }
        }
    }

    #[test]
    fn simulation_invariants(seed in any::<u64>()) {
        let (_, scenario) = common::model_pair(seed);
        let scenario = ModelIndex::new(scenario);
        for trace in corpus(seed, &scenario) {
            let annotations = simulate(&trace, &scenario).unwrap();
            let writes = trace.events.iter().filter(|e| matches!(e.kind, EventKind::EntityWrite { .. })).count();
            prop_assert_eq!(annotations.writes.len(), writes);

            let by_id: HashMap<u64, _> = annotations.transactions.iter().map(|t| (t.tx_id, t)).collect();
            for tx in &annotations.transactions {
                if let TxKind::Subordinate { parent } = tx.kind {
                    let mut root = by_id[&parent];
                    while let TxKind::Subordinate { parent } = root.kind {
                        root = by_id[&parent];
                    }
                    prop_assert_eq!(tx.outcome, root.outcome);
                    prop_assert_eq!(tx.ended_at_event_id, root.ended_at_event_id);
                }
            }

            let mut phases: HashMap<u64, Vec<TxPhase>> = HashMap::new();
            for entry in &annotations.timeline {
                phases.entry(entry.tx_id).or_default().push(entry.phase);
            }
            prop_assert_eq!(phases.len(), annotations.transactions.len());
            for (tx, seq) in phases {
                prop_assert_eq!(seq[0], TxPhase::Clean, "tx {}", tx);
                prop_assert!(seq.last().unwrap().is_terminal(), "tx {}", tx);
                prop_assert_eq!(seq.iter().filter(|p| p.is_terminal()).count(), 1);
                for pair in seq.windows(2) {
                    let legal = match pair[0] {
                        TxPhase::Clean => pair[1] != TxPhase::Clean,
                        TxPhase::Dirty => pair[1] != TxPhase::Clean && pair[1] != TxPhase::Dirty,
                        TxPhase::Suspended => matches!(pair[1], TxPhase::Clean | TxPhase::Dirty),
                        TxPhase::Committed | TxPhase::Aborted => false,
                    };
                    prop_assert!(legal, "tx {} {:?}", tx, seq);
                }
            }
        }
    }
}
