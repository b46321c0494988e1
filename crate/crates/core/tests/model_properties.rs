mod common;

use proptest::prelude::*;
use whatif_core::dsl::parse_delta;
use whatif_core::model::{connection_for, microservice_groups, ConnectionKind, Propagation};
use whatif_core::{apply_delta, DeploymentModel};

const BEHAVIORS: [&str; 6] = [
    "REQUIRED",
    "REQUIRES_NEW",
    "SUPPORTS",
    "NOT_SUPPORTED",
    "MANDATORY",
    "NEVER",
];

/// Delta text over existing components: connection rewrites and behavior
/// overrides.
fn delta_text(model: &DeploymentModel, picks: &[(usize, usize, u8, u8)]) -> String {
    let names: Vec<&String> = model.components.keys().collect();
    let mut out = String::new();
    for &(a, b, kind, value) in picks {
        let (a, b) = (names[a % names.len()], names[b % names.len()]);
        if a == b {
            let candidate = model.components[a].service_candidates.keys().next().unwrap();
            let behavior = BEHAVIORS[value as usize % BEHAVIORS.len()];
            out.push_str(&format!(
                "component \"{a}\" {{ serviceCandidate {candidate} [ transactionBehavior = {behavior} ] }}\n"
            ));
        } else {
            match kind % 3 {
                0 => out.push_str(&format!("local \"{a}\" -> \"{b}\"\n")),
                1 => out.push_str(&format!("remote \"{a}\" -> \"{b}\" [ overhead = {value} ]\n")),
                _ => out.push_str(&format!(
                    "remote \"{a}\" -> \"{b}\" [ overhead = {value}, transactionPropagation = SUBORDINATE ]\n"
                )),
            }
        }
    }
    out
}

fn scenario_inputs() -> impl Strategy<Value = (u64, Vec<(usize, usize, u8, u8)>)> {
    (
        any::<u64>(),
        prop::collection::vec((0..4usize, 0..4usize, any::<u8>(), any::<u8>()), 0..5),
    )
}

proptest! {
    #[test]
    fn applying_a_delta_twice_changes_nothing((seed, picks) in scenario_inputs()) {
        let base = common::model_pair(seed).0;
        let text = delta_text(&base, &picks);
        let Ok(delta) = parse_delta(&text) else {
            // two picks naming the same pair twice are rejected as duplicates
            return Ok(());
        };
        let once = apply_delta(&base, &delta).unwrap();
        let twice = apply_delta(&once, &delta).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn empty_delta_is_identity(seed in any::<u64>()) {
        let base = common::model_pair(seed).0;
        prop_assert_eq!(apply_delta(&base, &parse_delta("").unwrap()).unwrap(), base);
    }

    #[test]
    fn groups_partition_components(seed in any::<u64>()) {
        let (_, model) = common::model_pair(seed);
        let groups = microservice_groups(&model);
        let mut seen: Vec<&String> = groups.iter().flat_map(|g| &g.components).collect();
        seen.sort();
        let all: Vec<&String> = model.components.keys().collect();
        prop_assert_eq!(seen, all);
        let group_of = |name: &str| groups.iter().position(|g| g.components.iter().any(|c| c == name)).unwrap();
        for ((a, b), c) in &model.connections {
            if c.kind == ConnectionKind::Local {
                prop_assert_eq!(group_of(a), group_of(b));
            }
        }
        for (i, group) in groups.iter().enumerate() {
            let propagating = model.connections.iter().any(|((a, b), c)| {
                c.kind == ConnectionKind::Remote
                    && c.propagation == Propagation::Subordinate
                    && (group_of(a) == i || group_of(b) == i)
            });
            prop_assert_eq!(group.potential_microservice, !propagating);
        }
    }

    #[test]
    fn connections_are_symmetric(seed in any::<u64>()) {
        let (_, model) = common::model_pair(seed);
        for a in model.components.keys() {
            for b in model.components.keys() {
                prop_assert_eq!(connection_for(&model, a, b).unwrap(), connection_for(&model, b, a).unwrap());
            }
        }
    }
}
