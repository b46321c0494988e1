//! Helpers shared by the integration test targets: fixtures, an independent
//! recursive transaction interpreter with its instance generator, and a
//! numeric-integration oracle for Student's t tail probabilities.

#![allow(dead_code)]

pub mod oracle;

use std::f64::consts::FRAC_PI_2;

use whatif_core::dsl::{parse_delta, parse_model};
use whatif_core::{apply_delta, DeploymentModel};

pub const CAR_INSURANCE: &str = include_str!("../../../../fixtures/car-insurance.dm");
pub const REMOTE_CONTRACTS: &str = include_str!("../../../../fixtures/remote-contracts.dms");

pub fn example_models() -> (DeploymentModel, DeploymentModel) {
    let base = parse_model(CAR_INSURANCE).unwrap();
    let scenario = apply_delta(&base, &parse_delta(REMOTE_CONTRACTS).unwrap()).unwrap();
    (base, scenario)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Two-sided Student t tail by integrating the density. With
/// `x = sqrt(df) tan(theta)` the density becomes proportional to
/// `cos(theta)^(df - 1)` on `[0, pi/2)`, which is smooth and bounded.
pub fn t_tail_by_integration(t: f64, df: f64) -> f64 {
    let density = |theta: f64| theta.cos().powf(df - 1.0);
    let upper = (t.abs() / df.sqrt()).atan();
    let n = 200_000;
    1.0 - simpson(density, 0.0, upper, n) / simpson(density, 0.0, FRAC_PI_2, n)
}

/// Welch t and Welch-Satterthwaite degrees of freedom by the textbook
/// two-pass formulas.
pub fn welch_by_definition(a: &[f64], b: &[f64]) -> (f64, f64) {
    let moments = |xs: &[f64]| {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (n, mean, var)
    };
    let (na, ma, va) = moments(a);
    let (nb, mb, vb) = moments(b);
    let (sa, sb) = (va / na, vb / nb);
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    (t, df)
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whatif_core::model::{ComponentConnection, ConflictBehavior, DataStore, Propagation, TransactionBehavior};

/// A random base model of up to four components and a scenario that
/// changes connection attributes, candidate behaviors and conflict
/// behaviors but keeps every component pair's connectivity.
pub fn model_pair(seed: u64) -> (DeploymentModel, DeploymentModel) {
    let mut base = oracle::instance(seed, 2).model;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let entities: Vec<String> = base
        .components
        .values()
        .flat_map(|c| c.entity_types.iter().cloned())
        .collect();
    let mut store = DataStore::default();
    for e in entities.iter().filter(|_| rng.random_bool(0.5)) {
        store.entity_types.insert(e.clone());
    }
    if !store.entity_types.is_empty() {
        base.data_stores.insert("Store".into(), store);
    }

    let mut scenario = base.clone();
    for connection in scenario.connections.values_mut() {
        if rng.random_bool(0.6) {
            *connection = match rng.random_range(0..3) {
                0 => ComponentConnection::local(),
                1 => ComponentConnection::remote(rng.random_range(0..30), Propagation::None),
                _ => ComponentConnection::remote(rng.random_range(0..30), Propagation::Subordinate),
            };
        }
    }
    const BEHAVIORS: [TransactionBehavior; 6] = [
        TransactionBehavior::Required,
        TransactionBehavior::RequiresNew,
        TransactionBehavior::Supports,
        TransactionBehavior::NotSupported,
        TransactionBehavior::Mandatory,
        TransactionBehavior::Never,
    ];
    for component in scenario.components.values_mut() {
        for candidate in component.service_candidates.values_mut() {
            if rng.random_bool(0.3) {
                candidate.transaction_behavior = BEHAVIORS[rng.random_range(0..BEHAVIORS.len())];
            }
        }
    }
    for store in scenario.data_stores.values_mut() {
        if rng.random_bool(0.5) {
            store.conflict_behavior = ConflictBehavior::Block;
        }
    }
    (base, scenario)
}
