//! Deterministic synthetic traces over a deployment model.
//!
//! Randomness comes from ChaCha8 seeded with `GenConfig::seed`, so a
//! (config, model) pair always yields the same corpus. Traces are first laid
//! out as call trees with entity accesses and rollback markers, then the
//! model's transaction rules are simulated and written back, which gives
//! every trace the container transaction events it would have been recorded
//! with.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelIndex;
use crate::rewrite::materialize;
use crate::trace::{EventTrace, Name, TraceBuilder};
use crate::tx::{simulate, SimulationError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceShape {
    /// Random call trees.
    #[default]
    Random,
    /// One top-level candidate invoking a remote candidate exactly
    /// `max_remote_invocations_per_trace` times.
    Loop,
}

fn default_steps() -> u32 {
    4
}
fn default_local_cap() -> u64 {
    200
}
fn default_work() -> u64 {
    5
}
fn default_jitter() -> u64 {
    2
}
fn default_write_share() -> f64 {
    0.5
}
fn default_ids() -> u32 {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GenConfig {
    pub trace_count: u64,
    pub max_remote_invocations_per_trace: u64,
    pub max_depth: u32,
    pub entity_access_probability: f64,
    pub abort_probability: f64,
    /// Use cases to draw from; empty means all use cases of the model.
    #[serde(default)]
    pub use_case_pool: Vec<String>,
    pub seed: u64,
    #[serde(default)]
    pub shape: TraceShape,
    /// Upper bound of calls and accesses issued by one candidate execution.
    #[serde(default = "default_steps")]
    pub max_steps_per_span: u32,
    #[serde(default = "default_local_cap")]
    pub max_local_invocations_per_trace: u64,
    /// Upper bound of the time spent between two events of one execution.
    #[serde(default = "default_work")]
    pub max_work_time: u64,
    /// Upper bound of the random time added to a remote hop's overhead.
    #[serde(default = "default_jitter")]
    pub remote_jitter: u64,
    /// Share of entity accesses that are writes.
    #[serde(default = "default_write_share")]
    pub write_share: f64,
    /// Entity ids are drawn from `1..=entity_id_range`.
    #[serde(default = "default_ids")]
    pub entity_id_range: u32,
}

impl GenConfig {
    pub fn new(trace_count: u64, max_remote: u64, seed: u64) -> Self {
        GenConfig {
            trace_count,
            max_remote_invocations_per_trace: max_remote,
            max_depth: 6,
            entity_access_probability: 0.3,
            abort_probability: 0.05,
            use_case_pool: Vec::new(),
            seed,
            shape: TraceShape::Random,
            max_steps_per_span: default_steps(),
            max_local_invocations_per_trace: default_local_cap(),
            max_work_time: default_work(),
            remote_jitter: default_jitter(),
            write_share: default_write_share(),
            entity_id_range: default_ids(),
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        for (name, p) in [
            ("entityAccessProbability", self.entity_access_probability),
            ("abortProbability", self.abort_probability),
            ("writeShare", self.write_share),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(GenError::InvalidConfig(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.entity_id_range == 0 {
            return Err(GenError::InvalidConfig("entityIdRange must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("the model has no service candidates")]
    EmptyModel,
    #[error("no candidate of use case \"{0}\" reaches a candidate over a remote connection")]
    NoRemoteConnection(String),
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("generated trace cannot be simulated: {0}")]
    Simulation(#[from] SimulationError),
}

#[derive(Clone, Copy)]
struct Callee {
    candidate: usize,
    remote: bool,
    overhead: u64,
}

struct Layout {
    candidates: Vec<(Name, usize)>,
    /// Reachable callees per component.
    callees: Vec<Vec<Callee>>,
    /// Entity types per component, falling back to all entity types.
    entities: Vec<Vec<Name>>,
    use_cases: Vec<(Name, Option<usize>)>,
}

impl Layout {
    fn new(config: &GenConfig, index: &ModelIndex) -> Result<Self, GenError> {
        let candidates: Vec<(Name, usize)> = index.candidate_names().map(|(n, c)| (Name::from(n), c)).collect();
        if candidates.is_empty() {
            return Err(GenError::EmptyModel);
        }
        let model = index.model();
        let all_entities: Vec<Name> = index.entity_names().map(Name::from).collect();
        let mut callees = Vec::new();
        let mut entities = Vec::new();
        for (from, component) in model.components.values().enumerate() {
            let reachable = candidates
                .iter()
                .enumerate()
                .filter_map(|(i, &(_, to))| {
                    let view = index.link(from, to);
                    view.kind().map(|_| Callee {
                        candidate: i,
                        remote: view.is_remote(),
                        overhead: view.overhead(),
                    })
                })
                .collect();
            callees.push(reachable);
            let own: Vec<Name> = component.entity_types.iter().map(|e| Name::from(e.as_str())).collect();
            entities.push(if own.is_empty() { all_entities.clone() } else { own });
        }
        let names: Vec<String> = if config.use_case_pool.is_empty() {
            model
                .components
                .values()
                .flat_map(|c| c.use_cases.iter().cloned())
                .collect()
        } else {
            config.use_case_pool.clone()
        };
        let mut use_cases: Vec<(Name, Option<usize>)> = names
            .iter()
            .map(|n| (Name::from(n.as_str()), index.use_case_component(n)))
            .collect();
        if use_cases.is_empty() {
            use_cases.push((Name::from("Generated"), None));
        }
        Ok(Layout {
            candidates,
            callees,
            entities,
            use_cases,
        })
    }

    /// Candidates a use case may invoke first, with the hop they take.
    fn entry_points(&self, use_case: usize) -> Vec<Callee> {
        match self.use_cases[use_case].1 {
            Some(component) => self.callees[component].clone(),
            None => (0..self.candidates.len())
                .map(|candidate| Callee {
                    candidate,
                    remote: false,
                    overhead: 0,
                })
                .collect(),
        }
    }
}

struct Budget {
    remote: u64,
    local: u64,
}

struct Generator<'a> {
    config: &'a GenConfig,
    layout: Layout,
    rng: ChaCha8Rng,
    ids: Vec<Name>,
}

impl Generator<'_> {
    fn work(&mut self, b: &TraceBuilder) -> i64 {
        b.last_ts() + self.rng.random_range(0..=self.config.max_work_time) as i64
    }

    fn gap(&mut self, callee: Callee) -> i64 {
        if callee.remote {
            (callee.overhead + self.rng.random_range(0..=self.config.remote_jitter)) as i64
        } else {
            0
        }
    }

    fn access(&mut self, b: &mut TraceBuilder, component: usize) {
        let entities = &self.layout.entities[component];
        if entities.is_empty() {
            return;
        }
        let entity = entities[self.rng.random_range(0..entities.len())].clone();
        let id = self.ids[self.rng.random_range(0..self.ids.len())].clone();
        let ts = self.work(b);
        let write = self.rng.random_bool(self.config.write_share);
        let kind = if write {
            crate::trace::EventKind::EntityWrite {
                entity: crate::trace::EntityRef {
                    entity_type: entity,
                    entity_id: id,
                },
            }
        } else {
            crate::trace::EventKind::EntityRead {
                entity: crate::trace::EntityRef {
                    entity_type: entity,
                    entity_id: id,
                },
            }
        };
        b.push(ts, kind);
    }

    fn call(&mut self, b: &mut TraceBuilder, callee: Callee, depth: u32, budget: &mut Budget) {
        let name = self.layout.candidates[callee.candidate].0.clone();
        let invocation = self.work(b);
        let entry = invocation + self.gap(callee);
        b.invoke(invocation, entry, &name);
        self.body(b, callee.candidate, depth, budget);
        let exit = self.work(b);
        let ret = exit + self.gap(callee);
        b.leave(exit, ret, &name);
    }

    fn body(&mut self, b: &mut TraceBuilder, candidate: usize, depth: u32, budget: &mut Budget) {
        let component = self.layout.candidates[candidate].1;
        let steps = self.rng.random_range(0..=self.config.max_steps_per_span);
        for _ in 0..steps {
            if self.rng.random_bool(self.config.entity_access_probability) {
                self.access(b, component);
                continue;
            }
            if depth + 1 >= self.config.max_depth {
                continue;
            }
            let options = &self.layout.callees[component];
            if options.is_empty() {
                continue;
            }
            let callee = options[self.rng.random_range(0..options.len())];
            let left = if callee.remote {
                &mut budget.remote
            } else {
                &mut budget.local
            };
            if *left == 0 {
                continue;
            }
            *left -= 1;
            self.call(b, callee, depth + 1, budget);
        }
        if self.rng.random_bool(self.config.abort_probability) {
            let ts = self.work(b);
            b.abort(ts, 0, "generated failure");
        }
    }

    fn skeleton(&mut self, n: u64) -> Result<EventTrace, GenError> {
        let use_case = self.rng.random_range(0..self.layout.use_cases.len());
        let name = self.layout.use_cases[use_case].0.clone();
        let mut b = TraceBuilder::new(format!("t{n:07}"), &name, 0);
        let entry_points = self.layout.entry_points(use_case);
        match self.config.shape {
            TraceShape::Random => {
                let mut budget = Budget {
                    remote: self.config.max_remote_invocations_per_trace,
                    local: self.config.max_local_invocations_per_trace,
                };
                let choices: Vec<Callee> = entry_points
                    .iter()
                    .copied()
                    .filter(|c| !c.remote || budget.remote > 0)
                    .collect();
                if let Some(&root) = choices.get(self.rng.random_range(0..choices.len().max(1))) {
                    if root.remote {
                        budget.remote -= 1;
                    }
                    self.call(&mut b, root, 0, &mut budget);
                }
            }
            TraceShape::Loop => {
                let pick = entry_points.iter().copied().find_map(|root| {
                    let component = self.layout.candidates[root.candidate].1;
                    self.layout.callees[component]
                        .iter()
                        .copied()
                        .find(|c| c.remote)
                        .map(|c| (root, c))
                });
                let Some((root, remote)) = pick else {
                    return Err(GenError::NoRemoteConnection(name.to_string()));
                };
                let root_name = self.layout.candidates[root.candidate].0.clone();
                let remote_name = self.layout.candidates[remote.candidate].0.clone();
                let remote_component = self.layout.candidates[remote.candidate].1;
                let ts = self.work(&b);
                b.invoke(ts, ts + self.gap(root), &root_name);
                for _ in 0..self.config.max_remote_invocations_per_trace {
                    let invocation = self.work(&b);
                    b.invoke(invocation, invocation + self.gap(remote), &remote_name);
                    if self.rng.random_bool(self.config.entity_access_probability) {
                        self.access(&mut b, remote_component);
                    }
                    let exit = self.work(&b);
                    b.leave(exit, exit + self.gap(remote), &remote_name);
                }
                let exit = self.work(&b);
                b.leave(exit, exit + self.gap(root), &root_name);
            }
        }
        let end = b.last_ts();
        Ok(b.finish(end))
    }
}

/// Lazily generates `config.trace_count` traces.
pub fn generate_iter<'a>(
    config: &'a GenConfig,
    index: &'a ModelIndex,
) -> Result<impl Iterator<Item = Result<EventTrace, GenError>> + 'a, GenError> {
    config.validate()?;
    let mut generator = Generator {
        config,
        layout: Layout::new(config, index)?,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        ids: (1..=config.entity_id_range)
            .map(|i| Name::from(i.to_string()))
            .collect(),
    };
    Ok((0..config.trace_count).map(move |n| {
        let skeleton = generator.skeleton(n)?;
        let annotations = simulate(&skeleton, index)?;
        let (mut trace, _) = materialize(&skeleton, &annotations);
        for (i, event) in trace.events.iter_mut().enumerate() {
            event.id = i as u64;
        }
        Ok(trace)
    }))
}

pub fn generate(config: &GenConfig, index: &ModelIndex) -> Result<Vec<EventTrace>, GenError> {
    generate_iter(config, index)?.collect()
}
