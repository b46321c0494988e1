//! A brute-force transaction interpreter that walks a call tree recursively,
//! written against the container transaction rules without reusing any of
//! the engine's code, plus a generator of small random model/trace pairs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whatif_core::model::{
    Component, ComponentConnection, ConnectionKind, Propagation, ServiceCandidate, TransactionBehavior,
};
use whatif_core::trace::{Demarcation, EventKind, TraceBuilder};
use whatif_core::{DeploymentModel, EventTrace};

const BEHAVIORS: [TransactionBehavior; 6] = [
    TransactionBehavior::Required,
    TransactionBehavior::RequiresNew,
    TransactionBehavior::Supports,
    TransactionBehavior::NotSupported,
    TransactionBehavior::Mandatory,
    TransactionBehavior::Never,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Hop {
    Inherit,
    Cut,
    Subordinate,
}

#[derive(Debug, Clone)]
enum Node {
    Call {
        candidate: String,
        component: usize,
        behavior: TransactionBehavior,
        body: Vec<Node>,
        entry_id: u64,
        exit_id: u64,
    },
    Access {
        write: bool,
        entity: (String, String),
        id: u64,
    },
    Marker,
    Explicit {
        tx_id: u64,
        commit: bool,
        body: Vec<Node>,
        end_id: u64,
    },
}

/// A random model and a call tree consistent with it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub model: DeploymentModel,
    pub trace: EventTrace,
    root_component: usize,
    body: Vec<Node>,
    hops: Vec<Vec<Option<Hop>>>,
    explicit_count: u64,
}

/// What the oracle and the engine are compared on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    /// `(entry event id, transaction started)` in trace order.
    pub tx_started: Vec<(u64, bool)>,
    /// Write event id to committed (true) or reverted (false).
    pub writes: BTreeMap<u64, bool>,
    /// `(entity type, entity id, tx id, first write event id, end event id)`.
    pub pending: Vec<(String, String, u64, u64, u64)>,
}

struct Gen {
    rng: ChaCha8Rng,
    budget: usize,
    candidates: Vec<Vec<(String, TransactionBehavior)>>,
    hops: Vec<Vec<Option<Hop>>>,
    explicit_count: u64,
}

impl Gen {
    fn body(&mut self, component: usize, depth: u32) -> Vec<Node> {
        let mut nodes = Vec::new();
        let steps = self.rng.random_range(0..=4);
        for _ in 0..steps {
            let roll = self.rng.random_range(0..100);
            if roll < 45 && depth < 5 && self.budget >= 4 {
                let targets: Vec<usize> = (0..self.hops.len())
                    .filter(|&c| self.hops[component][c].is_some())
                    .collect();
                let callee = targets[self.rng.random_range(0..targets.len())];
                let (candidate, behavior) =
                    self.candidates[callee][self.rng.random_range(0..self.candidates[callee].len())].clone();
                self.budget -= 4;
                let body = self.body(callee, depth + 1);
                nodes.push(Node::Call {
                    candidate,
                    component: callee,
                    behavior,
                    body,
                    entry_id: 0,
                    exit_id: 0,
                });
            } else if roll < 85 && self.budget >= 1 {
                self.budget -= 1;
                let owner = self.rng.random_range(0..self.hops.len());
                nodes.push(Node::Access {
                    write: self.rng.random_bool(0.6),
                    entity: (format!("E{owner}"), self.rng.random_range(1..=2).to_string()),
                    id: 0,
                });
            } else if roll < 92 && self.budget >= 1 {
                self.budget -= 1;
                nodes.push(Node::Marker);
            } else if self.budget >= 2 {
                self.budget -= 2;
                self.explicit_count += 1;
                let tx_id = self.explicit_count;
                let body = self.body(component, depth + 1);
                nodes.push(Node::Explicit {
                    tx_id,
                    commit: self.rng.random_bool(0.7),
                    body,
                    end_id: 0,
                });
            }
        }
        nodes
    }
}

fn emit(nodes: &mut [Node], b: &mut TraceBuilder, ts: &mut i64) {
    for node in nodes {
        *ts += 1;
        match node {
            Node::Call {
                candidate,
                body,
                entry_id,
                exit_id,
                ..
            } => {
                *entry_id = b.invoke(*ts, *ts + 1, candidate);
                *ts += 1;
                emit(body, b, ts);
                *ts += 1;
                *exit_id = b.leave(*ts, *ts + 1, candidate);
                *ts += 1;
            }
            Node::Access { write, entity, id } => {
                *id = if *write {
                    b.write(*ts, &entity.0, &entity.1)
                } else {
                    b.read(*ts, &entity.0, &entity.1)
                };
            }
            Node::Marker => {
                b.abort(*ts, 0, "application exception");
            }
            Node::Explicit {
                tx_id,
                commit,
                body,
                end_id,
            } => {
                b.push(
                    *ts,
                    EventKind::TxStart {
                        tx_id: *tx_id,
                        demarcation: Demarcation::Explicit,
                    },
                );
                emit(body, b, ts);
                *ts += 1;
                *end_id = if *commit {
                    b.push(*ts, EventKind::TxCommit { tx_id: *tx_id })
                } else {
                    b.abort(*ts, *tx_id, "rollback")
                };
            }
        }
    }
}

/// Draws a model of 1 to 4 components and a trace of at most `max_events`
/// events over it.
pub fn instance(seed: u64, max_events: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=4);
    let mut model = DeploymentModel::default();
    let mut candidates = Vec::new();
    for c in 0..n {
        let mut component = Component::default();
        let mut own = Vec::new();
        for k in 0..rng.random_range(1..=2) {
            let behavior = BEHAVIORS[rng.random_range(0..BEHAVIORS.len())];
            let name = format!("c{c}_{k}");
            component.service_candidates.insert(
                name.clone(),
                ServiceCandidate {
                    transaction_behavior: behavior,
                },
            );
            own.push((name, behavior));
        }
        component.entity_types.insert(format!("E{c}"));
        if c == 0 {
            component.use_cases.insert("U".into());
        }
        model.components.insert(format!("C{c}"), component);
        candidates.push(own);
    }
    let mut hops = vec![vec![None; n]; n];
    for (i, row) in hops.iter_mut().enumerate() {
        row[i] = Some(Hop::Inherit);
    }
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        for j in i + 1..n {
            if !rng.random_bool(0.75) {
                continue;
            }
            let connection = match rng.random_range(0..3) {
                0 => ComponentConnection::local(),
                1 => ComponentConnection::remote(rng.random_range(0..20), Propagation::None),
                _ => ComponentConnection::remote(rng.random_range(0..20), Propagation::Subordinate),
            };
            let hop = match (connection.kind, connection.propagation) {
                (ConnectionKind::Local, _) => Hop::Inherit,
                (ConnectionKind::Remote, Propagation::None) => Hop::Cut,
                (ConnectionKind::Remote, Propagation::Subordinate) => Hop::Subordinate,
            };
            hops[i][j] = Some(hop);
            hops[j][i] = Some(hop);
            let key = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
            model
                .connections
                .insert((format!("C{}", key.0), format!("C{}", key.1)), connection);
        }
    }

    let mut gen = Gen {
        rng,
        budget: max_events - 2,
        candidates,
        hops,
        explicit_count: 0,
    };
    let mut body = gen.body(0, 0);
    let mut b = TraceBuilder::new(format!("o{seed}"), "U", 0);
    let mut ts = 0;
    emit(&mut body, &mut b, &mut ts);
    let trace = b.finish(ts + 1);
    Instance {
        model,
        trace,
        root_component: 0,
        body,
        hops: gen.hops,
        explicit_count: gen.explicit_count,
    }
}

struct OracleTx {
    id: u64,
    root: usize,
    subordinates: Vec<usize>,
    rollback_only: bool,
    writes: Vec<u64>,
    first_writes: BTreeMap<(String, String), u64>,
}

struct Interpreter<'a> {
    hops: &'a [Vec<Option<Hop>>],
    next_id: u64,
    txs: Vec<OracleTx>,
    out: Outcome,
}

enum Context {
    Join,
    Start,
    Without,
}

/// The container's choice for a callee, given whether a transaction reaches
/// it. Misconfigured candidates run as if they were REQUIRED.
fn container_choice(behavior: TransactionBehavior, has_tx: bool) -> Context {
    use TransactionBehavior::*;
    match behavior {
        Required | Mandatory => {
            if has_tx {
                Context::Join
            } else {
                Context::Start
            }
        }
        RequiresNew => Context::Start,
        Supports | Never => {
            if has_tx {
                Context::Join
            } else {
                Context::Without
            }
        }
        NotSupported => Context::Without,
    }
}

impl Interpreter<'_> {
    fn open(&mut self, id: Option<u64>, parent: Option<usize>) -> usize {
        let id = id.unwrap_or_else(|| {
            self.next_id += 1;
            self.next_id - 1
        });
        let idx = self.txs.len();
        let root = parent.map_or(idx, |p| self.txs[p].root);
        self.txs.push(OracleTx {
            id,
            root,
            subordinates: Vec::new(),
            rollback_only: false,
            writes: Vec::new(),
            first_writes: BTreeMap::new(),
        });
        if root != idx {
            self.txs[root].subordinates.push(idx);
        }
        idx
    }

    fn close(&mut self, tx: usize, abort: bool, end: u64) {
        let committed = !(abort || self.txs[tx].rollback_only);
        let mut members = vec![tx];
        members.extend(self.txs[tx].subordinates.iter().copied());
        for m in members {
            for &w in &self.txs[m].writes {
                self.out.writes.insert(w, committed);
            }
            for ((ty, id), &first) in &self.txs[m].first_writes {
                self.out
                    .pending
                    .push((ty.clone(), id.clone(), self.txs[m].id, first, end));
            }
        }
    }

    fn run(&mut self, nodes: &[Node], component: usize, tx: Option<usize>) {
        for node in nodes {
            match node {
                Node::Access { write: false, .. } => {}
                Node::Access {
                    write: true,
                    entity,
                    id,
                } => match tx {
                    Some(t) => {
                        self.txs[t].writes.push(*id);
                        self.txs[t].first_writes.entry(entity.clone()).or_insert(*id);
                    }
                    None => {
                        self.out.writes.insert(*id, true);
                    }
                },
                Node::Marker => {
                    if let Some(t) = tx {
                        let root = self.txs[t].root;
                        self.txs[t].rollback_only = true;
                        self.txs[root].rollback_only = true;
                    }
                }
                Node::Explicit {
                    tx_id,
                    commit,
                    body,
                    end_id,
                } => {
                    let e = self.open(Some(*tx_id), None);
                    self.run(body, component, Some(e));
                    self.close(e, !commit, *end_id);
                }
                Node::Call {
                    component: callee,
                    behavior,
                    body,
                    entry_id,
                    exit_id,
                    ..
                } => {
                    let hop = self.hops[component][*callee].expect("generated along connections");
                    let (reaching, subordinate) = match (hop, tx) {
                        (Hop::Inherit, t) => (t, false),
                        (Hop::Cut, _) | (Hop::Subordinate, None) => (None, false),
                        (Hop::Subordinate, Some(parent)) => (Some(self.open(None, Some(parent))), true),
                    };
                    let (inner, started) = match container_choice(*behavior, reaching.is_some()) {
                        Context::Join => (reaching, None),
                        Context::Start => {
                            let t = self.open(None, None);
                            (Some(t), Some(t))
                        }
                        Context::Without => (None, None),
                    };
                    self.out.tx_started.push((*entry_id, started.is_some() || subordinate));
                    self.run(body, *callee, inner);
                    if let Some(t) = started {
                        self.close(t, false, *exit_id);
                    }
                }
            }
        }
    }
}

/// Interprets an instance's call tree.
pub fn interpret(instance: &Instance) -> Outcome {
    let mut interpreter = Interpreter {
        hops: &instance.hops,
        next_id: instance.explicit_count + 1,
        txs: Vec::new(),
        out: Outcome {
            tx_started: Vec::new(),
            writes: BTreeMap::new(),
            pending: Vec::new(),
        },
    };
    interpreter.run(&instance.body, instance.root_component, None);
    let mut out = interpreter.out;
    out.tx_started.sort_unstable();
    out.pending.sort_unstable();
    out
}

/// The same observables read off the engine's annotations.
pub fn engine_outcome(annotations: &whatif_core::TxAnnotations) -> Outcome {
    let mut tx_started: Vec<(u64, bool)> = annotations.entries.iter().map(|e| (e.event_id, e.tx_started)).collect();
    tx_started.sort_unstable();
    let writes = annotations
        .writes
        .iter()
        .map(|w| (w.event_id, w.outcome == whatif_core::tx::WriteOutcome::Committed))
        .collect();
    let mut pending: Vec<_> = annotations
        .pending
        .iter()
        .map(|p| {
            (
                p.entity.entity_type.to_string(),
                p.entity.entity_id.to_string(),
                p.tx_id,
                p.first_write_event_id,
                p.end_event_id,
            )
        })
        .collect();
    pending.sort_unstable();
    Outcome {
        tx_started,
        writes,
        pending,
    }
}
