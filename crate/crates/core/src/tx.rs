//! Emulation of container-managed transactions along a trace.
//!
//! [`simulate`] replays a trace against a deployment model and decides, at
//! every candidate entry, whether the callee joins, starts, suspends or runs
//! without a transaction. Remote connections either cut the caller's context
//! or carry it over as a subordinate transaction that prepares at the callee's
//! exit and completes together with its top-level transaction.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::{ConnectionView, ModelIndex, Propagation, TransactionBehavior};
use crate::trace::{Demarcation, EntityRef, EventKind, EventTrace, Name, TxId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    MandatoryWithoutTx,
    NeverWithTx,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::MandatoryWithoutTx => "MANDATORY_WITHOUT_TX",
            ViolationKind::NeverWithTx => "NEVER_WITH_TX",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntryAction {
    Join,
    StartNew,
    SuspendAndStartNew,
    SuspendOnly,
    RunWithoutTx,
    Violation(ViolationKind),
}

impl fmt::Display for EntryAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntryAction::Join => f.write_str("JOIN"),
            EntryAction::StartNew => f.write_str("START_NEW"),
            EntryAction::SuspendAndStartNew => f.write_str("SUSPEND_AND_START_NEW"),
            EntryAction::SuspendOnly => f.write_str("SUSPEND_ONLY"),
            EntryAction::RunWithoutTx => f.write_str("RUN_WITHOUT_TX"),
            EntryAction::Violation(kind) => write!(f, "VIOLATION({})", kind.as_str()),
        }
    }
}

impl Serialize for EntryAction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// The transaction attribute decision table, applied at candidate entry.
pub fn decide_entry(behavior: TransactionBehavior, inherited: bool) -> EntryAction {
    use EntryAction::*;
    use TransactionBehavior as B;
    match (behavior, inherited) {
        (B::Required, true) => Join,
        (B::Required, false) => StartNew,
        (B::RequiresNew, true) => SuspendAndStartNew,
        (B::RequiresNew, false) => StartNew,
        (B::Supports, true) => Join,
        (B::Supports, false) => RunWithoutTx,
        (B::NotSupported, true) => SuspendOnly,
        (B::NotSupported, false) => RunWithoutTx,
        (B::Mandatory, true) => Join,
        (B::Mandatory, false) => Violation(ViolationKind::MandatoryWithoutTx),
        (B::Never, true) => Violation(ViolationKind::NeverWithTx),
        (B::Never, false) => RunWithoutTx,
    }
}

/// The action actually carried out: violating entries proceed as `REQUIRED`.
pub fn effective_action(behavior: TransactionBehavior, inherited: bool) -> EntryAction {
    match decide_entry(behavior, inherited) {
        EntryAction::Violation(_) => decide_entry(TransactionBehavior::Required, inherited),
        action => action,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TxKind {
    TopLevel,
    Subordinate { parent: TxId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TxOutcome {
    Committed,
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WriteOutcome {
    Committed,
    Reverted,
}

impl WriteOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            WriteOutcome::Committed => "COMMITTED",
            WriteOutcome::Reverted => "REVERTED",
        }
    }
}

/// Transaction states as shown on timelines. A prepared subordinate stays
/// `Clean` or `Dirty` until its top-level transaction completes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TxPhase {
    Clean,
    Dirty,
    Suspended,
    Committed,
    Aborted,
}

impl TxPhase {
    pub fn is_terminal(self) -> bool {
        matches!(self, TxPhase::Committed | TxPhase::Aborted)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntryAnnotation {
    pub event_id: u64,
    pub action: EntryAction,
    pub tx_started: bool,
    /// Whether the traversed connection is remote.
    pub remote: bool,
    /// Context the callee runs in after the entry.
    pub tx: Option<TxId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WriteAnnotation {
    pub event_id: u64,
    pub entity: EntityRef,
    /// `None` for writes outside any transaction; those commit immediately.
    pub tx: Option<TxId>,
    pub outcome: WriteOutcome,
}

/// Span of events during which a transaction holds an uncommitted write.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PendingInterval {
    pub entity: EntityRef,
    pub tx_id: TxId,
    pub first_write_event_id: u64,
    pub end_event_id: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TxRecord {
    pub tx_id: TxId,
    pub kind: TxKind,
    pub demarcation: Demarcation,
    pub started_at_event_id: u64,
    pub ended_at_event_id: u64,
    pub outcome: TxOutcome,
    pub rollback_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TimelineEntry {
    pub tx_id: TxId,
    pub phase: TxPhase,
    pub ts: i64,
    pub event_id: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntryViolation {
    pub event_id: u64,
    pub candidate: Name,
    pub kind: ViolationKind,
}

/// A transaction outside the accessor's top-level transaction holding a
/// pending write. Branches of one distributed transaction see each other's
/// writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Holder {
    pub tx_id: TxId,
    pub suspended: bool,
    /// The holder sits on the caller side of a remote hop that cut the
    /// accessor's context off.
    pub across_none_hop: bool,
}

/// An entity access that happened while other transactions held pending
/// writes to the same entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AccessObservation {
    pub event_id: u64,
    pub entity: EntityRef,
    pub write: bool,
    pub tx: Option<TxId>,
    pub holders: Vec<Holder>,
}

/// Container transaction event to emit when materializing the simulation
/// into a trace. `position` indexes the simulated trace's events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedTxEvent {
    pub position: usize,
    pub after: bool,
    pub ts: i64,
    pub tx_id: TxId,
    pub start: bool,
    pub adopted_event_id: Option<u64>,
}

/// Where an input rollback marker lands: the context current at that point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarkerTarget {
    pub position: usize,
    pub tx_id: Option<TxId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TxAnnotations {
    pub entries: Vec<EntryAnnotation>,
    pub writes: Vec<WriteAnnotation>,
    pub pending: Vec<PendingInterval>,
    pub transactions: Vec<TxRecord>,
    pub timeline: Vec<TimelineEntry>,
    pub violations: Vec<EntryViolation>,
    pub accesses: Vec<AccessObservation>,
    #[serde(skip)]
    pub planned: Vec<PlannedTxEvent>,
    #[serde(skip)]
    pub markers: Vec<MarkerTarget>,
}

impl TxAnnotations {
    pub fn write_outcome(&self, event_id: u64) -> Option<WriteOutcome> {
        self.writes
            .binary_search_by_key(&event_id, |w| w.event_id)
            .ok()
            .map(|i| self.writes[i].outcome)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulationError {
    #[error("event {event_id}: unknown service candidate \"{candidate}\"")]
    UnknownCandidate { event_id: u64, candidate: String },
    #[error("event {event_id}: components \"{from}\" and \"{to}\" are not connected")]
    NotConnected { event_id: u64, from: String, to: String },
    #[error("event {event_id}: {message}")]
    Malformed { event_id: u64, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Active,
    Suspended,
    Ended,
}

struct Tx {
    id: TxId,
    kind: TxKind,
    demarcation: Demarcation,
    root: usize,
    subordinates: Vec<usize>,
    state: State,
    rollback_only: bool,
    none_level: u32,
    started_at: u64,
    ended_at: u64,
    outcome: TxOutcome,
    writes: Vec<usize>,
    pending: Vec<(EntityRef, u64)>,
    pending_entities: HashSet<EntityRef>,
}

struct Frame {
    component: Option<usize>,
    none_level: u32,
    current: Option<usize>,
    started: Option<usize>,
    suspended: Option<usize>,
    explicit: Vec<(usize, Option<usize>)>,
}

struct Engine<'a> {
    index: &'a ModelIndex,
    txs: Vec<Tx>,
    /// Per entity, the transactions with a pending write, grouped by the
    /// top-level transaction they belong to.
    holders: HashMap<EntityRef, BTreeMap<usize, Vec<usize>>>,
    next_tx: TxId,
    out: TxAnnotations,
}

impl Engine<'_> {
    fn record(&mut self, tx: usize, phase: TxPhase, ts: i64, event_id: u64) {
        self.out.timeline.push(TimelineEntry {
            tx_id: self.txs[tx].id,
            phase,
            ts,
            event_id,
        });
    }

    fn fresh_tx_id(&mut self, adopted: Option<TxId>) -> TxId {
        adopted.unwrap_or_else(|| {
            let id = self.next_tx;
            self.next_tx += 1;
            id
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn begin(
        &mut self,
        id: TxId,
        parent: Option<usize>,
        demarcation: Demarcation,
        none_level: u32,
        event_id: u64,
        ts: i64,
    ) -> usize {
        let idx = self.txs.len();
        let (kind, root) = match parent {
            Some(p) => (TxKind::Subordinate { parent: self.txs[p].id }, self.txs[p].root),
            None => (TxKind::TopLevel, idx),
        };
        self.txs.push(Tx {
            id,
            kind,
            demarcation,
            root,
            subordinates: Vec::new(),
            state: State::Active,
            rollback_only: false,
            none_level,
            started_at: event_id,
            ended_at: 0,
            outcome: TxOutcome::Committed,
            writes: Vec::new(),
            pending: Vec::new(),
            pending_entities: HashSet::new(),
        });
        if root != idx {
            self.txs[root].subordinates.push(idx);
        }
        self.record(idx, TxPhase::Clean, ts, event_id);
        idx
    }

    fn active_phase(&self, tx: usize) -> TxPhase {
        if self.txs[tx].pending.is_empty() {
            TxPhase::Clean
        } else {
            TxPhase::Dirty
        }
    }

    fn suspend(&mut self, tx: usize, ts: i64, event_id: u64) {
        self.txs[tx].state = State::Suspended;
        self.record(tx, TxPhase::Suspended, ts, event_id);
    }

    fn resume(&mut self, tx: usize, ts: i64, event_id: u64) {
        self.txs[tx].state = State::Active;
        let phase = self.active_phase(tx);
        self.record(tx, phase, ts, event_id);
    }

    fn mark_rollback_only(&mut self, tx: usize) {
        self.txs[tx].rollback_only = true;
        let root = self.txs[tx].root;
        self.txs[root].rollback_only = true;
    }

    /// Completes a top-level transaction together with its subordinates.
    fn complete(&mut self, root: usize, abort: bool, event_id: u64, ts: i64) -> TxOutcome {
        let outcome = if abort || self.txs[root].rollback_only {
            TxOutcome::Aborted
        } else {
            TxOutcome::Committed
        };
        let (phase, write_outcome) = match outcome {
            TxOutcome::Committed => (TxPhase::Committed, WriteOutcome::Committed),
            TxOutcome::Aborted => (TxPhase::Aborted, WriteOutcome::Reverted),
        };
        let members: Vec<usize> = std::iter::once(root)
            .chain(self.txs[root].subordinates.iter().copied())
            .collect();
        for tx in members {
            let t = &mut self.txs[tx];
            t.state = State::Ended;
            t.outcome = outcome;
            t.ended_at = event_id;
            let writes = std::mem::take(&mut t.writes);
            let pending = std::mem::take(&mut t.pending);
            t.pending_entities = HashSet::new();
            let tx_id = t.id;
            for w in writes {
                self.out.writes[w].outcome = write_outcome;
            }
            for (entity, first) in pending {
                if let Some(groups) = self.holders.get_mut(&entity) {
                    groups.remove(&root);
                    if groups.is_empty() {
                        self.holders.remove(&entity);
                    }
                }
                self.out.pending.push(PendingInterval {
                    entity,
                    tx_id,
                    first_write_event_id: first,
                    end_event_id: event_id,
                });
            }
            self.record(tx, phase, ts, event_id);
        }
        outcome
    }

    fn plan(&mut self, position: usize, after: bool, ts: i64, tx: usize, start: bool, adopted: Option<u64>) {
        self.out.planned.push(PlannedTxEvent {
            position,
            after,
            ts,
            tx_id: self.txs[tx].id,
            start,
            adopted_event_id: adopted,
        });
    }

    fn plan_subordinate_commits(&mut self, root: usize, position: usize, after: bool, ts: i64) {
        for i in 0..self.txs[root].subordinates.len() {
            let sub = self.txs[root].subordinates[i];
            self.plan(position, after, ts, sub, false, None);
        }
    }

    fn observe(&mut self, frame: &Frame, event_id: u64, entity: &EntityRef, write: bool) {
        let Some(groups) = self.holders.get(entity) else {
            return;
        };
        let own_root = frame.current.map(|t| self.txs[t].root);
        let holders: Vec<Holder> = groups
            .iter()
            .filter(|(&root, _)| Some(root) != own_root)
            .flat_map(|(_, members)| members)
            .map(|&h| Holder {
                tx_id: self.txs[h].id,
                suspended: self.txs[h].state == State::Suspended,
                across_none_hop: frame.none_level > self.txs[h].none_level,
            })
            .collect();
        if !holders.is_empty() {
            self.out.accesses.push(AccessObservation {
                event_id,
                entity: entity.clone(),
                write,
                tx: frame.current.map(|t| self.txs[t].id),
                holders,
            });
        }
    }
}

/// Replays `trace` under the model's transaction rules.
///
/// Container transaction events already present in the input are treated as
/// derived data: their ids are reused where a transaction starts at the same
/// entry, but they do not drive the simulation. Rollback markers (aborts of
/// container transactions) apply to whatever context is current at that
/// point. Explicitly demarcated transactions are replayed as recorded.
pub fn simulate(trace: &EventTrace, index: &ModelIndex) -> Result<TxAnnotations, SimulationError> {
    let mut explicit_ids = HashSet::new();
    let mut max_tx = None::<TxId>;
    for event in &trace.events {
        match event.kind {
            EventKind::TxStart { tx_id, demarcation } => {
                if demarcation == Demarcation::Explicit {
                    explicit_ids.insert(tx_id);
                }
                max_tx = max_tx.max(Some(tx_id));
            }
            EventKind::TxCommit { tx_id } | EventKind::TxAbort { tx_id, .. } => max_tx = max_tx.max(Some(tx_id)),
            _ => {}
        }
    }

    let mut engine = Engine {
        index,
        txs: Vec::new(),
        holders: HashMap::new(),
        next_tx: max_tx.map_or(1, |m| m + 1),
        out: TxAnnotations::default(),
    };
    let mut explicit_map: HashMap<TxId, usize> = HashMap::new();
    let mut stack = vec![Frame {
        component: index.use_case_component(&trace.use_case),
        none_level: 0,
        current: None,
        started: None,
        suspended: None,
        explicit: Vec::new(),
    }];
    let events = &trace.events;

    for (pos, event) in events.iter().enumerate() {
        let (ts, event_id) = (event.ts, event.id);
        let malformed = |message: &str| SimulationError::Malformed {
            event_id,
            message: message.to_owned(),
        };
        match &event.kind {
            EventKind::Entry { candidate, .. } => {
                let Some((callee, behavior)) = engine.index.candidate(candidate) else {
                    return Err(SimulationError::UnknownCandidate {
                        event_id,
                        candidate: candidate.to_string(),
                    });
                };
                let caller = stack.last().expect("root frame");
                let link = match caller.component {
                    Some(c) => engine.index.link(c, callee),
                    None => ConnectionView::Internal,
                };
                if link == ConnectionView::NotConnected {
                    return Err(SimulationError::NotConnected {
                        event_id,
                        from: engine
                            .index
                            .component_name(caller.component.expect("declared"))
                            .to_owned(),
                        to: engine.index.component_name(callee).to_owned(),
                    });
                }
                let caller_tx = caller.current;
                let mut none_level = caller.none_level;

                let mut adoptable = events[pos + 1..]
                    .iter()
                    .map_while(|e| match e.kind {
                        EventKind::TxStart {
                            tx_id,
                            demarcation: Demarcation::Implicit,
                        } => Some((tx_id, e.id)),
                        _ => None,
                    })
                    .collect::<Vec<_>>()
                    .into_iter();

                let mut subordinate = None;
                let inherited = match link.propagation() {
                    None => caller_tx,
                    Some(Propagation::None) => {
                        none_level += 1;
                        None
                    }
                    Some(Propagation::Subordinate) => match caller_tx {
                        Some(parent) => {
                            let adopted = adoptable.next();
                            let id = engine.fresh_tx_id(adopted.map(|a| a.0));
                            let sub = engine.begin(id, Some(parent), Demarcation::Implicit, none_level, event_id, ts);
                            engine.plan(pos, true, ts, sub, true, adopted.map(|a| a.1));
                            subordinate = Some(sub);
                            Some(sub)
                        }
                        None => None,
                    },
                };

                let action = decide_entry(behavior, inherited.is_some());
                if let EntryAction::Violation(kind) = action {
                    engine.out.violations.push(EntryViolation {
                        event_id,
                        candidate: candidate.clone(),
                        kind,
                    });
                }
                let mut frame = Frame {
                    component: Some(callee),
                    none_level,
                    current: None,
                    started: None,
                    suspended: None,
                    explicit: Vec::new(),
                };
                let effective = effective_action(behavior, inherited.is_some());
                if matches!(effective, EntryAction::SuspendAndStartNew | EntryAction::SuspendOnly) {
                    let inherited = inherited.expect("suspension needs a context");
                    engine.suspend(inherited, ts, event_id);
                    frame.suspended = Some(inherited);
                }
                match effective {
                    EntryAction::Join => frame.current = inherited,
                    EntryAction::StartNew | EntryAction::SuspendAndStartNew => {
                        let adopted = adoptable.next();
                        let id = engine.fresh_tx_id(adopted.map(|a| a.0));
                        let tx = engine.begin(id, None, Demarcation::Implicit, none_level, event_id, ts);
                        engine.plan(pos, true, ts, tx, true, adopted.map(|a| a.1));
                        frame.current = Some(tx);
                        frame.started = Some(tx);
                    }
                    _ => {}
                }
                let tx_started = matches!(effective, EntryAction::StartNew | EntryAction::SuspendAndStartNew)
                    || subordinate.is_some();
                engine.out.entries.push(EntryAnnotation {
                    event_id,
                    action,
                    tx_started,
                    remote: link.is_remote(),
                    tx: frame.current.map(|t| engine.txs[t].id),
                });
                stack.push(frame);
            }
            EventKind::Exit { .. } => {
                if stack.len() < 2 {
                    return Err(malformed("exit without entry"));
                }
                let frame = stack.pop().expect("checked");
                if !frame.explicit.is_empty() {
                    return Err(malformed("explicit transaction open at exit"));
                }
                if let Some(tx) = frame.started {
                    if engine.complete(tx, false, event_id, ts) == TxOutcome::Committed {
                        engine.plan(pos, false, ts, tx, false, None);
                        engine.plan_subordinate_commits(tx, pos, false, ts);
                    }
                }
                if let Some(tx) = frame.suspended {
                    engine.resume(tx, ts, event_id);
                }
            }
            EventKind::TxStart {
                tx_id,
                demarcation: Demarcation::Explicit,
            } => {
                let frame = stack.last_mut().expect("root frame");
                let saved = frame.current;
                let none_level = frame.none_level;
                if let Some(c) = saved {
                    engine.suspend(c, ts, event_id);
                }
                let tx = engine.begin(*tx_id, None, Demarcation::Explicit, none_level, event_id, ts);
                explicit_map.insert(*tx_id, tx);
                let frame = stack.last_mut().expect("root frame");
                frame.explicit.push((tx, saved));
                frame.current = Some(tx);
            }
            EventKind::TxCommit { tx_id } | EventKind::TxAbort { tx_id, .. } if explicit_ids.contains(tx_id) => {
                let abort = matches!(event.kind, EventKind::TxAbort { .. });
                let frame = stack.last_mut().expect("root frame");
                let Some(&tx) = explicit_map.get(tx_id) else {
                    return Err(malformed("explicit transaction ends before it starts"));
                };
                let Some((top, saved)) = frame.explicit.pop() else {
                    return Err(malformed("explicit transaction ends outside its span"));
                };
                if top != tx {
                    return Err(malformed("explicit transactions end out of order"));
                }
                frame.current = saved;
                if engine.complete(tx, abort, event_id, ts) == TxOutcome::Committed {
                    engine.plan_subordinate_commits(tx, pos, true, ts);
                }
                if let Some(s) = saved {
                    engine.resume(s, ts, event_id);
                }
            }
            EventKind::TxAbort { .. } => {
                let current = stack.last().expect("root frame").current;
                if let Some(tx) = current {
                    engine.mark_rollback_only(tx);
                }
                engine.out.markers.push(MarkerTarget {
                    position: pos,
                    tx_id: current.map(|t| engine.txs[t].id),
                });
            }
            EventKind::EntityRead { entity } => {
                let frame = stack.last().expect("root frame");
                engine.observe(frame, event_id, entity, false);
            }
            EventKind::EntityWrite { entity } => {
                let frame = stack.last().expect("root frame");
                engine.observe(frame, event_id, entity, true);
                let w = engine.out.writes.len();
                match frame.current {
                    Some(tx) => {
                        engine.out.writes.push(WriteAnnotation {
                            event_id,
                            entity: entity.clone(),
                            tx: Some(engine.txs[tx].id),
                            outcome: WriteOutcome::Committed,
                        });
                        let t = &mut engine.txs[tx];
                        t.writes.push(w);
                        if t.pending_entities.insert(entity.clone()) {
                            engine
                                .holders
                                .entry(entity.clone())
                                .or_default()
                                .entry(t.root)
                                .or_default()
                                .push(tx);
                            let was_clean = t.pending.is_empty();
                            t.pending.push((entity.clone(), event_id));
                            if was_clean {
                                engine.record(tx, TxPhase::Dirty, ts, event_id);
                            }
                        }
                    }
                    None => engine.out.writes.push(WriteAnnotation {
                        event_id,
                        entity: entity.clone(),
                        tx: None,
                        outcome: WriteOutcome::Committed,
                    }),
                }
            }
            _ => {}
        }
    }

    if stack.len() != 1 || !stack[0].explicit.is_empty() {
        let event_id = events.last().map_or(0, |e| e.id);
        return Err(SimulationError::Malformed {
            event_id,
            message: "trace ends inside an invocation or transaction".into(),
        });
    }
    if let Some(open) = engine.txs.iter().find(|t| t.state != State::Ended) {
        return Err(SimulationError::Malformed {
            event_id: open.started_at,
            message: format!("transaction {} never completes", open.id),
        });
    }

    let Engine { txs, mut out, .. } = engine;
    out.transactions = txs
        .iter()
        .map(|t| TxRecord {
            tx_id: t.id,
            kind: t.kind,
            demarcation: t.demarcation,
            started_at_event_id: t.started_at,
            ended_at_event_id: t.ended_at,
            outcome: t.outcome,
            rollback_only: t.rollback_only,
        })
        .collect();
    out.pending.sort_unstable_by(|a, b| {
        (a.first_write_event_id, a.tx_id, &a.entity).cmp(&(b.first_write_event_id, b.tx_id, &b.entity))
    });
    Ok(out)
}
