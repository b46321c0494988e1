//! Deployment models and scenario deltas.
//!
//! A [`DeploymentModel`] assigns use cases, service candidates and entity
//! types to components and states how components are connected. The same
//! structure describes the current state of an application and a scenario
//! derived from it by [`apply_delta`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Container transaction attribute of a service candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TransactionBehavior {
    #[default]
    Required,
    RequiresNew,
    Supports,
    NotSupported,
    Mandatory,
    Never,
}

impl TransactionBehavior {
    pub const ALL: [TransactionBehavior; 6] = [
        TransactionBehavior::Required,
        TransactionBehavior::RequiresNew,
        TransactionBehavior::Supports,
        TransactionBehavior::NotSupported,
        TransactionBehavior::Mandatory,
        TransactionBehavior::Never,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransactionBehavior::Required => "REQUIRED",
            TransactionBehavior::RequiresNew => "REQUIRES_NEW",
            TransactionBehavior::Supports => "SUPPORTS",
            TransactionBehavior::NotSupported => "NOT_SUPPORTED",
            TransactionBehavior::Mandatory => "MANDATORY",
            TransactionBehavior::Never => "NEVER",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.as_str() == s)
    }
}

impl fmt::Display for TransactionBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConnectionKind {
    Local,
    Remote,
}

/// Whether a caller's transaction crosses a remote connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Propagation {
    #[default]
    None,
    Subordinate,
}

impl Propagation {
    pub fn as_str(self) -> &'static str {
        match self {
            Propagation::None => "none",
            Propagation::Subordinate => "subordinate",
        }
    }
}

/// What a data store does when a read hits an entity with pending writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConflictBehavior {
    #[default]
    StaleRead,
    Block,
}

impl ConflictBehavior {
    pub fn as_str(self) -> &'static str {
        match self {
            ConflictBehavior::StaleRead => "staleRead",
            ConflictBehavior::Block => "block",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ServiceCandidate {
    pub transaction_behavior: TransactionBehavior,
}

/// A deployment unit. The component name is the key in [`DeploymentModel::components`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Component {
    pub use_cases: BTreeSet<String>,
    pub service_candidates: BTreeMap<String, ServiceCandidate>,
    pub entity_types: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentConnection {
    pub kind: ConnectionKind,
    pub overhead: u64,
    pub propagation: Propagation,
}

impl ComponentConnection {
    pub fn local() -> Self {
        ComponentConnection {
            kind: ConnectionKind::Local,
            overhead: 0,
            propagation: Propagation::None,
        }
    }

    pub fn remote(overhead: u64, propagation: Propagation) -> Self {
        ComponentConnection {
            kind: ConnectionKind::Remote,
            overhead,
            propagation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DataStore {
    pub entity_types: BTreeSet<String>,
    pub conflict_behavior: ConflictBehavior,
}

/// Ordered (from, to) pair as written in the model text.
pub type ConnectionKey = (String, String);

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DeploymentModel {
    pub components: BTreeMap<String, Component>,
    pub connections: BTreeMap<ConnectionKey, ComponentConnection>,
    pub data_stores: BTreeMap<String, DataStore>,
}

/// Partial model; see [`apply_delta`] for the merge rules.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScenarioDelta {
    pub components: BTreeMap<String, ComponentDelta>,
    pub connections: BTreeMap<ConnectionKey, ComponentConnection>,
    pub data_stores: BTreeMap<String, DataStoreDelta>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ComponentDelta {
    pub use_cases: BTreeSet<String>,
    pub service_candidates: BTreeMap<String, CandidateDelta>,
    pub entity_types: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CandidateDelta {
    pub transaction_behavior: Option<TransactionBehavior>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DataStoreDelta {
    pub entity_types: BTreeSet<String>,
    pub conflict_behavior: Option<ConflictBehavior>,
}

impl ScenarioDelta {
    pub fn is_empty(&self) -> bool {
        self.components.is_empty() && self.connections.is_empty() && self.data_stores.is_empty()
    }
}

/// The model element a violation is about. Used to attach source positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subject {
    Model,
    Component(String),
    UseCase(String),
    Candidate(String),
    EntityType(String),
    DataStore(String),
    Connection(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    EmptyName,
    InvalidIdentifier,
    DuplicateAssignment,
    UnknownComponent,
    SelfConnection,
    DuplicateConnection,
    LocalConnectionWithOverhead,
    PropagationOnLocal,
    UnknownEntityType,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::EmptyName => "EMPTY_NAME",
            ViolationCode::InvalidIdentifier => "INVALID_IDENTIFIER",
            ViolationCode::DuplicateAssignment => "DUPLICATE_ASSIGNMENT",
            ViolationCode::UnknownComponent => "UNKNOWN_COMPONENT",
            ViolationCode::SelfConnection => "SELF_CONNECTION",
            ViolationCode::DuplicateConnection => "DUPLICATE_CONNECTION",
            ViolationCode::LocalConnectionWithOverhead => "LOCAL_CONNECTION_WITH_OVERHEAD",
            ViolationCode::PropagationOnLocal => "PROPAGATION_ON_LOCAL",
            ViolationCode::UnknownEntityType => "UNKNOWN_ENTITY_TYPE",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
    pub subject: Subject,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn unordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

/// Returns every invariant violation of `model`; empty iff the model is valid.
pub fn validate_model(model: &DeploymentModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, subject, message: String| out.push(Violation { code, message, subject });

    let mut use_case_owner: BTreeMap<&str, &str> = BTreeMap::new();
    let mut candidate_owner: BTreeMap<&str, &str> = BTreeMap::new();
    let mut entity_owner: BTreeMap<&str, &str> = BTreeMap::new();

    for (name, component) in &model.components {
        if name.is_empty() {
            push(
                ViolationCode::EmptyName,
                Subject::Component(name.clone()),
                "component name must not be empty".into(),
            );
        }
        for use_case in &component.use_cases {
            if use_case.is_empty() {
                push(
                    ViolationCode::EmptyName,
                    Subject::Component(name.clone()),
                    format!("component \"{name}\" declares a use case with an empty name"),
                );
            }
            if let Some(first) = use_case_owner.insert(use_case, name) {
                push(
                    ViolationCode::DuplicateAssignment,
                    Subject::UseCase(use_case.clone()),
                    format!("use case \"{use_case}\" is assigned to both \"{first}\" and \"{name}\""),
                );
            }
        }
        for candidate in component.service_candidates.keys() {
            if !is_identifier(candidate) {
                push(
                    if candidate.is_empty() {
                        ViolationCode::EmptyName
                    } else {
                        ViolationCode::InvalidIdentifier
                    },
                    Subject::Candidate(candidate.clone()),
                    format!("service candidate name \"{candidate}\" is not an identifier"),
                );
            }
            if let Some(first) = candidate_owner.insert(candidate, name) {
                push(
                    ViolationCode::DuplicateAssignment,
                    Subject::Candidate(candidate.clone()),
                    format!("service candidate {candidate} is assigned to both \"{first}\" and \"{name}\""),
                );
            }
        }
        for entity in &component.entity_types {
            if !is_identifier(entity) {
                push(
                    if entity.is_empty() {
                        ViolationCode::EmptyName
                    } else {
                        ViolationCode::InvalidIdentifier
                    },
                    Subject::EntityType(entity.clone()),
                    format!("entity type name \"{entity}\" is not an identifier"),
                );
            }
            if let Some(first) = entity_owner.insert(entity, name) {
                push(
                    ViolationCode::DuplicateAssignment,
                    Subject::EntityType(entity.clone()),
                    format!("entity type {entity} is assigned to both \"{first}\" and \"{name}\""),
                );
            }
        }
    }

    let mut pairs: BTreeSet<(String, String)> = BTreeSet::new();
    for ((from, to), connection) in &model.connections {
        let subject = Subject::Connection(from.clone(), to.clone());
        for end in [from, to] {
            if !model.components.contains_key(end) {
                push(
                    ViolationCode::UnknownComponent,
                    subject.clone(),
                    format!("connection \"{from}\" -> \"{to}\" references unknown component \"{end}\""),
                );
            }
        }
        if from == to {
            push(
                ViolationCode::SelfConnection,
                subject.clone(),
                format!("component \"{from}\" cannot be connected to itself"),
            );
        } else if !pairs.insert(unordered(from, to)) {
            push(
                ViolationCode::DuplicateConnection,
                subject.clone(),
                format!("more than one connection between \"{from}\" and \"{to}\""),
            );
        }
        if connection.kind == ConnectionKind::Local {
            if connection.overhead != 0 {
                push(
                    ViolationCode::LocalConnectionWithOverhead,
                    subject.clone(),
                    format!(
                        "local connection \"{from}\" -> \"{to}\" declares overhead {}",
                        connection.overhead
                    ),
                );
            }
            if connection.propagation != Propagation::None {
                push(
                    ViolationCode::PropagationOnLocal,
                    subject,
                    format!("local connection \"{from}\" -> \"{to}\" declares a transaction propagation"),
                );
            }
        }
    }

    let mut store_owner: BTreeMap<&str, &str> = BTreeMap::new();
    for (name, store) in &model.data_stores {
        if name.is_empty() {
            push(
                ViolationCode::EmptyName,
                Subject::DataStore(name.clone()),
                "data store name must not be empty".into(),
            );
        }
        for entity in &store.entity_types {
            if !entity_owner.contains_key(entity.as_str()) {
                push(
                    ViolationCode::UnknownEntityType,
                    Subject::DataStore(name.clone()),
                    format!("data store \"{name}\" houses unknown entity type {entity}"),
                );
            }
            if let Some(first) = store_owner.insert(entity, name) {
                push(
                    ViolationCode::DuplicateAssignment,
                    Subject::EntityType(entity.clone()),
                    format!("entity type {entity} is housed by both \"{first}\" and \"{name}\""),
                );
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error("unknown {kind} {name} in scenario")]
    UnknownElement { kind: &'static str, name: String },
    #[error("{kind} {name} is assigned to more than one component in the scenario")]
    DuplicateAssignment { kind: &'static str, name: String },
    #[error("merged model is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidModel(Vec<Violation>),
}

/// Merges `delta` into `base`, returning the scenario model.
///
/// Elements listed in a delta component block are moved into that component
/// (creating it if needed) and only the attributes written in the delta are
/// overridden. A delta connection replaces whatever connection the base model
/// has between the same two components, in either direction. Entity types
/// listed in a delta data store are moved into that store.
pub fn apply_delta(base: &DeploymentModel, delta: &ScenarioDelta) -> Result<DeploymentModel, MergeError> {
    let mut seen: BTreeMap<(&'static str, &str), &str> = BTreeMap::new();
    for (component, block) in &delta.components {
        let names = block
            .use_cases
            .iter()
            .map(|n| ("use case", n.as_str()))
            .chain(
                block
                    .service_candidates
                    .keys()
                    .map(|n| ("service candidate", n.as_str())),
            )
            .chain(block.entity_types.iter().map(|n| ("entity type", n.as_str())));
        for (kind, name) in names {
            if seen.insert((kind, name), component).is_some() {
                return Err(MergeError::DuplicateAssignment {
                    kind,
                    name: name.to_owned(),
                });
            }
        }
    }
    let mut store_seen = BTreeSet::new();
    for store in delta.data_stores.values() {
        for entity in &store.entity_types {
            if !store_seen.insert(entity.as_str()) {
                return Err(MergeError::DuplicateAssignment {
                    kind: "entity type",
                    name: entity.clone(),
                });
            }
        }
    }

    let mut merged = base.clone();
    for (component_name, block) in &delta.components {
        for use_case in &block.use_cases {
            let found = merged.components.values_mut().any(|c| c.use_cases.remove(use_case));
            if !found {
                return Err(MergeError::UnknownElement {
                    kind: "use case",
                    name: use_case.clone(),
                });
            }
        }
        let mut moved_candidates = Vec::new();
        for (candidate, overrides) in &block.service_candidates {
            let existing = merged
                .components
                .values_mut()
                .find_map(|c| c.service_candidates.remove(candidate));
            let mut moved = existing.ok_or_else(|| MergeError::UnknownElement {
                kind: "service candidate",
                name: candidate.clone(),
            })?;
            if let Some(behavior) = overrides.transaction_behavior {
                moved.transaction_behavior = behavior;
            }
            moved_candidates.push((candidate.clone(), moved));
        }
        for entity in &block.entity_types {
            let found = merged.components.values_mut().any(|c| c.entity_types.remove(entity));
            if !found {
                return Err(MergeError::UnknownElement {
                    kind: "entity type",
                    name: entity.clone(),
                });
            }
        }
        let target = merged.components.entry(component_name.clone()).or_default();
        target.use_cases.extend(block.use_cases.iter().cloned());
        target.service_candidates.extend(moved_candidates);
        target.entity_types.extend(block.entity_types.iter().cloned());
    }

    for ((from, to), connection) in &delta.connections {
        for end in [from, to] {
            if !merged.components.contains_key(end) {
                return Err(MergeError::UnknownElement {
                    kind: "component",
                    name: end.clone(),
                });
            }
        }
        merged
            .connections
            .retain(|(a, b), _| !((a == from && b == to) || (a == to && b == from)));
        merged.connections.insert((from.clone(), to.clone()), *connection);
    }

    for (store_name, block) in &delta.data_stores {
        for entity in &block.entity_types {
            let known = merged.components.values().any(|c| c.entity_types.contains(entity));
            if !known {
                return Err(MergeError::UnknownElement {
                    kind: "entity type",
                    name: entity.clone(),
                });
            }
            for store in merged.data_stores.values_mut() {
                store.entity_types.remove(entity);
            }
        }
        let target = merged.data_stores.entry(store_name.clone()).or_default();
        target.entity_types.extend(block.entity_types.iter().cloned());
        if let Some(behavior) = block.conflict_behavior {
            target.conflict_behavior = behavior;
        }
    }

    let violations = validate_model(&merged);
    if violations.is_empty() {
        Ok(merged)
    } else {
        Err(MergeError::InvalidModel(violations))
    }
}

/// The effective connection between two components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionView {
    /// Invocation inside one component.
    Internal,
    Declared(ComponentConnection),
    NotConnected,
}

impl ConnectionView {
    pub fn kind(&self) -> Option<ConnectionKind> {
        match self {
            ConnectionView::Internal => Some(ConnectionKind::Local),
            ConnectionView::Declared(c) => Some(c.kind),
            ConnectionView::NotConnected => None,
        }
    }

    pub fn is_remote(&self) -> bool {
        self.kind() == Some(ConnectionKind::Remote)
    }

    /// Overhead applied per direction; zero for local connections.
    pub fn overhead(&self) -> u64 {
        match self {
            ConnectionView::Declared(c) if c.kind == ConnectionKind::Remote => c.overhead,
            _ => 0,
        }
    }

    pub fn propagation(&self) -> Option<Propagation> {
        match self {
            ConnectionView::Declared(c) if c.kind == ConnectionKind::Remote => Some(c.propagation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown component \"{0}\"")]
    UnknownComponent(String),
}

/// Connections are usable in both directions with the same attributes.
pub fn connection_for(model: &DeploymentModel, from: &str, to: &str) -> Result<ConnectionView, ModelError> {
    for end in [from, to] {
        if !model.components.contains_key(end) {
            return Err(ModelError::UnknownComponent(end.to_owned()));
        }
    }
    if from == to {
        return Ok(ConnectionView::Internal);
    }
    let declared = model
        .connections
        .get(&(from.to_owned(), to.to_owned()))
        .or_else(|| model.connections.get(&(to.to_owned(), from.to_owned())));
    Ok(declared.map_or(ConnectionView::NotConnected, |c| ConnectionView::Declared(*c)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentGroup {
    pub components: Vec<String>,
    pub potential_microservice: bool,
}

/// Partitions components into groups joined by local connections and flags
/// each group whose incident remote connections all lack propagation.
pub fn microservice_groups(model: &DeploymentModel) -> Vec<ComponentGroup> {
    let names: Vec<&String> = model.components.keys().collect();
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..names.len()).collect();

    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    for ((from, to), connection) in &model.connections {
        if connection.kind != ConnectionKind::Local {
            continue;
        }
        if let (Some(&a), Some(&b)) = (index.get(from.as_str()), index.get(to.as_str())) {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }

    let roots: Vec<usize> = (0..names.len()).map(|i| find(&mut parent, i)).collect();
    let mut groups: BTreeMap<usize, ComponentGroup> = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        groups
            .entry(roots[i])
            .or_insert_with(|| ComponentGroup {
                components: Vec::new(),
                potential_microservice: true,
            })
            .components
            .push((*name).clone());
    }
    for ((from, to), connection) in &model.connections {
        if connection.kind != ConnectionKind::Remote || connection.propagation == Propagation::None {
            continue;
        }
        for end in [from, to] {
            if let Some(&i) = index.get(end.as_str()) {
                if let Some(group) = groups.get_mut(&roots[i]) {
                    group.potential_microservice = false;
                }
            }
        }
    }
    groups.into_values().collect()
}

/// Name lookups over a model, built once and shared read-only by workers.
#[derive(Debug, Clone)]
pub struct ModelIndex {
    model: DeploymentModel,
    component_names: Vec<String>,
    components: HashMap<String, usize>,
    use_cases: HashMap<String, usize>,
    candidates: HashMap<String, (usize, TransactionBehavior)>,
    entities: HashMap<String, (usize, ConflictBehavior)>,
    links: HashMap<(usize, usize), ComponentConnection>,
}

impl ModelIndex {
    pub fn new(model: DeploymentModel) -> Self {
        let component_names: Vec<String> = model.components.keys().cloned().collect();
        let components: HashMap<String, usize> = component_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let mut use_cases = HashMap::new();
        let mut candidates = HashMap::new();
        let mut entities = HashMap::new();
        for (i, component) in model.components.values().enumerate() {
            for use_case in &component.use_cases {
                use_cases.entry(use_case.clone()).or_insert(i);
            }
            for (name, candidate) in &component.service_candidates {
                candidates
                    .entry(name.clone())
                    .or_insert((i, candidate.transaction_behavior));
            }
            for entity in &component.entity_types {
                entities
                    .entry(entity.clone())
                    .or_insert((i, ConflictBehavior::default()));
            }
        }
        for store in model.data_stores.values() {
            for entity in &store.entity_types {
                if let Some(slot) = entities.get_mut(entity) {
                    slot.1 = store.conflict_behavior;
                }
            }
        }
        let mut links = HashMap::new();
        for ((from, to), connection) in &model.connections {
            if let (Some(&a), Some(&b)) = (components.get(from), components.get(to)) {
                links.entry((a.min(b), a.max(b))).or_insert(*connection);
            }
        }
        ModelIndex {
            model,
            component_names,
            components,
            use_cases,
            candidates,
            entities,
            links,
        }
    }

    pub fn model(&self) -> &DeploymentModel {
        &self.model
    }

    pub fn component_count(&self) -> usize {
        self.component_names.len()
    }

    pub fn component_name(&self, id: usize) -> &str {
        &self.component_names[id]
    }

    pub fn component_id(&self, name: &str) -> Option<usize> {
        self.components.get(name).copied()
    }

    pub fn use_case_component(&self, use_case: &str) -> Option<usize> {
        self.use_cases.get(use_case).copied()
    }

    pub fn candidate(&self, name: &str) -> Option<(usize, TransactionBehavior)> {
        self.candidates.get(name).copied()
    }

    pub fn entity(&self, name: &str) -> Option<(usize, ConflictBehavior)> {
        self.entities.get(name).copied()
    }

    pub fn link(&self, a: usize, b: usize) -> ConnectionView {
        if a == b {
            return ConnectionView::Internal;
        }
        self.links
            .get(&(a.min(b), a.max(b)))
            .map_or(ConnectionView::NotConnected, |c| ConnectionView::Declared(*c))
    }

    pub fn candidate_names(&self) -> impl Iterator<Item = (&str, usize)> {
        self.model
            .components
            .values()
            .enumerate()
            .flat_map(|(i, c)| c.service_candidates.keys().map(move |n| (n.as_str(), i)))
    }

    pub fn entity_names(&self) -> impl Iterator<Item = &str> {
        self.model
            .components
            .values()
            .flat_map(|c| c.entity_types.iter().map(String::as_str))
    }
}
