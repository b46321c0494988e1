//! Textual language for deployment models (`.dm`) and scenario deltas (`.dms`).
//!
//! ```text
//! component "Car Insurance" {
//!   useCase "Create Car Contract"
//!   serviceCandidate createCarContract [ transactionBehavior = REQUIRED ]
//!   entityType CarContract
//! }
//! remote "Car Insurance" -> "Contracts" [ overhead = 10 ]
//! dataStore "Shared Database" { entityType CarContract }
//! ```
//!
//! Both file kinds share one grammar. A model file is turned into a validated
//! [`DeploymentModel`]; a scenario file into a [`ScenarioDelta`] whose
//! references are resolved later by [`crate::model::apply_delta`].

mod lexer;
mod parser;
mod serialize;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::model::{
    validate_model, CandidateDelta, Component, ComponentConnection, ComponentDelta, ConflictBehavior, ConnectionKind,
    DataStore, DataStoreDelta, DeploymentModel, Propagation, ScenarioDelta, ServiceCandidate, Subject,
    TransactionBehavior,
};
use parser::{Attr, AttrValue, Decl, Member};

pub use serialize::serialize_model;

/// 1-based position of a diagnostic; `length` counts characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
}

impl ParseDiagnostic {
    pub fn error(message: impl Into<String>, span: SourceSpan) -> Self {
        ParseDiagnostic {
            severity: Severity::Error,
            message: message.into(),
            span,
        }
    }

    pub fn warning(message: impl Into<String>, span: SourceSpan) -> Self {
        ParseDiagnostic {
            severity: Severity::Warning,
            message: message.into(),
            span,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {level}: {}", self.span.line, self.span.column, self.message)
    }
}

/// Source positions of the declarations that produced each model element.
#[derive(Debug, Clone, Default)]
pub struct SpanIndex {
    spans: HashMap<Subject, SourceSpan>,
}

impl SpanIndex {
    fn record(&mut self, subject: Subject, span: SourceSpan) {
        self.spans.insert(subject, span);
    }

    pub fn get(&self, subject: &Subject) -> Option<SourceSpan> {
        self.spans.get(subject).copied()
    }
}

/// Parse result carrying warnings and source positions alongside the value.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub value: Option<T>,
    pub diagnostics: Vec<ParseDiagnostic>,
    pub spans: SpanIndex,
}

impl<T> Parsed<T> {
    pub fn into_result(self) -> Result<T, Vec<ParseDiagnostic>> {
        match self.value {
            Some(v) => Ok(v),
            None => Err(self.diagnostics),
        }
    }
}

pub fn parse_model(text: &str) -> Result<DeploymentModel, Vec<ParseDiagnostic>> {
    parse_model_detailed(text).into_result()
}

pub fn parse_delta(text: &str) -> Result<ScenarioDelta, Vec<ParseDiagnostic>> {
    parse_delta_detailed(text).into_result()
}

fn decls(text: &str, diags: &mut Vec<ParseDiagnostic>) -> Vec<Decl> {
    let tokens = lexer::tokenize(text, diags);
    parser::parse_decls(tokens, diags)
}

fn unknown_attr(attr: &Attr, context: &str, diags: &mut Vec<ParseDiagnostic>) {
    diags.push(ParseDiagnostic::warning(
        format!("unknown attribute `{}` on {context}, ignored", attr.name.value),
        attr.name.span,
    ));
}

fn bad_value(attr: &Attr, expected: &str, diags: &mut Vec<ParseDiagnostic>) {
    diags.push(ParseDiagnostic::error(
        format!("invalid value for `{}`: expected {expected}", attr.name.value),
        attr.value.span,
    ));
}

fn ident_value(attr: &Attr) -> Option<&str> {
    match &attr.value.value {
        AttrValue::Ident(s) => Some(s),
        AttrValue::Int(_) => None,
    }
}

fn candidate_behavior(attrs: &[Attr], diags: &mut Vec<ParseDiagnostic>) -> Option<TransactionBehavior> {
    let mut behavior = None;
    for attr in attrs {
        if attr.name.value == "transactionBehavior" {
            match ident_value(attr).and_then(TransactionBehavior::parse) {
                Some(b) => behavior = Some(b),
                None => bad_value(
                    attr,
                    "one of REQUIRED, REQUIRES_NEW, SUPPORTS, NOT_SUPPORTED, MANDATORY, NEVER",
                    diags,
                ),
            }
        } else {
            unknown_attr(attr, "service candidate", diags);
        }
    }
    behavior
}

fn connection_attrs(kind: ConnectionKind, attrs: &[Attr], diags: &mut Vec<ParseDiagnostic>) -> ComponentConnection {
    let mut connection = ComponentConnection {
        kind,
        overhead: 0,
        propagation: Propagation::None,
    };
    for attr in attrs {
        match attr.name.value.as_str() {
            "overhead" => match attr.value.value {
                AttrValue::Int(v) if v >= 0 => connection.overhead = v as u64,
                AttrValue::Int(v) => diags.push(ParseDiagnostic::error(
                    format!("negative overhead {v}; overhead must be non-negative"),
                    attr.value.span,
                )),
                AttrValue::Ident(_) => bad_value(attr, "a non-negative integer", diags),
            },
            "transactionPropagation" => match ident_value(attr).map(str::to_ascii_lowercase).as_deref() {
                Some("none") => connection.propagation = Propagation::None,
                Some("subordinate") => connection.propagation = Propagation::Subordinate,
                _ => bad_value(attr, "`none` or `subordinate`", diags),
            },
            _ => unknown_attr(attr, "connection", diags),
        }
    }
    connection
}

fn store_behavior(attrs: &[Attr], diags: &mut Vec<ParseDiagnostic>) -> Option<ConflictBehavior> {
    let mut behavior = None;
    for attr in attrs {
        if attr.name.value == "readWriteConflictBehavior" {
            match ident_value(attr).map(str::to_ascii_lowercase).as_deref() {
                Some("staleread" | "stale_read") => behavior = Some(ConflictBehavior::StaleRead),
                Some("block") => behavior = Some(ConflictBehavior::Block),
                _ => bad_value(attr, "`staleRead` or `block`", diags),
            }
        } else {
            unknown_attr(attr, "data store", diags);
        }
    }
    behavior
}

fn entity_attrs(attrs: &[Attr], diags: &mut Vec<ParseDiagnostic>) {
    for attr in attrs {
        unknown_attr(attr, "entity type", diags);
    }
}

fn duplicate(what: &str, name: &str, span: SourceSpan, diags: &mut Vec<ParseDiagnostic>) {
    diags.push(ParseDiagnostic::error(format!("duplicate {what} {name}"), span));
}

pub fn parse_model_detailed(text: &str) -> Parsed<DeploymentModel> {
    let mut diags = Vec::new();
    let mut spans = SpanIndex::default();
    let decls = decls(text, &mut diags);
    let mut model = DeploymentModel::default();

    for decl in &decls {
        if let Decl::Component { name, members } = decl {
            spans.record(Subject::Component(name.value.clone()), name.span);
            if model.components.contains_key(&name.value) {
                duplicate("component", &format!("\"{}\"", name.value), name.span, &mut diags);
                continue;
            }
            let mut component = Component::default();
            for member in members {
                match member {
                    Member::UseCase(n) => {
                        spans.record(Subject::UseCase(n.value.clone()), n.span);
                        if !component.use_cases.insert(n.value.clone()) {
                            duplicate("use case", &format!("\"{}\"", n.value), n.span, &mut diags);
                        }
                    }
                    Member::Candidate(n, attrs) => {
                        spans.record(Subject::Candidate(n.value.clone()), n.span);
                        let behavior = candidate_behavior(attrs, &mut diags).unwrap_or_default();
                        let candidate = ServiceCandidate {
                            transaction_behavior: behavior,
                        };
                        if component
                            .service_candidates
                            .insert(n.value.clone(), candidate)
                            .is_some()
                        {
                            duplicate("service candidate", &n.value, n.span, &mut diags);
                        }
                    }
                    Member::Entity(n, attrs) => {
                        spans.record(Subject::EntityType(n.value.clone()), n.span);
                        entity_attrs(attrs, &mut diags);
                        if !component.entity_types.insert(n.value.clone()) {
                            duplicate("entity type", &n.value, n.span, &mut diags);
                        }
                    }
                }
            }
            model.components.insert(name.value.clone(), component);
        }
    }

    for decl in &decls {
        match decl {
            Decl::Component { .. } => {}
            Decl::Connection {
                kind,
                keyword,
                from,
                to,
                attrs,
            } => {
                spans.record(Subject::Connection(from.value.clone(), to.value.clone()), *keyword);
                let connection = connection_attrs(*kind, attrs, &mut diags);
                let mut resolved = true;
                for end in [from, to] {
                    if !model.components.contains_key(&end.value) {
                        diags.push(ParseDiagnostic::error(
                            format!("unknown component \"{}\"", end.value),
                            end.span,
                        ));
                        resolved = false;
                    }
                }
                if !resolved {
                    continue;
                }
                let key = (from.value.clone(), to.value.clone());
                if model.connections.insert(key, connection).is_some() {
                    diags.push(ParseDiagnostic::error(
                        format!("duplicate connection \"{}\" -> \"{}\"", from.value, to.value),
                        *keyword,
                    ));
                }
            }
            Decl::DataStore { name, entities, attrs } => {
                spans.record(Subject::DataStore(name.value.clone()), name.span);
                let conflict_behavior = store_behavior(attrs, &mut diags).unwrap_or_default();
                let mut store = DataStore {
                    conflict_behavior,
                    ..Default::default()
                };
                for e in entities {
                    if !store.entity_types.insert(e.value.clone()) {
                        duplicate("entity type", &e.value, e.span, &mut diags);
                    }
                }
                if model.data_stores.contains_key(&name.value) {
                    duplicate("data store", &format!("\"{}\"", name.value), name.span, &mut diags);
                    continue;
                }
                model.data_stores.insert(name.value.clone(), store);
            }
        }
    }

    if !diags.iter().any(ParseDiagnostic::is_error) {
        let fallback = SourceSpan {
            line: 1,
            column: 1,
            length: 0,
        };
        for violation in validate_model(&model) {
            let span = spans.get(&violation.subject).unwrap_or(fallback);
            diags.push(ParseDiagnostic::error(violation.to_string(), span));
        }
    }
    let value = (!diags.iter().any(ParseDiagnostic::is_error)).then_some(model);
    Parsed {
        value,
        diagnostics: diags,
        spans,
    }
}

pub fn parse_delta_detailed(text: &str) -> Parsed<ScenarioDelta> {
    let mut diags = Vec::new();
    let mut spans = SpanIndex::default();
    let decls = decls(text, &mut diags);
    let mut delta = ScenarioDelta::default();
    let mut assigned: BTreeMap<(&'static str, String), String> = BTreeMap::new();
    let mut check_assignment =
        |kind: &'static str, element: &str, component: &str, span: SourceSpan, diags: &mut Vec<ParseDiagnostic>| {
            if let Some(previous) = assigned.insert((kind, element.to_owned()), component.to_owned()) {
                diags.push(ParseDiagnostic::error(
                    format!("{kind} {element} is assigned to both \"{previous}\" and \"{component}\""),
                    span,
                ));
            }
        };

    for decl in &decls {
        match decl {
            Decl::Component { name, members } => {
                spans.record(Subject::Component(name.value.clone()), name.span);
                let block: &mut ComponentDelta = delta.components.entry(name.value.clone()).or_default();
                for member in members {
                    match member {
                        Member::UseCase(n) => {
                            spans.record(Subject::UseCase(n.value.clone()), n.span);
                            check_assignment("use case", &n.value, &name.value, n.span, &mut diags);
                            block.use_cases.insert(n.value.clone());
                        }
                        Member::Candidate(n, attrs) => {
                            spans.record(Subject::Candidate(n.value.clone()), n.span);
                            check_assignment("service candidate", &n.value, &name.value, n.span, &mut diags);
                            let transaction_behavior = candidate_behavior(attrs, &mut diags);
                            block
                                .service_candidates
                                .insert(n.value.clone(), CandidateDelta { transaction_behavior });
                        }
                        Member::Entity(n, attrs) => {
                            spans.record(Subject::EntityType(n.value.clone()), n.span);
                            check_assignment("entity type", &n.value, &name.value, n.span, &mut diags);
                            entity_attrs(attrs, &mut diags);
                            block.entity_types.insert(n.value.clone());
                        }
                    }
                }
            }
            Decl::Connection {
                kind,
                keyword,
                from,
                to,
                attrs,
            } => {
                spans.record(Subject::Connection(from.value.clone(), to.value.clone()), *keyword);
                let connection = connection_attrs(*kind, attrs, &mut diags);
                let reversed = (to.value.clone(), from.value.clone());
                if delta.connections.contains_key(&reversed)
                    || delta
                        .connections
                        .insert((from.value.clone(), to.value.clone()), connection)
                        .is_some()
                {
                    diags.push(ParseDiagnostic::error(
                        format!("duplicate connection \"{}\" -> \"{}\"", from.value, to.value),
                        *keyword,
                    ));
                }
            }
            Decl::DataStore { name, entities, attrs } => {
                spans.record(Subject::DataStore(name.value.clone()), name.span);
                let conflict_behavior = store_behavior(attrs, &mut diags);
                let block: &mut DataStoreDelta = delta.data_stores.entry(name.value.clone()).or_default();
                if conflict_behavior.is_some() {
                    block.conflict_behavior = conflict_behavior;
                }
                for e in entities {
                    check_assignment("stored entity type", &e.value, &name.value, e.span, &mut diags);
                    block.entity_types.insert(e.value.clone());
                }
            }
        }
    }
    let value = (!diags.iter().any(ParseDiagnostic::is_error)).then_some(delta);
    Parsed {
        value,
        diagnostics: diags,
        spans,
    }
}
