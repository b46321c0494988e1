use std::fmt::Write;

use crate::model::{ConflictBehavior, ConnectionKind, DeploymentModel, Propagation};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Renders `model` in the textual language. Output is ordered by name and
/// parses back into an equal model.
pub fn serialize_model(model: &DeploymentModel) -> String {
    let mut out = String::new();
    for (name, component) in &model.components {
        let _ = writeln!(out, "component {} {{", quote(name));
        for use_case in &component.use_cases {
            let _ = writeln!(out, "  useCase {}", quote(use_case));
        }
        for (candidate, attrs) in &component.service_candidates {
            let _ = writeln!(
                out,
                "  serviceCandidate {candidate} [ transactionBehavior = {} ]",
                attrs.transaction_behavior
            );
        }
        for entity in &component.entity_types {
            let _ = writeln!(out, "  entityType {entity}");
        }
        out.push_str("}\n");
    }
    for ((from, to), connection) in &model.connections {
        let keyword = match connection.kind {
            ConnectionKind::Local => "local",
            ConnectionKind::Remote => "remote",
        };
        let _ = write!(out, "{keyword} {} -> {}", quote(from), quote(to));
        let mut attrs = Vec::new();
        if connection.kind == ConnectionKind::Remote || connection.overhead != 0 {
            attrs.push(format!("overhead = {}", connection.overhead));
        }
        if connection.kind == ConnectionKind::Remote || connection.propagation != Propagation::None {
            attrs.push(format!("transactionPropagation = {}", connection.propagation.as_str()));
        }
        if !attrs.is_empty() {
            let _ = write!(out, " [ {} ]", attrs.join(", "));
        }
        out.push('\n');
    }
    for (name, store) in &model.data_stores {
        let _ = writeln!(out, "dataStore {} {{", quote(name));
        for entity in &store.entity_types {
            let _ = writeln!(out, "  entityType {entity}");
        }
        out.push('}');
        if store.conflict_behavior != ConflictBehavior::StaleRead {
            let _ = write!(
                out,
                " [ readWriteConflictBehavior = {} ]",
                store.conflict_behavior.as_str()
            );
        }
        out.push('\n');
    }
    out
}
