//! Local HTTP workbench: serves the model, the trace corpus with span trees
//! and overlays, and re-runs the analysis on submitted scenario text.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde_json::{json, Value};
use tokio::net::TcpListener;
use whatif_core::analysis::analyze_trace;
use whatif_core::dsl::{parse_delta_detailed, serialize_model, ParseDiagnostic};
use whatif_core::pipeline::{analyze_traces, PipelineError, PipelineOptions};
use whatif_core::rewrite::EventMapping;
use whatif_core::trace::{build_overlays, build_span_tree};
use whatif_core::{apply_delta, rewrite, simulate, ComparisonReport, DeploymentModel, EventTrace, ModelIndex};

pub const DEFAULT_PORT: u16 = 8645;

/// A JSON error response.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub status: StatusCode,
    pub body: Value,
}

impl Failure {
    fn new(status: StatusCode, error: impl ToString, diagnostics: &[ParseDiagnostic]) -> Self {
        Failure {
            status,
            body: json!({ "error": error.to_string(), "diagnostics": diagnostics }),
        }
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.status, axum::Json(self.body)).into_response()
    }
}

struct Current {
    scenario: Arc<ModelIndex>,
    report: Arc<ComparisonReport>,
}

/// Shared server state. Parsed traces are cached; everything else is
/// recomputed from the last submitted scenario.
pub struct Workbench {
    base: Arc<ModelIndex>,
    model_text: String,
    traces: Vec<EventTrace>,
    by_id: HashMap<String, usize>,
    options: PipelineOptions,
    current: Mutex<Current>,
    /// Held for the duration of an analysis run so runs queue up.
    running: Mutex<()>,
}

impl Workbench {
    /// Builds the workbench and runs the initial analysis of `scenario`.
    pub fn new(
        base: DeploymentModel,
        scenario: DeploymentModel,
        traces: Vec<EventTrace>,
        options: PipelineOptions,
    ) -> Result<Self, PipelineError> {
        let model_text = serialize_model(&base);
        let base = Arc::new(ModelIndex::new(base));
        let scenario = Arc::new(ModelIndex::new(scenario));
        let report = Arc::new(analyze_traces(&traces, &base, &scenario, &options)?);
        let by_id = traces
            .iter()
            .enumerate()
            .map(|(i, t)| (t.trace_id.clone(), i))
            .collect();
        Ok(Workbench {
            base,
            model_text,
            traces,
            by_id,
            options,
            current: Mutex::new(Current { scenario, report }),
            running: Mutex::new(()),
        })
    }

    pub fn model_text(&self) -> &str {
        &self.model_text
    }

    pub fn report(&self) -> Arc<ComparisonReport> {
        self.current.lock().unwrap().report.clone()
    }

    pub fn trace_list(&self) -> Value {
        Value::Array(
            self.traces
                .iter()
                .map(|t| json!({ "trace_id": t.trace_id, "use_case": &*t.use_case }))
                .collect(),
        )
    }

    /// Original and last-rewritten view of one trace, each with its span
    /// tree, overlays and analysis.
    pub fn trace_view(&self, id: &str) -> Result<Value, Failure> {
        let Some(&i) = self.by_id.get(id) else {
            return Err(Failure::new(
                StatusCode::NOT_FOUND,
                format!("unknown trace \"{id}\""),
                &[],
            ));
        };
        let trace = &self.traces[i];
        let scenario = self.current.lock().unwrap().scenario.clone();
        let unprocessable = |e: &dyn std::fmt::Display| Failure::new(StatusCode::UNPROCESSABLE_ENTITY, e, &[]);
        let annotations = simulate(trace, &self.base).map_err(|e| unprocessable(&e))?;
        let original = view(trace, &annotations, &self.base, None);
        let result = rewrite(trace, &self.base, &scenario).map_err(|e| unprocessable(&e))?;
        let rewritten = view(&result.trace, &result.annotations, &scenario, Some(&result.mapping));
        Ok(json!({
            "trace_id": trace.trace_id,
            "use_case": &*trace.use_case,
            "original": original,
            "rewritten": rewritten,
        }))
    }

    /// Parses `text` as a scenario delta against the base model, analyzes
    /// the corpus under it and makes it the current scenario.
    pub fn analyze(&self, text: &str) -> Result<Arc<ComparisonReport>, Failure> {
        let parsed = parse_delta_detailed(text);
        let Some(delta) = parsed.value else {
            return Err(Failure::new(
                StatusCode::BAD_REQUEST,
                "scenario does not parse",
                &parsed.diagnostics,
            ));
        };
        let bad_request = |e: &dyn std::fmt::Display| Failure::new(StatusCode::BAD_REQUEST, e, &parsed.diagnostics);
        let merged = apply_delta(self.base.model(), &delta).map_err(|e| bad_request(&e))?;
        let scenario = Arc::new(ModelIndex::new(merged));
        let _run = self.running.lock().unwrap();
        let report =
            Arc::new(analyze_traces(&self.traces, &self.base, &scenario, &self.options).map_err(|e| bad_request(&e))?);
        *self.current.lock().unwrap() = Current {
            scenario,
            report: report.clone(),
        };
        Ok(report)
    }
}

fn view(
    trace: &EventTrace,
    annotations: &whatif_core::TxAnnotations,
    model: &ModelIndex,
    mapping: Option<&EventMapping>,
) -> Value {
    let tree = build_span_tree(trace);
    let overlays = build_overlays(trace, &tree, annotations);
    let mut value = json!({
        "trace": trace,
        "span_tree": tree,
        "overlays": overlays,
        "analysis": analyze_trace(trace, annotations, model),
    });
    if let Some(mapping) = mapping {
        value["mapping"] = json!(mapping);
    }
    value
}

fn json_text(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn get_model(State(wb): State<Arc<Workbench>>) -> Response {
    (
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        wb.model_text().to_string(),
    )
        .into_response()
}

async fn get_traces(State(wb): State<Arc<Workbench>>) -> Response {
    axum::Json(wb.trace_list()).into_response()
}

async fn get_trace(State(wb): State<Arc<Workbench>>, Path(id): Path<String>) -> Response {
    match tokio::task::spawn_blocking(move || wb.trace_view(&id)).await {
        Ok(Ok(value)) => axum::Json(value).into_response(),
        Ok(Err(failure)) => failure.into_response(),
        Err(e) => Failure::new(StatusCode::INTERNAL_SERVER_ERROR, e, &[]).into_response(),
    }
}

async fn post_analyze(State(wb): State<Arc<Workbench>>, body: String) -> Response {
    match tokio::task::spawn_blocking(move || wb.analyze(&body)).await {
        Ok(Ok(report)) => json_text(report.to_json()),
        Ok(Err(failure)) => failure.into_response(),
        Err(e) => Failure::new(StatusCode::INTERNAL_SERVER_ERROR, e, &[]).into_response(),
    }
}

async fn get_report(State(wb): State<Arc<Workbench>>) -> Response {
    json_text(wb.report().to_json())
}

pub fn router(workbench: Arc<Workbench>) -> Router {
    Router::new()
        .route("/api/model", get(get_model))
        .route("/api/traces", get(get_traces))
        .route("/api/traces/{id}", get(get_trace))
        .route("/api/analyze", post(post_analyze))
        .route("/api/report", get(get_report))
        .with_state(workbench)
}

pub async fn serve(workbench: Arc<Workbench>, listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(workbench)).await
}
