use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::sync::Arc;

use axum::http::StatusCode;
use serde_json::Value;
use whatif_cli::commands::load_models;
use whatif_cli::serve::{serve, Workbench};
use whatif_core::pipeline::PipelineOptions;
use whatif_core::tracegen::{generate, GenConfig};
use whatif_core::ModelIndex;

const REMOTE_CONTRACTS: &str = include_str!("../../../fixtures/remote-contracts.dms");

fn workbench() -> Workbench {
    let model = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/car-insurance.dm");
    let (base, scenario) = load_models(&model, None).unwrap();
    let traces = generate(&GenConfig::new(40, 5, 3), &ModelIndex::new(base.clone())).unwrap();
    Workbench::new(base, scenario, traces, PipelineOptions::default()).unwrap()
}

#[test]
fn model_text_round_trips() {
    let wb = workbench();
    let reparsed = whatif_core::dsl::parse_model(wb.model_text()).unwrap();
    assert!(reparsed.components.contains_key("Car Insurance"));
    assert!(reparsed.data_stores.contains_key("Shared Database"));
}

#[test]
fn initial_report_is_identity() {
    let wb = workbench();
    let report = wb.report();
    assert_eq!(report.summary.trace_count, 40);
    assert_eq!(report.summary.new_issues, 0);
    assert!(!report.has_significant_change());
}

#[test]
fn analyze_remote_contracts() {
    let wb = workbench();
    let report = wb.analyze(REMOTE_CONTRACTS).unwrap();
    assert_eq!(report.summary.trace_count, 40);
    assert!(report.microservice_groups.iter().all(|g| g.potential_microservice));
    assert_eq!(wb.report().to_json(), report.to_json());
}

#[test]
fn broken_scenario_is_rejected_with_spans() {
    let wb = workbench();
    let failure = wb.analyze("remote \"Car Insurance\" -> \n").unwrap_err();
    assert_eq!(failure.status, StatusCode::BAD_REQUEST);
    let diagnostics = failure.body["diagnostics"].as_array().unwrap();
    assert!(!diagnostics.is_empty());
    assert_eq!(diagnostics[0]["severity"], "error");
    assert!(diagnostics[0]["span"]["line"].as_u64().unwrap() >= 1);
}

#[test]
fn unknown_scenario_element_is_rejected() {
    let wb = workbench();
    let failure = wb.analyze("remote \"Car Insurance\" -> \"Billing\"").unwrap_err();
    assert_eq!(failure.status, StatusCode::BAD_REQUEST);
}

#[test]
fn trace_view_has_both_sides() {
    let wb = workbench();
    wb.analyze(REMOTE_CONTRACTS).unwrap();
    let list = wb.trace_list();
    let first = list[0]["trace_id"].as_str().unwrap().to_owned();
    let view = wb.trace_view(&first).unwrap();
    for side in ["original", "rewritten"] {
        assert!(view[side]["trace"]["events"].as_array().unwrap().len() >= 4);
        assert!(!view[side]["span_tree"]["spans"].as_array().unwrap().is_empty());
        assert!(view[side]["overlays"].is_array());
        assert_eq!(view[side]["analysis"]["trace_id"], first.as_str());
    }
    assert!(view["rewritten"]["mapping"].is_object());
    assert!(view["original"].get("mapping").is_none());
    assert_eq!(wb.trace_view("missing").unwrap_err().status, StatusCode::NOT_FOUND);
}

fn request(addr: std::net::SocketAddr, method: &str, path: &str, body: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    let status = response[9..12].parse().unwrap();
    let body = response
        .split_once("\r\n\r\n")
        .map(|(_, b)| b.to_owned())
        .unwrap_or_default();
    (status, body)
}

#[test]
fn live_socket_endpoints() {
    let wb = Arc::new(workbench());
    let runtime = tokio::runtime::Runtime::new().unwrap();
    let listener = runtime
        .block_on(tokio::net::TcpListener::bind(("127.0.0.1", 0)))
        .unwrap();
    let addr = listener.local_addr().unwrap();
    runtime.spawn(serve(wb, listener));

    let (status, model) = request(addr, "GET", "/api/model", "");
    assert_eq!(status, 200);
    assert!(model.contains("component \"Car Insurance\""));

    let (status, traces) = request(addr, "GET", "/api/traces", "");
    assert_eq!(status, 200);
    let traces: Value = serde_json::from_str(&traces).unwrap();
    assert_eq!(traces.as_array().unwrap().len(), 40);
    assert_eq!(traces[0]["use_case"], "Create Car Contract");

    let (status, report) = request(addr, "POST", "/api/analyze", REMOTE_CONTRACTS);
    assert_eq!(status, 200);
    let report: Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["schema_version"], 1);

    let (status, last) = request(addr, "GET", "/api/report", "");
    assert_eq!(status, 200);
    assert_eq!(serde_json::from_str::<Value>(&last).unwrap(), report);

    let id = traces[0]["trace_id"].as_str().unwrap();
    let (status, view) = request(addr, "GET", &format!("/api/traces/{id}"), "");
    assert_eq!(status, 200);
    let view: Value = serde_json::from_str(&view).unwrap();
    assert_eq!(view["trace_id"], id);

    let (status, _) = request(addr, "GET", "/api/traces/nope", "");
    assert_eq!(status, 404);

    let (status, body) = request(addr, "POST", "/api/analyze", "component {");
    assert_eq!(status, 400);
    let body: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(body["diagnostics"][0]["span"]["line"], 1);
}
