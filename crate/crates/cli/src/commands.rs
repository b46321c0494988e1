use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use thiserror::Error;
use whatif_core::analysis::render_text;
use whatif_core::dsl::{parse_delta, parse_model, ParseDiagnostic};
use whatif_core::model::{microservice_groups, MergeError};
use whatif_core::pipeline::{analyze_ndjson, PipelineError, PipelineOptions};
use whatif_core::tracegen::{generate_iter, GenConfig, GenError};
use whatif_core::{apply_delta, ComparisonReport, DeploymentModel, ModelIndex, ScenarioDelta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    Json,
    #[default]
    Text,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{}", render_diagnostics(.path, .diagnostics))]
    Parse {
        path: PathBuf,
        diagnostics: Vec<ParseDiagnostic>,
    },
    #[error("{path}: {source}")]
    Merge { path: PathBuf, source: MergeError },
    #[error("{path}: invalid generator config: {message}")]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Generate(#[from] GenError),
    #[error("{path}: {source}")]
    Pipeline { path: PathBuf, source: PipelineError },
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    Alpha(f64),
}

fn render_diagnostics(path: &Path, diagnostics: &[ParseDiagnostic]) -> String {
    diagnostics
        .iter()
        .map(|d| format!("{}:{d}", path.display()))
        .collect::<Vec<_>>()
        .join("\n")
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn load_model(path: &Path) -> Result<DeploymentModel, CliError> {
    parse_model(&read_text(path)?).map_err(|diagnostics| CliError::Parse {
        path: path.to_path_buf(),
        diagnostics,
    })
}

pub fn load_delta(path: &Path) -> Result<ScenarioDelta, CliError> {
    parse_delta(&read_text(path)?).map_err(|diagnostics| CliError::Parse {
        path: path.to_path_buf(),
        diagnostics,
    })
}

/// Parses the base model and, if given, merges the delta into it. Without a
/// delta the scenario equals the base model.
pub fn load_models(model: &Path, delta: Option<&Path>) -> Result<(DeploymentModel, DeploymentModel), CliError> {
    let base = load_model(model)?;
    let scenario = match delta {
        Some(path) => apply_delta(&base, &load_delta(path)?).map_err(|source| CliError::Merge {
            path: path.to_path_buf(),
            source,
        })?,
        None => base.clone(),
    };
    Ok((base, scenario))
}

pub fn model_summary(model: &DeploymentModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} components, {} connections, {} data stores",
        model.components.len(),
        model.connections.len(),
        model.data_stores.len()
    );
    for (name, c) in &model.components {
        let _ = writeln!(
            out,
            "  component {name:?}: {} use cases, {} service candidates, {} entity types",
            c.use_cases.len(),
            c.service_candidates.len(),
            c.entity_types.len()
        );
    }
    for ((from, to), c) in &model.connections {
        let _ = match c.kind {
            whatif_core::model::ConnectionKind::Local => writeln!(out, "  local {from:?} -> {to:?}"),
            whatif_core::model::ConnectionKind::Remote => writeln!(
                out,
                "  remote {from:?} -> {to:?} overhead {} propagation {}",
                c.overhead,
                c.propagation.as_str()
            ),
        };
    }
    for group in microservice_groups(model) {
        let _ = writeln!(
            out,
            "  group [{}]: {}",
            group.components.join(", "),
            if group.potential_microservice {
                "potential microservice"
            } else {
                "not a microservice"
            }
        );
    }
    out
}

pub fn validate(model: &Path, delta: Option<&Path>) -> Result<String, CliError> {
    let (_, scenario) = load_models(model, delta)?;
    Ok(model_summary(&scenario))
}

pub struct AnalyzeArgs<'a> {
    pub model: &'a Path,
    pub delta: Option<&'a Path>,
    pub traces: &'a Path,
    pub alpha: f64,
    pub workers: usize,
}

pub fn analyze(args: &AnalyzeArgs<'_>) -> Result<ComparisonReport, CliError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Alpha(args.alpha));
    }
    let (base, scenario) = load_models(args.model, args.delta)?;
    let file = File::open(args.traces).map_err(io_err(args.traces))?;
    let options = PipelineOptions {
        alpha: args.alpha,
        workers: args.workers,
        ..Default::default()
    };
    analyze_ndjson(
        BufReader::new(file),
        &ModelIndex::new(base),
        &ModelIndex::new(scenario),
        &options,
    )
    .map_err(|source| CliError::Pipeline {
        path: args.traces.to_path_buf(),
        source,
    })
}

pub fn render(report: &ComparisonReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Text => render_text(report),
    }
}

pub fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

pub fn load_gen_config(path: &Path) -> Result<GenConfig, CliError> {
    let config: GenConfig = serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    config.validate().map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(config)
}

/// Streams generated traces as NDJSON to `out` (stdout when `None`) and
/// returns the number written.
pub fn generate(config: &Path, model: &Path, out: Option<&Path>) -> Result<u64, CliError> {
    let config = load_gen_config(config)?;
    let index = ModelIndex::new(load_model(model)?);
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(File::create(path).map_err(io_err(path))?),
        None => Box::new(io::stdout().lock()),
    };
    let out_path = out.unwrap_or(Path::new("<stdout>"));
    let mut sink = BufWriter::new(sink);
    let mut count = 0;
    for trace in generate_iter(&config, &index)? {
        serde_json::to_writer(&mut sink, &trace?)
            .map_err(io::Error::from)
            .map_err(io_err(out_path))?;
        sink.write_all(b"\n").map_err(io_err(out_path))?;
        count += 1;
    }
    sink.flush().map_err(io_err(out_path))?;
    Ok(count)
}
