use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use whatif_cli::commands::{self, AnalyzeArgs, OutputFormat};
use whatif_cli::serve::{self, Workbench, DEFAULT_PORT};
use whatif_core::pipeline::PipelineOptions;
use whatif_core::trace::read_traces;

/// What-if analysis of transaction and overhead effects of deployment
/// scenarios, replayed over recorded event traces.
#[derive(Parser)]
#[command(name = "whatif", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model, optionally merged with a scenario delta.
    Validate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        delta: Option<PathBuf>,
    },
    /// Rewrite and analyze a trace corpus under a scenario and compare.
    Analyze {
        #[arg(long)]
        model: PathBuf,
        /// Scenario delta; omitted means the empty delta.
        #[arg(long)]
        delta: Option<PathBuf>,
        #[arg(long)]
        traces: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Write the report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Format of the report printed to stdout.
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        /// Exit with status 2 if any use case changed significantly.
        #[arg(long)]
        fail_on_significant: bool,
    },
    /// Generate an artificial NDJSON trace corpus for a model.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the model, traces and reports over HTTP on localhost.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        delta: Option<PathBuf>,
        #[arg(long)]
        traces: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
    },
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Validate { model, delta } => {
            print!("{}", commands::validate(&model, delta.as_deref())?);
        }
        Command::Analyze {
            model,
            delta,
            traces,
            alpha,
            workers,
            out,
            format,
            fail_on_significant,
        } => {
            let report = commands::analyze(&AnalyzeArgs {
                model: &model,
                delta: delta.as_deref(),
                traces: &traces,
                alpha,
                workers,
            })?;
            if let Some(out) = &out {
                commands::write_output(out, &report.to_json())?;
            }
            print!("{}", commands::render(&report, format));
            if fail_on_significant && report.has_significant_change() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Generate { config, model, out } => {
            let count = commands::generate(&config, &model, out.as_deref())?;
            if out.is_some() {
                eprintln!("wrote {count} traces");
            }
        }
        Command::Serve {
            model,
            delta,
            traces,
            alpha,
            workers,
            port,
        } => {
            let (base, scenario) = commands::load_models(&model, delta.as_deref())?;
            let file = File::open(&traces).with_context(|| traces.display().to_string())?;
            let corpus = read_traces(BufReader::new(file))
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| traces.display().to_string())?;
            let options = PipelineOptions {
                alpha,
                workers,
                ..Default::default()
            };
            let workbench = Arc::new(Workbench::new(base, scenario, corpus, options)?);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                serve::serve(workbench, listener).await
            })?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
