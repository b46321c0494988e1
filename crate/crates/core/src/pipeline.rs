//! Corpus-level driver: simulate, rewrite, analyze and diff every trace on a
//! worker pool, then aggregate in input order.
//!
//! Input is consumed in fixed-size batches. Each batch is processed in
//! parallel and its results are folded into the report sequentially, so the
//! report is byte-identical for any number of workers.

use std::borrow::Borrow;
use std::io::{self, BufRead};

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{analyze_trace, diff_trace, CompareError, ComparisonReport, ReportBuilder, TraceComparison};
use crate::model::{microservice_groups, ModelIndex};
use crate::rewrite::{rewrite, RewriteError};
use crate::trace::{trace_from_json, validate_trace, EventTrace, FormatError, NameInterner, ValidationError};
use crate::tx::simulate;

pub const DEFAULT_BATCH_SIZE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub alpha: f64,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    pub batch_size: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            alpha: 0.05,
            workers: 0,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{}{error}", .line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Validation {
        line: Option<usize>,
        error: ValidationError,
    },
    #[error("trace \"{trace_id}\": {error}")]
    Rewrite { trace_id: String, error: RewriteError },
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Original analysis, rewrite, rewritten analysis and diff of one trace.
pub fn compare_trace(
    trace: &EventTrace,
    base: &ModelIndex,
    scenario: &ModelIndex,
) -> Result<TraceComparison, PipelineError> {
    let fail = |error: RewriteError| PipelineError::Rewrite {
        trace_id: trace.trace_id.clone(),
        error,
    };
    let original = {
        let annotations = simulate(trace, base).map_err(|e| fail(e.into()))?;
        analyze_trace(trace, &annotations, base)
    };
    let result = rewrite(trace, base, scenario).map_err(fail)?;
    let rewritten = analyze_trace(&result.trace, &result.annotations, scenario);
    Ok(diff_trace(&original, &rewritten, &result.mapping)?)
}

struct Runner<'a> {
    pool: rayon::ThreadPool,
    base: &'a ModelIndex,
    scenario: &'a ModelIndex,
    builder: ReportBuilder,
}

impl<'a> Runner<'a> {
    fn new(base: &'a ModelIndex, scenario: &'a ModelIndex, options: &PipelineOptions) -> Result<Self, PipelineError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| PipelineError::Pool(e.to_string()))?;
        Ok(Runner {
            pool,
            base,
            scenario,
            builder: ReportBuilder::new(options.alpha)?,
        })
    }

    fn run_batch<T: Sync, R: Borrow<EventTrace>>(
        &mut self,
        batch: &[T],
        load: impl Fn(&T) -> Result<R, PipelineError> + Sync,
    ) -> Result<(), PipelineError> {
        let (base, scenario) = (self.base, self.scenario);
        let results: Vec<Result<TraceComparison, PipelineError>> = self.pool.install(|| {
            batch
                .par_iter()
                .map(|item| {
                    let trace = load(item)?;
                    compare_trace(trace.borrow(), base, scenario)
                })
                .collect()
        });
        for result in results {
            self.builder.add(result?);
        }
        Ok(())
    }

    fn finish(self) -> ComparisonReport {
        self.builder.finish(microservice_groups(self.scenario.model()))
    }
}

/// Runs the comparison over in-memory traces. Traces are assumed valid.
pub fn analyze_traces<'t>(
    traces: impl IntoIterator<Item = &'t EventTrace>,
    base: &ModelIndex,
    scenario: &ModelIndex,
    options: &PipelineOptions,
) -> Result<ComparisonReport, PipelineError> {
    let mut runner = Runner::new(base, scenario, options)?;
    let mut traces = traces.into_iter();
    let batch_size = options.batch_size.max(1);
    loop {
        let batch: Vec<&EventTrace> = traces.by_ref().take(batch_size).collect();
        if batch.is_empty() {
            break;
        }
        runner.run_batch(&batch, |t| Ok(*t))?;
    }
    Ok(runner.finish())
}

/// Runs the comparison over an NDJSON trace stream. Lines are read
/// sequentially; decoding and validation happen on the workers.
pub fn analyze_ndjson(
    mut reader: impl BufRead,
    base: &ModelIndex,
    scenario: &ModelIndex,
    options: &PipelineOptions,
) -> Result<ComparisonReport, PipelineError> {
    let mut runner = Runner::new(base, scenario, options)?;
    let batch_size = options.batch_size.max(1);
    let mut line_no = 0usize;
    let mut batch: Vec<(usize, String)> = Vec::with_capacity(batch_size);
    let decode = |(line, text): &(usize, String)| {
        let trace = trace_from_json(text, &mut NameInterner::default())
            .map_err(|message| FormatError { line: *line, message })?;
        validate_trace(&trace).map_err(|error| PipelineError::Validation {
            line: Some(*line),
            error,
        })?;
        Ok(trace)
    };
    loop {
        let mut text = String::new();
        let read = reader.read_line(&mut text)?;
        if read > 0 {
            line_no += 1;
            if !text.trim().is_empty() {
                batch.push((line_no, text));
            }
        }
        if batch.len() == batch_size || (read == 0 && !batch.is_empty()) {
            runner.run_batch(&batch, decode)?;
            batch.clear();
        }
        if read == 0 {
            break;
        }
    }
    Ok(runner.finish())
}
