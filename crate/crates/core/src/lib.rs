//! Trace-based what-if analysis of service boundaries.
//!
//! Execution traces recorded on an existing application are rewritten as if
//! selected service candidates were deployed into separate components, then
//! original and rewritten traces are compared for duration changes,
//! consistency issues and changed write outcomes.
//!
//! The usual flow: parse a model and a scenario delta with [`dsl`], merge
//! them with [`model::apply_delta`], and feed traces to
//! [`pipeline::analyze_ndjson`] to obtain a [`analysis::ComparisonReport`].

pub mod analysis;
pub mod dsl;
pub mod model;
pub mod pipeline;
pub mod rewrite;
pub mod trace;
pub mod tracegen;
pub mod tx;

pub use analysis::{ComparisonReport, TraceAnalysis};
pub use model::{apply_delta, DeploymentModel, ModelIndex, ScenarioDelta};
pub use rewrite::{rewrite, RewriteResult};
pub use trace::EventTrace;
pub use tx::{simulate, TxAnnotations};
