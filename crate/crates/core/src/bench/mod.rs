//! Evaluation protocol, benchmark runner and report rendering.
//!
//! All metrics are computed on data standardized with training-set
//! statistics.

mod config;
mod models;
mod report;

pub use crate::task::{evaluate, mae, mse, ForecastTask, Forecaster, Metrics};
pub use config::{run_benchmark, BenchConfig, DatasetEntry};
pub use models::{fit_model, load_model, prepare, AnyModel, FitOutcome, ModelKind, ModelSpec, Prepared};
pub use report::{render_bar_svg, render_table, BenchmarkReport, ReportRow, TableFormat};
