//! Evaluation statistics: interquartile mean, stratified bootstrap
//! intervals, area under learning curves, and run-log aggregation.

mod runlog;
mod stats;

pub use runlog::{RunLog, RunLogRow, RunSetSummary};
pub use stats::{
    auc, iqm, stratified_bootstrap_ci, stratified_bootstrap_mean_ci, MetricSummary,
    DEFAULT_RESAMPLES,
};
