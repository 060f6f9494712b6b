//! Repeated stratified k-fold experiments, metrics and reports.

pub mod experiment;
pub mod metrics;
pub mod report;
pub mod splits;

use thiserror::Error;

use crate::corpus::Label;

pub use experiment::{fold_partitions, run_experiment, FoldResult, Learner};
pub use metrics::{class_metrics, cohen_kappa, confusion, ClassMetrics, ConfusionMatrix};
pub use report::{
    compare_reports, render_table, ClassScores, ComparisonReport, EvaluationReport, RunReport,
    REPORT_SCHEMA_VERSION, TABLE_HEADER,
};
pub use splits::{rskf_splits, Fold, SplitPlan};

#[derive(Debug, Error, PartialEq)]
pub enum EvaluationError {
    #[error("class {class} has {count} samples, fewer than {n_folds} folds")]
    TooFewSamples {
        class: Label,
        count: usize,
        n_folds: usize,
    },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("fold ({repeat}, {fold}): {reason}")]
    Fold {
        repeat: usize,
        fold: usize,
        reason: String,
    },
    #[error("report schema mismatch: {0}")]
    SchemaMismatch(String),
}
