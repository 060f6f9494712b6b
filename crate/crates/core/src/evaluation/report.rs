//! Aggregated reports, the results table and seed-vs-augmented comparison.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::experiment::FoldResult;
use super::metrics::ClassMetrics;
use super::EvaluationError;
use crate::balance::SmoteMode;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const TABLE_HEADER: [&str; 9] = [
    "Model",
    "Macro-F1 (U)",
    "Precision",
    "Recall",
    "Accuracy",
    "Macro-F1 (NU)",
    "Precision",
    "Recall",
    "Accuracy",
];

/// Per-class scores as percentages rounded to three decimals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model: String,
    #[serde(default)]
    pub variant: String,
    pub smote_mode: SmoteMode,
    pub useful: ClassScores,
    pub not_useful: ClassScores,
    pub accuracy: f64,
    /// Mean of the two per-class F1 scores.
    #[serde(default)]
    pub macro_f1: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub folds: Vec<FoldResult>,
}

impl EvaluationReport {
    pub fn with_variant(mut self, variant: &str) -> Self {
        self.variant = variant.to_string();
        self
    }

    /// The eight numeric table cells in column order.
    pub fn table_cells(&self) -> [f64; 8] {
        [
            self.useful.f1,
            self.useful.precision,
            self.useful.recall,
            self.accuracy,
            self.not_useful.f1,
            self.not_useful.precision,
            self.not_useful.recall,
            self.accuracy,
        ]
    }
}

pub(crate) struct MeanScores {
    pub useful: ClassScores,
    pub not_useful: ClassScores,
    pub accuracy: f64,
    pub macro_f1: f64,
}

fn pct3(v: f64) -> f64 {
    (v * 100_000.0).round() / 1000.0
}

/// Arithmetic mean over folds (summed in fold order), as percentages.
pub(crate) fn mean_scores(folds: &[FoldResult]) -> MeanScores {
    let n = folds.len().max(1) as f64;
    let mean = |f: &dyn Fn(&FoldResult) -> f64| folds.iter().map(f).sum::<f64>() / n;
    let class = |pick: fn(&FoldResult) -> ClassMetrics| ClassScores {
        f1: pct3(mean(&|r| pick(r).f1)),
        precision: pct3(mean(&|r| pick(r).precision)),
        recall: pct3(mean(&|r| pick(r).recall)),
    };
    MeanScores {
        useful: class(|r| r.useful),
        not_useful: class(|r| r.not_useful),
        accuracy: pct3(mean(&|r| r.accuracy)),
        macro_f1: pct3(mean(&|r| (r.useful.f1 + r.not_useful.f1) / 2.0)),
    }
}

/// All model reports of one run, with the resolved configuration echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub variant: String,
    pub smote_mode: SmoteMode,
    #[serde(default)]
    pub config: serde_json::Value,
    pub reports: Vec<EvaluationReport>,
}

impl RunReport {
    pub fn render_table(&self) -> String {
        render_table(&self.reports)
    }
}

pub fn render_table(reports: &[EvaluationReport]) -> String {
    let mut s = TABLE_HEADER.join(" | ");
    s.push('\n');
    s.push_str(&vec!["---"; TABLE_HEADER.len()].join(" | "));
    s.push('\n');
    for r in reports {
        s.push_str(&r.model);
        for v in r.table_cells() {
            let _ = write!(s, " | {v:.3}");
        }
        s.push('\n');
    }
    s
}

pub const METRIC_NAMES: [&str; 7] = [
    "f1_useful",
    "precision_useful",
    "recall_useful",
    "accuracy",
    "f1_not_useful",
    "precision_not_useful",
    "recall_not_useful",
];

fn metric_values(r: &EvaluationReport) -> [f64; 7] {
    [
        r.useful.f1,
        r.useful.precision,
        r.useful.recall,
        r.accuracy,
        r.not_useful.f1,
        r.not_useful.precision,
        r.not_useful.recall,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub metric: String,
    pub seed: f64,
    pub augmented: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub model: String,
    pub deltas: Vec<MetricDelta>,
    pub mean_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub models: Vec<ModelComparison>,
    /// Mean of every (model, metric) delta, in percentage points.
    pub overall_mean_delta: f64,
    /// Sum over models of the accuracy deltas, in percentage points.
    pub summed_accuracy_delta: f64,
}

/// Pairs the reports by position; model names must match one to one.
pub fn compare_reports(
    seed: &RunReport,
    augmented: &RunReport,
) -> Result<ComparisonReport, EvaluationError> {
    if seed.schema_version != augmented.schema_version {
        return Err(EvaluationError::SchemaMismatch(format!(
            "schema versions {} and {}",
            seed.schema_version, augmented.schema_version
        )));
    }
    let names = |r: &RunReport| r.reports.iter().map(|m| m.model.clone()).collect::<Vec<_>>();
    if names(seed) != names(augmented) {
        return Err(EvaluationError::SchemaMismatch(format!(
            "model sets differ: {:?} vs {:?}",
            names(seed),
            names(augmented)
        )));
    }
    let mut models = Vec::new();
    let mut all = Vec::new();
    let mut acc_sum = 0.0;
    for (a, b) in seed.reports.iter().zip(&augmented.reports) {
        let deltas: Vec<MetricDelta> = METRIC_NAMES
            .iter()
            .zip(metric_values(a).into_iter().zip(metric_values(b)))
            .map(|(name, (s, g))| MetricDelta {
                metric: name.to_string(),
                seed: s,
                augmented: g,
                delta: g - s,
            })
            .collect();
        all.extend(deltas.iter().map(|d| d.delta));
        acc_sum += b.accuracy - a.accuracy;
        let mean_delta = deltas.iter().map(|d| d.delta).sum::<f64>() / deltas.len() as f64;
        models.push(ModelComparison {
            model: a.model.clone(),
            deltas,
            mean_delta,
        });
    }
    let overall = if all.is_empty() {
        0.0
    } else {
        all.iter().sum::<f64>() / all.len() as f64
    };
    Ok(ComparisonReport {
        schema_version: REPORT_SCHEMA_VERSION,
        models,
        overall_mean_delta: overall,
        summed_accuracy_delta: acc_sum,
    })
}

impl ComparisonReport {
    pub fn render_table(&self) -> String {
        let mut s = String::from("Model | Metric | Seed | Augmented | Delta\n--- | --- | --- | --- | ---\n");
        for m in &self.models {
            for d in &m.deltas {
                let _ = writeln!(
                    s,
                    "{} | {} | {:.3} | {:.3} | {:+.3}",
                    m.model, d.metric, d.seed, d.augmented, d.delta
                );
            }
        }
        let _ = writeln!(s, "overall mean delta: {:+.3}", self.overall_mean_delta);
        let _ = writeln!(s, "summed accuracy delta: {:+.3}", self.summed_accuracy_delta);
        s
    }
}
