//! Cross-validated training and scoring of one model on one feature matrix.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{class_metrics, confusion, ClassMetrics, ConfusionMatrix};
use super::report::{mean_scores, EvaluationReport};
use super::splits::{Fold, SplitPlan};
use super::EvaluationError;
use crate::balance::{is_synthetic, smote, SmoteConfig, SmoteMode};
use crate::corpus::Label;
use crate::embedding::FeatureMatrix;
use crate::models::{ModelConfig, ModelError, TrainingMeta};

/// Anything that can be fitted on a training partition and label a test
/// partition. `seed` is the fold-derived seed.
pub trait Learner: Sync {
    fn name(&self) -> String;
    fn fit_predict(
        &self,
        train: &FeatureMatrix,
        test: &FeatureMatrix,
        seed: u64,
    ) -> Result<(Vec<Label>, TrainingMeta), ModelError>;
}

impl Learner for ModelConfig {
    fn name(&self) -> String {
        ModelConfig::name(self).to_string()
    }

    fn fit_predict(
        &self,
        train: &FeatureMatrix,
        test: &FeatureMatrix,
        seed: u64,
    ) -> Result<(Vec<Label>, TrainingMeta), ModelError> {
        let model = self.with_seed(seed).fit(&train.x, &train.labels)?;
        Ok((model.predict(&test.x), model.meta))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub repeat: usize,
    pub fold: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_synthetic: usize,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
    pub useful: ClassMetrics,
    pub not_useful: ClassMetrics,
    pub accuracy: f64,
    pub converged: bool,
}

/// Training and test partitions of one fold. In `InFold` mode the training
/// partition is oversampled with a SMOTE stream seeded by `seed`; the test
/// partition is never touched.
pub fn fold_partitions(
    features: &FeatureMatrix,
    fold: &Fold,
    smote_cfg: &SmoteConfig,
    mode: SmoteMode,
    seed: u64,
) -> Result<(FeatureMatrix, FeatureMatrix), EvaluationError> {
    let mut train = features.select(&fold.train);
    let test = features.select(&fold.test);
    if mode == SmoteMode::InFold {
        let cfg = SmoteConfig {
            rng_seed: seed,
            ..*smote_cfg
        };
        train = smote(&train, &cfg).map_err(|e| EvaluationError::Fold {
            repeat: fold.repeat,
            fold: fold.fold,
            reason: e.to_string(),
        })?;
    }
    Ok((train, test))
}

/// Runs every fold of `plan` (in parallel on the current rayon pool) and
/// averages per-fold metrics. Fold `(r, k)` uses seed
/// `plan.rng_seed + r * n_folds + k` for both SMOTE and model training, so
/// results do not depend on scheduling.
pub fn run_experiment(
    features: &FeatureMatrix,
    learner: &dyn Learner,
    plan: &SplitPlan,
    smote_cfg: &SmoteConfig,
    mode: SmoteMode,
) -> Result<EvaluationReport, EvaluationError> {
    if let Some(max) = plan.folds.iter().flat_map(|f| f.train.iter().chain(&f.test)).max() {
        if *max >= features.n_rows() {
            return Err(EvaluationError::InvalidSplit(format!(
                "plan references row {max} but matrix has {} rows",
                features.n_rows()
            )));
        }
    }
    let results: Vec<FoldResult> = plan
        .folds
        .par_iter()
        .map(|fold| {
            let seed = plan.fold_seed(fold.repeat, fold.fold);
            let (train, test) = fold_partitions(features, fold, smote_cfg, mode, seed)?;
            let (pred, meta) =
                learner
                    .fit_predict(&train, &test, seed)
                    .map_err(|e| EvaluationError::Fold {
                        repeat: fold.repeat,
                        fold: fold.fold,
                        reason: e.to_string(),
                    })?;
            let cm = confusion(&test.labels, &pred)?;
            Ok(FoldResult {
                repeat: fold.repeat,
                fold: fold.fold,
                seed,
                n_train: train.n_rows(),
                n_synthetic: train.ids.iter().filter(|id| is_synthetic(id)).count(),
                n_test: test.n_rows(),
                confusion: cm,
                useful: class_metrics(&cm, Label::Useful),
                not_useful: class_metrics(&cm, Label::NotUseful),
                accuracy: cm.accuracy(),
                converged: meta.converged,
            })
        })
        .collect::<Result<_, EvaluationError>>()?;

    let scores = mean_scores(&results);
    Ok(EvaluationReport {
        model: learner.name(),
        variant: String::new(),
        smote_mode: mode,
        useful: scores.useful,
        not_useful: scores.not_useful,
        accuracy: scores.accuracy,
        macro_f1: scores.macro_f1,
        folds: results,
    })
}
