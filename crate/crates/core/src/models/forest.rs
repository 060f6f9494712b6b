//! Bagged ensemble of Gini decision trees.

use ndarray::{Array2, ArrayView1};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{majority, train_tree, DecisionTree, MaxFeatures, TreeConfig};
use super::{check_training_input, ModelError};
use crate::corpus::Label;
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomForestConfig {
    pub n_estimators: usize,
    pub criterion: Criterion,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub rng_seed: u64,
}

impl Default for RandomForestConfig {
    fn default() -> Self {
        RandomForestConfig {
            n_estimators: 100,
            criterion: Criterion::Gini,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            rng_seed: 0,
        }
    }
}

impl RandomForestConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_estimators < 1 {
            return Err(ModelError::InvalidConfig("n_estimators must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(ModelError::InvalidConfig("min_samples_split must be >= 2".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(ModelError::InvalidConfig("min_samples_leaf must be >= 1".into()));
        }
        if let MaxFeatures::Count(0) = self.max_features {
            return Err(ModelError::InvalidConfig("max_features must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub trees: Vec<DecisionTree>,
}

/// Tree `t` draws from its own stream seeded with `rng_seed + t`, so trees
/// can be grown in parallel without changing the result.
pub fn rf_train(
    x: &Array2<f64>,
    y: &[Label],
    cfg: &RandomForestConfig,
) -> Result<RandomForestModel, ModelError> {
    cfg.validate()?;
    check_training_input(x, y)?;
    let n = x.nrows();
    let tree_cfg = TreeConfig {
        min_samples_split: cfg.min_samples_split,
        min_samples_leaf: cfg.min_samples_leaf,
        max_features: cfg.max_features,
    };
    let trees = (0..cfg.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded(cfg.rng_seed.wrapping_add(t as u64));
            let samples: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            train_tree(x, y, &samples, &tree_cfg, &mut rng)
        })
        .collect();
    Ok(RandomForestModel { trees })
}

impl RandomForestModel {
    pub fn votes(&self, x: ArrayView1<f64>) -> [usize; 2] {
        let mut votes = [0usize; 2];
        for t in &self.trees {
            votes[t.predict_row(x).as_u8() as usize] += 1;
        }
        votes
    }

    /// Majority of tree votes; ties go to NotUseful.
    pub fn predict_row(&self, x: ArrayView1<f64>) -> Label {
        majority(self.votes(x))
    }
}
