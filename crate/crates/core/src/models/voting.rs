//! Hard-voting ensemble of a random forest, an MLP and a linear SVC.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::forest::{rf_train, RandomForestConfig, RandomForestModel};
use super::mlp::{mlp_train, MlpConfig, MlpModel};
use super::svc::{svc_train, LinearSvcConfig, LinearSvcModel};
use super::{ModelError, TrainingMeta};
use crate::corpus::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VotingStrategy {
    Hard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingConfig {
    pub random_forest: RandomForestConfig,
    pub mlp: MlpConfig,
    pub linear_svc: LinearSvcConfig,
    pub strategy: VotingStrategy,
}

impl Default for VotingConfig {
    fn default() -> Self {
        VotingConfig {
            random_forest: RandomForestConfig::default(),
            mlp: MlpConfig::default(),
            linear_svc: LinearSvcConfig::default(),
            strategy: VotingStrategy::Hard,
        }
    }
}

impl VotingConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.random_forest.rng_seed = seed;
        self.mlp.rng_seed = seed;
        self.linear_svc.rng_seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingModel {
    pub random_forest: RandomForestModel,
    pub mlp: MlpModel,
    pub linear_svc: LinearSvcModel,
}

/// Majority label of the given votes; an even split goes to NotUseful.
pub fn hard_vote(votes: &[Label]) -> Label {
    let useful = votes.iter().filter(|l| **l == Label::Useful).count();
    if 2 * useful > votes.len() {
        Label::Useful
    } else {
        Label::NotUseful
    }
}

/// Majority of exactly three hard predictions (cannot tie).
pub fn vote_predict(votes: [Label; 3]) -> Label {
    hard_vote(&votes)
}

impl VotingModel {
    pub fn votes(&self, x: ArrayView1<f64>) -> [Label; 3] {
        [
            self.random_forest.predict_row(x),
            self.mlp.predict_row(x),
            self.linear_svc.predict_row(x),
        ]
    }

    pub fn predict_row(&self, x: ArrayView1<f64>) -> Label {
        vote_predict(self.votes(x))
    }
}

/// Trains the three members on the same data.
pub fn voting_train(
    x: &Array2<f64>,
    y: &[Label],
    cfg: &VotingConfig,
) -> Result<(VotingModel, TrainingMeta), ModelError> {
    let rf = rf_train(x, y, &cfg.random_forest)?;
    let (mlp, mlp_meta) = mlp_train(x, y, &cfg.mlp)?;
    let (svc, svc_meta) = svc_train(x, y, &cfg.linear_svc)?;
    let mut meta = TrainingMeta::new(cfg.random_forest.rng_seed);
    meta.converged = mlp_meta.converged && svc_meta.converged;
    meta.warnings.extend(mlp_meta.warnings.into_iter().map(|w| format!("mlp: {w}")));
    meta.warnings.extend(svc_meta.warnings.into_iter().map(|w| format!("linear_svc: {w}")));
    Ok((
        VotingModel {
            random_forest: rf,
            mlp,
            linear_svc: svc,
        },
        meta,
    ))
}
