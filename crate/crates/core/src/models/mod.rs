//! Classifiers: random forest, MLP, linear SVC and their hard-voting
//! ensemble, behind one trained-model type.

pub mod forest;
pub mod mlp;
pub mod svc;
pub mod tree;
pub mod voting;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;

pub use forest::{rf_train, Criterion, RandomForestConfig, RandomForestModel};
pub use mlp::{mlp_train, Adam, MlpConfig, MlpModel, Network};
pub use svc::{svc_train, LinearSvcConfig, LinearSvcModel};
pub use tree::{gini_impurity, train_tree, DecisionTree, MaxFeatures, TreeConfig, TreeNode};
pub use voting::{hard_vote, vote_predict, voting_train, VotingConfig, VotingModel};

/// Version tag written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("node has no samples")]
    EmptyNode,
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("feature matrix contains non-finite values")]
    NonFiniteInput,
}

pub(crate) fn check_training_input(x: &Array2<f64>, y: &[Label]) -> Result<(), ModelError> {
    if x.nrows() != y.len() {
        return Err(ModelError::LengthMismatch {
            rows: x.nrows(),
            labels: y.len(),
        });
    }
    if x.nrows() == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFiniteInput);
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    /// Epochs (MLP) or optimizer iterations (SVC); zero for forests.
    pub epochs_run: usize,
    pub final_loss: Option<f64>,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl TrainingMeta {
    pub fn new(seed: u64) -> Self {
        TrainingMeta {
            seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    RandomForest(RandomForestConfig),
    Mlp(MlpConfig),
    LinearSvc(LinearSvcConfig),
    Voting(VotingConfig),
}

impl ModelConfig {
    /// Short name used in report tables.
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::RandomForest(_) => "RF",
            ModelConfig::Mlp(_) => "NN",
            ModelConfig::LinearSvc(_) => "SVC",
            ModelConfig::Voting(_) => "VC",
        }
    }

    /// Copy of the config with every rng seed replaced.
    pub fn with_seed(&self, seed: u64) -> ModelConfig {
        match self.clone() {
            ModelConfig::RandomForest(c) => ModelConfig::RandomForest(RandomForestConfig { rng_seed: seed, ..c }),
            ModelConfig::Mlp(c) => ModelConfig::Mlp(MlpConfig { rng_seed: seed, ..c }),
            ModelConfig::LinearSvc(c) => ModelConfig::LinearSvc(LinearSvcConfig { rng_seed: seed, ..c }),
            ModelConfig::Voting(c) => ModelConfig::Voting(c.with_seed(seed)),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelConfig::RandomForest(c) => c.rng_seed,
            ModelConfig::Mlp(c) => c.rng_seed,
            ModelConfig::LinearSvc(c) => c.rng_seed,
            ModelConfig::Voting(c) => c.random_forest.rng_seed,
        }
    }

    pub fn fit(&self, x: &Array2<f64>, y: &[Label]) -> Result<TrainedModel, ModelError> {
        let (params, meta) = match self {
            ModelConfig::RandomForest(c) => {
                let m = rf_train(x, y, c)?;
                let mut meta = TrainingMeta::new(c.rng_seed);
                meta.converged = true;
                (ModelParams::RandomForest(m), meta)
            }
            ModelConfig::Mlp(c) => {
                let (m, meta) = mlp_train(x, y, c)?;
                (ModelParams::Mlp(m), meta)
            }
            ModelConfig::LinearSvc(c) => {
                let (m, meta) = svc_train(x, y, c)?;
                (ModelParams::LinearSvc(m), meta)
            }
            ModelConfig::Voting(c) => {
                let (m, meta) = voting_train(x, y, c)?;
                (ModelParams::Voting(m), meta)
            }
        };
        Ok(TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            config: self.clone(),
            meta,
            params,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    RandomForest(RandomForestModel),
    Mlp(MlpModel),
    LinearSvc(LinearSvcModel),
    Voting(VotingModel),
}

/// A fitted model with the config and seed it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub config: ModelConfig,
    pub meta: TrainingMeta,
    pub params: ModelParams,
}

impl TrainedModel {
    pub fn predict_row(&self, x: ArrayView1<f64>) -> Label {
        match &self.params {
            ModelParams::RandomForest(m) => m.predict_row(x),
            ModelParams::Mlp(m) => m.predict_row(x),
            ModelParams::LinearSvc(m) => m.predict_row(x),
            ModelParams::Voting(m) => m.predict_row(x),
        }
    }

    pub fn predict(&self, x: &Array2<f64>) -> Vec<Label> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }

    /// Parses a serialized model. Tree depth is not limited by the parser.
    pub fn from_json(s: &str) -> serde_json::Result<TrainedModel> {
        let mut de = serde_json::Deserializer::from_str(s);
        de.disable_recursion_limit();
        let m = TrainedModel::deserialize(&mut de)?;
        de.end()?;
        Ok(m)
    }
}
