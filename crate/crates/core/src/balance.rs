//! SMOTE oversampling of the minority class.

use ndarray::{Array2, ArrayView1, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::embedding::FeatureMatrix;
use crate::rng::seeded;

/// Id prefix carried by every synthetic row.
pub const SYNTHETIC_PREFIX: &str = "synthetic-";

#[derive(Debug, Error, PartialEq)]
pub enum BalanceError {
    #[error("minority class has {count} rows, need more than k = {k}")]
    TooFewMinority { count: usize, k: usize },
    #[error("only one class present")]
    SingleClass,
    #[error("invalid SMOTE config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub target_ratio: f64,
    pub rng_seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            target_ratio: 1.0,
            rng_seed: 42,
        }
    }
}

/// Where balancing happens relative to cross-validation splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoteMode {
    /// No oversampling.
    Off,
    /// Oversample each fold's training partition only.
    InFold,
    /// Oversample the whole dataset before splitting.
    Global,
}

impl std::str::FromStr for SmoteMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "off" | "none" => Ok(SmoteMode::Off),
            "in-fold" | "infold" => Ok(SmoteMode::InFold),
            "global" => Ok(SmoteMode::Global),
            other => Err(format!("unknown smote mode {other:?}")),
        }
    }
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// For each row, the indices of its `k` nearest other rows under Euclidean
/// distance, nearest first, ties broken by lower index.
pub fn minority_knn(rows: &Array2<f64>, k: usize) -> Result<Vec<Vec<usize>>, BalanceError> {
    let n = rows.nrows();
    if k == 0 || n <= k {
        return Err(BalanceError::TooFewMinority { count: n, k });
    }
    use rayon::prelude::*;
    let out = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = rows.row(i);
            let mut d: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(xi, rows.row(j)), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.truncate(k);
            d.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    Ok(out)
}

/// Appends synthetic minority rows `x + u * (x_nn - x)` until the minority
/// count reaches `round(target_ratio * n_majority)`. Original rows are kept
/// untouched as a prefix. The minority is the smaller class (NotUseful on ties,
/// in which case nothing is added at ratio 1.0).
pub fn smote(m: &FeatureMatrix, cfg: &SmoteConfig) -> Result<FeatureMatrix, BalanceError> {
    if !(cfg.target_ratio > 0.0 && cfg.target_ratio <= 1.0) {
        return Err(BalanceError::Config(format!(
            "target_ratio {} not in (0, 1]",
            cfg.target_ratio
        )));
    }
    let n_useful = m.count(Label::Useful);
    let n_not = m.count(Label::NotUseful);
    if n_useful == 0 || n_not == 0 {
        return Err(BalanceError::SingleClass);
    }
    let (minority, n_min, n_maj) = if n_not <= n_useful {
        (Label::NotUseful, n_not, n_useful)
    } else {
        (Label::Useful, n_useful, n_not)
    };
    if cfg.k_neighbors == 0 || n_min <= cfg.k_neighbors {
        return Err(BalanceError::TooFewMinority {
            count: n_min,
            k: cfg.k_neighbors,
        });
    }
    let target = (cfg.target_ratio * n_maj as f64).round() as usize;
    let n_new = target.saturating_sub(n_min);
    if n_new == 0 {
        return Ok(m.clone());
    }

    let min_idx: Vec<usize> = (0..m.n_rows()).filter(|&i| m.labels[i] == minority).collect();
    let min_rows = m.x.select(Axis(0), &min_idx);
    let neighbors = minority_knn(&min_rows, cfg.k_neighbors)?;

    let mut rng = seeded(cfg.rng_seed);
    let d = m.dim();
    let mut synth = Array2::<f64>::zeros((n_new, d));
    for s in 0..n_new {
        let base = rng.gen_range(0..n_min);
        let nn = neighbors[base][rng.gen_range(0..cfg.k_neighbors)];
        let u: f64 = rng.gen();
        let x = min_rows.row(base);
        let xn = min_rows.row(nn);
        for j in 0..d {
            synth[[s, j]] = x[j] + u * (xn[j] - x[j]);
        }
    }

    let x = ndarray::concatenate(Axis(0), &[m.x.view(), synth.view()])
        .expect("column counts agree");
    let mut labels = m.labels.clone();
    labels.extend(std::iter::repeat_n(minority, n_new));
    let mut ids = m.ids.clone();
    ids.extend((0..n_new).map(|i| format!("{SYNTHETIC_PREFIX}{i}")));
    Ok(FeatureMatrix::new(x, labels, ids))
}

pub fn is_synthetic(id: &str) -> bool {
    id.starts_with(SYNTHETIC_PREFIX)
}
