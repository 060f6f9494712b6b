//! CART decision tree with Gini impurity and midpoint thresholds.

use ndarray::{Array2, ArrayView1};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::corpus::Label;
use crate::rng::Rng;

/// Impurity reductions smaller than this are treated as no reduction.
const IMPURITY_EPS: f64 = 1e-12;

/// `1 - sum((c_i / n)^2)`.
pub fn gini_impurity(class_counts: &[usize]) -> Result<f64, ModelError> {
    let n: usize = class_counts.iter().sum();
    if n == 0 {
        return Err(ModelError::EmptyNode);
    }
    let n = n as f64;
    Ok(1.0 - class_counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>())
}

fn gini2(counts: [usize; 2]) -> f64 {
    gini_impurity(&counts).unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(d))` features per node.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (d as f64).sqrt().ceil() as usize,
            MaxFeatures::All => d,
            MaxFeatures::Count(k) => k,
        };
        k.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        label: Label,
        /// `[not_useful, useful]` training counts.
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        impurity: f64,
        counts: [usize; 2],
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn counts(&self) -> [usize; 2] {
        match self {
            TreeNode::Leaf { counts, .. } | TreeNode::Split { counts, .. } => *counts,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub root: TreeNode,
}

impl DecisionTree {
    /// Samples with `x[feature] <= threshold` go left.
    pub fn predict_row(&self, x: ArrayView1<f64>) -> Label {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }
}

/// Majority label of `[not_useful, useful]` counts; ties go to NotUseful.
pub fn majority(counts: [usize; 2]) -> Label {
    if counts[1] > counts[0] {
        Label::Useful
    } else {
        Label::NotUseful
    }
}

/// Best split found at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    /// Size-weighted mean of the two child impurities.
    pub impurity: f64,
}

/// Scans `features` (in ascending order) for the split of `samples` with the
/// lowest weighted child impurity. Earlier features and lower thresholds win
/// ties. Returns `None` if no admissible split exists.
pub fn best_split(
    x: &Array2<f64>,
    y: &[Label],
    samples: &[usize],
    features: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitChoice> {
    let n = samples.len();
    let mut total = [0usize; 2];
    for &i in samples {
        total[y[i].as_u8() as usize] += 1;
    }
    let mut best: Option<SplitChoice> = None;
    let mut column: Vec<(f64, u8)> = Vec::with_capacity(n);
    for &f in features {
        column.clear();
        column.extend(samples.iter().map(|&i| (x[[i, f]], y[i].as_u8())));
        column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0usize; 2];
        for pos in 1..n {
            left[column[pos - 1].1 as usize] += 1;
            let (lo, hi) = (column[pos - 1].0, column[pos].0);
            if lo >= hi || pos < min_samples_leaf || n - pos < min_samples_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let imp = (pos as f64 * gini2(left) + (n - pos) as f64 * gini2(right)) / n as f64;
            if best.is_none_or(|b| imp < b.impurity - IMPURITY_EPS) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi || !threshold.is_finite() {
                    threshold = lo;
                }
                best = Some(SplitChoice {
                    feature: f,
                    threshold,
                    impurity: imp,
                });
            }
        }
    }
    best
}

/// Grows a tree on `samples` (indices into `x`, repeats allowed for bootstrap
/// draws). Nodes stop splitting when pure, smaller than `min_samples_split`,
/// or when no sampled feature offers a split that lowers impurity.
pub fn train_tree(
    x: &Array2<f64>,
    y: &[Label],
    samples: &[usize],
    cfg: &TreeConfig,
    rng: &mut Rng,
) -> DecisionTree {
    assert!(!samples.is_empty(), "cannot grow a tree on zero samples");
    let d = x.ncols();
    let k = cfg.max_features.resolve(d);
    let mut samples = samples.to_vec();
    let root = grow(x, y, &mut samples, cfg, k, rng);
    DecisionTree { n_features: d, root }
}

fn grow(
    x: &Array2<f64>,
    y: &[Label],
    samples: &mut [usize],
    cfg: &TreeConfig,
    k: usize,
    rng: &mut Rng,
) -> TreeNode {
    let mut counts = [0usize; 2];
    for &i in samples.iter() {
        counts[y[i].as_u8() as usize] += 1;
    }
    let leaf = TreeNode::Leaf {
        label: majority(counts),
        counts,
    };
    let n = samples.len();
    let parent = gini2(counts);
    if parent == 0.0 || n < cfg.min_samples_split || n < 2 * cfg.min_samples_leaf {
        return leaf;
    }
    let d = x.ncols();
    let mut features: Vec<usize> = if k >= d {
        (0..d).collect()
    } else {
        sample(rng, d, k).into_vec()
    };
    features.sort_unstable();

    let Some(split) = best_split(x, y, samples, &features, cfg.min_samples_leaf) else {
        return leaf;
    };
    if split.impurity >= parent - IMPURITY_EPS {
        return leaf;
    }
    let f = split.feature;
    let t = split.threshold;
    // Stable partition keeps the within-child order deterministic.
    let mut left: Vec<usize> = samples.iter().copied().filter(|&i| x[[i, f]] <= t).collect();
    let mut right: Vec<usize> = samples.iter().copied().filter(|&i| x[[i, f]] > t).collect();
    let l = grow(x, y, &mut left, cfg, k, rng);
    let r = grow(x, y, &mut right, cfg, k, rng);
    TreeNode::Split {
        feature: f,
        threshold: t,
        impurity: parent,
        counts,
        left: Box::new(l),
        right: Box::new(r),
    }
}
