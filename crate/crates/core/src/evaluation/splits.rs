//! Repeated stratified k-fold splitting.

use log::warn;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::corpus::Label;
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub repeat: usize,
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub n_folds: usize,
    pub n_repeats: usize,
    pub rng_seed: u64,
    /// Ordered by `(repeat, fold)`.
    pub folds: Vec<Fold>,
}

impl SplitPlan {
    /// Seed for the fold at `(repeat, fold)`: `rng_seed + repeat * n_folds + fold`.
    pub fn fold_seed(&self, repeat: usize, fold: usize) -> u64 {
        self.rng_seed
            .wrapping_add((repeat * self.n_folds + fold) as u64)
    }
}

/// Builds `n_repeats` stratified k-fold partitions. For each repeat the
/// members of each class (NotUseful first) are shuffled with a stream seeded
/// by `rng_seed + repeat` and dealt round-robin into the folds; dealing
/// continues across classes, so fold sizes differ by at most one.
pub fn rskf_splits(
    labels: &[Label],
    n_folds: usize,
    n_repeats: usize,
    rng_seed: u64,
) -> Result<SplitPlan, EvaluationError> {
    if n_folds < 2 || n_repeats < 1 {
        return Err(EvaluationError::InvalidSplit(format!(
            "need n_folds >= 2 and n_repeats >= 1 (got {n_folds}, {n_repeats})"
        )));
    }
    let classes = [Label::NotUseful, Label::Useful];
    let members: Vec<Vec<usize>> = classes
        .iter()
        .map(|c| (0..labels.len()).filter(|&i| labels[i] == *c).collect())
        .collect();
    // Only the largest class must fill every fold; smaller classes leave
    // some folds without members of that class.
    let (largest, size) = classes
        .iter()
        .zip(&members)
        .map(|(c, m)| (*c, m.len()))
        .max_by_key(|(_, n)| *n)
        .expect("two classes");
    if size < n_folds {
        return Err(EvaluationError::TooFewSamples {
            class: largest,
            count: size,
            n_folds,
        });
    }
    for (c, m) in classes.iter().zip(&members) {
        if !m.is_empty() && m.len() < n_folds {
            warn!("class {c} has {} members, fewer than {n_folds} folds", m.len());
        }
    }

    let mut folds = Vec::with_capacity(n_folds * n_repeats);
    for repeat in 0..n_repeats {
        let mut rng = seeded(rng_seed.wrapping_add(repeat as u64));
        let mut assignment = vec![0usize; labels.len()];
        let mut next = 0usize;
        for m in &members {
            let mut shuffled = m.clone();
            shuffled.shuffle(&mut rng);
            for i in shuffled {
                assignment[i] = next;
                next = (next + 1) % n_folds;
            }
        }
        for fold in 0..n_folds {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| assignment[i] == fold);
            folds.push(Fold {
                repeat,
                fold,
                train,
                test,
            });
        }
    }
    Ok(SplitPlan {
        n_folds,
        n_repeats,
        rng_seed,
        folds,
    })
}
