//! Linear SVM with L2 penalty and squared hinge loss, fitted in the primal by
//! full-batch gradient descent with Armijo backtracking.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::{check_training_input, ModelError, TrainingMeta};
use crate::corpus::Label;

/// Sufficient-decrease constant of the Armijo condition.
const ARMIJO_C: f64 = 1e-4;
/// Step sizes below this end the line search without a step.
const MIN_STEP: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvcLoss {
    SquaredHinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSvcConfig {
    pub penalty: Penalty,
    pub loss: SvcLoss,
    pub c: f64,
    pub fit_intercept: bool,
    pub tol: f64,
    pub max_iter: usize,
    pub rng_seed: u64,
}

impl Default for LinearSvcConfig {
    fn default() -> Self {
        LinearSvcConfig {
            penalty: Penalty::L2,
            loss: SvcLoss::SquaredHinge,
            c: 1.0,
            fit_intercept: true,
            tol: 1e-4,
            max_iter: 1000,
            rng_seed: 0,
        }
    }
}

impl LinearSvcConfig {
    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.c > 0.0) {
            return Err(ModelError::InvalidConfig("C must be positive".into()));
        }
        if self.max_iter < 1 {
            return Err(ModelError::InvalidConfig("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvcModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Objective value before the first step and after every accepted step.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
}

impl LinearSvcModel {
    pub fn decision(&self, x: ArrayView1<f64>) -> f64 {
        x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.intercept
    }

    /// `sign(w.x + b)`; zero maps to Useful.
    pub fn predict_row(&self, x: ArrayView1<f64>) -> Label {
        if self.decision(x) >= 0.0 {
            Label::Useful
        } else {
            Label::NotUseful
        }
    }
}

/// The squared-hinge objective over `{-1, +1}` targets.
pub struct SquaredHingeObjective<'a> {
    pub x: &'a Array2<f64>,
    pub y: &'a [f64],
    pub c: f64,
    pub fit_intercept: bool,
}

impl SquaredHingeObjective<'_> {
    /// `0.5 * ||w||^2 + C * sum(max(0, 1 - y_i (w.x_i + b))^2)`.
    pub fn value(&self, w: &Array1<f64>, b: f64) -> f64 {
        let margins = self.x.dot(w);
        let hinge: f64 = margins
            .iter()
            .zip(self.y)
            .map(|(m, y)| (1.0 - y * (m + b)).max(0.0).powi(2))
            .sum();
        0.5 * w.dot(w) + self.c * hinge
    }

    /// Gradient with respect to `(w, b)`; the intercept part is zero when
    /// the intercept is not fitted.
    pub fn gradient(&self, w: &Array1<f64>, b: f64) -> (Array1<f64>, f64) {
        let margins = self.x.dot(w);
        let mut coef = Array1::<f64>::zeros(self.y.len());
        for (i, (m, y)) in margins.iter().zip(self.y).enumerate() {
            let slack = 1.0 - y * (m + b);
            if slack > 0.0 {
                coef[i] = -2.0 * self.c * y * slack;
            }
        }
        let gw = w + &self.x.t().dot(&coef);
        let gb = if self.fit_intercept { coef.sum() } else { 0.0 };
        (gw, gb)
    }
}

fn inf_norm(gw: &Array1<f64>, gb: f64) -> f64 {
    gw.iter().fold(gb.abs(), |acc, v| acc.max(v.abs()))
}

pub fn svc_train(
    x: &Array2<f64>,
    y: &[Label],
    cfg: &LinearSvcConfig,
) -> Result<(LinearSvcModel, TrainingMeta), ModelError> {
    cfg.validate()?;
    check_training_input(x, y)?;
    let targets: Vec<f64> = y
        .iter()
        .map(|l| if *l == Label::Useful { 1.0 } else { -1.0 })
        .collect();
    let obj = SquaredHingeObjective {
        x,
        y: &targets,
        c: cfg.c,
        fit_intercept: cfg.fit_intercept,
    };
    let mut meta = TrainingMeta::new(cfg.rng_seed);
    let mut w = Array1::<f64>::zeros(x.ncols());
    let mut b = 0.0;
    let mut f = obj.value(&w, b);
    let mut trace = vec![f];

    for iter in 0..cfg.max_iter {
        let (gw, gb) = obj.gradient(&w, b);
        let gnorm = inf_norm(&gw, gb);
        if gnorm < cfg.tol {
            meta.converged = true;
            break;
        }
        let g_sq = gw.dot(&gw) + gb * gb;
        let mut step = 1.0;
        let accepted = loop {
            let w_new = &w - &(&gw * step);
            let b_new = b - step * gb;
            let f_new = obj.value(&w_new, b_new);
            if f_new <= f - ARMIJO_C * step * g_sq {
                break Some((w_new, b_new, f_new));
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        meta.epochs_run = iter + 1;
        match accepted {
            Some((w_new, b_new, f_new)) => {
                w = w_new;
                b = b_new;
                f = f_new;
                trace.push(f);
            }
            None => {
                meta.warnings
                    .push(format!("line search stalled at iteration {iter}"));
                break;
            }
        }
    }
    if !meta.converged {
        let (gw, gb) = obj.gradient(&w, b);
        if inf_norm(&gw, gb) < cfg.tol {
            meta.converged = true;
        } else {
            meta.warnings.push(format!(
                "NotConverged: gradient inf-norm {:.3e} >= tol after {} iterations",
                inf_norm(&gw, gb),
                meta.epochs_run
            ));
        }
    }
    meta.final_loss = Some(f);
    Ok((
        LinearSvcModel {
            weights: w.to_vec(),
            intercept: b,
            objective_trace: trace,
        },
        meta,
    ))
}
