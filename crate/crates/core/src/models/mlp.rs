//! Feed-forward network with ReLU hidden layers and a single sigmoid output,
//! trained with minibatch Adam on L2-penalised binary cross-entropy.

use log::warn;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{check_training_input, ModelError, TrainingMeta};
use crate::corpus::Label;
use crate::rng::{seeded, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_sizes: Vec<usize>,
    pub activation: Activation,
    pub solver: Solver,
    pub alpha: f64,
    pub learning_rate: f64,
    pub max_iter: usize,
    pub shuffle: bool,
    pub tol: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Upper bound on the minibatch size; the effective size is `min(batch_size, n)`.
    pub batch_size: usize,
    pub n_iter_no_change: usize,
    /// Only meaningful for SGD; accepted and ignored under Adam.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum: Option<f64>,
    /// Only meaningful for SGD; accepted and ignored under Adam.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nesterovs_momentum: Option<bool>,
    pub rng_seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_sizes: vec![20, 10],
            activation: Activation::Relu,
            solver: Solver::Adam,
            alpha: 1e-4,
            learning_rate: 1e-3,
            max_iter: 200,
            shuffle: true,
            tol: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 200,
            n_iter_no_change: 10,
            momentum: Some(0.9),
            nesterovs_momentum: Some(true),
            rng_seed: 0,
        }
    }
}

impl MlpConfig {
    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.hidden_sizes.contains(&0) {
            return bad("hidden sizes must be >= 1");
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad("beta1 and beta2 must lie in (0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.learning_rate > 0.0) || self.alpha < 0.0 {
            return bad("learning_rate must be positive and alpha non-negative");
        }
        if self.batch_size == 0 || self.max_iter == 0 {
            return bad("batch_size and max_iter must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_in x n_out`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    fn w(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.n_in, self.n_out), &self.weights).expect("shape")
    }
}

/// Parameter gradients, laid out like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<DenseLayer>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit against a 0/1 target, computed without
/// overflow.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

impl Network {
    /// He-uniform weights `U(-sqrt(6/n_in), sqrt(6/n_in))`, zero biases.
    pub fn init(sizes: &[usize], rng: &mut Rng) -> Network {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let limit = (6.0 / n_in as f64).sqrt();
                DenseLayer {
                    n_in,
                    n_out,
                    weights: (0..n_in * n_out).map(|_| rng.gen_range(-limit..limit)).collect(),
                    biases: vec![0.0; n_out],
                }
            })
            .collect();
        Network { layers }
    }

    /// Pre-activations and activations of every layer; the last entry of the
    /// activations is the output logit column.
    fn forward(&self, x: ArrayView2<f64>) -> (Vec<Array2<f64>>, Vec<Array2<f64>>) {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut acts = vec![x.to_owned()];
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let b = ArrayView1::from(layer.biases.as_slice());
            let z = acts[l].dot(&layer.w()) + b;
            let a = if l == last { z.clone() } else { z.mapv(|v| v.max(0.0)) };
            pre.push(z);
            acts.push(a);
        }
        (pre, acts)
    }

    pub fn logits(&self, x: ArrayView2<f64>) -> Array1<f64> {
        let (_, acts) = self.forward(x);
        acts.last().expect("output").column(0).to_owned()
    }

    /// Mean cross-entropy over the batch plus `alpha / (2 * batch) * ||W||^2`
    /// (biases unpenalised), and its exact gradient.
    pub fn loss_and_gradient(
        &self,
        x: ArrayView2<f64>,
        y: &[f64],
        alpha: f64,
    ) -> (f64, Gradients) {
        let b = x.nrows() as f64;
        let (pre, acts) = self.forward(x);
        let out = acts.last().expect("output");
        let mut loss = 0.0;
        let mut delta = Array2::<f64>::zeros((x.nrows(), 1));
        for i in 0..x.nrows() {
            let z = out[[i, 0]];
            loss += bce_from_logit(z, y[i]);
            delta[[i, 0]] = (sigmoid(z) - y[i]) / b;
        }
        loss /= b;
        let sq: f64 = self
            .layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .map(|w| w * w)
            .sum();
        loss += 0.5 * alpha * sq / b;

        let n = self.layers.len();
        let mut gw = vec![Vec::new(); n];
        let mut gb = vec![Vec::new(); n];
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let w = layer.w();
            let mut dw = acts[l].t().dot(&delta);
            dw.scaled_add(alpha / b, &w);
            gb[l] = delta.sum_axis(Axis(0)).to_vec();
            gw[l] = dw.iter().copied().collect();
            if l > 0 {
                let mut d_prev = delta.dot(&w.t());
                d_prev.zip_mut_with(&pre[l - 1], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = d_prev;
            }
        }
        (loss, Gradients { weights: gw, biases: gb })
    }
}

/// Bias-corrected Adam.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            epsilon,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    /// Applies one step `p -= lr * m_hat / (sqrt(v_hat) + eps)`. Parameters
    /// and gradients are visited as a flat sequence in a fixed order.
    pub fn step<'a>(
        &mut self,
        params: impl Iterator<Item = &'a mut f64>,
        grads: impl Iterator<Item = f64>,
    ) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (k, (p, g)) in params.zip(grads).enumerate() {
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

fn params_mut(net: &mut Network) -> impl Iterator<Item = &mut f64> {
    net.layers
        .iter_mut()
        .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
}

fn grads_flat(g: &Gradients) -> impl Iterator<Item = f64> + '_ {
    g.weights
        .iter()
        .zip(&g.biases)
        .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub network: Network,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_curve: Vec<f64>,
}

impl MlpModel {
    /// Useful iff the sigmoid output is at least 0.5.
    pub fn predict_row(&self, x: ArrayView1<f64>) -> Label {
        let row = x.insert_axis(Axis(0));
        let z = self.network.logits(row)[0];
        if sigmoid(z) >= 0.5 {
            Label::Useful
        } else {
            Label::NotUseful
        }
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array1<f64> {
        self.network.logits(x).mapv(sigmoid)
    }
}

pub fn mlp_train(
    x: &Array2<f64>,
    y: &[Label],
    cfg: &MlpConfig,
) -> Result<(MlpModel, TrainingMeta), ModelError> {
    cfg.validate()?;
    check_training_input(x, y)?;
    let mut meta = TrainingMeta::new(cfg.rng_seed);
    if cfg.momentum.is_some() || cfg.nesterovs_momentum.is_some() {
        let msg = "momentum/nesterovs_momentum apply to SGD only; ignored under adam";
        warn!("{msg}");
        meta.warnings.push(msg.to_string());
    }

    let n = x.nrows();
    let mut rng = seeded(cfg.rng_seed);
    let mut sizes = vec![x.ncols()];
    sizes.extend(&cfg.hidden_sizes);
    sizes.push(1);
    let mut net = Network::init(&sizes, &mut rng);
    let n_params: usize = net.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum();
    let mut adam = Adam::new(n_params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);

    let targets: Vec<f64> = y.iter().map(|l| l.as_u8() as f64).collect();
    let batch = cfg.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut best_loss = f64::INFINITY;
    let mut no_improvement = 0;
    let mut curve = Vec::new();

    for epoch in 0..cfg.max_iter {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let xb = x.select(Axis(0), chunk);
            let yb: Vec<f64> = chunk.iter().map(|&i| targets[i]).collect();
            let (loss, grads) = net.loss_and_gradient(xb.view(), &yb, cfg.alpha);
            if !loss.is_finite() {
                return Err(ModelError::NonFiniteLoss { epoch });
            }
            adam.step(params_mut(&mut net), grads_flat(&grads));
            total += loss * chunk.len() as f64;
        }
        let epoch_loss = total / n as f64;
        curve.push(epoch_loss);
        meta.epochs_run = epoch + 1;

        if epoch_loss > best_loss - cfg.tol {
            no_improvement += 1;
        } else {
            no_improvement = 0;
        }
        if epoch_loss < best_loss {
            best_loss = epoch_loss;
        }
        if no_improvement >= cfg.n_iter_no_change {
            meta.converged = true;
            break;
        }
    }
    meta.final_loss = curve.last().copied();
    if !meta.converged {
        meta.warnings
            .push(format!("reached max_iter = {} before the loss plateaued", cfg.max_iter));
    }
    Ok((
        MlpModel {
            network: net,
            loss_curve: curve,
        },
        meta,
    ))
}
