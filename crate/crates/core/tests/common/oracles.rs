//! Independent reference computations shared by the model tests and the
//! acceptance suite.

use ccq::corpus::Label;
use ccq::models::mlp::Network;
use ccq::models::svc::SquaredHingeObjective;
use ccq::embedding::FeatureMatrix;
use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;

pub fn brute_gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let mut s = 0.0;
    for &c in counts {
        let p = c as f64 / n as f64;
        s += p * p;
    }
    1.0 - s
}

pub fn majority3(v: [Label; 3]) -> Label {
    let useful = v.iter().filter(|l| **l == Label::Useful).count();
    if useful >= 2 {
        Label::Useful
    } else {
        Label::NotUseful
    }
}

pub fn flat_params(net: &Network) -> Vec<f64> {
    net.layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
        .collect()
}

pub fn set_param(net: &mut Network, mut k: usize, v: f64) {
    for l in &mut net.layers {
        if k < l.weights.len() {
            l.weights[k] = v;
            return;
        }
        k -= l.weights.len();
        if k < l.biases.len() {
            l.biases[k] = v;
            return;
        }
        k -= l.biases.len();
    }
    panic!("index out of range");
}

/// Largest relative difference between analytic gradients and central
/// differences with step `h`, on a random [n_in, 20, 10, 1] network.
pub fn mlp_gradient_error(seed: u64, n_in: usize, h: f64) -> f64 {
    let mut rng = super::rng(seed);
    let mut net = Network::init(&[n_in, 20, 10, 1], &mut rng);
    // Nonzero biases so that every code path is exercised.
    for l in &mut net.layers {
        for b in &mut l.biases {
            *b = rng.gen_range(-0.1..0.1);
        }
    }
    let x = Array2::from_shape_fn((5, n_in), |_| rng.gen_range(-1.0..1.0));
    let y = [1.0, 0.0, 1.0, 1.0, 0.0];
    let alpha = 1e-4;
    let (_, grads) = net.loss_and_gradient(x.view(), &y, alpha);
    let analytic: Vec<f64> = grads
        .weights
        .iter()
        .zip(&grads.biases)
        .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
        .collect();
    let base = flat_params(&net);
    let mut max_rel: f64 = 0.0;
    for k in 0..base.len() {
        let mut plus = net.clone();
        set_param(&mut plus, k, base[k] + h);
        let mut minus = net.clone();
        set_param(&mut minus, k, base[k] - h);
        let fd = (plus.loss_and_gradient(x.view(), &y, alpha).0
            - minus.loss_and_gradient(x.view(), &y, alpha).0)
            / (2.0 * h);
        // Floor keeps round-off on vanishing gradients from dominating.
        let rel = (analytic[k] - fd).abs() / analytic[k].abs().max(fd.abs()).max(1e-6);
        max_rel = max_rel.max(rel);
    }
    max_rel
}

/// 20 points separable along the first axis, margin at least 0.5.
pub fn separable_20(seed: u64) -> (Array2<f64>, Vec<Label>) {
    let mut rng = super::rng(seed);
    let mut x = Array2::zeros((20, 2));
    let mut y = Vec::new();
    for i in 0..20 {
        let label = if i % 2 == 0 { Label::Useful } else { Label::NotUseful };
        let s = if label == Label::Useful { 1.0 } else { -1.0 };
        x[[i, 0]] = s * rng.gen_range(0.5..1.5);
        x[[i, 1]] = rng.gen_range(-1.0..1.0);
        y.push(label);
    }
    (x, y)
}

pub fn signed_targets(y: &[Label]) -> Vec<f64> {
    y.iter().map(|l| if *l == Label::Useful { 1.0 } else { -1.0 }).collect()
}

/// Infinity norm of the squared-hinge gradient at `(w, b)` with C = 1.
pub fn svc_gradient_inf_norm(x: &Array2<f64>, y: &[Label], w: &[f64], b: f64) -> f64 {
    let targets = signed_targets(y);
    let obj = SquaredHingeObjective { x, y: &targets, c: 1.0, fit_intercept: true };
    let (gw, gb) = obj.gradient(&Array1::from(w.to_vec()), b);
    gw.iter().fold(gb.abs(), |a, v| a.max(v.abs()))
}

pub fn dist2(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Brute-force k nearest minority neighbours of each minority row.
pub fn knn_oracle(rows: &[Array1<f64>], k: usize) -> Vec<Vec<usize>> {
    (0..rows.len())
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..rows.len())
                .filter(|&j| j != i)
                .map(|j| (dist2(rows[i].view(), rows[j].view()), j))
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Smallest distance from `s` to any segment a -> b with b among a's
/// nearest neighbours.
pub fn segment_residual(s: ArrayView1<f64>, rows: &[Array1<f64>], knn: &[Vec<usize>]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, nbrs) in knn.iter().enumerate() {
        for &j in nbrs {
            let a = &rows[i];
            let ab = &rows[j] - a;
            let as_ = &s - a;
            let denom = ab.dot(&ab);
            let u = if denom == 0.0 { 0.0 } else { (as_.dot(&ab) / denom).clamp(0.0, 1.0) };
            let p = a + &(&ab * u);
            best = best.min(dist2(p.view(), s).sqrt());
        }
    }
    best
}

pub fn minority_rows(m: &FeatureMatrix, label: Label) -> Vec<Array1<f64>> {
    (0..m.n_rows())
        .filter(|&i| m.labels[i] == label)
        .map(|i| m.x.row(i).to_owned())
        .collect()
}
