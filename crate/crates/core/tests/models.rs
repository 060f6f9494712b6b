mod common;

use ccq::corpus::Label;
use ccq::models::mlp::Network;
use ccq::models::tree::{best_split, SplitChoice};
use ccq::models::*;
use ndarray::{array, Array2};
use common::oracles::{
    self, brute_gini, flat_params, majority3, mlp_gradient_error, signed_targets,
    svc_gradient_inf_norm,
};
use rand::Rng;

use Label::*;

#[test]
fn gini_matches_formula_on_random_counts() {
    let mut rng = common::rng(1);
    for _ in 0..200 {
        let counts = [rng.gen_range(0..50usize), rng.gen_range(1..50usize)];
        let g = gini_impurity(&counts).unwrap();
        assert!((g - brute_gini(&counts)).abs() < 1e-12);
    }
}

// Independent tree builder: every (feature, midpoint) pair is scored by
// recounting labels directly.
enum OracleNode {
    Leaf(Label),
    Split(usize, f64, Box<OracleNode>, Box<OracleNode>),
}

fn oracle_tree(x: &Array2<f64>, y: &[Label], idx: &[usize]) -> OracleNode {
    let count = |s: &[usize]| {
        let u = s.iter().filter(|&&i| y[i] == Useful).count();
        [s.len() - u, u]
    };
    let c = count(idx);
    let leaf = OracleNode::Leaf(if c[1] > c[0] { Useful } else { NotUseful });
    let parent = brute_gini(&c);
    if parent == 0.0 || idx.len() < 2 {
        return leaf;
    }
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..x.ncols() {
        let mut vals: Vec<f64> = idx.iter().map(|&i| x[[i, f]]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let l: Vec<usize> = idx.iter().copied().filter(|&i| x[[i, f]] <= t).collect();
            let r: Vec<usize> = idx.iter().copied().filter(|&i| x[[i, f]] > t).collect();
            let imp = (l.len() as f64 * brute_gini(&count(&l)) + r.len() as f64 * brute_gini(&count(&r)))
                / idx.len() as f64;
            if best.is_none_or(|b| imp < b.0 - 1e-12) {
                best = Some((imp, f, t));
            }
        }
    }
    match best {
        Some((imp, f, t)) if imp < parent - 1e-12 => {
            let l: Vec<usize> = idx.iter().copied().filter(|&i| x[[i, f]] <= t).collect();
            let r: Vec<usize> = idx.iter().copied().filter(|&i| x[[i, f]] > t).collect();
            OracleNode::Split(f, t, Box::new(oracle_tree(x, y, &l)), Box::new(oracle_tree(x, y, &r)))
        }
        _ => leaf,
    }
}

fn oracle_predict(n: &OracleNode, p: &[f64]) -> Label {
    match n {
        OracleNode::Leaf(l) => *l,
        OracleNode::Split(f, t, l, r) => oracle_predict(if p[*f] <= *t { l } else { r }, p),
    }
}

#[test]
fn tree_matches_exhaustive_split_oracle() {
    let x = array![
        [1.0, 7.0],
        [2.0, 3.0],
        [3.0, 8.0],
        [4.0, 1.0],
        [5.0, 6.0],
        [6.0, 2.0],
        [7.0, 9.0],
        [8.0, 4.0]
    ];
    let y = [NotUseful, NotUseful, Useful, NotUseful, Useful, NotUseful, Useful, Useful];
    let idx: Vec<usize> = (0..8).collect();
    let cfg = TreeConfig { max_features: MaxFeatures::All, ..Default::default() };
    let tree = train_tree(&x, &y, &idx, &cfg, &mut ccq::rng::seeded(0));
    let oracle = oracle_tree(&x, &y, &idx);
    for (i, label) in y.iter().enumerate() {
        assert_eq!(tree.predict_row(x.row(i)), *label);
    }
    for a in 0..=18 {
        for b in 0..=20 {
            let p = [a as f64 * 0.5, b as f64 * 0.5];
            assert_eq!(
                tree.predict_row(ndarray::ArrayView1::from(&p[..])),
                oracle_predict(&oracle, &p),
                "at {p:?}"
            );
        }
    }
    // Root split agrees with the brute force choice.
    let root = best_split(&x, &y, &idx, &[0, 1], 1).unwrap();
    match oracle {
        OracleNode::Split(f, t, ..) => {
            assert_eq!((root.feature, root.threshold), (f, t));
        }
        OracleNode::Leaf(_) => panic!("oracle did not split"),
    }
    let _: SplitChoice = root;
}

#[test]
fn tree_splits_never_increase_impurity() {
    let data = common::gaussian_blobs(200, 4, 1.0, 0.4, 5);
    let idx: Vec<usize> = (0..200).collect();
    let tree = train_tree(&data.x, &data.labels, &idx, &TreeConfig::default(), &mut ccq::rng::seeded(2));
    fn walk(n: &TreeNode) {
        if let TreeNode::Split { left, right, counts, .. } = n {
            let parent = gini_impurity(counts).unwrap();
            let (lc, rc) = (left.counts(), right.counts());
            let nl = (lc[0] + lc[1]) as f64;
            let nr = (rc[0] + rc[1]) as f64;
            let child = (nl * gini_impurity(&lc).unwrap() + nr * gini_impurity(&rc).unwrap()) / (nl + nr);
            assert!(child <= parent + 1e-12);
            assert!(nl >= 1.0 && nr >= 1.0);
            walk(left);
            walk(right);
        }
    }
    walk(&tree.root);
}

#[test]
fn forest_fits_blobs_and_is_deterministic() {
    let data = common::gaussian_blobs(100, 2, 6.0, 0.5, 17);
    let cfg = RandomForestConfig { rng_seed: 4, ..Default::default() };
    let a = rf_train(&data.x, &data.labels, &cfg).unwrap();
    let correct = data
        .x
        .rows()
        .into_iter()
        .zip(&data.labels)
        .filter(|(r, l)| a.predict_row(*r) == **l)
        .count();
    assert!(correct as f64 / 100.0 >= 0.99, "training accuracy {correct}/100");
    let b = rf_train(&data.x, &data.labels, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.trees.len(), 100);
}

#[test]
fn mlp_gradient_matches_central_differences() {
    let max_rel = mlp_gradient_error(3, 6, 1e-6);
    assert!(max_rel < 1e-4, "max relative error {max_rel}");
}

#[test]
fn mlp_small_step_decreases_loss() {
    let mut rng = common::rng(8);
    let net = Network::init(&[4, 20, 10, 1], &mut rng);
    let x = Array2::from_shape_fn((16, 4), |_| rng.gen_range(-1.0..1.0));
    let y: Vec<f64> = (0..16).map(|i| (i % 2) as f64).collect();
    let (before, grads) = net.loss_and_gradient(x.view(), &y, 0.0);
    let mut stepped = net.clone();
    let mut adam = Adam::new(flat_params(&net).len(), 1e-5, 0.9, 0.999, 1e-8);
    let g: Vec<f64> = grads
        .weights
        .iter()
        .zip(&grads.biases)
        .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
        .collect();
    adam.step(
        stepped.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut())),
        g.into_iter(),
    );
    let (after, _) = stepped.loss_and_gradient(x.view(), &y, 0.0);
    assert!(after < before, "{after} !< {before}");
}

#[test]
fn mlp_is_deterministic() {
    let data = common::gaussian_blobs(120, 5, 3.0, 0.5, 2);
    let cfg = MlpConfig { rng_seed: 5, max_iter: 30, ..Default::default() };
    let (a, _) = mlp_train(&data.x, &data.labels, &cfg).unwrap();
    let (b, _) = mlp_train(&data.x, &data.labels, &cfg).unwrap();
    assert_eq!(a, b);
}

fn separable_20() -> (Array2<f64>, Vec<Label>) {
    oracles::separable_20(21)
}

#[test]
fn svc_monotone_and_converged_on_separable_set() {
    let (x, y) = separable_20();
    let (m, meta) = svc_train(&x, &y, &LinearSvcConfig::default()).unwrap();
    assert!(meta.converged, "{:?}", meta.warnings);
    assert!(m.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    let inf = svc_gradient_inf_norm(&x, &y, &m.weights, m.intercept);
    assert!(inf < 1e-4, "gradient inf-norm {inf}");
    eprintln!("svc iterations: {}", meta.epochs_run);
}

#[test]
fn svc_agrees_with_grid_search_oracle() {
    let (x, y) = separable_20();
    let targets = signed_targets(&y);
    let objective = |w0: f64, w1: f64, b: f64| {
        let mut f = 0.5 * (w0 * w0 + w1 * w1);
        for i in 0..20 {
            let m = targets[i] * (w0 * x[[i, 0]] + w1 * x[[i, 1]] + b);
            f += (1.0 - m).max(0.0).powi(2);
        }
        f
    };
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    let steps = 80;
    for a in 0..=steps {
        for c in 0..=steps {
            for e in 0..=40 {
                let w0 = -4.0 + 8.0 * a as f64 / steps as f64;
                let w1 = -4.0 + 8.0 * c as f64 / steps as f64;
                let b = -2.0 + 4.0 * e as f64 / 40.0;
                let f = objective(w0, w1, b);
                if f < best.0 {
                    best = (f, w0, w1, b);
                }
            }
        }
    }
    let (m, _) = svc_train(&x, &y, &LinearSvcConfig::default()).unwrap();
    assert!(m.objective_trace.last().unwrap() <= &(best.0 + 1e-9));
    for i in 0..20 {
        let grid = if best.1 * x[[i, 0]] + best.2 * x[[i, 1]] + best.3 >= 0.0 { Useful } else { NotUseful };
        assert_eq!(m.predict_row(x.row(i)), grid, "row {i}");
    }
}

#[test]
fn vote_equals_enumerated_majority() {
    let all = [NotUseful, Useful];
    for a in all {
        for b in all {
            for c in all {
                assert_eq!(vote_predict([a, b, c]), majority3([a, b, c]));
            }
        }
    }
    let mut rng = common::rng(4);
    for _ in 0..1000 {
        let v: [Label; 3] = std::array::from_fn(|_| if rng.gen_bool(0.5) { Useful } else { NotUseful });
        assert_eq!(vote_predict(v), majority3(v));
    }
}

#[test]
fn voting_returns_unanimous_label() {
    let data = common::gaussian_blobs(150, 3, 4.0, 0.5, 9);
    let cfg = VotingConfig {
        random_forest: RandomForestConfig { n_estimators: 15, ..Default::default() },
        ..Default::default()
    }
    .with_seed(3);
    let (m, _) = voting_train(&data.x, &data.labels, &cfg).unwrap();
    let mut rng = common::rng(6);
    let mut agreed = 0;
    for _ in 0..300 {
        let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let row = ndarray::ArrayView1::from(&p[..]);
        let v = m.votes(row);
        if v[0] == v[1] && v[1] == v[2] {
            agreed += 1;
            assert_eq!(m.predict_row(row), v[0]);
        }
    }
    assert!(agreed > 0);
}
