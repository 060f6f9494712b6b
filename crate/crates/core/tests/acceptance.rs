//! Acceptance gate. Runs every primary criterion, prints one PASS/FAIL line
//! for each (with the measured values underneath) and exits non-zero if any
//! criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use approx::abs_diff_eq;
use ccq::augmentation::qc_filter;
use ccq::balance::{is_synthetic, smote, SmoteConfig, SmoteMode};
use ccq::cli::{cmd_compare, cmd_run, RunOverrides, Variant};
use ccq::corpus::{parse_dataset, Dataset, Format, Label, Provenance};
use ccq::embedding::FeatureMatrix;
use ccq::evaluation::{fold_partitions, rskf_splits, run_experiment, EvaluationReport};
use ccq::models::{
    gini_impurity, svc_train, vote_predict, Adam, LinearSvcConfig, MlpConfig, ModelConfig,
    RandomForestConfig, VotingConfig,
};
use common::oracles::{
    brute_gini, knn_oracle, majority3, minority_rows, mlp_gradient_error, segment_residual,
    separable_20, svc_gradient_inf_norm,
};
use common::{gaussian_blobs, qc_batch, rng};
use rand::Rng;

const TABLE_HEADER_LINE: &str = "Model | Macro-F1 (U) | Precision | Recall | Accuracy | Macro-F1 (NU) | Precision | Recall | Accuracy";

#[derive(Default)]
struct Checks {
    items: Vec<(bool, String)>,
}

impl Checks {
    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        self.items.push((ok, detail.into()));
    }
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn(&mut Checks),
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn numeric_oracles(c: &mut Checks) {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let counts = [r.gen_range(0..50usize), r.gen_range(1..50usize)];
        worst = worst.max((gini_impurity(&counts).unwrap() - brute_gini(&counts)).abs());
    }
    c.check(worst < 1e-12, format!("gini vs brute force on 200 count pairs: max |diff| {worst:.1e}"));

    let grad_err = (0..3).map(|s| mlp_gradient_error(100 + s, 6, 1e-6)).fold(0.0, f64::max);
    c.check(grad_err < 1e-4, format!("MLP gradient vs central differences (h=1e-6): max rel err {grad_err:.2e} < 1e-4"));

    let grads = [0.1, -2.5, 3e-4, 0.0];
    let mut adam = Adam::new(grads.len(), 1e-3, 0.9, 0.999, 1e-8);
    let mut params = [0.5, -1.0, 2.0, 0.0];
    let start = params;
    adam.step(params.iter_mut(), grads.iter().copied());
    let mut adam_err: f64 = 0.0;
    for i in 0..grads.len() {
        // After one step the bias-corrected moments are g and g^2.
        let expected = start[i] - 1e-3 * grads[i] / (grads[i].abs() + 1e-8);
        adam_err = adam_err.max((params[i] - expected).abs());
    }
    c.check(
        abs_diff_eq!(adam_err, 0.0, epsilon = 1e-9),
        format!("first Adam step vs closed form: max |diff| {adam_err:.1e} < 1e-9"),
    );

    for seed in [21, 22, 23] {
        let (x, y) = separable_20(seed);
        let (m, meta) = svc_train(&x, &y, &LinearSvcConfig::default()).unwrap();
        let monotone = m.objective_trace.windows(2).all(|w| w[1] <= w[0]);
        let inf = svc_gradient_inf_norm(&x, &y, &m.weights, m.intercept);
        c.check(
            monotone && inf < 1e-4,
            format!(
                "SVC on separable set {seed}: objective non-increasing={monotone}, final gradient inf-norm {inf:.1e} < 1e-4 ({} iterations)",
                meta.epochs_run
            ),
        );
    }

    let all = [Label::NotUseful, Label::Useful];
    let mut agree = 0;
    for a in all {
        for b in all {
            for d in all {
                agree += usize::from(vote_predict([a, b, d]) == majority3([a, b, d]));
            }
        }
    }
    c.check(agree == 8, format!("hard vote equals majority on {agree}/8 patterns"));
}

fn split_balance(c: &mut Checks) {
    let mut bad = Vec::new();
    for case in 0..50u64 {
        let mut r = rng(case);
        let n = r.gen_range(20..300);
        let p = r.gen_range(0.05..0.95);
        let mut labels: Vec<Label> =
            (0..n).map(|_| if r.gen_bool(p) { Label::Useful } else { Label::NotUseful }).collect();
        for i in 0..10 {
            labels[i] = Label::Useful;
            labels[n - 1 - i] = Label::NotUseful;
        }
        let k = 2 + (case as usize % 9);
        let plan = rskf_splits(&labels, k, 3, case).unwrap();
        for rep in 0..3 {
            let mut covered = vec![0usize; n];
            for f in plan.folds.iter().filter(|f| f.repeat == rep) {
                let train: std::collections::HashSet<_> = f.train.iter().collect();
                if f.test.iter().any(|i| train.contains(i)) || f.train.len() + f.test.len() != n {
                    bad.push(format!("case {case}: fold not a partition"));
                }
                f.test.iter().for_each(|&i| covered[i] += 1);
                for class in all_labels() {
                    let total = labels.iter().filter(|l| **l == class).count() as f64;
                    let got = f.test.iter().filter(|&&i| labels[i] == class).count() as f64;
                    if (got - total / k as f64).abs() >= 1.0 + 1e-9 {
                        bad.push(format!("case {case}: {class} count {got} in fold"));
                    }
                }
            }
            if covered.iter().any(|&v| v != 1) {
                bad.push(format!("case {case}: repeat {rep} does not cover every row once"));
            }
        }
    }
    c.check(
        bad.is_empty(),
        format!("RSKF stratification (within 1), disjointness, coverage on 50 label vectors: {} violations", bad.len()),
    );

    let m = gaussian_blobs(300, 8, 2.0, 0.1, 11);
    let cfg = SmoteConfig { k_neighbors: 5, target_ratio: 1.0, rng_seed: 3 };
    let out = smote(&m, &cfg).unwrap();
    let rows = minority_rows(&m, Label::NotUseful);
    let knn = knn_oracle(&rows, 5);
    let residual = (m.n_rows()..out.n_rows())
        .map(|i| segment_residual(out.x.row(i), &rows, &knn))
        .fold(0.0, f64::max);
    c.check(residual < 1e-9, format!("SMOTE segment membership: max residual {residual:.1e} < 1e-9"));
    let (nu, u) = (out.count(Label::NotUseful), out.count(Label::Useful));
    c.check(nu == u, format!("SMOTE target_ratio 1.0 counts: {nu} NotUseful / {u} Useful"));
    let again = smote(&m, &cfg).unwrap();
    let same = out.x.iter().zip(again.x.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
    c.check(same, "SMOTE bitwise reproducible under a fixed seed");

    let plan = rskf_splits(&m.labels, 10, 3, 42).unwrap();
    let mut leaked = 0;
    for f in &plan.folds {
        let (_, test) =
            fold_partitions(&m, f, &SmoteConfig::default(), SmoteMode::InFold, plan.fold_seed(f.repeat, f.fold))
                .unwrap();
        leaked += test.ids.iter().filter(|id| is_synthetic(id)).count();
    }
    c.check(leaked == 0, format!("in-fold SMOTE: {leaked} synthetic ids in 30 test partitions"));
}

fn all_labels() -> [Label; 2] {
    [Label::NotUseful, Label::Useful]
}

fn evaluate(m: &FeatureMatrix, model: ModelConfig, mode: SmoteMode) -> EvaluationReport {
    let plan = rskf_splits(&m.labels, 10, 3, 42).unwrap();
    run_experiment(m, &model, &plan, &SmoteConfig::default(), mode).unwrap()
}

fn synthetic_end_to_end(c: &mut Checks) {
    // 600 x 16, class centers 2 sigma apart, 10% NotUseful; raw features.
    let m = gaussian_blobs(600, 16, 2.0, 0.1, 7);
    let rf = evaluate(&m, ModelConfig::RandomForest(RandomForestConfig::default()), SmoteMode::Off);
    let nn = evaluate(&m, ModelConfig::Mlp(MlpConfig::default()), SmoteMode::Off);
    let svc = evaluate(&m, ModelConfig::LinearSvc(LinearSvcConfig::default()), SmoteMode::Off);
    let vc = evaluate(&m, ModelConfig::Voting(VotingConfig::default()), SmoteMode::Off);
    let svc_smote = evaluate(&m, ModelConfig::LinearSvc(LinearSvcConfig::default()), SmoteMode::InFold);

    c.check(nn.accuracy >= 90.0, format!("NN mean CV accuracy {:.3}% >= 90%", nn.accuracy));
    c.check(rf.accuracy >= 90.0, format!("RF mean CV accuracy {:.3}% >= 90%", rf.accuracy));
    let gain = svc_smote.not_useful.recall - svc.not_useful.recall;
    c.check(
        gain >= 10.0,
        format!(
            "Linear SVC NotUseful recall {:.3}% -> {:.3}% with in-fold SMOTE (gain {gain:.3} pp >= 10)",
            svc.not_useful.recall, svc_smote.not_useful.recall
        ),
    );
    let min = rf.accuracy.min(nn.accuracy).min(svc.accuracy);
    c.check(
        vc.accuracy >= min,
        format!("Voting accuracy {:.3}% >= min of RF/NN/SVC {min:.3}%", vc.accuracy),
    );
}

fn small_run(out_dir: &Path, jobs: usize, models: &str) -> ccq::cli::RunConfig {
    RunOverrides {
        seed_path: Some(fixture("seed_small.csv")),
        generated_path: Some(fixture("generated_small.jsonl")),
        variant: Some(Variant::SeedLlm),
        dimension: Some(64),
        folds: Some(5),
        repeats: Some(2),
        models: Some(models.parse().unwrap()),
        out_dir: Some(out_dir.to_path_buf()),
        jobs: Some(jobs),
        ..Default::default()
    }
    .resolve()
    .unwrap()
}

fn report_fidelity(c: &mut Checks) {
    let dir = tempfile::tempdir().unwrap();
    let mut stdout = Vec::new();
    cmd_run(&small_run(dir.path(), 0, "all"), &mut stdout).unwrap();
    let table = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    let header = table.lines().next().unwrap_or_default();
    c.check(header == TABLE_HEADER_LINE, format!("cmd_run table header: {header:?}"));
    let rows: Vec<&str> = table.lines().skip(2).map(|l| l.split(" | ").next().unwrap()).collect();
    let cols_ok = table.lines().skip(2).all(|l| l.split(" | ").count() == 9);
    c.check(rows == ["RF", "VC", "NN"] && cols_ok, format!("rows {rows:?}, 9 cells each: {cols_ok}"));

    let mut sink = Vec::new();
    let cmp = cmd_compare(
        &fixture("published_seed.json"),
        &fixture("published_seed_llm.json"),
        None,
        &mut sink,
    )
    .unwrap();
    let d = cmp.overall_mean_delta;
    c.check(
        d > 0.0 && (d - 1.5).abs() <= 0.8,
        format!(
            "cmd_compare on the published tables: overall mean delta {d:+.3} pp, expected +1.5 +/- 0.8 (summed accuracy delta {:+.3} pp)",
            cmp.summed_accuracy_delta
        ),
    );
}

fn augmentation_qc(c: &mut Checks) {
    let pairs = parse_dataset(
        std::fs::File::open(fixture("qc_ten_rows.jsonl")).unwrap(),
        Format::Jsonl,
        Provenance::LlmGenerated,
    )
    .unwrap()
    .pairs;
    let empty = Dataset { pairs: vec![], provenance: Provenance::Seed };
    let r = qc_filter(&pairs, &empty);
    let counts = (r.counts.duplicate, r.counts.incomplete, r.counts.ambiguous);
    c.check(
        r.accepted.pairs.len() == 6 && counts == (2, 1, 1),
        format!(
            "10-row fixture: accepted {}, Duplicate {}, Incomplete {}, Ambiguous {}",
            r.accepted.pairs.len(),
            counts.0,
            counts.1,
            counts.2
        ),
    );
    let mut failures = 0;
    for seed in 0..100 {
        let first = qc_filter(&qc_batch(seed), &empty);
        let second = qc_filter(&first.accepted.pairs, &empty);
        if second.accepted.pairs != first.accepted.pairs || !second.rejected.is_empty() {
            failures += 1;
        }
    }
    c.check(failures == 0, format!("qc_filter idempotent on 100 random batches: {failures} failures"));
}

fn determinism(c: &mut Checks) {
    let dir = tempfile::tempdir().unwrap();
    let read = |p: &Path| std::fs::read(p.join("report.json")).unwrap();
    let mut sink = Vec::new();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let serial = dir.path().join("serial");
    cmd_run(&small_run(&a, 4, "all"), &mut sink).unwrap();
    cmd_run(&small_run(&b, 4, "all"), &mut sink).unwrap();
    cmd_run(&small_run(&serial, 1, "all"), &mut sink).unwrap();
    let (ra, rb, rs) = (read(&a), read(&b), read(&serial));
    c.check(ra == rb, format!("two runs with --jobs 4: {} bytes, identical: {}", ra.len(), ra == rb));
    c.check(ra == rs, format!("--jobs 1 vs --jobs 4 identical: {}", ra == rs));
}

fn main() {
    let criteria = [
        Criterion { name: "numeric oracle suite", budget: Duration::from_secs(30), run: numeric_oracles },
        Criterion { name: "split/balance suite", budget: Duration::from_secs(30), run: split_balance },
        Criterion { name: "synthetic end-to-end", budget: Duration::from_secs(120), run: synthetic_end_to_end },
        Criterion { name: "report fidelity", budget: Duration::from_secs(120), run: report_fidelity },
        Criterion { name: "augmentation QC", budget: Duration::from_secs(30), run: augmentation_qc },
        Criterion { name: "determinism", budget: Duration::from_secs(120), run: determinism },
    ];
    let mut failed = 0;
    for cr in &criteria {
        let start = Instant::now();
        let mut checks = Checks::default();
        let outcome = catch_unwind(AssertUnwindSafe(|| (cr.run)(&mut checks)));
        let elapsed = start.elapsed();
        if let Err(e) = &outcome {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            checks.check(false, format!("panicked: {msg}"));
        }
        checks.check(
            elapsed <= cr.budget,
            format!("runtime {:.1}s (budget {}s)", elapsed.as_secs_f64(), cr.budget.as_secs()),
        );
        let pass = checks.items.iter().all(|(ok, _)| *ok);
        if !pass {
            failed += 1;
        }
        println!("{}: {}", if pass { "PASS" } else { "FAIL" }, cr.name);
        for (ok, detail) in &checks.items {
            println!("    [{}] {detail}", if *ok { "ok" } else { "x " });
        }
    }
    println!(
        "\nacceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
