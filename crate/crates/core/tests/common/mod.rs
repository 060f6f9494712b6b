#![allow(dead_code)]

pub mod oracles;
pub mod stub;

use ccq::corpus::{CodeCommentPair, Label};
use ccq::embedding::FeatureMatrix;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Two isotropic unit-variance Gaussian classes in `d` dimensions whose
/// centers are `separation` standard deviations apart (Euclidean). The
/// first `round(n * minority_frac)` rows are NotUseful, the rest Useful,
/// then rows are shuffled.
pub fn gaussian_blobs(n: usize, d: usize, separation: f64, minority_frac: f64, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_min = (n as f64 * minority_frac).round() as usize;
    let offset = separation / 2.0 / (d as f64).sqrt();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut x = Array2::zeros((n, d));
    let mut labels = vec![Label::Useful; n];
    for (row, &k) in order.iter().enumerate() {
        let label = if k < n_min { Label::NotUseful } else { Label::Useful };
        let sign = if label == Label::Useful { 1.0 } else { -1.0 };
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            x[[row, j]] = sign * offset + z;
        }
        labels[row] = label;
    }
    let ids = (0..n).map(|i| format!("row-{i}")).collect();
    FeatureMatrix::new(x, labels, ids)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const CODES: [&str; 9] = [
    "x++;",
    "if (p) { free(p); }",
    "while (n > 0) { n--; }",
    "return  x;",
    "for (i = 0; i < n; i++) { s += a[i];",
    "print(total)",
    "",
    "y = (a + b;",
    "memcpy(dst, src, len);",
];
const COMMENTS: [&str; 8] = [
    "/* increment x */",
    "/* release the buffer on the error path */",
    "// count down until empty",
    "TODO",
    "/* x */",
    "",
    "/* copy   len bytes into dst */",
    "...",
];

/// Random generated-pair batch drawing from small pools of clean, broken,
/// non-C and placeholder snippets, so every QC rule fires.
pub fn qc_batch(seed: u64) -> Vec<CodeCommentPair> {
    let mut r = rng(seed);
    let n = r.gen_range(1..40);
    (0..n)
        .map(|i| {
            let mut code = CODES.choose(&mut r).unwrap().to_string();
            if r.gen_bool(0.3) {
                code = code.replace(' ', "  ");
            }
            let comment = COMMENTS.choose(&mut r).unwrap();
            let label = if r.gen_bool(0.5) { Label::Useful } else { Label::NotUseful };
            CodeCommentPair::new(format!("r{i}"), &code, comment, Some(label))
        })
        .collect()
}
