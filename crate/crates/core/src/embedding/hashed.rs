//! Signed feature hashing of character n-grams.
//!
//! Runs fully offline, so the rest of the pipeline can be exercised without
//! the embedding service.

use super::EmbeddingVector;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over `domain || seed || bytes`, followed by the splitmix64
/// finalizer. Stable across platforms and releases.
fn stable_hash(bytes: &[u8], seed: u64, domain: u8) -> u64 {
    let mut h = FNV_OFFSET;
    let mut feed = |b: u8| {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    };
    feed(domain);
    seed.to_le_bytes().into_iter().for_each(&mut feed);
    bytes.iter().copied().for_each(&mut feed);
    let mut z = h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Index hash and sign hash of one n-gram.
pub(crate) fn gram_hashes(gram: &str, seed: u64) -> (u64, u64) {
    (
        stable_hash(gram.as_bytes(), seed, 0x01),
        stable_hash(gram.as_bytes(), seed, 0x02),
    )
}

/// Embeds `text` into `dim` buckets by hashing every character n-gram with
/// length in `ngram_range` (inclusive). Each n-gram adds ±1 to its bucket;
/// the result is scaled by `1 / max(1, sqrt(#ngrams))`.
///
/// # Panics
/// If `dim == 0` or the range is empty or starts at zero.
pub fn hashed_ngram_embed(
    text: &str,
    dim: usize,
    seed: u64,
    ngram_range: (usize, usize),
) -> EmbeddingVector {
    assert!(dim >= 1, "embedding dimension must be positive");
    let (lo, hi) = ngram_range;
    assert!(lo >= 1 && lo <= hi, "invalid n-gram range ({lo}, {hi})");

    let mut acc = vec![0.0f64; dim];
    let boundaries: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let n_chars = boundaries.len() - 1;
    let mut count = 0usize;
    for n in lo..=hi {
        if n > n_chars {
            break;
        }
        for start in 0..=(n_chars - n) {
            let gram = &text[boundaries[start]..boundaries[start + n]];
            let (h_idx, h_sign) = gram_hashes(gram, seed);
            let idx = (h_idx % dim as u64) as usize;
            acc[idx] += if h_sign & 1 == 0 { 1.0 } else { -1.0 };
            count += 1;
        }
    }
    let scale = 1.0 / (count as f64).sqrt().max(1.0);
    EmbeddingVector::new(acc.into_iter().map(|v| (v * scale) as f32).collect())
        .expect("hashed values are finite")
}
