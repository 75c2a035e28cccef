//! Deterministic seed derivation.
//!
//! Every random decision in the crate draws from a ChaCha stream obtained
//! through [`rng`], so one root seed fixes an entire pipeline run. Sub-seeds
//! are derived as `splitmix64(root XOR fnv1a(label))`; the label names the
//! purpose of the stream (`"train.shuffle"`, `"synth.class3"`, ...), which
//! keeps streams independent and the split scheme auditable.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives a sub-seed for a named purpose from a root seed.
pub fn derive(root: u64, label: &str) -> u64 {
    splitmix64(root ^ fnv1a(label.as_bytes()))
}

/// Seeded generator for a named purpose.
pub fn rng(root: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, label))
}

/// In-place Fisher-Yates shuffle from a named stream.
pub fn shuffle<T>(items: &mut [T], root: u64, label: &str) {
    use rand::seq::SliceRandom;
    items.shuffle(&mut rng(root, label));
}

/// `keep` distinct indices out of `0..total`, chosen by a named stream and
/// returned sorted.
pub fn pick_indices(total: usize, keep: usize, root: u64, label: &str) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..total).collect();
    shuffle(&mut idx, root, label);
    idx.truncate(keep);
    idx.sort_unstable();
    idx
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
