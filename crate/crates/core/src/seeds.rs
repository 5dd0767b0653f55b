//! Derivation of independent RNG streams from one master seed.
//!
//! Every randomized stage seeds its own generator from
//! `mix(master, &[DOMAIN, index…])`, so results are reproducible and
//! independent of evaluation order or worker count. Domain labels keep the
//! streams of different stages from colliding even when their indices agree.

/// Training-sample draws, indexed by item id.
pub(crate) const TRAIN: u64 = 0x54_52_41_49_4e; // "TRAIN"
/// Monte Carlo evaluation draws, indexed by item id and chunk.
pub(crate) const EVAL: u64 = 0x45_56_41_4c; // "EVAL"
/// Random candidate-set sampling in experiment sweeps.
pub(crate) const SETS: u64 = 0x53_45_54_53; // "SETS"
/// Synthetic per-item distribution parameters.
pub(crate) const ITEMS: u64 = 0x49_54_45_4d_53; // "ITEMS"
/// Replication test-score sampling in the baseline.
pub(crate) const SCORE: u64 = 0x53_43_4f_52_45; // "SCORE"

fn scramble(mut z: u64) -> u64 {
    // Finalizer with full avalanche (the splitmix64 output function).
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `(seed, words…)` into a stream seed. Order-sensitive in `words`.
pub(crate) fn mix(seed: u64, words: &[u64]) -> u64 {
    let mut h = scramble(seed);
    for &w in words {
        h = scramble(h ^ w);
    }
    h
}
