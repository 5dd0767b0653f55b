//! Test-score baseline: a one-number-per-item sketch used as the comparison
//! method in the experiment harness.
//!
//! The literature on test scores does not fix one construction, so this is a
//! clearly labeled stand-in: the *replication score* of an item is the Monte
//! Carlo estimate of `E[f(X⁽¹⁾, …, X⁽ᵏ⁾)]` over `k` i.i.d. copies of the
//! item's value, and a set is scored by the maximum of its members' scores.
//! Comparisons against it are qualitative (direction of the gap, not its
//! magnitude).

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::ItemDistribution;
use crate::eval::ItemSet;
use crate::seeds;
use crate::valuation::{ValuationError, ValuationSpec};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("item {0} has no test score in the table")]
    MissingItem(u32),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
}

type Result<T> = std::result::Result<T, BaselineError>;

/// Per-item replication scores with the parameters they were computed under.
/// Wire form: `{"k": …, "n_samples": …, "seed": …, "scores": {"1": …}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestScoreTable {
    /// Replication count every score used.
    pub k: u32,
    /// Monte Carlo sample count every score used.
    pub n_samples: u64,
    /// Master seed; item `i` draws from the substream derived from `(seed, i)`.
    pub seed: u64,
    pub scores: BTreeMap<u32, f64>,
}

/// Monte Carlo estimate of `E[f(X⁽¹⁾, …, X⁽ᵏ⁾)]` over `k` i.i.d. copies of
/// `dist` placed in `k` coordinates. Deterministic per seed.
pub fn replication_test_score(
    dist: &ItemDistribution,
    spec: &ValuationSpec,
    k: u32,
    n_samples: u64,
    seed: u64,
) -> Result<f64> {
    if k == 0 {
        return Err(BaselineError::InvalidParameter(
            "replication count must be at least 1".into(),
        ));
    }
    if n_samples == 0 {
        return Err(BaselineError::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(seed, &[seeds::SCORE]));
    let mut values = vec![0.0f64; k as usize];
    let mut total = 0.0;
    for _ in 0..n_samples {
        for slot in values.iter_mut() {
            *slot = dist.sample(&mut rng);
        }
        total += spec.evaluate(&values)?;
    }
    Ok(total / n_samples as f64)
}

/// Builds the score table for a collection of items; each item's score uses
/// an independent substream of `seed`, so the table is reproducible and
/// independent of evaluation order.
pub fn build_table(
    dists: &BTreeMap<u32, ItemDistribution>,
    spec: &ValuationSpec,
    k: u32,
    n_samples: u64,
    seed: u64,
) -> Result<TestScoreTable> {
    let scores = dists
        .par_iter()
        .map(|(&id, dist)| {
            let item_seed = seeds::mix(seed, &[seeds::SCORE, id as u64]);
            replication_test_score(dist, spec, k, n_samples, item_seed).map(|s| (id, s))
        })
        .collect::<Result<BTreeMap<u32, f64>>>()?;
    Ok(TestScoreTable { k, n_samples, seed, scores })
}

/// Baseline value of a set: the maximum member score, 0 on the empty set.
pub fn testscore_sketch_value(table: &TestScoreTable, set: &ItemSet) -> Result<f64> {
    let mut best = 0.0f64;
    for &id in set.items() {
        let score = *table
            .scores
            .get(&id)
            .ok_or(BaselineError::MissingItem(id))?;
        best = best.max(score);
    }
    Ok(best)
}
