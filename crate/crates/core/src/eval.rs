//! Set-value computation `u(S) = E[f(X_S)]`: exact support enumeration,
//! exact fast paths for aggregate-then-transform valuations, and seeded
//! Monte Carlo for everything else.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DiscreteDistribution, DistError, ItemDistribution};
use crate::seeds;
use crate::valuation::{ScalarTransform, ValuationError, ValuationSpec};

/// Atoms closer than this merge during convolution, preventing support
/// blowup from floating-point near-duplicates.
const MERGE_TOLERANCE: f64 = 1e-12;

/// Draws per Monte Carlo work unit. The chunk grid is part of the stream
/// layout: every (item, chunk) pair owns an independent generator, so the
/// estimate is bit-identical however chunks are scheduled.
const MC_CHUNK: u64 = 8192;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("item ids start at 1; got 0")]
    ZeroItem,
    #[error("item {0} appears more than once in the set")]
    DuplicateItem(u32),
    #[error("could not parse item set: {0}")]
    SetParse(String),
    #[error("no distribution provided for item {0}")]
    MissingItem(u32),
    #[error(
        "{outcomes} joint outcomes exceed the enumeration cap of {cap}; \
         use the fast path or Monte Carlo instead"
    )]
    OutcomeCapExceeded { outcomes: u128, cap: u64 },
    #[error(
        "projected convolution support of {support} atoms exceeds the cap of \
         {cap}; use Monte Carlo instead"
    )]
    SupportCapExceeded { support: usize, cap: usize },
    #[error(
        "valuation `{0}` has no aggregate-then-transform decomposition; \
         use exact enumeration or Monte Carlo"
    )]
    NotDecomposable(String),
    #[error("Monte Carlo needs at least one sample")]
    NoSamples,
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

type Result<T> = std::result::Result<T, EvalError>;

/// A set of item ids: distinct, sorted, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct ItemSet(Vec<u32>);

impl ItemSet {
    pub fn new(mut ids: Vec<u32>) -> Result<Self> {
        ids.sort_unstable();
        for pair in ids.windows(2) {
            if pair[0] == pair[1] {
                return Err(EvalError::DuplicateItem(pair[0]));
            }
        }
        if ids.first() == Some(&0) {
            return Err(EvalError::ZeroItem);
        }
        Ok(ItemSet(ids))
    }

    pub fn empty() -> Self {
        ItemSet(Vec::new())
    }

    pub fn items(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    /// Errors if any member exceeds `n`, the universe size.
    pub fn check_universe(&self, n: u32) -> Result<()> {
        match self.0.last() {
            Some(&max) if max > n => Err(EvalError::SetParse(format!(
                "item {max} is outside the universe 1..={n}"
            ))),
            _ => Ok(()),
        }
    }
}

impl FromStr for ItemSet {
    type Err = EvalError;

    /// Parses a comma-separated id list like `"1,4,7"`.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        if trimmed.is_empty() {
            return Ok(ItemSet::empty());
        }
        let ids = trimmed
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<u32>()
                    .map_err(|e| EvalError::SetParse(format!("`{part}`: {e}")))
            })
            .collect::<Result<Vec<u32>>>()?;
        ItemSet::new(ids)
    }
}

impl std::fmt::Display for ItemSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for id in &self.0 {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{id}")?;
            first = false;
        }
        Ok(())
    }
}

impl TryFrom<Vec<u32>> for ItemSet {
    type Error = EvalError;
    fn try_from(ids: Vec<u32>) -> Result<Self> {
        ItemSet::new(ids)
    }
}

impl From<ItemSet> for Vec<u32> {
    fn from(set: ItemSet) -> Vec<u32> {
        set.0
    }
}

/// How an estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum EvalMethod {
    ExactEnum,
    FastPath,
    MonteCarlo { samples: u64, seed: u64 },
}

/// A set value with its sampling error. Exact methods report
/// `std_error = 0`; Monte Carlo reports the sample standard error (which is
/// also 0 when every draw coincides, e.g. on point masses).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: EvalMethod,
}

/// Resource caps for the exact paths. Both produce actionable errors rather
/// than long silent runs when exceeded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Exact enumeration visits at most this many joint outcomes.
    pub max_outcomes: u64,
    /// The fast path refuses any convolution step whose projected (pre-merge)
    /// support exceeds this.
    pub max_fast_support: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { max_outcomes: 10_000_000, max_fast_support: 2_000_000 }
    }
}

fn gather<'a, T>(dists: &'a BTreeMap<u32, T>, set: &ItemSet) -> Result<Vec<&'a T>> {
    set.items()
        .iter()
        .map(|&id| dists.get(&id).ok_or(EvalError::MissingItem(id)))
        .collect()
}

/// Exact `E[f(X_S)]` by enumerating the product of the items' supports.
pub fn expected_value_exact(
    spec: &ValuationSpec,
    dists: &BTreeMap<u32, DiscreteDistribution>,
    set: &ItemSet,
    config: &EvalConfig,
) -> Result<EvalEstimate> {
    let exact = |value: f64| EvalEstimate {
        value,
        std_error: 0.0,
        method: EvalMethod::ExactEnum,
    };
    if set.is_empty() {
        return Ok(exact(spec.evaluate(&[])?));
    }
    let supports: Vec<&[(f64, f64)]> = gather(dists, set)?
        .into_iter()
        .map(|d| d.atoms())
        .collect();
    let outcomes = supports
        .iter()
        .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128));
    if outcomes > config.max_outcomes as u128 {
        return Err(EvalError::OutcomeCapExceeded { outcomes, cap: config.max_outcomes });
    }

    let k = supports.len();
    let mut index = vec![0usize; k];
    let mut values = vec![0.0f64; k];
    for (i, support) in supports.iter().enumerate() {
        values[i] = support[0].0;
    }
    let mut total = 0.0;
    loop {
        let mut prob = 1.0;
        for (i, support) in supports.iter().enumerate() {
            prob *= support[index[i]].1;
        }
        total += prob * spec.evaluate(&values)?;

        // Odometer increment over the support product.
        let mut digit = k;
        loop {
            if digit == 0 {
                return Ok(exact(total));
            }
            digit -= 1;
            index[digit] += 1;
            if index[digit] < supports[digit].len() {
                values[digit] = supports[digit][index[digit]].0;
                break;
            }
            index[digit] = 0;
            values[digit] = supports[digit][0].0;
        }
    }
}

/// Sorts and merges atoms whose values are within `tol`, keeping the first
/// value of each merged run.
fn merge_atoms(mut atoms: Vec<(f64, f64)>, tol: f64) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("atom values are ordered"));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (v, p) in atoms {
        match merged.last_mut() {
            Some(last) if v - last.0 <= tol => last.1 += p,
            _ => merged.push((v, p)),
        }
    }
    merged
}

type MapFn = Box<dyn Fn(f64) -> f64 + Sync>;

enum Route {
    /// `E[post(max_i map(X_i))]` via the product of CDFs on the merged grid.
    Max { map: MapFn },
    /// `E[post(Σ_i map(X_i))]` via repeated exact convolution.
    Sum { map: MapFn, post: MapFn },
    /// `1 − Π_i (1 − E[map(X_i)])`, the independence closed form.
    Probability { map: MapFn },
}

fn identity() -> MapFn {
    Box::new(|x| x)
}

fn transform_fn(t: &ScalarTransform) -> MapFn {
    let t = *t;
    Box::new(move |x| t.eval(x))
}

fn fast_route(spec: &ValuationSpec) -> Result<Route> {
    fn base_route(spec: &ValuationSpec, map: MapFn) -> Result<Route> {
        match spec {
            ValuationSpec::Max => Ok(Route::Max { map }),
            ValuationSpec::Ces { r } => {
                let r = *r;
                let inner: MapFn = Box::new(move |x| map(x).powf(r));
                Ok(Route::Sum { map: inner, post: Box::new(move |s| s.powf(1.0 / r)) })
            }
            ValuationSpec::PowerOfSum { r } => {
                let r = *r;
                Ok(Route::Sum { map, post: Box::new(move |s| s.powf(r)) })
            }
            ValuationSpec::ConcaveOfSum { g } => {
                let g = *g;
                Ok(Route::Sum { map, post: Box::new(move |s| g.eval(s)) })
            }
            ValuationSpec::SuccessProbability => Ok(Route::Probability { map }),
            ValuationSpec::TopH { .. } | ValuationSpec::Transformed { .. } => Err(
                EvalError::NotDecomposable(spec.to_string()),
            ),
        }
    }

    match spec {
        ValuationSpec::Transformed { base, transforms, .. } => {
            if transforms.len() != 1 {
                return Err(EvalError::NotDecomposable(spec.to_string()));
            }
            base_route(base, transform_fn(&transforms[0]))
        }
        _ => base_route(spec, identity()),
    }
}

/// Exact `E[f(X_S)]` for valuations of the shape `post(⊕_i map(X_i))` with
/// `⊕ ∈ {max, sum}` (plus the success-probability closed form). Equals
/// [`expected_value_exact`] without enumerating the joint support.
pub fn expected_value_fast(
    spec: &ValuationSpec,
    dists: &BTreeMap<u32, DiscreteDistribution>,
    set: &ItemSet,
    config: &EvalConfig,
) -> Result<EvalEstimate> {
    let exact = |value: f64| EvalEstimate {
        value,
        std_error: 0.0,
        method: EvalMethod::FastPath,
    };
    let route = fast_route(spec)?;
    if set.is_empty() {
        return Ok(exact(spec.evaluate(&[])?));
    }
    let items = gather(dists, set)?;

    let value = match route {
        Route::Max { map } => {
            // A strictly increasing map keeps each support sorted, so the
            // per-item images merge directly.
            let images: Vec<Vec<(f64, f64)>> = items
                .iter()
                .map(|d| merge_atoms(d.atoms().iter().map(|&(v, p)| (map(v), p)).collect(), 0.0))
                .collect();
            let mut grid: Vec<f64> = images.iter().flatten().map(|&(v, _)| v).collect();
            grid.sort_by(|a, b| a.partial_cmp(b).expect("grid values are ordered"));
            grid.dedup();

            let mut cursor = vec![0usize; images.len()];
            let mut cum = vec![0.0f64; images.len()];
            let mut prev_cdf_product = 0.0;
            let mut total = 0.0;
            for &g in &grid {
                let mut product = 1.0;
                for (i, image) in images.iter().enumerate() {
                    while cursor[i] < image.len() && image[cursor[i]].0 <= g {
                        cum[i] += image[cursor[i]].1;
                        cursor[i] += 1;
                    }
                    product *= cum[i];
                }
                total += g * (product - prev_cdf_product);
                prev_cdf_product = product;
            }
            total
        }
        Route::Sum { map, post } => {
            let mut acc: Vec<(f64, f64)> = vec![(0.0, 1.0)];
            for d in &items {
                // Bail on the projected pairwise size before materializing
                // it: near the cap the product can run to billions of atoms,
                // far more than the merge could ever return.
                let projected = acc.len().saturating_mul(d.support_size());
                if projected > config.max_fast_support {
                    return Err(EvalError::SupportCapExceeded {
                        support: projected,
                        cap: config.max_fast_support,
                    });
                }
                let image: Vec<(f64, f64)> =
                    d.atoms().iter().map(|&(v, p)| (map(v), p)).collect();
                let mut next = Vec::with_capacity(acc.len() * image.len());
                for &(v1, p1) in &acc {
                    for &(v2, p2) in &image {
                        next.push((v1 + v2, p1 * p2));
                    }
                }
                acc = merge_atoms(next, MERGE_TOLERANCE);
            }
            acc.iter().map(|&(v, p)| post(v) * p).sum()
        }
        Route::Probability { map } => {
            let mut miss_product = 1.0;
            for d in &items {
                let mut mean = 0.0;
                for &(v, p) in d.atoms() {
                    let y = map(v);
                    if !(-1e-9..=1.0 + 1e-9).contains(&y) {
                        return Err(EvalError::Domain(format!(
                            "success-probability inputs must lie in [0,1]; atom value {v} maps to {y}"
                        )));
                    }
                    mean += y * p;
                }
                miss_product *= 1.0 - mean.clamp(0.0, 1.0);
            }
            1.0 - miss_product
        }
    };
    Ok(exact(value))
}

/// Monte Carlo `E[f(X_S)]` over `samples` joint draws.
///
/// Each (item, chunk) pair draws from its own generator seeded by
/// `(seed, item, chunk)`, so the estimate does not depend on evaluation
/// order or on how chunks are distributed over workers.
pub fn expected_value_mc(
    spec: &ValuationSpec,
    dists: &BTreeMap<u32, ItemDistribution>,
    set: &ItemSet,
    samples: u64,
    seed: u64,
) -> Result<EvalEstimate> {
    if samples == 0 {
        return Err(EvalError::NoSamples);
    }
    let method = EvalMethod::MonteCarlo { samples, seed };
    if set.is_empty() {
        return Ok(EvalEstimate { value: spec.evaluate(&[])?, std_error: 0.0, method });
    }
    let items = gather(dists, set)?;
    let ids = set.items();
    let chunks = samples.div_ceil(MC_CHUNK);

    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<(f64, f64)> {
            let lo = chunk * MC_CHUNK;
            let hi = (lo + MC_CHUNK).min(samples);
            let mut rngs: Vec<ChaCha8Rng> = ids
                .iter()
                .map(|&id| {
                    ChaCha8Rng::seed_from_u64(seeds::mix(
                        seed,
                        &[seeds::EVAL, id as u64, chunk],
                    ))
                })
                .collect();
            let mut values = vec![0.0f64; items.len()];
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in lo..hi {
                for (i, d) in items.iter().enumerate() {
                    values[i] = d.sample(&mut rngs[i]);
                }
                let y = spec.evaluate(&values)?;
                sum += y;
                sum_sq += y * y;
            }
            Ok((sum, sum_sq))
        })
        .collect::<Result<Vec<_>>>()?;

    // Combine in chunk order so the total is identical for any worker count.
    let (sum, sum_sq) = partials
        .iter()
        .fold((0.0, 0.0), |(s, q), &(ps, pq)| (s + ps, q + pq));
    let n = samples as f64;
    let mean = sum / n;
    let std_error = if samples > 1 {
        let variance = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (variance / n).sqrt()
    } else {
        0.0
    };
    Ok(EvalEstimate { value: mean, std_error, method })
}
