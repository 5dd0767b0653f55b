//! Item value distributions and the oracle surface the discretizer consumes:
//! CDF, generalized-inverse quantile, atom masses, seeded sampling, and
//! closed-form tail conditional expectations `E[f(X) | X > τ]`.
//!
//! Tail expectations use analytic formulas for the parametric families and
//! exact summation for sample-based ones — there is no numeric quadrature
//! anywhere, so downstream bound checks carry no integration tolerance.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};
use thiserror::Error;

use crate::valuation::ScalarFn;

#[derive(Debug, Error)]
pub enum DistError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("probabilities must be in (0,1] and sum to 1 within 1e-9: {0}")]
    InvalidProbability(String),
    #[error("no probability mass above tau = {tau}")]
    EmptyTail { tau: f64 },
    #[error("tail expectation diverges: {0}")]
    InfiniteTail(String),
    #[error("quantile level must lie in (0,1), got {0}")]
    QuantileLevel(f64),
    #[error("exact tail summation needs a sample-based distribution; this one is continuous")]
    ContinuousTail,
    #[error("could not read value column from {path}: {detail}")]
    ValueColumn { path: String, detail: String },
}

type Result<T> = std::result::Result<T, DistError>;

/// A finite distribution stored as `(value, probability)` atoms with strictly
/// ascending nonnegative values. This is both a general input family and the
/// output type of the discretizer.
///
/// Wire format: `{"atoms": [[value, prob], …]}`. Atom values and
/// probabilities are stored exactly as given (no renormalization), so a
/// JSON round trip is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DiscreteDistributionWire", into = "DiscreteDistributionWire")]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
    /// Running probability totals, same length as `atoms`.
    cum: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DiscreteDistributionWire {
    atoms: Vec<(f64, f64)>,
}

impl From<DiscreteDistribution> for DiscreteDistributionWire {
    fn from(d: DiscreteDistribution) -> Self {
        DiscreteDistributionWire { atoms: d.atoms }
    }
}

impl TryFrom<DiscreteDistributionWire> for DiscreteDistribution {
    type Error = DistError;
    fn try_from(w: DiscreteDistributionWire) -> Result<Self> {
        DiscreteDistribution::new(w.atoms)
    }
}

/// Tolerance on Σ prob = 1 for discrete atom lists.
pub const MASS_TOLERANCE: f64 = 1e-9;

impl DiscreteDistribution {
    /// Validates and stores an ascending atom list.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(DistError::InvalidParameter("atom list is empty".into()));
        }
        let mut prev = f64::NEG_INFINITY;
        for &(v, p) in &atoms {
            if !v.is_finite() || v < 0.0 {
                return Err(DistError::InvalidParameter(format!(
                    "atom values must be finite and nonnegative, got {v}"
                )));
            }
            if v <= prev {
                return Err(DistError::InvalidParameter(format!(
                    "atom values must be strictly ascending ({prev} then {v})"
                )));
            }
            prev = v;
            if !(p > 0.0 && p <= 1.0) || !p.is_finite() {
                return Err(DistError::InvalidProbability(format!(
                    "atom probability {p} at value {v}"
                )));
            }
        }
        let mut cum = Vec::with_capacity(atoms.len());
        let mut total = 0.0;
        for &(_, p) in &atoms {
            total += p;
            cum.push(total);
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(DistError::InvalidProbability(format!("total mass {total}")));
        }
        Ok(DiscreteDistribution { atoms, cum })
    }

    /// Builds from possibly unsorted pairs, merging exactly equal values and
    /// dropping zero-probability entries. Used by construction pipelines
    /// whose atoms arrive out of order or with duplicates.
    pub fn from_unsorted(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut pairs: Vec<(f64, f64)> = pairs.into_iter().filter(|&(_, p)| p != 0.0).collect();
        pairs.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).ok_or(()).expect("finite values"));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (v, p) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        DiscreteDistribution::new(merged)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let idx = self.atoms.partition_point(|&(v, _)| v <= x);
        if idx == 0 {
            0.0
        } else {
            self.cum[idx - 1]
        }
    }

    /// Smallest support value whose cumulative probability reaches `p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DistError::QuantileLevel(p));
        }
        let idx = self.cum.partition_point(|&c| c < p);
        // Roundoff can leave the final cumulative a hair under 1; the top
        // atom is then the answer for any p above it.
        Ok(self.atoms[idx.min(self.atoms.len() - 1)].0)
    }

    pub fn atom_mass_at(&self, x: f64) -> f64 {
        match self.atoms.binary_search_by(|&(v, _)| v.partial_cmp(&x).expect("finite")) {
            Ok(idx) => self.atoms[idx].1,
            Err(_) => 0.0,
        }
    }

    pub fn max_atom_mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, p)| p).fold(0.0, f64::max)
    }

    /// Σ p·f(value) over all atoms.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(v, p)| p * f(v)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|v| v)
    }

    /// Exact `E[f(X) | X > tau]` by summation over atoms above `tau`.
    pub fn tail_expectation(&self, f: impl Fn(f64) -> f64, tau: f64) -> Result<f64> {
        let start = self.atoms.partition_point(|&(v, _)| v <= tau);
        if start == self.atoms.len() {
            return Err(DistError::EmptyTail { tau });
        }
        let mut mass = 0.0;
        let mut weighted = 0.0;
        for &(v, p) in &self.atoms[start..] {
            mass += p;
            weighted += p * f(v);
        }
        Ok(weighted / mass)
    }

    /// Pushes the distribution through a value map, re-sorting and merging
    /// exactly equal images. The map must keep values finite and nonnegative.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        DiscreteDistribution::from_unsorted(self.atoms.iter().map(|&(v, p)| (f(v), p)))
    }

    /// Inverse-transform draw: the atom whose cumulative interval contains `u`.
    fn sample_with(&self, u: f64) -> f64 {
        let idx = self.cum.partition_point(|&c| c <= u);
        self.atoms[idx.min(self.atoms.len() - 1)].0
    }
}

/// An item's value law. Supports ⊆ ℝ₊; the Pareto shape must exceed 1 so the
/// tail conditional mean exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum ItemDistribution {
    /// Density `(1/mean)·e^(−x/mean)` on `x ≥ 0`.
    Exponential { mean: f64 },
    /// `P(X > x) = (scale/x)^shape` for `x ≥ scale`.
    Pareto { shape: f64, scale: f64 },
    /// Uniform on `[lo, hi]`, `0 ≤ lo < hi`.
    Uniform { lo: f64, hi: f64 },
    /// Raw samples, sorted ascending with ties preserved; each carries mass
    /// `1/len`.
    Empirical { samples: Vec<f64> },
    Discrete(DiscreteDistribution),
}

impl ItemDistribution {
    pub fn exponential(mean: f64) -> Result<Self> {
        if mean > 0.0 && mean.is_finite() {
            Ok(ItemDistribution::Exponential { mean })
        } else {
            Err(DistError::InvalidParameter(format!(
                "exponential mean must be positive, got {mean}"
            )))
        }
    }

    pub fn pareto(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 1.0) || !shape.is_finite() {
            return Err(DistError::InvalidParameter(format!(
                "pareto shape must exceed 1 (finite mean), got {shape}"
            )));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(DistError::InvalidParameter(format!(
                "pareto scale must be positive, got {scale}"
            )));
        }
        Ok(ItemDistribution::Pareto { shape, scale })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo) || !hi.is_finite() {
            return Err(DistError::InvalidParameter(format!(
                "uniform needs 0 ≤ lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(ItemDistribution::Uniform { lo, hi })
    }

    /// Sorts the samples and keeps them exactly, ties included.
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(DistError::InvalidParameter("no samples".into()));
        }
        for &v in values {
            if !v.is_finite() || v < 0.0 {
                return Err(DistError::InvalidParameter(format!(
                    "samples must be finite and nonnegative, got {v}"
                )));
            }
        }
        let mut samples = values.to_vec();
        samples.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
        Ok(ItemDistribution::Empirical { samples })
    }

    /// Re-checks invariants; call after deserializing untrusted input.
    pub fn validate(&self) -> Result<()> {
        match self {
            ItemDistribution::Exponential { mean } => {
                ItemDistribution::exponential(*mean).map(|_| ())
            }
            ItemDistribution::Pareto { shape, scale } => {
                ItemDistribution::pareto(*shape, *scale).map(|_| ())
            }
            ItemDistribution::Uniform { lo, hi } => ItemDistribution::uniform(*lo, *hi).map(|_| ()),
            ItemDistribution::Empirical { samples } => {
                if samples.is_empty() {
                    return Err(DistError::InvalidParameter("no samples".into()));
                }
                let mut prev = 0.0f64;
                for &v in samples {
                    if !v.is_finite() || v < 0.0 {
                        return Err(DistError::InvalidParameter(format!(
                            "samples must be finite and nonnegative, got {v}"
                        )));
                    }
                    if v < prev {
                        return Err(DistError::InvalidParameter(
                            "empirical samples must be sorted ascending".into(),
                        ));
                    }
                    prev = v;
                }
                Ok(())
            }
            // Construction already validated the atom list.
            ItemDistribution::Discrete(_) => Ok(()),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ItemDistribution::Exponential { mean } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / mean).exp_m1()
                }
            }
            ItemDistribution::Pareto { shape, scale } => {
                if x < *scale {
                    0.0
                } else {
                    1.0 - (scale / x).powf(*shape)
                }
            }
            ItemDistribution::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            ItemDistribution::Empirical { samples } => {
                samples.partition_point(|&s| s <= x) as f64 / samples.len() as f64
            }
            ItemDistribution::Discrete(d) => d.cdf(x),
        }
    }

    /// Generalized inverse CDF: `inf{x : F(x) ≥ p}` for `p ∈ (0,1)`. No
    /// interpolation for the sample-based variants — the result is always an
    /// attained support point, which the tail-mass bracket checks rely on.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DistError::QuantileLevel(p));
        }
        Ok(match self {
            ItemDistribution::Exponential { mean } => -mean * (-p).ln_1p(),
            ItemDistribution::Pareto { shape, scale } => scale * (1.0 - p).powf(-1.0 / shape),
            ItemDistribution::Uniform { lo, hi } => lo + p * (hi - lo),
            ItemDistribution::Empirical { samples } => {
                // Smallest count with count/n ≥ p, using the same division as
                // cdf so the quantile/cdf duality is exact in floating point.
                let n = samples.len();
                let (mut lo_c, mut hi_c) = (1usize, n);
                while lo_c < hi_c {
                    let mid = lo_c + (hi_c - lo_c) / 2;
                    if mid as f64 / n as f64 >= p {
                        hi_c = mid;
                    } else {
                        lo_c = mid + 1;
                    }
                }
                samples[lo_c - 1]
            }
            ItemDistribution::Discrete(d) => d.quantile(p)?,
        })
    }

    /// `P(X = x)` — zero for the continuous families.
    pub fn atom_mass_at(&self, x: f64) -> f64 {
        match self {
            ItemDistribution::Exponential { .. }
            | ItemDistribution::Pareto { .. }
            | ItemDistribution::Uniform { .. } => 0.0,
            ItemDistribution::Empirical { samples } => {
                let hi = samples.partition_point(|&s| s <= x);
                let lo = samples.partition_point(|&s| s < x);
                (hi - lo) as f64 / samples.len() as f64
            }
            ItemDistribution::Discrete(d) => d.atom_mass_at(x),
        }
    }

    /// Largest probability any single point carries.
    pub fn max_atom_mass(&self) -> f64 {
        match self {
            ItemDistribution::Exponential { .. }
            | ItemDistribution::Pareto { .. }
            | ItemDistribution::Uniform { .. } => 0.0,
            ItemDistribution::Empirical { samples } => {
                let n = samples.len() as f64;
                let mut best = 0usize;
                let mut run = 0usize;
                let mut prev = f64::NAN;
                for &s in samples {
                    if s == prev {
                        run += 1;
                    } else {
                        run = 1;
                        prev = s;
                    }
                    best = best.max(run);
                }
                best as f64 / n
            }
            ItemDistribution::Discrete(d) => d.max_atom_mass(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ItemDistribution::Exponential { mean } => *mean,
            ItemDistribution::Pareto { shape, scale } => shape * scale / (shape - 1.0),
            ItemDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            ItemDistribution::Empirical { samples } => {
                samples.iter().sum::<f64>() / samples.len() as f64
            }
            ItemDistribution::Discrete(d) => d.mean(),
        }
    }

    /// `E[f(X) | X > tau]` in closed form for the parametric families and by
    /// exact summation for the sample-based ones. Errors when the tail mass
    /// is zero or the conditional moment diverges (Pareto with a power
    /// exponent at or above the shape).
    pub fn tail_value(&self, f: ScalarFn, tau: f64) -> Result<f64> {
        match self {
            ItemDistribution::Exponential { mean } => {
                let t = tau.max(0.0);
                Ok(match f {
                    // Memorylessness: the overshoot is again Exponential(mean).
                    ScalarFn::Identity => t + mean,
                    ScalarFn::Power(r) => {
                        // ∫_t^∞ x^r e^(−x/m) dx/m = m^r·Γ(1+r, t/m), then
                        // divide by the tail mass e^(−t/m). At t = 0 the
                        // incomplete gamma is the complete one.
                        let z = t / mean;
                        let tail_ratio = if z > 0.0 {
                            gamma_ur(1.0 + r, z).max(0.0) * z.exp()
                        } else {
                            1.0
                        };
                        mean.powf(r) * gamma(1.0 + r) * tail_ratio
                    }
                    ScalarFn::ExpSaturation(lambda) => {
                        1.0 - (-lambda * t).exp() / (1.0 + lambda * mean)
                    }
                })
            }
            ItemDistribution::Pareto { shape, scale } => {
                // Conditioning a Pareto on X > t re-scales it: X|X>t is
                // Pareto(shape, max(t, scale)).
                let s = tau.max(*scale);
                match f {
                    ScalarFn::Identity => Ok(shape * s / (shape - 1.0)),
                    ScalarFn::Power(r) => {
                        if r >= *shape {
                            Err(DistError::InfiniteTail(format!(
                                "pareto shape {shape} does not dominate power exponent {r}"
                            )))
                        } else {
                            Ok(shape * s.powf(r) / (shape - r))
                        }
                    }
                    ScalarFn::ExpSaturation(lambda) => {
                        // E[e^(−λX)] over Pareto(α, s) = α(λs)^α·Γ(−α, λs).
                        let z = lambda * s;
                        let g = upper_gamma_small_s(-shape, z);
                        Ok(1.0 - shape * z.powf(*shape) * g)
                    }
                }
            }
            ItemDistribution::Uniform { lo, hi } => {
                let t = tau.max(*lo);
                if t >= *hi {
                    return Err(DistError::EmptyTail { tau });
                }
                Ok(match f {
                    ScalarFn::Identity => 0.5 * (t + hi),
                    ScalarFn::Power(r) => {
                        (hi.powf(r + 1.0) - t.powf(r + 1.0)) / ((r + 1.0) * (hi - t))
                    }
                    ScalarFn::ExpSaturation(lambda) => {
                        1.0 - ((-lambda * t).exp() - (-lambda * hi).exp()) / (lambda * (hi - t))
                    }
                })
            }
            ItemDistribution::Empirical { .. } | ItemDistribution::Discrete(_) => {
                self.tail_expectation(|x| f.eval(x), tau)
            }
        }
    }

    /// Exact tail summation with an arbitrary scalar function; available only
    /// for the sample-based variants, where no closed form is needed.
    pub fn tail_expectation(&self, f: impl Fn(f64) -> f64, tau: f64) -> Result<f64> {
        match self {
            ItemDistribution::Empirical { samples } => {
                let start = samples.partition_point(|&s| s <= tau);
                if start == samples.len() {
                    return Err(DistError::EmptyTail { tau });
                }
                let tail = &samples[start..];
                Ok(tail.iter().map(|&s| f(s)).sum::<f64>() / tail.len() as f64)
            }
            ItemDistribution::Discrete(d) => d.tail_expectation(f, tau),
            _ => Err(DistError::ContinuousTail),
        }
    }

    /// One inverse-transform draw.
    pub fn sample(&self, rng: &mut impl rand::Rng) -> f64 {
        let u: f64 = rng.gen();
        match self {
            ItemDistribution::Exponential { mean } => -mean * (-u).ln_1p(),
            ItemDistribution::Pareto { shape, scale } => scale * (1.0 - u).powf(-1.0 / shape),
            ItemDistribution::Uniform { lo, hi } => lo + u * (hi - lo),
            ItemDistribution::Empirical { samples } => {
                let idx = ((u * samples.len() as f64) as usize).min(samples.len() - 1);
                samples[idx]
            }
            ItemDistribution::Discrete(d) => d.sample_with(u),
        }
    }

    /// Collapses to an explicit atom list: exact for `Empirical` (ties merge
    /// into multiplicities) and `Discrete`; `None` for continuous families.
    pub fn to_discrete(&self) -> Option<DiscreteDistribution> {
        match self {
            ItemDistribution::Empirical { samples } => {
                let w = 1.0 / samples.len() as f64;
                Some(
                    DiscreteDistribution::from_unsorted(samples.iter().map(|&s| (s, w)))
                        .expect("validated samples form a valid atom list"),
                )
            }
            ItemDistribution::Discrete(d) => Some(d.clone()),
            _ => None,
        }
    }
}

/// Reads one column of reals — one value per line, optional single header
/// line — as used for empirical sample ingestion.
pub fn read_value_column(path: &Path) -> Result<Vec<f64>> {
    let err = |detail: String| DistError::ValueColumn {
        path: path.display().to_string(),
        detail,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| err(e.to_string()))?;
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| err(e.to_string()))?;
        let field = record.get(0).unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            // Tolerate a single non-numeric header line at the top.
            Err(_) if line == 0 => continue,
            Err(_) => {
                return Err(err(format!("non-numeric value {field:?} on line {}", line + 1)))
            }
        }
    }
    if values.is_empty() {
        return Err(err("no numeric values found".into()));
    }
    Ok(values)
}

/// Upper incomplete gamma `Γ(s, z)` for `s ≤ 1`, `z > 0`.
///
/// Positive `s` delegates to the regularized routine; `s ≤ 0` steps down with
/// `Γ(s−1, z) = (Γ(s, z) − z^(s−1)·e^(−z)) / (s−1)` from a base in `(0, 1]`,
/// or from `Γ(0, z) = E₁(z)` when `s` is a nonpositive integer (the
/// recurrence cannot cross s = 0).
fn upper_gamma_small_s(s: f64, z: f64) -> f64 {
    debug_assert!(s <= 1.0 && z > 0.0);
    if s > 0.0 {
        return gamma_ur(s, z).max(0.0) * gamma(s);
    }
    let frac = s - s.floor();
    let steps = (frac - s).round() as usize;
    let mut cur_s = frac;
    let mut g = if frac == 0.0 {
        exp_integral_e1(z)
    } else {
        gamma_ur(frac, z).max(0.0) * gamma(frac)
    };
    let e_neg_z = (-z).exp();
    for _ in 0..steps {
        let next_s = cur_s - 1.0;
        g = (g - z.powf(next_s) * e_neg_z) / next_s;
        cur_s = next_s;
    }
    g
}

/// Exponential integral `E₁(z) = ∫_z^∞ e^(−t)/t dt` for `z > 0`: power series
/// below 1, continued fraction (modified Lentz) above.
fn exp_integral_e1(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    if z <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..=60 {
            term *= -z / k as f64;
            let contribution = -term / k as f64;
            sum += contribution;
            if contribution.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - z.ln() + sum
    } else {
        // E₁(z) = e^(−z) · 1/(z+1− 1²/(z+3− 2²/(z+5− …))).
        const TINY: f64 = 1e-300;
        let mut b = z + 1.0;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for j in 1..200 {
            let a = -(j as f64) * (j as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let delta = c * d;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-z).exp()
    }
}
