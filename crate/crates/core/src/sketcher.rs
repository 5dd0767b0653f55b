//! Per-item discretization: compress an item's value distribution into a
//! small discrete summary whose induced set valuation provably brackets the
//! original one.
//!
//! For a distribution `X`, a valuation scalar section `f`, and parameters
//! `(ε, a)`, the summary is built in three stages:
//!
//! 1. **Tail**: `τ = quantile(1−ε)`; all mass above `τ` collapses into one
//!    atom at `f⁻¹(H)` where `H = E[f(X) | X > τ]`, preserving the tail's
//!    conditional value exactly.
//! 2. **Lower cut**: mass at or below `a·τ` moves to 0.
//! 3. **Binning**: `(aτ, τ]` is split into geometric bins with ratio
//!    `1/(1−ε)`; each value maps to its bin's lower boundary, so quantized
//!    values sit within a `(1−ε)` factor of the originals.
//!
//! The summary has at most `⌊log_{1/(1−ε)}(1/a)⌋ + 3` atoms. The companion
//! calculators produce the multiplicative `(α, β)` guarantee for set queries
//! of bounded cardinality and the standard parameter choice `ε = c/k`,
//! `a = [ε(ε−Δ)]^{1/d}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DiscreteDistribution, DistError, ItemDistribution};
use crate::valuation::{ValuationError, ValuationSpec};

#[derive(Debug, Error)]
pub enum SketchError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "point mass {delta} at the cut quantile is not below epsilon = {epsilon}; \
         sketching needs epsilon > mass-at-tau"
    )]
    AtomMassTooLarge { delta: f64, epsilon: f64 },
    #[error("value {x} outside the quantizer domain ({lo}, {hi}]")]
    OutsideQuantizerDomain { x: f64, lo: f64, hi: f64 },
    #[error(
        "valuation has no closed-form scalar section and the distribution is continuous, \
         so the tail mean cannot be computed exactly"
    )]
    UnsupportedSection,
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
}

type Result<T> = std::result::Result<T, SketchError>;

/// The two discretization knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchParams {
    /// Tail level: the summary keeps exact conditional value above the
    /// `(1−ε)`-quantile. In `(0, 1)`.
    pub epsilon: f64,
    /// Lower cut `a`: mass below `a·τ` is zeroed. In `(0, 1)`.
    pub lower_cut: f64,
}

impl SketchParams {
    pub fn new(epsilon: f64, lower_cut: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(SketchError::InvalidParameter(format!(
                "epsilon must lie in (0,1), got {epsilon}"
            )));
        }
        if !(lower_cut > 0.0 && lower_cut < 1.0) {
            return Err(SketchError::InvalidParameter(format!(
                "lower cut must lie in (0,1), got {lower_cut}"
            )));
        }
        Ok(SketchParams { epsilon, lower_cut })
    }
}

/// Output of [`discretize`]: the summary distribution plus stage diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchResult {
    /// The discrete summary.
    pub summary: DiscreteDistribution,
    /// The `(1−ε)`-quantile the tail was cut at.
    pub tau: f64,
    /// `H = E[f(X) | X > τ]`.
    pub tail_mean: f64,
    /// The tail atom's position `f⁻¹(H)`.
    pub tail_atom: f64,
    /// `l`, the nominal number of geometric bins.
    pub bin_count: u32,
    /// Point mass of the input exactly at `τ` (the Δ that bound reports
    /// consume). Diagnostic only; not part of the wire format.
    pub delta_at_tau: f64,
}

/// Wire form of a sketch: what the CLI writes and reads.
/// `{"tau": …, "tail_mean": …, "tail_atom": …, "bin_count": …, "summary": {"atoms": …}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SketchFile {
    pub tau: f64,
    pub tail_mean: f64,
    pub tail_atom: f64,
    pub bin_count: u32,
    pub summary: DiscreteDistribution,
}

impl From<SketchResult> for SketchFile {
    fn from(r: SketchResult) -> Self {
        SketchFile {
            tau: r.tau,
            tail_mean: r.tail_mean,
            tail_atom: r.tail_atom,
            bin_count: r.bin_count,
            summary: r.summary,
        }
    }
}

/// Which guarantee family a bound report was computed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    /// Monotone subadditive or submodular `f`, weakly homogeneous with
    /// degree `d` and tolerance `η`.
    WeakHom,
    /// Monotone subadditive concave `f` admitting a concave extension to the
    /// whole space; no degree or tolerance dependence.
    ExtendableConcave,
    /// Coordinate-wise weak homogeneity with degree `d` and tolerance `η`.
    CoordinateWise,
}

impl std::fmt::Display for BoundVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundVariant::WeakHom => write!(f, "weak_hom"),
            BoundVariant::ExtendableConcave => write!(f, "extendable_concave"),
            BoundVariant::CoordinateWise => write!(f, "coordinate_wise"),
        }
    }
}

/// Multiplicative sandwich `α·v(S) ≤ u(S) ≤ β·v(S)` for all sets of
/// cardinality at most `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundReport {
    pub alpha: f64,
    pub beta: f64,
    pub variant: BoundVariant,
    /// `ψ(c, δ) = e^(−c/(1−c))·(1−δ)` at `c = εk`, `δ = Δ/ε` — the compact
    /// form of the guarantee under the standard parameter choice. Present
    /// only when `εk < 1`, where ψ is defined.
    pub psi: Option<f64>,
}

/// `l = ⌊log_{1/(1−ε)}(1/a)⌋`, the nominal geometric bin count.
pub fn bin_count(epsilon: f64, lower_cut: f64) -> Result<u32> {
    SketchParams::new(epsilon, lower_cut)?;
    let l = ((1.0 / lower_cut).ln() / (1.0 / (1.0 - epsilon)).ln()).floor();
    Ok(l as u32)
}

/// Maps `x ∈ (aτ, τ]` to the lower boundary of its geometric bin; the result
/// satisfies `(1−ε)x ≤ quantize(x) ≤ x`. Values outside `(aτ, τ]` are
/// rejected — the zero and tail regions are handled by [`discretize`], not
/// here.
pub fn quantize(x: f64, tau: f64, epsilon: f64, lower_cut: f64) -> Result<f64> {
    quantize_with_bin(x, tau, epsilon, lower_cut).map(|(q, _)| q)
}

/// [`quantize`] plus the 1-based bin index (index `l + 1` is the truncated
/// final bin `(aτ/(1−ε)^l, τ]`).
pub fn quantize_with_bin(x: f64, tau: f64, epsilon: f64, lower_cut: f64) -> Result<(f64, u32)> {
    SketchParams::new(epsilon, lower_cut)?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(SketchError::InvalidParameter(format!(
            "quantizer needs tau > 0, got {tau}"
        )));
    }
    let a_tau = lower_cut * tau;
    if !(x > a_tau && x <= tau) {
        return Err(SketchError::OutsideQuantizerDomain { x, lo: a_tau, hi: tau });
    }
    let l = bin_count(epsilon, lower_cut)?;
    let one_minus = 1.0 - epsilon;
    let edge = |j: u32| a_tau / one_minus.powi(j as i32);

    // First guess from logs, then correct against the exact edge values so
    // the left-open/right-closed bracket holds in floating point.
    let t = (x / a_tau).ln() / (1.0 / one_minus).ln();
    let mut j = (t.ceil() as i64).clamp(1, l as i64 + 1) as u32;
    while j > 1 && edge(j - 1) >= x {
        j -= 1;
    }
    while j <= l && edge(j) < x {
        j += 1;
    }
    Ok((edge(j - 1), j))
}

/// Builds the discrete summary of `dist` under the scalar section of `spec`.
///
/// Output atoms and masses:
/// * `0` with mass `P(X ≤ aτ)` (values exactly at the cut fall to zero);
/// * each bin's lower boundary with the bin's probability, bins intersected
///   with `(aτ, τ]` (values exactly at `τ` stay in the last bin);
/// * `f⁻¹(H)` with mass `P(X > τ)`, stored exactly and never quantized.
///
/// Equal-valued atoms merge; zero-mass atoms are dropped.
pub fn discretize(
    dist: &ItemDistribution,
    spec: &ValuationSpec,
    params: &SketchParams,
) -> Result<SketchResult> {
    let SketchParams { epsilon, lower_cut } = *SketchParams::new(params.epsilon, params.lower_cut)
        .as_ref()
        .map_err(|_| {
            SketchError::InvalidParameter(format!(
                "epsilon {} / lower cut {} out of range",
                params.epsilon, params.lower_cut
            ))
        })?;
    let tau = dist.quantile(1.0 - epsilon)?;
    let delta_at_tau = dist.atom_mass_at(tau);
    if epsilon <= delta_at_tau {
        return Err(SketchError::AtomMassTooLarge { delta: delta_at_tau, epsilon });
    }
    let cdf_tau = dist.cdf(tau);
    let tail_mass = 1.0 - cdf_tau;
    if tail_mass <= 0.0 {
        return Err(SketchError::Dist(DistError::EmptyTail { tau }));
    }

    let tail_mean = match spec.scalar_fn() {
        Ok(f) => dist.tail_value(f, tau)?,
        // No closed-form section: exact summation still works when the
        // distribution itself is discrete.
        Err(_) => match dist.to_discrete() {
            Some(dd) => {
                let mut mass = 0.0;
                let mut weighted = 0.0;
                for &(v, p) in dd.atoms() {
                    if v > tau {
                        mass += p;
                        weighted += p * spec.evaluate(&[v])?;
                    }
                }
                if mass <= 0.0 {
                    return Err(SketchError::Dist(DistError::EmptyTail { tau }));
                }
                weighted / mass
            }
            None => return Err(SketchError::UnsupportedSection),
        },
    };
    if !tail_mean.is_finite() {
        return Err(SketchError::Dist(DistError::InfiniteTail(format!(
            "tail mean above tau = {tau} is not finite"
        ))));
    }
    let tail_atom = spec.scalar_inverse(tail_mean)?;

    let l = bin_count(epsilon, lower_cut)?;
    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(l as usize + 3);
    let a_tau = lower_cut * tau;
    atoms.push((0.0, dist.cdf(a_tau)));
    if tau > 0.0 {
        let one_minus = 1.0 - epsilon;
        // One shared boundary per edge: each cdf value enters once with each
        // sign, so the masses telescope to 1 up to roundoff.
        let mut lo = a_tau;
        let mut cdf_lo = dist.cdf(a_tau);
        for j in 1..=l {
            let hi = (a_tau / one_minus.powi(j as i32)).min(tau);
            let cdf_hi = dist.cdf(hi);
            atoms.push((lo, (cdf_hi - cdf_lo).max(0.0)));
            lo = hi;
            cdf_lo = cdf_hi;
            if hi >= tau {
                break;
            }
        }
        if lo < tau {
            // Truncated final bin (aτ/(1−ε)^l, τ], represented by its lower
            // boundary; the floor definition of l keeps (1−ε)x ≤ boundary.
            atoms.push((lo, (cdf_tau - cdf_lo).max(0.0)));
        }
    }
    atoms.push((tail_atom, tail_mass));

    let summary = DiscreteDistribution::from_unsorted(atoms)?;
    Ok(SketchResult { summary, tau, tail_mean, tail_atom, bin_count: l, delta_at_tau })
}

/// The standard parameter choice: `ε = c/k` and `a = [ε(ε−Δ)]^{1/d}`,
/// requiring `c ∈ (Δ·k, 1)`.
pub fn default_params(k: u32, c: f64, d: f64, delta: f64) -> Result<SketchParams> {
    if k == 0 {
        return Err(SketchError::InvalidParameter("k must be at least 1".into()));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(SketchError::InvalidParameter(format!(
            "atom-mass bound must be a nonnegative real, got {delta}"
        )));
    }
    if !(d > 0.0 && d <= 1.0) {
        return Err(SketchError::InvalidParameter(format!(
            "degree must lie in (0,1], got {d}"
        )));
    }
    if !(c > delta * k as f64 && c < 1.0) {
        return Err(SketchError::InvalidParameter(format!(
            "c must lie in (delta*k, 1) = ({}, 1), got {c}",
            delta * k as f64
        )));
    }
    let epsilon = c / k as f64;
    let lower_cut = (epsilon * (epsilon - delta)).powf(1.0 / d);
    if !(lower_cut > 0.0 && lower_cut < 1.0) {
        return Err(SketchError::InvalidParameter(format!(
            "derived lower cut {lower_cut} is outside (0,1)"
        )));
    }
    SketchParams::new(epsilon, lower_cut)
}

/// `ψ(c, δ) = e^(−c/(1−c))·(1−δ)` for `c ∈ (0,1)`, `δ ∈ [0,1]`.
pub fn psi(c: f64, delta: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(SketchError::InvalidParameter(format!(
            "psi needs c in (0,1), got {c}"
        )));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(SketchError::InvalidParameter(format!(
            "psi needs delta in [0,1], got {delta}"
        )));
    }
    Ok((-c / (1.0 - c)).exp() * (1.0 - delta))
}

/// The `(α, β)` sandwich factors for sets of cardinality at most `k`.
///
/// All variants share `α = ½(1−ε)^(k−1)(1−Δ/ε)`. The upper factor is
/// variant-specific:
///
/// * weakly homogeneous: `β = 2η(1 + a^d·k/(ε−Δ)) / ((1−ε)^k (1−Δ/ε))`;
/// * extendable concave: the same with `η = 1` and exponent 1 on `a`;
/// * coordinate-wise:    `β = 2η^k(1 + a^d·k/(ε−Δ)) / (1−ε)^(2k)`.
pub fn approximation_factors(
    k: u32,
    epsilon: f64,
    lower_cut: f64,
    delta: f64,
    d: f64,
    eta: f64,
    variant: BoundVariant,
) -> Result<BoundReport> {
    if k == 0 {
        return Err(SketchError::InvalidParameter("k must be at least 1".into()));
    }
    SketchParams::new(epsilon, lower_cut)?;
    if !(delta >= 0.0 && delta < epsilon) {
        return Err(SketchError::AtomMassTooLarge { delta, epsilon });
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(SketchError::InvalidParameter(format!(
            "degree must lie in [0,1], got {d}"
        )));
    }
    if !(eta >= 1.0) {
        return Err(SketchError::InvalidParameter(format!(
            "tolerance must be at least 1, got {eta}"
        )));
    }
    let kf = k as f64;
    let one_minus = 1.0 - epsilon;
    let delta_slack = 1.0 - delta / epsilon;
    let alpha = 0.5 * one_minus.powi(k as i32 - 1) * delta_slack;
    let beta = match variant {
        BoundVariant::WeakHom => {
            2.0 * eta * (1.0 + lower_cut.powf(d) * kf / (epsilon - delta))
                / (one_minus.powi(k as i32) * delta_slack)
        }
        BoundVariant::ExtendableConcave => {
            2.0 * (1.0 + lower_cut * kf / (epsilon - delta))
                / (one_minus.powi(k as i32) * delta_slack)
        }
        BoundVariant::CoordinateWise => {
            2.0 * eta.powi(k as i32) * (1.0 + lower_cut.powf(d) * kf / (epsilon - delta))
                / one_minus.powi(2 * k as i32)
        }
    };
    let c = epsilon * kf;
    let psi_value = if c < 1.0 { Some(psi(c, delta / epsilon)?) } else { None };
    Ok(BoundReport { alpha, beta, variant, psi: psi_value })
}
