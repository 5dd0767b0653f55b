//! Valuation functions over nonnegative outcome vectors.
//!
//! A [`ValuationSpec`] names a monotone set valuation `f: R₊ⁿ → R₊` with
//! `f(0) = 0`, evaluated on the vector of item outcomes (absent coordinates
//! are zero). Alongside evaluation, each spec declares the analytic
//! [`FunctionProperties`] the sketching bounds consume — most importantly the
//! degree `d` and tolerance `η` of *weak homogeneity over [0,1]*:
//!
//! ```text
//! (1/η)·θ·f(x) ≤ f(θx) ≤ θ^d·f(x)      for all θ ∈ [0,1], x in the domain.
//! ```
//!
//! Properties are declared per variant from a fixed analytic table, not
//! inferred numerically; [`ValuationSpec::check_weak_homogeneity`] exists to
//! spot-check the declaration on concrete points.
//!
//! [`ScalarTransform`]s implement the univariate change of variables
//! `f*(x) = f(φ(x₁), …, φ(xₙ))`: strictly increasing maps fixing zero that
//! move non-homogeneous valuations into the tractable table (for instance a
//! power-of-sum valuation composed with a power map becomes degree-1 weakly
//! homogeneous). The change of variables only relocates the *input
//! distributions*; see [`crate::sketcher`] for how it is consumed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute slack used by the inequality spot-checks in this module.
pub const INEQ_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ValuationError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("scalar value {value} outside the range of {what}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("per-coordinate transform arity {expected} does not match {got} values")]
    ArityMismatch { expected: usize, got: usize },
    #[error(
        "composite has no tabulated properties; use apply_transform_with and supply them"
    )]
    UnsupportedComposite,
    #[error("valuation has no scalar section in closed form (per-coordinate transforms)")]
    NoScalarSection,
}

type Result<T> = std::result::Result<T, ValuationError>;

/// Concave scalar functions `g: R₊ → R₊` with `g(0) = 0`, used inside
/// sum-then-concave valuations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarConcave {
    /// `g(z) = √z`.
    Sqrt,
    /// `g(z) = z^r` with `r ∈ (0, 1]`.
    Power { r: f64 },
    /// `g(z) = 1 − e^(−λz)` with `λ > 0`.
    ExpSaturation { lambda: f64 },
}

impl ScalarConcave {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalarConcave::Sqrt => Ok(()),
            ScalarConcave::Power { r } => {
                if r > 0.0 && r <= 1.0 && r.is_finite() {
                    Ok(())
                } else {
                    Err(ValuationError::InvalidParameter(format!(
                        "concave power exponent must lie in (0, 1], got {r}"
                    )))
                }
            }
            ScalarConcave::ExpSaturation { lambda } => {
                if lambda > 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(ValuationError::InvalidParameter(format!(
                        "saturation rate must be positive, got {lambda}"
                    )))
                }
            }
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            ScalarConcave::Sqrt => z.sqrt(),
            ScalarConcave::Power { r } => z.powf(r),
            // 1 − e^(−λz) via expm1 for small-argument accuracy.
            ScalarConcave::ExpSaturation { lambda } => -(-lambda * z).exp_m1(),
        }
    }

    /// Inverse of `eval` on its range.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() || y < 0.0 {
            return Err(ValuationError::OutOfRange { what: "concave scalar", value: y });
        }
        match *self {
            ScalarConcave::Sqrt => Ok(y * y),
            ScalarConcave::Power { r } => Ok(y.powf(1.0 / r)),
            ScalarConcave::ExpSaturation { lambda } => {
                if y >= 1.0 {
                    Err(ValuationError::OutOfRange { what: "saturating scalar (range [0,1))", value: y })
                } else {
                    Ok(-(-y).ln_1p() / lambda)
                }
            }
        }
    }

    /// Infimum of the elasticity `z·g'(z)/g(z)` over `z > 0`; this is the
    /// weak-homogeneity degree of the induced sum-then-concave valuation.
    pub fn min_elasticity(&self) -> f64 {
        match *self {
            ScalarConcave::Sqrt => 0.5,
            ScalarConcave::Power { r } => r,
            // Elasticity of 1 − e^(−λz) decays to 0 as z → ∞.
            ScalarConcave::ExpSaturation { .. } => 0.0,
        }
    }
}

/// Strictly increasing univariate maps `φ: R₊ → R₊` with `φ(0) = 0`, used for
/// per-coordinate changes of variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarTransform {
    Identity,
    /// `φ(z) = z^p` with `p > 0` (any positive exponent keeps φ increasing).
    Power { exponent: f64 },
    /// `φ(z) = 1 − e^(−λz)` with `λ > 0`.
    ExpSaturation { lambda: f64 },
}

impl ScalarTransform {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalarTransform::Identity => Ok(()),
            ScalarTransform::Power { exponent } => {
                if exponent > 0.0 && exponent.is_finite() {
                    Ok(())
                } else {
                    Err(ValuationError::InvalidParameter(format!(
                        "transform exponent must be positive (the map must be increasing), got {exponent}"
                    )))
                }
            }
            ScalarTransform::ExpSaturation { lambda } => {
                if lambda > 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(ValuationError::InvalidParameter(format!(
                        "transform saturation rate must be positive, got {lambda}"
                    )))
                }
            }
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            ScalarTransform::Identity => z,
            ScalarTransform::Power { exponent } => z.powf(exponent),
            ScalarTransform::ExpSaturation { lambda } => -(-lambda * z).exp_m1(),
        }
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() || y < 0.0 {
            return Err(ValuationError::OutOfRange { what: "transform", value: y });
        }
        match *self {
            ScalarTransform::Identity => Ok(y),
            ScalarTransform::Power { exponent } => Ok(y.powf(1.0 / exponent)),
            ScalarTransform::ExpSaturation { lambda } => {
                if y >= 1.0 {
                    Err(ValuationError::OutOfRange { what: "saturating transform (range [0,1))", value: y })
                } else {
                    Ok(-(-y).ln_1p() / lambda)
                }
            }
        }
    }
}

/// Analytic properties a valuation declares about itself. The sketching
/// bounds consume `weak_hom_degree` (d), `weak_hom_tolerance` (η), and
/// `extendable_concave`; the boolean structure flags gate which set-level
/// guarantees (greedy, subadditive composition) apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionProperties {
    pub monotone: bool,
    pub subadditive: bool,
    pub submodular: bool,
    /// Degree `d ∈ [0, 1]` of weak homogeneity over [0,1].
    pub weak_hom_degree: f64,
    /// Tolerance `η ≥ 1` of weak homogeneity over [0,1].
    pub weak_hom_tolerance: f64,
    /// Whether `f` admits a monotone concave extension to all of R₊ⁿ that
    /// agrees with `f` on the domain (gates the concave bound route).
    pub extendable_concave: bool,
    /// Degree of *coordinate-wise* weak homogeneity when declared.
    pub coordinate_wise_degree: Option<f64>,
}

impl FunctionProperties {
    fn table(subadditive: bool, submodular: bool, d: f64, extendable: bool) -> Self {
        FunctionProperties {
            monotone: true,
            subadditive,
            submodular,
            weak_hom_degree: d,
            weak_hom_tolerance: 1.0,
            extendable_concave: extendable,
            coordinate_wise_degree: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.weak_hom_degree) {
            return Err(ValuationError::InvalidParameter(format!(
                "weak homogeneity degree must lie in [0, 1], got {}",
                self.weak_hom_degree
            )));
        }
        if !(self.weak_hom_tolerance >= 1.0) {
            return Err(ValuationError::InvalidParameter(format!(
                "weak homogeneity tolerance must be ≥ 1, got {}",
                self.weak_hom_tolerance
            )));
        }
        if self.extendable_concave && !(self.monotone && self.subadditive) {
            return Err(ValuationError::InvalidParameter(
                "an extendable-concave valuation must be monotone and subadditive".into(),
            ));
        }
        Ok(())
    }
}

/// The scalar section of a valuation along one coordinate, `x ↦ f(x·e₁)`,
/// restricted to the closed family the tail-expectation formulas support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarFn {
    /// `x ↦ x`.
    Identity,
    /// `x ↦ x^r`, `r > 0`.
    Power(f64),
    /// `x ↦ 1 − e^(−λx)`, `λ > 0`.
    ExpSaturation(f64),
}

impl ScalarFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ScalarFn::Identity => x,
            ScalarFn::Power(r) => x.powf(r),
            ScalarFn::ExpSaturation(lambda) => -(-lambda * x).exp_m1(),
        }
    }
}

/// Specification of a set valuation. Evaluation treats its argument as the
/// outcome vector of the queried items; coordinates not supplied are zero,
/// which is safe because every variant satisfies `f(x, 0) = f(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValuationSpec {
    /// `f(x) = max_i x_i`.
    Max,
    /// `f(x) = x_(1) + … + x_(h)`, the sum of the `h` largest coordinates.
    TopH { h: usize },
    /// `f(x) = (Σ x_i^r)^(1/r)` with `r ≥ 1`.
    Ces { r: f64 },
    /// `f(x) = (Σ x_i)^r` with `r ∈ (0, 1]`.
    PowerOfSum { r: f64 },
    /// `f(x) = g(Σ x_i)` for a concave scalar `g`.
    ConcaveOfSum { g: ScalarConcave },
    /// `f(x) = 1 − Π (1 − x_i)` on `[0, 1]ⁿ`.
    SuccessProbability,
    /// `f*(x) = f(φ₁(x₁), …, φₙ(xₙ))`: a base valuation after a change of
    /// variables. A single transform is shared by every coordinate; a list of
    /// several applies positionally and then requires dense input vectors.
    /// The composite's properties are carried explicitly because they are not
    /// derivable from the base's table in general.
    Transformed {
        base: Box<ValuationSpec>,
        transforms: Vec<ScalarTransform>,
        properties: FunctionProperties,
    },
}

impl ValuationSpec {
    pub fn top_h(h: usize) -> Result<Self> {
        if h == 0 {
            return Err(ValuationError::InvalidParameter(
                "top-h needs h ≥ 1".into(),
            ));
        }
        Ok(ValuationSpec::TopH { h })
    }

    pub fn ces(r: f64) -> Result<Self> {
        if !(r >= 1.0) || !r.is_finite() {
            return Err(ValuationError::InvalidParameter(format!(
                "CES exponent must satisfy r ≥ 1, got {r}"
            )));
        }
        Ok(ValuationSpec::Ces { r })
    }

    pub fn power_of_sum(r: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(ValuationError::InvalidParameter(format!(
                "power-of-sum exponent must lie in (0, 1], got {r}"
            )));
        }
        Ok(ValuationSpec::PowerOfSum { r })
    }

    pub fn concave_of_sum(g: ScalarConcave) -> Result<Self> {
        g.validate()?;
        Ok(ValuationSpec::ConcaveOfSum { g })
    }

    /// Re-validates parameter ranges (useful after deserializing).
    pub fn validate(&self) -> Result<()> {
        match self {
            ValuationSpec::Max | ValuationSpec::SuccessProbability => Ok(()),
            ValuationSpec::TopH { h } => {
                if *h == 0 {
                    Err(ValuationError::InvalidParameter("top-h needs h ≥ 1".into()))
                } else {
                    Ok(())
                }
            }
            ValuationSpec::Ces { r } => {
                if *r >= 1.0 && r.is_finite() {
                    Ok(())
                } else {
                    Err(ValuationError::InvalidParameter(format!(
                        "CES exponent must satisfy r ≥ 1, got {r}"
                    )))
                }
            }
            ValuationSpec::PowerOfSum { r } => {
                if *r > 0.0 && *r <= 1.0 {
                    Ok(())
                } else {
                    Err(ValuationError::InvalidParameter(format!(
                        "power-of-sum exponent must lie in (0, 1], got {r}"
                    )))
                }
            }
            ValuationSpec::ConcaveOfSum { g } => g.validate(),
            ValuationSpec::Transformed { base, transforms, properties } => {
                base.validate()?;
                if transforms.is_empty() {
                    return Err(ValuationError::InvalidParameter(
                        "transformed valuation needs at least one transform".into(),
                    ));
                }
                for t in transforms {
                    t.validate()?;
                }
                properties.validate()
            }
        }
    }

    /// Evaluates `f` on an outcome vector. Values must be finite and
    /// nonnegative; the success-probability form additionally requires them
    /// in `[0, 1]`.
    pub fn evaluate(&self, values: &[f64]) -> Result<f64> {
        for &v in values {
            if !v.is_finite() || v < 0.0 {
                return Err(ValuationError::Domain(format!(
                    "outcome values must be finite and nonnegative, got {v}"
                )));
            }
        }
        match self {
            ValuationSpec::Max => Ok(values.iter().copied().fold(0.0, f64::max)),
            ValuationSpec::TopH { h } => {
                let mut sorted = values.to_vec();
                sorted.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite values"));
                Ok(sorted.iter().take(*h).sum())
            }
            ValuationSpec::Ces { r } => {
                // Integer exponents dominate usage; powi keeps them cheap.
                let sum: f64 = if *r == 2.0 {
                    values.iter().map(|&v| v * v).sum()
                } else {
                    values.iter().map(|&v| v.powf(*r)).sum()
                };
                Ok(sum.powf(1.0 / *r))
            }
            ValuationSpec::PowerOfSum { r } => {
                let sum: f64 = values.iter().sum();
                Ok(sum.powf(*r))
            }
            ValuationSpec::ConcaveOfSum { g } => Ok(g.eval(values.iter().sum())),
            ValuationSpec::SuccessProbability => {
                let mut miss = 1.0;
                for &v in values {
                    if v > 1.0 {
                        return Err(ValuationError::Domain(format!(
                            "success probabilities live in [0, 1], got {v}"
                        )));
                    }
                    miss *= 1.0 - v;
                }
                Ok(1.0 - miss)
            }
            ValuationSpec::Transformed { base, transforms, .. } => {
                let mapped: Vec<f64> = if transforms.len() == 1 {
                    values.iter().map(|&v| transforms[0].eval(v)).collect()
                } else {
                    if transforms.len() != values.len() {
                        return Err(ValuationError::ArityMismatch {
                            expected: transforms.len(),
                            got: values.len(),
                        });
                    }
                    values.iter().zip(transforms).map(|(&v, t)| t.eval(v)).collect()
                };
                base.evaluate(&mapped)
            }
        }
    }

    /// Inverse of the scalar section `x ↦ f(x·e₁)` on its range. Rejects `y`
    /// outside the range (for instance `y ≥ 1` for the success-probability
    /// form, whose scalar section has range `[0, 1)`).
    pub fn scalar_inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() || y < 0.0 {
            return Err(ValuationError::OutOfRange { what: "scalar section", value: y });
        }
        match self {
            ValuationSpec::Max | ValuationSpec::TopH { .. } | ValuationSpec::Ces { .. } => Ok(y),
            ValuationSpec::PowerOfSum { r } => Ok(y.powf(1.0 / *r)),
            ValuationSpec::ConcaveOfSum { g } => g.inverse(y),
            ValuationSpec::SuccessProbability => {
                if y >= 1.0 {
                    Err(ValuationError::OutOfRange {
                        what: "success-probability scalar section (range [0,1))",
                        value: y,
                    })
                } else {
                    Ok(y)
                }
            }
            ValuationSpec::Transformed { base, transforms, .. } => {
                // f*(x·e₁) = f(φ(x)·e₁) since every transform fixes zero, so
                // invert the base section first, then the first coordinate's
                // transform.
                let inner = base.scalar_inverse(y)?;
                transforms[0].inverse(inner)
            }
        }
    }

    /// The scalar section as a closed-form [`ScalarFn`], when it falls in the
    /// supported family. Needed for tail expectations of parametric
    /// (continuous) distributions; discrete inputs never require it.
    pub fn scalar_fn(&self) -> Result<ScalarFn> {
        match self {
            ValuationSpec::Max
            | ValuationSpec::TopH { .. }
            | ValuationSpec::Ces { .. }
            | ValuationSpec::SuccessProbability => Ok(ScalarFn::Identity),
            ValuationSpec::PowerOfSum { r } => Ok(ScalarFn::Power(*r)),
            ValuationSpec::ConcaveOfSum { g } => Ok(match *g {
                ScalarConcave::Sqrt => ScalarFn::Power(0.5),
                ScalarConcave::Power { r } => ScalarFn::Power(r),
                ScalarConcave::ExpSaturation { lambda } => ScalarFn::ExpSaturation(lambda),
            }),
            ValuationSpec::Transformed { base, transforms, .. } => {
                if transforms.len() != 1 {
                    return Err(ValuationError::NoScalarSection);
                }
                let inner = base.scalar_fn()?;
                match (inner, &transforms[0]) {
                    (f, ScalarTransform::Identity) => Ok(f),
                    (ScalarFn::Identity, ScalarTransform::Power { exponent }) => {
                        Ok(ScalarFn::Power(*exponent))
                    }
                    (ScalarFn::Identity, ScalarTransform::ExpSaturation { lambda }) => {
                        Ok(ScalarFn::ExpSaturation(*lambda))
                    }
                    (ScalarFn::Power(r), ScalarTransform::Power { exponent }) => {
                        let combined = r * exponent;
                        if (combined - 1.0).abs() <= INEQ_TOLERANCE {
                            Ok(ScalarFn::Identity)
                        } else {
                            Ok(ScalarFn::Power(combined))
                        }
                    }
                    _ => Err(ValuationError::NoScalarSection),
                }
            }
        }
    }

    /// The declared analytic property table for this variant.
    ///
    /// Success probability is tabulated with degree 1/2 and tolerance 1. The
    /// degree-1/2 upper inequality is exact at θ = 1 (the boundary point
    /// θ* = 1/(2(1−d)) for d = 1/2) and holds on single-coordinate vectors,
    /// which is where the bound computations apply it; it does not hold on
    /// every interior multi-coordinate point (e.g. x = (0.9, 0.9), θ = 0.9),
    /// so spot-checks there can legitimately report the upper side. The
    /// saturating concave-of-sum has degree 0 and is instead flagged
    /// extendable-concave, routing it to the concave bound variant.
    pub fn properties(&self) -> FunctionProperties {
        match self {
            ValuationSpec::Max | ValuationSpec::TopH { .. } | ValuationSpec::Ces { .. } => {
                FunctionProperties::table(true, true, 1.0, false)
            }
            ValuationSpec::PowerOfSum { r } => FunctionProperties::table(true, true, *r, false),
            ValuationSpec::ConcaveOfSum { g } => {
                let extendable = matches!(g, ScalarConcave::ExpSaturation { .. });
                FunctionProperties::table(true, true, g.min_elasticity(), extendable)
            }
            ValuationSpec::SuccessProbability => FunctionProperties::table(true, true, 0.5, false),
            ValuationSpec::Transformed { properties, .. } => properties.clone(),
        }
    }

    /// Builds the change-of-variables composite `f*(x) = f(φ(x))` for the two
    /// tabulated cases, canonicalizing where the composite collapses to a
    /// built-in form:
    ///
    /// * power-of-sum with exponent `r` under the shared power map
    ///   `φ(z) = z^(1/r)` — the composite `(Σ x_i^(1/r))^r` is subadditive,
    ///   submodular, and weakly homogeneous with degree 1;
    /// * success probability under a shared saturating map
    ///   `φ(z) = 1 − e^(−λz)` — the composite *is* `1 − e^(−λ·Σx)`, returned
    ///   as the equivalent concave-of-sum spec.
    ///
    /// All-identity transforms return the spec unchanged. Any other composite
    /// must come with caller-supplied properties via
    /// [`ValuationSpec::apply_transform_with`].
    pub fn apply_transform(&self, transforms: &[ScalarTransform]) -> Result<ValuationSpec> {
        if transforms.is_empty() {
            return Err(ValuationError::InvalidParameter(
                "need at least one transform".into(),
            ));
        }
        for t in transforms {
            t.validate()?;
        }
        if transforms.iter().all(|t| *t == ScalarTransform::Identity) {
            return Ok(self.clone());
        }
        if transforms.len() == 1 {
            match (self, &transforms[0]) {
                (ValuationSpec::PowerOfSum { r }, ScalarTransform::Power { exponent })
                    if (r * exponent - 1.0).abs() <= INEQ_TOLERANCE =>
                {
                    return Ok(ValuationSpec::Transformed {
                        base: Box::new(self.clone()),
                        transforms: transforms.to_vec(),
                        properties: FunctionProperties::table(true, true, 1.0, false),
                    });
                }
                (ValuationSpec::SuccessProbability, ScalarTransform::ExpSaturation { lambda }) => {
                    // 1 − Π(1 − (1 − e^(−λ x_i))) = 1 − e^(−λ Σ x_i).
                    return ValuationSpec::concave_of_sum(ScalarConcave::ExpSaturation {
                        lambda: *lambda,
                    });
                }
                _ => {}
            }
        }
        Err(ValuationError::UnsupportedComposite)
    }

    /// Like [`ValuationSpec::apply_transform`], but trusts the caller's
    /// analysis of the composite's properties.
    pub fn apply_transform_with(
        &self,
        transforms: &[ScalarTransform],
        properties: FunctionProperties,
    ) -> Result<ValuationSpec> {
        if transforms.is_empty() {
            return Err(ValuationError::InvalidParameter(
                "need at least one transform".into(),
            ));
        }
        for t in transforms {
            t.validate()?;
        }
        properties.validate()?;
        Ok(ValuationSpec::Transformed {
            base: Box::new(self.clone()),
            transforms: transforms.to_vec(),
            properties,
        })
    }

    /// Spot-checks the declared weak-homogeneity sandwich at one point:
    /// `(1/η)·θ·f(x) ≤ f(θx) ≤ θ^d·f(x)` within [`INEQ_TOLERANCE`]. Points
    /// where `f(x)` is numerically zero are reported as holding (both sides
    /// degenerate).
    pub fn check_weak_homogeneity(&self, x: &[f64], theta: f64) -> Result<HomCheck> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(ValuationError::InvalidParameter(format!(
                "θ must lie in [0, 1], got {theta}"
            )));
        }
        let fx = self.evaluate(x)?;
        if fx < 1e-12 {
            return Ok(HomCheck::Holds);
        }
        let scaled: Vec<f64> = x.iter().map(|&v| v * theta).collect();
        let f_scaled = self.evaluate(&scaled)?;
        let props = self.properties();
        let lower = theta * fx / props.weak_hom_tolerance;
        if f_scaled + INEQ_TOLERANCE < lower {
            return Ok(HomCheck::LowerViolated { lhs: lower, rhs: f_scaled });
        }
        let upper = theta.powf(props.weak_hom_degree) * fx;
        if f_scaled > upper + INEQ_TOLERANCE {
            return Ok(HomCheck::UpperViolated { lhs: f_scaled, rhs: upper });
        }
        Ok(HomCheck::Holds)
    }
}

/// Outcome of a weak-homogeneity spot-check, reporting which side failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HomCheck {
    Holds,
    /// `θ·f(x)/η` (lhs) exceeded `f(θx)` (rhs).
    LowerViolated { lhs: f64, rhs: f64 },
    /// `f(θx)` (lhs) exceeded `θ^d·f(x)` (rhs).
    UpperViolated { lhs: f64, rhs: f64 },
}

impl HomCheck {
    pub fn holds(&self) -> bool {
        matches!(self, HomCheck::Holds)
    }
}

impl std::fmt::Display for ValuationSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValuationSpec::Max => write!(f, "max"),
            ValuationSpec::TopH { h } => write!(f, "top_h({h})"),
            ValuationSpec::Ces { r } => write!(f, "ces({r})"),
            ValuationSpec::PowerOfSum { r } => write!(f, "power_of_sum({r})"),
            ValuationSpec::ConcaveOfSum { g } => match g {
                ScalarConcave::Sqrt => write!(f, "concave_of_sum(sqrt)"),
                ScalarConcave::Power { r } => write!(f, "concave_of_sum(power({r}))"),
                ScalarConcave::ExpSaturation { lambda } => {
                    write!(f, "concave_of_sum(exp_saturation({lambda}))")
                }
            },
            ValuationSpec::SuccessProbability => write!(f, "success_probability"),
            ValuationSpec::Transformed { base, transforms, .. } => {
                write!(f, "transformed({base}; ")?;
                for (i, t) in transforms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    match t {
                        ScalarTransform::Identity => write!(f, "identity")?,
                        ScalarTransform::Power { exponent } => write!(f, "power({exponent})")?,
                        ScalarTransform::ExpSaturation { lambda } => {
                            write!(f, "exp_saturation({lambda})")?
                        }
                    }
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} (tol {tol})"
        );
    }

    #[test]
    fn evaluate_matches_hand_worked_values() {
        assert_close(ValuationSpec::Max.evaluate(&[1.0, 3.0]).unwrap(), 3.0, 0.0);
        let ces = ValuationSpec::ces(2.0).unwrap();
        assert_close(ces.evaluate(&[3.0, 4.0]).unwrap(), 5.0, 1e-12);
        let sp = ValuationSpec::SuccessProbability;
        assert_close(sp.evaluate(&[0.5, 0.5]).unwrap(), 0.75, 1e-12);
        let top2 = ValuationSpec::top_h(2).unwrap();
        assert_close(top2.evaluate(&[5.0, 4.0, 3.0]).unwrap(), 9.0, 0.0);
    }

    #[test]
    fn evaluate_of_empty_vector_is_zero() {
        let specs = [
            ValuationSpec::Max,
            ValuationSpec::top_h(3).unwrap(),
            ValuationSpec::ces(2.0).unwrap(),
            ValuationSpec::power_of_sum(0.5).unwrap(),
            ValuationSpec::concave_of_sum(ScalarConcave::Sqrt).unwrap(),
            ValuationSpec::concave_of_sum(ScalarConcave::ExpSaturation { lambda: 1.0 }).unwrap(),
            ValuationSpec::SuccessProbability,
        ];
        for spec in &specs {
            assert_eq!(spec.evaluate(&[]).unwrap(), 0.0, "{spec}");
            assert_eq!(spec.evaluate(&[0.0, 0.0]).unwrap(), 0.0, "{spec}");
        }
    }

    #[test]
    fn toph_pads_with_zeros_when_short() {
        let top3 = ValuationSpec::top_h(3).unwrap();
        assert_close(top3.evaluate(&[2.0]).unwrap(), 2.0, 0.0);
    }

    #[test]
    fn domain_violations_are_rejected() {
        assert!(ValuationSpec::Max.evaluate(&[-1.0]).is_err());
        assert!(ValuationSpec::Max.evaluate(&[f64::NAN]).is_err());
        assert!(ValuationSpec::SuccessProbability.evaluate(&[1.2]).is_err());
        // Exactly 1.0 is in the success-probability domain.
        assert_close(
            ValuationSpec::SuccessProbability.evaluate(&[1.0, 0.3]).unwrap(),
            1.0,
            0.0,
        );
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(ValuationSpec::ces(0.5).is_err());
        assert!(ValuationSpec::top_h(0).is_err());
        assert!(ValuationSpec::power_of_sum(0.0).is_err());
        assert!(ValuationSpec::power_of_sum(1.2).is_err());
        assert!(ScalarConcave::Power { r: 1.5 }.validate().is_err());
        assert!(ScalarConcave::ExpSaturation { lambda: 0.0 }.validate().is_err());
        assert!(ScalarTransform::Power { exponent: -2.0 }.validate().is_err());
    }

    #[test]
    fn scalar_inverse_matches_hand_worked_values() {
        assert_close(ValuationSpec::Max.scalar_inverse(2.5).unwrap(), 2.5, 0.0);
        let sqrt_sum = ValuationSpec::concave_of_sum(ScalarConcave::Sqrt).unwrap();
        assert_close(sqrt_sum.scalar_inverse(3.0).unwrap(), 9.0, 1e-12);
        let pos = ValuationSpec::power_of_sum(0.5).unwrap();
        assert_close(pos.scalar_inverse(4.0).unwrap(), 16.0, 1e-9);
    }

    #[test]
    fn scalar_inverse_range_checks() {
        assert!(ValuationSpec::SuccessProbability.scalar_inverse(1.0).is_err());
        assert!(ValuationSpec::SuccessProbability.scalar_inverse(0.999).is_ok());
        let sat = ValuationSpec::concave_of_sum(ScalarConcave::ExpSaturation { lambda: 2.0 })
            .unwrap();
        assert!(sat.scalar_inverse(1.0).is_err());
        // g(z) = 1 − e^(−2z); g(1) = 1 − e^(−2).
        let y = -(-2.0f64).exp_m1();
        assert_close(sat.scalar_inverse(y).unwrap(), 1.0, 1e-12);
        assert!(ValuationSpec::Max.scalar_inverse(-0.1).is_err());
    }

    #[test]
    fn scalar_inverse_round_trips_through_sections() {
        let specs = [
            ValuationSpec::Max,
            ValuationSpec::ces(3.0).unwrap(),
            ValuationSpec::power_of_sum(0.7).unwrap(),
            ValuationSpec::concave_of_sum(ScalarConcave::Power { r: 0.3 }).unwrap(),
        ];
        for spec in &specs {
            for x in [0.1, 0.9, 2.4, 17.0] {
                let y = spec.evaluate(&[x]).unwrap();
                assert_close(spec.scalar_inverse(y).unwrap(), x, 1e-9);
            }
        }
    }

    #[test]
    fn property_table_matches_declarations() {
        let max = ValuationSpec::Max.properties();
        assert!(max.monotone && max.subadditive && max.submodular);
        assert_eq!(max.weak_hom_degree, 1.0);
        assert_eq!(max.weak_hom_tolerance, 1.0);
        assert!(!max.extendable_concave);

        let sat = ValuationSpec::concave_of_sum(ScalarConcave::ExpSaturation { lambda: 1.0 })
            .unwrap()
            .properties();
        assert_eq!(sat.weak_hom_degree, 0.0);
        assert!(sat.extendable_concave);

        assert_eq!(
            ValuationSpec::power_of_sum(0.5).unwrap().properties().weak_hom_degree,
            0.5
        );
        assert_eq!(ValuationSpec::SuccessProbability.properties().weak_hom_degree, 0.5);
        assert_eq!(
            ValuationSpec::concave_of_sum(ScalarConcave::Sqrt).unwrap().properties().weak_hom_degree,
            0.5
        );
    }

    #[test]
    fn power_of_sum_transform_composite_has_degree_one() {
        let base = ValuationSpec::power_of_sum(0.5).unwrap();
        let composite = base
            .apply_transform(&[ScalarTransform::Power { exponent: 2.0 }])
            .unwrap();
        // (Σ x_i²)^(1/2): the 3-4-5 triangle again.
        assert_close(composite.evaluate(&[3.0, 4.0]).unwrap(), 5.0, 1e-12);
        let props = composite.properties();
        assert_eq!(props.weak_hom_degree, 1.0);
        assert_eq!(props.weak_hom_tolerance, 1.0);
        assert!(props.subadditive && props.submodular);
        // Scalar section collapses to the identity.
        assert_eq!(composite.scalar_fn().unwrap(), ScalarFn::Identity);
    }

    #[test]
    fn success_probability_transform_canonicalizes_to_saturating_sum() {
        let composite = ValuationSpec::SuccessProbability
            .apply_transform(&[ScalarTransform::ExpSaturation { lambda: 1.0 }])
            .unwrap();
        assert_eq!(
            composite,
            ValuationSpec::ConcaveOfSum { g: ScalarConcave::ExpSaturation { lambda: 1.0 } }
        );
        // 1 − e^(−Σx) at Σx = 2·ln 2 is 0.75.
        let two_ln2 = std::f64::consts::LN_2;
        assert_close(composite.evaluate(&[two_ln2, two_ln2]).unwrap(), 0.75, 1e-12);
        assert!(composite.properties().extendable_concave);
    }

    #[test]
    fn identity_transform_returns_spec_unchanged() {
        let spec = ValuationSpec::ces(2.0).unwrap();
        let same = spec.apply_transform(&[ScalarTransform::Identity]).unwrap();
        assert_eq!(same, spec);
    }

    #[test]
    fn unsupported_composites_need_explicit_properties() {
        let err = ValuationSpec::Max.apply_transform(&[ScalarTransform::Power { exponent: 2.0 }]);
        assert!(matches!(err, Err(ValuationError::UnsupportedComposite)));

        // With caller-supplied properties the same composite is accepted.
        let props = FunctionProperties {
            monotone: true,
            subadditive: true,
            submodular: true,
            weak_hom_degree: 1.0,
            weak_hom_tolerance: 1.0,
            extendable_concave: false,
            coordinate_wise_degree: None,
        };
        let spec = ValuationSpec::Max
            .apply_transform_with(&[ScalarTransform::Power { exponent: 2.0 }], props)
            .unwrap();
        assert_close(spec.evaluate(&[2.0, 3.0]).unwrap(), 9.0, 1e-12);
    }

    #[test]
    fn per_coordinate_transforms_require_dense_vectors() {
        let props = ValuationSpec::Max.properties();
        let spec = ValuationSpec::Max
            .apply_transform_with(
                &[
                    ScalarTransform::Identity,
                    ScalarTransform::Power { exponent: 2.0 },
                ],
                props,
            )
            .unwrap();
        assert_close(spec.evaluate(&[5.0, 2.0]).unwrap(), 5.0, 0.0);
        assert!(matches!(
            spec.evaluate(&[5.0]),
            Err(ValuationError::ArityMismatch { expected: 2, got: 1 })
        ));
        assert!(spec.scalar_fn().is_err());
    }

    #[test]
    fn weak_homogeneity_spot_checks() {
        // Boundary θ = 1 always holds.
        assert!(ValuationSpec::Max.check_weak_homogeneity(&[2.0, 3.0], 1.0).unwrap().holds());
        // CES with degree 1: both sides tight at every θ.
        let ces = ValuationSpec::ces(2.0).unwrap();
        assert!(ces.check_weak_homogeneity(&[3.0, 4.0], 0.5).unwrap().holds());
        assert_close(ces.evaluate(&[1.5, 2.0]).unwrap(), 2.5, 1e-12);
        // Success probability at x = (1,1): the degree-1/2 upper bound is
        // tight at θ* = 1/(2(1−d)) = 1.
        let sp = ValuationSpec::SuccessProbability;
        let theta_star: f64 = 1.0 / (2.0 * (1.0 - 0.5));
        assert!(sp.check_weak_homogeneity(&[1.0, 1.0], theta_star).unwrap().holds());
        let fx = sp.evaluate(&[1.0, 1.0]).unwrap();
        let f_scaled = sp.evaluate(&[theta_star, theta_star]).unwrap();
        assert_close(f_scaled, theta_star.powf(0.5) * fx, 1e-9);
        // θ = 0 degenerates to f(0) = 0 ≤ 0.
        assert!(sp.check_weak_homogeneity(&[0.5, 0.5], 0.0).unwrap().holds());
    }

    #[test]
    fn weak_homogeneity_reports_the_violated_side() {
        // The square composite f(x) = (Σx)² scales like θ², which stays
        // under the θ^d upper bound on [0,1] but drops below the θ·f(x)/η
        // lower bound — a false degree-1, tolerance-1 claim must be caught
        // on that side.
        let props = FunctionProperties {
            monotone: true,
            subadditive: false,
            submodular: false,
            weak_hom_degree: 1.0,
            weak_hom_tolerance: 1.0,
            extendable_concave: false,
            coordinate_wise_degree: None,
        };
        let square = ValuationSpec::power_of_sum(1.0)
            .unwrap()
            .apply_transform_with(&[ScalarTransform::Power { exponent: 2.0 }], props)
            .unwrap();
        let check = square.check_weak_homogeneity(&[2.0], 0.5).unwrap();
        assert!(matches!(check, HomCheck::LowerViolated { .. }), "{check:?}");
    }

    #[test]
    fn subadditive_floor_from_halving() {
        // Subadditivity implies f(x) ≤ ⌈1/λ⌉·f(λx) for λ ∈ (0,1].
        let specs = [
            ValuationSpec::Max,
            ValuationSpec::ces(2.0).unwrap(),
            ValuationSpec::power_of_sum(0.5).unwrap(),
        ];
        for spec in &specs {
            for lambda in [0.3, 0.5, 0.9, 1.0] {
                let x = [1.7, 0.4, 2.2];
                let fx = spec.evaluate(&x).unwrap();
                let scaled: Vec<f64> = x.iter().map(|v| v * lambda).collect();
                let f_scaled = spec.evaluate(&scaled).unwrap();
                let ceil_inv = (1.0 / lambda).ceil();
                assert!(fx <= ceil_inv * f_scaled + INEQ_TOLERANCE, "{spec} λ={lambda}");
            }
        }
    }

    #[test]
    fn json_round_trip_preserves_specs() {
        let specs = [
            ValuationSpec::Max,
            ValuationSpec::top_h(2).unwrap(),
            ValuationSpec::ces(2.0).unwrap(),
            ValuationSpec::power_of_sum(0.5).unwrap(),
            ValuationSpec::concave_of_sum(ScalarConcave::ExpSaturation { lambda: 0.7 }).unwrap(),
            ValuationSpec::SuccessProbability,
            ValuationSpec::power_of_sum(0.5)
                .unwrap()
                .apply_transform(&[ScalarTransform::Power { exponent: 2.0 }])
                .unwrap(),
        ];
        for spec in &specs {
            let json = serde_json::to_string(spec).unwrap();
            let back: ValuationSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(&back, spec);
            back.validate().unwrap();
        }
        let json = serde_json::to_string(&ValuationSpec::ces(2.0).unwrap()).unwrap();
        assert!(json.contains("\"variant\":\"ces\""), "{json}");
    }

    #[test]
    fn deserialized_specs_can_be_revalidated() {
        let bad: ValuationSpec = serde_json::from_str(r#"{"variant":"ces","r":0.5}"#).unwrap();
        assert!(bad.validate().is_err());
        let unknown = serde_json::from_str::<ValuationSpec>(r#"{"variant":"median"}"#);
        assert!(unknown.is_err());
    }

    #[test]
    fn display_names_are_stable() {
        assert_eq!(ValuationSpec::Max.to_string(), "max");
        assert_eq!(ValuationSpec::ces(2.0).unwrap().to_string(), "ces(2)");
        assert_eq!(
            ValuationSpec::power_of_sum(0.5).unwrap().to_string(),
            "power_of_sum(0.5)"
        );
        assert_eq!(
            ValuationSpec::concave_of_sum(ScalarConcave::Sqrt).unwrap().to_string(),
            "concave_of_sum(sqrt)"
        );
    }
}
