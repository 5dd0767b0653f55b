//! Sketching toolkit for stochastic set valuations.
//!
//! A ground set of items carries independent, nonnegative random performance
//! values. A monotone valuation `f` (max, top-h, CES, concave-of-sum, ...)
//! scores joint outcomes, and the quantity of interest for a set `S` is the
//! expected value `u(S) = E[f(X_S)]`. Keeping full per-item distributions
//! around is expensive, so [`sketcher`] compresses each distribution into a
//! small discrete summary — an upper quantile cut, a conditional tail mean
//! folded into a single atom, a geometric grid of bins in between, and a lower
//! cut to zero. The sketched value `v(S) = E[f(Y_S)]`, computable from the
//! summaries alone, brackets `u(S)` multiplicatively: `α·v(S) ≤ u(S) ≤ β·v(S)`
//! with explicit factors reported by [`sketcher::approximation_factors`].
//!
//! Module map:
//!
//! * [`valuation`] — valuation function specs, their analytic properties
//!   (degree/tolerance of weak homogeneity, subadditivity, submodularity),
//!   scalar sections and inverses, univariate change-of-variable transforms.
//! * [`dist`] — item value distributions (exponential, Pareto, uniform,
//!   empirical, discrete) with cdf/quantile/tail-expectation primitives.
//! * [`sketcher`] — the discretization itself plus parameter defaults and the
//!   approximation-factor report.
//! * [`eval`] — exact, closed-form, and Monte Carlo evaluation of `E[f]` over
//!   products of per-item distributions.
//! * [`optimize`] — greedy subset selection, greedy welfare allocation, and
//!   brute-force reference optima.
//! * [`baseline`] — a replication-based test-score baseline for comparisons.
//! * [`bench`] — reproducible ratio experiments (`v/u`) over synthetic and
//!   CSV-ingested item populations, with CSV/JSON reporting.

#![forbid(unsafe_code)]

pub mod baseline;
pub mod bench;
pub mod dist;
pub mod eval;
pub mod optimize;
pub mod sketcher;
pub mod valuation;

pub(crate) mod seeds;
