//! Greedy maximization of set functions under cardinality constraints, the
//! multi-part welfare variant, and brute-force reference maximizers for
//! testing.
//!
//! Objectives are opaque fallible callables `&ItemSet → Result<f64, E>`, so
//! the same algorithms serve exact, fast-path, and Monte Carlo evaluators
//! (with an MC oracle, fixing the master seed keeps a run deterministic).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::ItemSet;

#[derive(Debug, Error)]
pub enum OptimizeError<E> {
    #[error("cannot select {k} items from a universe of {n}")]
    InfeasibleCardinality { k: usize, n: usize },
    #[error("part sizes sum to {total}, exceeding the universe of {n} items")]
    InfeasibleSizes { total: usize, n: usize },
    #[error("{oracles} oracles provided for {sizes} part sizes")]
    OracleCountMismatch { oracles: usize, sizes: usize },
    #[error("{candidates} candidate solutions exceed the brute-force cap of {cap}")]
    TooManyCandidates { candidates: u128, cap: u64 },
    #[error("objective evaluation failed: {0}")]
    Oracle(E),
}

type Result<T, E> = std::result::Result<T, OptimizeError<E>>;

/// Outcome of a single-objective selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen: ItemSet,
    pub objective: f64,
    /// Number of objective evaluations on candidate sets (the base value on
    /// the empty set is not counted).
    pub oracle_calls: u64,
    /// Per-step (item, marginal gain). Empty for brute force.
    pub trace: Vec<(u32, f64)>,
}

/// Outcome of a multi-part welfare allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareResult {
    /// Pairwise disjoint parts, sizes matching the requested `k_j`.
    pub parts: Vec<ItemSet>,
    /// Sum of the per-part objective values.
    pub welfare: f64,
}

fn set_of(ids: Vec<u32>) -> ItemSet {
    ItemSet::new(ids).expect("ids are distinct and nonzero by construction")
}

fn with_item(base: &[u32], extra: u32) -> ItemSet {
    let mut ids = Vec::with_capacity(base.len() + 1);
    ids.extend_from_slice(base);
    ids.push(extra);
    set_of(ids)
}

/// Plain greedy: `k` rounds, each adding the feasible item with the largest
/// marginal gain; ties go to the lowest item id.
///
/// Exactly `Σ_{t=1..k} (n−t+1)` oracle calls are made on candidate sets.
/// The `(1−1/e)` guarantee relative to the best size-`k` set applies when
/// the oracle is monotone submodular (not verified here).
pub fn greedy_select<E>(
    mut oracle: impl FnMut(&ItemSet) -> std::result::Result<f64, E>,
    universe: &ItemSet,
    k: usize,
) -> Result<SelectionResult, E> {
    let n = universe.len();
    if k > n {
        return Err(OptimizeError::InfeasibleCardinality { k, n });
    }
    let mut current = oracle(&ItemSet::empty()).map_err(OptimizeError::Oracle)?;
    let mut chosen: Vec<u32> = Vec::with_capacity(k);
    let mut remaining: Vec<u32> = universe.items().to_vec();
    let mut oracle_calls = 0u64;
    let mut trace = Vec::with_capacity(k);

    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for (pos, &id) in remaining.iter().enumerate() {
            let candidate = with_item(&chosen, id);
            let value = oracle(&candidate).map_err(OptimizeError::Oracle)?;
            oracle_calls += 1;
            // Strict improvement only: ascending iteration makes the lowest
            // id win ties.
            if best.map_or(true, |(_, best_value)| value > best_value) {
                best = Some((pos, value));
            }
        }
        let (pos, value) = best.expect("k ≤ n leaves at least one candidate");
        let id = remaining.remove(pos);
        trace.push((id, value - current));
        chosen.push(id);
        chosen.sort_unstable();
        current = value;
    }

    Ok(SelectionResult { chosen: set_of(chosen), objective: current, oracle_calls, trace })
}

/// Heap entry ordered by gain descending, then item id ascending.
struct LazyGain {
    gain: f64,
    id: u32,
    round: usize,
}

impl PartialEq for LazyGain {
    fn eq(&self, other: &Self) -> bool {
        self.gain == other.gain && self.id == other.id
    }
}
impl Eq for LazyGain {}
impl Ord for LazyGain {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.id.cmp(&self.id))
    }
}
impl PartialOrd for LazyGain {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lazy greedy: keeps stale gains in a priority queue and re-evaluates only
/// the top entry. Returns the same selection as [`greedy_select`] when the
/// oracle is submodular (cached gains then upper-bound current ones) and its
/// values are exact — roundoff can still flip ties between equal gains. Makes
/// usually far fewer oracle calls, which is also why its `oracle_calls` does
/// not follow the plain-greedy accounting.
pub fn greedy_select_lazy<E>(
    mut oracle: impl FnMut(&ItemSet) -> std::result::Result<f64, E>,
    universe: &ItemSet,
    k: usize,
) -> Result<SelectionResult, E> {
    let n = universe.len();
    if k > n {
        return Err(OptimizeError::InfeasibleCardinality { k, n });
    }
    let mut current = oracle(&ItemSet::empty()).map_err(OptimizeError::Oracle)?;
    let mut oracle_calls = 0u64;
    let mut heap = BinaryHeap::with_capacity(n);
    for &id in universe.items() {
        let value = oracle(&with_item(&[], id)).map_err(OptimizeError::Oracle)?;
        oracle_calls += 1;
        heap.push(LazyGain { gain: value - current, id, round: 0 });
    }

    let mut chosen: Vec<u32> = Vec::with_capacity(k);
    let mut trace = Vec::with_capacity(k);
    while chosen.len() < k {
        let top = heap.pop().expect("heap holds all unchosen items");
        if top.round == chosen.len() {
            current += top.gain;
            trace.push((top.id, top.gain));
            chosen.push(top.id);
            chosen.sort_unstable();
        } else {
            let value = oracle(&with_item(&chosen, top.id)).map_err(OptimizeError::Oracle)?;
            oracle_calls += 1;
            heap.push(LazyGain { gain: value - current, id: top.id, round: chosen.len() });
        }
    }

    Ok(SelectionResult { chosen: set_of(chosen), objective: current, oracle_calls, trace })
}

/// Greedy welfare: each round assigns the (part, item) pair with the largest
/// marginal gain among parts with remaining capacity; ties go to the lowest
/// (part index, item id).
pub fn greedy_welfare<E, F>(
    oracles: &mut [F],
    universe: &ItemSet,
    sizes: &[usize],
) -> Result<WelfareResult, E>
where
    F: FnMut(&ItemSet) -> std::result::Result<f64, E>,
{
    if oracles.len() != sizes.len() {
        return Err(OptimizeError::OracleCountMismatch {
            oracles: oracles.len(),
            sizes: sizes.len(),
        });
    }
    let total: usize = sizes.iter().sum();
    let n = universe.len();
    if total > n {
        return Err(OptimizeError::InfeasibleSizes { total, n });
    }

    let mut parts: Vec<Vec<u32>> = vec![Vec::new(); oracles.len()];
    let mut values = Vec::with_capacity(oracles.len());
    for oracle in oracles.iter_mut() {
        values.push(oracle(&ItemSet::empty()).map_err(OptimizeError::Oracle)?);
    }
    let mut unassigned: Vec<u32> = universe.items().to_vec();

    for _ in 0..total {
        let mut best: Option<(usize, usize, f64)> = None;
        for (j, oracle) in oracles.iter_mut().enumerate() {
            if parts[j].len() == sizes[j] {
                continue;
            }
            for (pos, &id) in unassigned.iter().enumerate() {
                let candidate = with_item(&parts[j], id);
                let value = oracle(&candidate).map_err(OptimizeError::Oracle)?;
                let gain = value - values[j];
                // Ascending (part, item) iteration with strict improvement
                // realizes the tie rule.
                if best.map_or(true, |(_, _, best_gain)| gain > best_gain) {
                    best = Some((j, pos, gain));
                }
            }
        }
        let (j, pos, gain) = best.expect("Σ sizes ≤ n leaves a feasible pair");
        let id = unassigned.remove(pos);
        parts[j].push(id);
        parts[j].sort_unstable();
        values[j] += gain;
    }

    Ok(WelfareResult {
        parts: parts.into_iter().map(set_of).collect(),
        welfare: values.iter().sum(),
    })
}

fn combination_count(n: usize, k: usize) -> u128 {
    // C(n, k) with early saturation; exact for everything the cap permits.
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Exhaustive maximizer over all size-`k` subsets; ties go to the
/// lexicographically smallest set, matching greedy's lowest-id rule.
pub fn brute_force_best<E>(
    mut oracle: impl FnMut(&ItemSet) -> std::result::Result<f64, E>,
    universe: &ItemSet,
    k: usize,
    max_candidates: u64,
) -> Result<SelectionResult, E> {
    let n = universe.len();
    if k > n {
        return Err(OptimizeError::InfeasibleCardinality { k, n });
    }
    let candidates = combination_count(n, k);
    if candidates > max_candidates as u128 {
        return Err(OptimizeError::TooManyCandidates { candidates, cap: max_candidates });
    }

    let mut best: Option<(ItemSet, f64)> = None;
    let mut oracle_calls = 0u64;
    for combo in universe.items().iter().copied().combinations(k) {
        let candidate = set_of(combo);
        let value = oracle(&candidate).map_err(OptimizeError::Oracle)?;
        oracle_calls += 1;
        // Combinations arrive in lexicographic order; strict improvement
        // keeps the smallest maximizer.
        if best.as_ref().map_or(true, |&(_, best_value)| value > best_value) {
            best = Some((candidate, value));
        }
    }
    let (chosen, objective) = best.expect("k ≤ n yields at least one candidate");
    Ok(SelectionResult { chosen, objective, oracle_calls, trace: Vec::new() })
}

/// Exhaustive maximizer over all ordered partitions into parts of the given
/// sizes; ties go to the lexicographically smallest `(S_1, …, S_m)`.
pub fn brute_force_welfare<E, F>(
    oracles: &mut [F],
    universe: &ItemSet,
    sizes: &[usize],
    max_candidates: u64,
) -> Result<WelfareResult, E>
where
    F: FnMut(&ItemSet) -> std::result::Result<f64, E>,
{
    if oracles.len() != sizes.len() {
        return Err(OptimizeError::OracleCountMismatch {
            oracles: oracles.len(),
            sizes: sizes.len(),
        });
    }
    let total: usize = sizes.iter().sum();
    let n = universe.len();
    if total > n {
        return Err(OptimizeError::InfeasibleSizes { total, n });
    }
    let mut candidates: u128 = 1;
    let mut left = n;
    for &size in sizes {
        candidates = candidates.saturating_mul(combination_count(left, size));
        left -= size;
    }
    if candidates > max_candidates as u128 {
        return Err(OptimizeError::TooManyCandidates { candidates, cap: max_candidates });
    }

    fn recurse<E, F>(
        oracles: &mut [F],
        sizes: &[usize],
        level: usize,
        remaining: &[u32],
        acc_parts: &mut Vec<ItemSet>,
        acc_value: f64,
        best: &mut Option<(Vec<ItemSet>, f64)>,
    ) -> Result<(), E>
    where
        F: FnMut(&ItemSet) -> std::result::Result<f64, E>,
    {
        if level == sizes.len() {
            if best.as_ref().map_or(true, |&(_, best_value)| acc_value > best_value) {
                *best = Some((acc_parts.clone(), acc_value));
            }
            return Ok(());
        }
        for combo in remaining.iter().copied().combinations(sizes[level]) {
            let part = set_of(combo);
            let value = oracles[level](&part).map_err(OptimizeError::Oracle)?;
            let rest: Vec<u32> = remaining
                .iter()
                .copied()
                .filter(|id| !part.contains(*id))
                .collect();
            acc_parts.push(part);
            recurse(oracles, sizes, level + 1, &rest, acc_parts, acc_value + value, best)?;
            acc_parts.pop();
        }
        Ok(())
    }

    let mut best = None;
    let mut scratch = Vec::with_capacity(sizes.len());
    recurse(oracles, sizes, 0, universe.items(), &mut scratch, 0.0, &mut best)?;
    let (parts, welfare) = best.expect("at least one partition exists");
    Ok(WelfareResult { parts, welfare })
}
