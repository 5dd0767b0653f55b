//! Experiment harness: sweeps (valuation, k, c) cells over synthetic or
//! CSV-derived item collections, estimates the original set value `u(S)` and
//! the sketch value `v(S)` on random sets, and emits machine-readable
//! reports (per-record CSV, boxplot-quartile summary, run metadata).
//!
//! Every randomized stage derives its stream from the master seed and its
//! task coordinates, so a run is a pure function of the config.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{read_value_column, DistError, ItemDistribution};
use crate::eval::{
    expected_value_fast, expected_value_mc, EvalConfig, EvalError, EvalEstimate, ItemSet,
};
use crate::seeds;
use crate::sketcher::{discretize, SketchError, SketchParams};
use crate::valuation::{ValuationError, ValuationSpec};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset is empty after filtering")]
    EmptyDataset,
    #[error("no successful records to report")]
    EmptyRun,
    #[error("csv ingestion failed: {0}")]
    Ingest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    CsvFile(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
}

type Result<T> = std::result::Result<T, BenchError>;

/// Item-distribution families for the synthetic experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistFamily {
    /// Exponential with mean drawn uniformly from (0, 1].
    ExponentialU01,
    /// Pareto with shape drawn uniformly from [1.1, 3) and scale 1.5.
    ParetoShapeU,
    /// Every item is an independent copy of the empirical distribution of
    /// the values in the given single-column CSV.
    FromCsv { path: PathBuf },
}

impl DistFamily {
    fn label(&self) -> &'static str {
        match self {
            DistFamily::ExponentialU01 => "exponential_u01",
            DistFamily::ParetoShapeU => "pareto_shape_u",
            DistFamily::FromCsv { .. } => "from_csv",
        }
    }
}

/// Declarative description of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Ground-set size (synthetic runs; real runs take it from the data).
    pub n: u32,
    /// Training samples per item; also the Monte Carlo sample count.
    pub n_train: u64,
    pub valuations: Vec<ValuationSpec>,
    pub dist_family: DistFamily,
    pub k_values: Vec<u32>,
    pub c_values: Vec<f64>,
    /// Random sets drawn per k (fewer when only fewer distinct sets exist).
    pub sets_per_k: u32,
    pub seed: u64,
    /// Explicit lower cut `a`; when absent it is derived per cell from
    /// `[ε(ε−Δ)]^(1/d)` with `Δ` the largest at-quantile atom mass.
    #[serde(default)]
    pub a_override: Option<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(BenchError::InvalidConfig("n must be at least 1".into()));
        }
        if self.n_train == 0 {
            return Err(BenchError::InvalidConfig(
                "n_train must be at least 1".into(),
            ));
        }
        if self.valuations.is_empty() {
            return Err(BenchError::InvalidConfig(
                "at least one valuation is required".into(),
            ));
        }
        for spec in &self.valuations {
            spec.validate()?;
        }
        if self.k_values.is_empty() || self.k_values.iter().any(|&k| k == 0) {
            return Err(BenchError::InvalidConfig(
                "k_values must be nonempty positive integers".into(),
            ));
        }
        if self.c_values.is_empty()
            || self.c_values.iter().any(|&c| !(c > 0.0) || !c.is_finite())
        {
            return Err(BenchError::InvalidConfig(
                "c_values must be nonempty positive reals".into(),
            ));
        }
        if self.sets_per_k == 0 {
            return Err(BenchError::InvalidConfig(
                "sets_per_k must be at least 1".into(),
            ));
        }
        if let Some(a) = self.a_override {
            if !(a > 0.0 && a < 1.0) {
                return Err(BenchError::InvalidConfig(format!(
                    "a_override must lie in (0,1), got {a}"
                )));
            }
        }
        Ok(())
    }
}

/// One evaluated (valuation, family, k, c, set) task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub valuation: String,
    pub family: String,
    pub k: u32,
    pub c: f64,
    pub epsilon: f64,
    pub lower_cut: f64,
    pub set: ItemSet,
    pub u_estimate: EvalEstimate,
    pub v_estimate: EvalEstimate,
    /// `v(S) / u(S)`.
    pub ratio: f64,
}

/// A task that produced no record, with the reason; nothing is dropped
/// silently, so `records + skips` always accounts for every task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub valuation: String,
    pub family: String,
    pub k: u32,
    pub c: f64,
    pub set: Option<ItemSet>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<RatioRecord>,
    pub skips: Vec<SkipRecord>,
    /// For real-data runs: item id `i` is `item_names[i−1]`.
    pub item_names: Option<Vec<String>>,
}

/// Draws `want` distinct sets of size `k` from `1..=n` (all of them, in
/// lexicographic order, when fewer exist).
pub fn sample_sets(n: u32, k: u32, want: u32, seed: u64) -> Result<Vec<ItemSet>> {
    if k > n {
        return Err(BenchError::InvalidConfig(format!(
            "cannot sample sets of size {k} from {n} items"
        )));
    }
    let total: u128 = {
        let k = k.min(n - k) as u128;
        let mut acc: u128 = 1;
        for i in 0..k {
            acc = acc.saturating_mul(n as u128 - i) / (i + 1);
        }
        acc
    };
    if total <= want as u128 {
        return Ok((1..=n)
            .combinations(k as usize)
            .map(|ids| ItemSet::new(ids).expect("combinations are distinct"))
            .collect());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<Vec<u32>> = HashSet::with_capacity(want as usize);
    let mut sets = Vec::with_capacity(want as usize);
    let mut attempts: u64 = 0;
    let max_attempts = 1000 * want as u64;
    while sets.len() < want as usize {
        attempts += 1;
        if attempts > max_attempts {
            return Err(BenchError::InvalidConfig(format!(
                "could not sample {want} distinct sets of size {k} from {n} items"
            )));
        }
        // Partial Fisher-Yates: the first k slots become the sample.
        let mut pool: Vec<u32> = (1..=n).collect();
        for j in 0..k as usize {
            let swap = j + rng.gen_range(0..(n as usize - j));
            pool.swap(j, swap);
        }
        let mut ids: Vec<u32> = pool[..k as usize].to_vec();
        ids.sort_unstable();
        if seen.insert(ids.clone()) {
            sets.push(ItemSet::new(ids).expect("sampled ids are distinct"));
        }
    }
    Ok(sets)
}

/// Synthetic experiment: draw per-item distributions from the family, build
/// per-item training samples, and run the sweep.
pub fn run_synthetic(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let max_k = *config.k_values.iter().max().expect("validated nonempty");
    if max_k > config.n {
        return Err(BenchError::InvalidConfig(format!(
            "largest k = {max_k} exceeds n = {}",
            config.n
        )));
    }

    let csv_base = match &config.dist_family {
        DistFamily::FromCsv { path } => {
            Some(ItemDistribution::from_samples(&read_value_column(path)?)?)
        }
        _ => None,
    };
    let items: Vec<ItemDistribution> = (1..=config.n)
        .map(|id| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seeds::mix(config.seed, &[seeds::ITEMS, id as u64]));
            match &config.dist_family {
                // 1 − U maps [0,1) onto (0,1], keeping the mean positive.
                DistFamily::ExponentialU01 => {
                    ItemDistribution::exponential(1.0 - rng.gen::<f64>())
                }
                DistFamily::ParetoShapeU => {
                    ItemDistribution::pareto(1.1 + 1.9 * rng.gen::<f64>(), 1.5)
                }
                DistFamily::FromCsv { .. } => {
                    Ok(csv_base.as_ref().expect("loaded above").clone())
                }
            }
        })
        .collect::<std::result::Result<_, DistError>>()?;

    let train = build_training(&items, config.n_train, config.seed)?;
    run_pipeline(config, &config.k_values, config.dist_family.label(), &train, None)
}

/// Real-data experiment: the dataset's empirical distributions serve as both
/// the ground truth for `u` and the training data for the sketches. Requested
/// set sizes are clamped to the number of items.
pub fn run_real(
    config: &ExperimentConfig,
    dataset: &BTreeMap<String, ItemDistribution>,
) -> Result<RunOutput> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    let mut names = Vec::with_capacity(dataset.len());
    let mut train = BTreeMap::new();
    for (id, (name, dist)) in (1u32..).zip(dataset.iter()) {
        dist.validate()?;
        names.push(name.clone());
        train.insert(id, dist.clone());
    }
    let n = train.len() as u32;
    let k_values: Vec<u32> = config
        .k_values
        .iter()
        .map(|&k| k.min(n))
        .sorted_unstable()
        .dedup()
        .collect();
    run_pipeline(config, &k_values, "empirical", &train, Some(names))
}

fn build_training(
    items: &[ItemDistribution],
    n_train: u64,
    seed: u64,
) -> Result<BTreeMap<u32, ItemDistribution>> {
    let samples: Vec<(u32, ItemDistribution)> = items
        .par_iter()
        .enumerate()
        .map(|(idx, dist)| {
            let id = idx as u32 + 1;
            let mut rng =
                ChaCha8Rng::seed_from_u64(seeds::mix(seed, &[seeds::TRAIN, id as u64]));
            let draws: Vec<f64> = (0..n_train).map(|_| dist.sample(&mut rng)).collect();
            ItemDistribution::from_samples(&draws).map(|d| (id, d))
        })
        .collect::<std::result::Result<_, DistError>>()?;
    Ok(samples.into_iter().collect())
}

fn run_pipeline(
    config: &ExperimentConfig,
    k_values: &[u32],
    family: &str,
    train: &BTreeMap<u32, ItemDistribution>,
    item_names: Option<Vec<String>>,
) -> Result<RunOutput> {
    let n = train.len() as u32;
    let sets_by_k: BTreeMap<u32, Vec<ItemSet>> = k_values
        .iter()
        .map(|&k| {
            sample_sets(n, k, config.sets_per_k, seeds::mix(config.seed, &[seeds::SETS, k as u64]))
                .map(|sets| (k, sets))
        })
        .collect::<Result<_>>()?;

    // u(S) does not depend on c, so estimate it once per (valuation, k, set)
    // and share it across the c sweep. The same stream seed later drives the
    // sketch-side Monte Carlo, coupling the two estimates draw-for-draw.
    let mut u_tasks: Vec<(usize, u32, usize)> = Vec::new();
    for vi in 0..config.valuations.len() {
        for &k in k_values {
            for si in 0..sets_by_k[&k].len() {
                u_tasks.push((vi, k, si));
            }
        }
    }
    let u_values: BTreeMap<(usize, u32, usize), std::result::Result<EvalEstimate, String>> =
        u_tasks
            .par_iter()
            .map(|&(vi, k, si)| {
                let spec = &config.valuations[vi];
                let set = &sets_by_k[&k][si];
                let stream = eval_stream_seed(config.seed, vi, k, si);
                let estimate = expected_value_mc(spec, train, set, config.n_train, stream)
                    .map_err(|e| e.to_string());
                ((vi, k, si), estimate)
            })
            .collect();

    let cells: Vec<(usize, usize, usize)> = (0..config.valuations.len())
        .flat_map(|vi| {
            (0..k_values.len())
                .flat_map(move |ki| (0..config.c_values.len()).map(move |ci| (vi, ki, ci)))
        })
        .collect();

    let outputs: Vec<(Vec<RatioRecord>, Vec<SkipRecord>)> = cells
        .par_iter()
        .map(|&(vi, ki, ci)| {
            run_cell(config, family, train, &sets_by_k, &u_values, vi, k_values[ki], ci)
        })
        .collect();

    let mut records = Vec::new();
    let mut skips = Vec::new();
    for (mut cell_records, mut cell_skips) in outputs {
        records.append(&mut cell_records);
        skips.append(&mut cell_skips);
    }
    let tasks: usize =
        config.valuations.len() * config.c_values.len() * sets_by_k.values().map(Vec::len).sum::<usize>();
    debug_assert_eq!(records.len() + skips.len(), tasks);
    Ok(RunOutput { records, skips, item_names })
}

fn eval_stream_seed(seed: u64, vi: usize, k: u32, si: usize) -> u64 {
    seeds::mix(seed, &[seeds::EVAL, vi as u64, k as u64, si as u64])
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    config: &ExperimentConfig,
    family: &str,
    train: &BTreeMap<u32, ItemDistribution>,
    sets_by_k: &BTreeMap<u32, Vec<ItemSet>>,
    u_values: &BTreeMap<(usize, u32, usize), std::result::Result<EvalEstimate, String>>,
    vi: usize,
    k: u32,
    ci: usize,
) -> (Vec<RatioRecord>, Vec<SkipRecord>) {
    let spec = &config.valuations[vi];
    let c = config.c_values[ci];
    let sets = &sets_by_k[&k];
    let valuation = spec.to_string();
    let skip_all = |reason: String| -> (Vec<RatioRecord>, Vec<SkipRecord>) {
        let skips = sets
            .iter()
            .map(|set| SkipRecord {
                valuation: valuation.clone(),
                family: family.to_string(),
                k,
                c,
                set: Some(set.clone()),
                reason: reason.clone(),
            })
            .collect();
        (Vec::new(), skips)
    };

    let epsilon = c / k as f64;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return skip_all(format!("epsilon = c/k = {epsilon} is outside (0,1)"));
    }

    // Δ for the cell: the largest point mass any item carries at its own
    // cut quantile.
    let mut delta = 0.0f64;
    for dist in train.values() {
        match dist.quantile(1.0 - epsilon) {
            Ok(tau) => delta = delta.max(dist.atom_mass_at(tau)),
            Err(e) => return skip_all(format!("quantile failed: {e}")),
        }
    }
    if epsilon <= delta {
        return skip_all(format!(
            "tail level epsilon = {epsilon} is not above the largest at-quantile atom mass {delta}"
        ));
    }

    let lower_cut = match config.a_override {
        Some(a) => a,
        None => {
            let props = spec.properties();
            let d = if props.weak_hom_degree == 0.0 && props.extendable_concave {
                1.0
            } else {
                props.weak_hom_degree
            };
            if d <= 0.0 {
                return skip_all(format!(
                    "valuation {valuation} has no positive homogeneity degree to derive a from"
                ));
            }
            (epsilon * (epsilon - delta)).powf(1.0 / d)
        }
    };
    if !(lower_cut > 0.0 && lower_cut < 1.0) {
        return skip_all(format!("derived lower cut {lower_cut} is outside (0,1)"));
    }

    let params = SketchParams { epsilon, lower_cut };
    let mut summaries = BTreeMap::new();
    let mut summary_items = BTreeMap::new();
    for (&id, dist) in train {
        match discretize(dist, spec, &params) {
            Ok(result) => {
                summary_items.insert(id, ItemDistribution::Discrete(result.summary.clone()));
                summaries.insert(id, result.summary);
            }
            Err(e) => return skip_all(format!("sketching item {id} failed: {e}")),
        }
    }

    let eval_config = EvalConfig::default();
    let mut records = Vec::with_capacity(sets.len());
    let mut skips = Vec::new();
    for (si, set) in sets.iter().enumerate() {
        let mut skip = |reason: String| {
            skips.push(SkipRecord {
                valuation: valuation.clone(),
                family: family.to_string(),
                k,
                c,
                set: Some(set.clone()),
                reason,
            });
        };
        let u_estimate = match &u_values[&(vi, k, si)] {
            Ok(estimate) => estimate.clone(),
            Err(reason) => {
                skip(format!("u estimation failed: {reason}"));
                continue;
            }
        };
        if !(u_estimate.value > 0.0) {
            skip(format!("nonpositive u estimate {}", u_estimate.value));
            continue;
        }
        let v_estimate = match expected_value_fast(spec, &summaries, set, &eval_config) {
            Ok(estimate) => estimate,
            Err(EvalError::NotDecomposable(_)) | Err(EvalError::SupportCapExceeded { .. }) => {
                match expected_value_mc(
                    spec,
                    &summary_items,
                    set,
                    config.n_train,
                    eval_stream_seed(config.seed, vi, k, si),
                ) {
                    Ok(estimate) => estimate,
                    Err(e) => {
                        skip(format!("v estimation failed: {e}"));
                        continue;
                    }
                }
            }
            Err(e) => {
                skip(format!("v estimation failed: {e}"));
                continue;
            }
        };
        if !(v_estimate.value > 0.0) {
            skip(format!("nonpositive v estimate {}", v_estimate.value));
            continue;
        }
        records.push(RatioRecord {
            valuation: valuation.clone(),
            family: family.to_string(),
            k,
            c,
            epsilon,
            lower_cut,
            set: set.clone(),
            ratio: v_estimate.value / u_estimate.value,
            u_estimate,
            v_estimate,
        });
    }
    (records, skips)
}

/// Column schema for [`ingest_csv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSchema {
    pub value_column: String,
    pub group_column: String,
    /// Groups with fewer rows than this are dropped.
    pub min_rows: usize,
}

/// Reads a headered CSV and builds one empirical distribution per group.
pub fn ingest_csv(
    path: &Path,
    schema: &IngestSchema,
) -> Result<BTreeMap<String, ItemDistribution>> {
    if schema.min_rows == 0 {
        return Err(BenchError::InvalidConfig(
            "min_rows must be at least 1".into(),
        ));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| BenchError::Ingest(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| BenchError::Ingest(format!("reading header: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| BenchError::Ingest(format!("missing column `{name}`")))
    };
    let value_idx = col(&schema.value_column)?;
    let group_idx = col(&schema.group_column)?;

    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in reader.records() {
        let record = row.map_err(|e| BenchError::Ingest(e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let group = record
            .get(group_idx)
            .ok_or_else(|| BenchError::Ingest(format!("line {line}: short row")))?;
        let raw = record
            .get(value_idx)
            .ok_or_else(|| BenchError::Ingest(format!("line {line}: short row")))?;
        let value: f64 = raw.trim().parse().map_err(|_| {
            BenchError::Ingest(format!("line {line}: `{raw}` is not a number"))
        })?;
        if !value.is_finite() || value < 0.0 {
            return Err(BenchError::Ingest(format!(
                "line {line}: value {value} is outside the nonnegative support"
            )));
        }
        groups.entry(group.to_string()).or_default().push(value);
    }

    let mut dataset = BTreeMap::new();
    for (name, samples) in groups {
        if samples.len() >= schema.min_rows {
            dataset.insert(name, ItemDistribution::from_samples(&samples)?);
        }
    }
    if dataset.is_empty() {
        return Err(BenchError::Ingest(format!(
            "no group has at least {} rows",
            schema.min_rows
        )));
    }
    Ok(dataset)
}

/// Smoothed vote-quality score `(up + c₁) / (up + down + c₂)`.
pub fn bayesian_ratio(up: u64, down: u64, c1: f64, c2: f64) -> Result<f64> {
    if !(c1 > 0.0 && c1.is_finite()) || !(c2 > 0.0 && c2.is_finite()) {
        return Err(BenchError::InvalidConfig(format!(
            "prior constants must be positive reals, got c1 = {c1}, c2 = {c2}"
        )));
    }
    Ok((up as f64 + c1) / (up as f64 + down as f64 + c2))
}

#[derive(Debug, Serialize)]
struct SummaryEntry {
    valuation: String,
    family: String,
    k: u32,
    c: f64,
    count: usize,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn method_label(estimate: &EvalEstimate) -> &'static str {
    match estimate.method {
        crate::eval::EvalMethod::ExactEnum => "exact_enum",
        crate::eval::EvalMethod::FastPath => "fast_path",
        crate::eval::EvalMethod::MonteCarlo { .. } => "monte_carlo",
    }
}

/// Writes `results.csv`, `summary.json`, and `run_meta.json` into `out_dir`
/// and returns the three paths. Deterministic: identical runs produce
/// byte-identical files.
pub fn emit_report(
    output: &RunOutput,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if output.records.is_empty() {
        return Err(BenchError::EmptyRun);
    }
    std::fs::create_dir_all(out_dir)?;

    let results_path = out_dir.join("results.csv");
    let mut writer = csv::Writer::from_path(&results_path)?;
    writer.write_record([
        "valuation",
        "family",
        "k",
        "c",
        "epsilon",
        "lower_cut",
        "set",
        "u_value",
        "u_std_error",
        "u_method",
        "v_value",
        "v_std_error",
        "v_method",
        "ratio",
    ])?;
    for r in &output.records {
        let set = r.set.items().iter().map(u32::to_string).join(";");
        writer.write_record([
            r.valuation.clone(),
            r.family.clone(),
            r.k.to_string(),
            r.c.to_string(),
            r.epsilon.to_string(),
            r.lower_cut.to_string(),
            set,
            r.u_estimate.value.to_string(),
            r.u_estimate.std_error.to_string(),
            method_label(&r.u_estimate).to_string(),
            r.v_estimate.value.to_string(),
            r.v_estimate.std_error.to_string(),
            method_label(&r.v_estimate).to_string(),
            r.ratio.to_string(),
        ])?;
    }
    writer.flush()?;

    // Records arrive cell by cell, so grouping consecutive runs of the same
    // (valuation, family, k, c) recovers the per-cell ratio samples.
    let mut entries: Vec<SummaryEntry> = Vec::new();
    for ((valuation, family, k, c), group) in &output
        .records
        .iter()
        .chunk_by(|r| (r.valuation.clone(), r.family.clone(), r.k, r.c))
    {
        let mut ratios: Vec<f64> = group.map(|r| r.ratio).collect();
        ratios.sort_by(|a, b| a.partial_cmp(b).expect("ratios are finite"));
        entries.push(SummaryEntry {
            valuation,
            family,
            k,
            c,
            count: ratios.len(),
            min: ratios[0],
            q1: quantile_sorted(&ratios, 0.25),
            median: quantile_sorted(&ratios, 0.5),
            q3: quantile_sorted(&ratios, 0.75),
            max: *ratios.last().expect("nonempty group"),
        });
    }
    let summary_path = out_dir.join("summary.json");
    std::fs::write(&summary_path, serde_json::to_vec_pretty(&entries)?)?;

    let meta = serde_json::json!({
        "config": config,
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "records": output.records.len(),
        "skips": output.skips,
        "item_names": output.item_names,
    });
    let meta_path = out_dir.join("run_meta.json");
    std::fs::write(&meta_path, serde_json::to_vec_pretty(&meta)?)?;

    Ok(vec![results_path, summary_path, meta_path])
}
