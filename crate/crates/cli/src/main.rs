//! Command-line front end: discretize item distributions into sketch files,
//! evaluate and optimize set valuations over a sketch directory, and run the
//! benchmark harness. Errors print as one JSON object on stderr with a
//! nonzero exit code so callers can script against the binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sketch_core::bench::{
    emit_report, ingest_csv, run_real, run_synthetic, ExperimentConfig, IngestSchema,
};
use sketch_core::dist::{read_value_column, DiscreteDistribution, ItemDistribution};
use sketch_core::eval::{
    expected_value_exact, expected_value_fast, expected_value_mc, EvalConfig, EvalError,
    EvalEstimate, ItemSet,
};
use sketch_core::optimize::{greedy_select, greedy_welfare};
use sketch_core::sketcher::{approximation_factors, discretize, BoundVariant, SketchFile, SketchParams};
use sketch_core::valuation::ValuationSpec;

#[derive(Parser)]
#[command(
    name = "sketch",
    version,
    about = "Compact per-item distribution summaries for expected set values"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize one item distribution into a sketch file.
    Discretize {
        /// Distribution as JSON (`.json`) or a one-column CSV of samples.
        #[arg(long)]
        dist: PathBuf,
        /// Valuation spec JSON (its scalar section shapes the tail atom).
        #[arg(long)]
        valuation: PathBuf,
        /// Tail mass to fold into the single top atom, in (0,1).
        #[arg(long)]
        epsilon: f64,
        /// Fraction of the cut quantile below which mass collapses to zero.
        #[arg(long)]
        lower_cut: f64,
        /// Output sketch path (conventionally `item-<id>.json`).
        #[arg(long)]
        out: PathBuf,
    },
    /// Expected valuation of a set of sketched items.
    Evaluate {
        #[arg(long)]
        valuation: PathBuf,
        /// Directory of `item-<id>.json` sketch files.
        #[arg(long)]
        sketches: PathBuf,
        /// Comma-separated item ids, e.g. "1,4,7" (empty for the empty set).
        #[arg(long, allow_hyphen_values = false)]
        set: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Fast)]
        method: MethodArg,
        /// Monte Carlo sample count (mc method only).
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Monte Carlo stream seed (mc method only).
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Greedy set selection (or welfare partition) over sketched items.
    Greedy {
        #[arg(long)]
        valuation: PathBuf,
        #[arg(long)]
        sketches: PathBuf,
        /// Cardinality for single-set selection.
        #[arg(long, conflicts_with = "welfare")]
        k: Option<usize>,
        /// Comma-separated part sizes, e.g. "2,2,3", for welfare partitioning.
        #[arg(long)]
        welfare: Option<String>,
        #[arg(long, value_enum, default_value_t = MethodArg::Fast)]
        method: MethodArg,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Experiment harness and bound calculators.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Ratio experiment on synthetic item distributions.
    Synthetic {
        /// Experiment config JSON (unknown keys rejected).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for results.csv / summary.json / run_meta.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Ratio experiment on grouped empirical data from a CSV.
    Real {
        #[arg(long)]
        config: PathBuf,
        /// CSV with one row per observation.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Column holding the observed values.
        #[arg(long, default_value = "value")]
        value_column: String,
        /// Column naming the item each row belongs to.
        #[arg(long, default_value = "item")]
        group_column: String,
        /// Items with fewer rows than this are dropped.
        #[arg(long, default_value_t = 1)]
        min_rows: usize,
    },
    /// Two-sided approximation factors for given sketch parameters.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct BoundsArgs {
    /// Largest set size the guarantee covers.
    #[arg(long)]
    k: u32,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    lower_cut: f64,
    /// Largest at-quantile atom mass across items.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Homogeneity degree d of the valuation.
    #[arg(long, default_value_t = 1.0)]
    degree: f64,
    /// Homogeneity tolerance eta of the valuation.
    #[arg(long, default_value_t = 1.0)]
    tolerance: f64,
    #[arg(long, value_enum)]
    variant: VariantArg,
}

#[derive(Copy, Clone, ValueEnum)]
enum MethodArg {
    Exact,
    Fast,
    Mc,
}

#[derive(Copy, Clone, ValueEnum)]
enum VariantArg {
    Weakhom,
    Concave,
    Coordinate,
}

impl From<VariantArg> for BoundVariant {
    fn from(arg: VariantArg) -> Self {
        match arg {
            VariantArg::Weakhom => BoundVariant::WeakHom,
            VariantArg::Concave => BoundVariant::ExtendableConcave,
            VariantArg::Coordinate => BoundVariant::CoordinateWise,
        }
    }
}

fn main() {
    if let Err(err) = run() {
        let causes: Vec<String> = err.chain().skip(1).map(|c| c.to_string()).collect();
        eprintln!(
            "{}",
            serde_json::json!({ "error": err.to_string(), "causes": causes })
        );
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Discretize { dist, valuation, epsilon, lower_cut, out } => {
            let spec = load_valuation(&valuation)?;
            let item = load_distribution(&dist)?;
            let params = SketchParams::new(epsilon, lower_cut)?;
            let result = discretize(&item, &spec, &params)?;
            let file = SketchFile::from(result);
            let support = file.summary.support_size();
            std::fs::write(&out, serde_json::to_vec_pretty(&file)?)
                .with_context(|| format!("writing {}", out.display()))?;
            print_json(&serde_json::json!({
                "out": out,
                "tau": file.tau,
                "tail_atom": file.tail_atom,
                "bin_count": file.bin_count,
                "support_size": support,
            }))
        }
        Command::Evaluate { valuation, sketches, set, method, samples, seed } => {
            let spec = load_valuation(&valuation)?;
            let summaries = load_sketches(&sketches)?;
            let set: ItemSet = set.parse::<ItemSet>()?;
            let estimate = estimate(&spec, &summaries, &set, method, samples, seed)?;
            print_json(&estimate)
        }
        Command::Greedy { valuation, sketches, k, welfare, method, samples, seed } => {
            let spec = load_valuation(&valuation)?;
            let summaries = load_sketches(&sketches)?;
            let universe = ItemSet::new(summaries.keys().copied().collect())?;
            let oracle = |set: &ItemSet| -> Result<f64, EvalError> {
                estimate(&spec, &summaries, set, method, samples, seed).map(|e| e.value)
            };
            match (k, welfare) {
                (Some(k), None) => {
                    let result = greedy_select(oracle, &universe, k)?;
                    print_json(&result)
                }
                (None, Some(sizes)) => {
                    let sizes: Vec<usize> = sizes
                        .split(',')
                        .map(|part| {
                            part.trim()
                                .parse::<usize>()
                                .with_context(|| format!("part size `{part}`"))
                        })
                        .collect::<Result<_>>()?;
                    let mut oracles: Vec<Box<dyn FnMut(&ItemSet) -> Result<f64, EvalError>>> =
                        (0..sizes.len()).map(|_| {
                            Box::new(oracle) as Box<dyn FnMut(&ItemSet) -> Result<f64, EvalError>>
                        })
                        .collect();
                    let result = greedy_welfare(&mut oracles, &universe, &sizes)?;
                    print_json(&result)
                }
                _ => bail!("pass exactly one of --k or --welfare"),
            }
        }
        Command::Bench { command } => match command {
            BenchCommand::Synthetic { config, out } => {
                let config = load_config(&config)?;
                let output = run_synthetic(&config)?;
                let files = emit_report(&output, &config, &out)?;
                print_run(&output, &files)
            }
            BenchCommand::Real { config, data, out, value_column, group_column, min_rows } => {
                let config = load_config(&config)?;
                let schema = IngestSchema { value_column, group_column, min_rows };
                let dataset = ingest_csv(&data, &schema)?;
                let output = run_real(&config, &dataset)?;
                let files = emit_report(&output, &config, &out)?;
                print_run(&output, &files)
            }
            BenchCommand::Bounds(args) => {
                let report = approximation_factors(
                    args.k,
                    args.epsilon,
                    args.lower_cut,
                    args.delta,
                    args.degree,
                    args.tolerance,
                    args.variant.into(),
                )?;
                print_json(&report)
            }
        },
    }
}

fn load_valuation(path: &Path) -> Result<ValuationSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let spec: ValuationSpec = serde_json::from_str(&text)
        .with_context(|| format!("parsing valuation spec {}", path.display()))?;
    spec.validate()?;
    Ok(spec)
}

/// JSON files parse as a distribution spec; anything else is read as a
/// one-column CSV of samples for an empirical distribution.
fn load_distribution(path: &Path) -> Result<ItemDistribution> {
    if path.extension().is_some_and(|ext| ext == "json") {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let dist: ItemDistribution = serde_json::from_str(&text)
            .with_context(|| format!("parsing distribution {}", path.display()))?;
        dist.validate()?;
        Ok(dist)
    } else {
        Ok(ItemDistribution::from_samples(&read_value_column(path)?)?)
    }
}

/// Loads every `item-<id>.json` sketch in the directory.
fn load_sketches(dir: &Path) -> Result<BTreeMap<u32, DiscreteDistribution>> {
    let mut summaries = BTreeMap::new();
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("reading sketch directory {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(id) = name
            .strip_prefix("item-")
            .and_then(|rest| rest.strip_suffix(".json"))
            .and_then(|id| id.parse::<u32>().ok())
        else {
            continue;
        };
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        let file: SketchFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing sketch {}", path.display()))?;
        if summaries.insert(id, file.summary).is_some() {
            bail!("duplicate sketch for item {id} in {}", dir.display());
        }
    }
    if summaries.is_empty() {
        bail!("no item-<id>.json sketches found in {}", dir.display());
    }
    Ok(summaries)
}

fn estimate(
    spec: &ValuationSpec,
    summaries: &BTreeMap<u32, DiscreteDistribution>,
    set: &ItemSet,
    method: MethodArg,
    samples: u64,
    seed: u64,
) -> Result<EvalEstimate, EvalError> {
    let config = EvalConfig::default();
    match method {
        MethodArg::Exact => expected_value_exact(spec, summaries, set, &config),
        MethodArg::Fast => expected_value_fast(spec, summaries, set, &config),
        MethodArg::Mc => {
            let items: BTreeMap<u32, ItemDistribution> = summaries
                .iter()
                .map(|(&id, summary)| (id, ItemDistribution::Discrete(summary.clone())))
                .collect();
            expected_value_mc(spec, &items, set, samples, seed)
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let config: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing experiment config {}", path.display()))?;
    config.validate()?;
    Ok(config)
}

fn print_run(output: &sketch_core::bench::RunOutput, files: &[PathBuf]) -> Result<()> {
    print_json(&serde_json::json!({
        "records": output.records.len(),
        "skips": output.skips.len(),
        "files": files,
    }))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}
