//! Command-line driver: dataset generation, training, evaluation, and
//! full experiment reproduction.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use cuesel::dataset::{build_dataset, split, DatasetKind};
use cuesel::dataset_io::{load_dataset, read_manifest, save_dataset};
use cuesel::experiment::{
    execute_plan, ExperimentPlan, ResultSet, Scenario, TrainTuning, GRID_DEPTHS, GRID_WIDTHS,
    HEADLINE_DEPTH, HEADLINE_WIDTH,
};
use cuesel::mlp::{evaluate, NetworkConfig};
use cuesel::model_io::{load_model, save_model};
use cuesel::report::{emit_reports, ReportFormat};
use cuesel::seeds;
use cuesel::train::{train, TrainConfig};

#[derive(Parser)]
#[command(
    name = "cuesel",
    version,
    about = "Two-cue synthetic image datasets and cue-selection experiments for dense classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one split dataset (30,000 images, 75/25 train/test) and
    /// write its payload + manifest pair.
    Gen(GenArgs),
    /// Train one network on a generated dataset's train split.
    Train(TrainArgs),
    /// Evaluate a trained model on a dataset split.
    Eval(EvalArgs),
    /// Run the scenarios behind one of the summary tables and emit reports.
    Reproduce(ReproduceArgs),
    /// Run the full architecture grid (resumable).
    Sweep(SweepArgs),
    /// Re-emit report files from an existing results store.
    Report(ReportArgs),
}

fn parse_kind(s: &str) -> Result<DatasetKind, String> {
    DatasetKind::from_name(s).ok_or_else(|| {
        format!(
            "unknown dataset kind {s:?} (expected one of: {})",
            DatasetKind::ALL.map(|k| k.name()).join(", ")
        )
    })
}

#[derive(Args)]
struct GenArgs {
    /// Dataset kind: both-cues, symbol, pattern, dist-both-cues.
    #[arg(long, value_parser = parse_kind)]
    kind: DatasetKind,
    /// Generation seed; the split seed is derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output base path; writes `<out>.bin` and `<out>.manifest.json`
    /// (defaults to the kind name in the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset base path (as written by `gen`).
    #[arg(long)]
    data: PathBuf,
    /// Hidden layer count.
    #[arg(long, default_value_t = HEADLINE_DEPTH)]
    depth: usize,
    /// Neurons per hidden layer.
    #[arg(long, default_value_t = HEADLINE_WIDTH)]
    width: usize,
    /// Training seed (initialization + shuffling).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the trained model.
    #[arg(long)]
    out: PathBuf,
    /// Where to write the per-epoch loss log (defaults to `<out>.epochs.tsv`).
    #[arg(long)]
    epoch_log: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 1000)]
    max_epochs: usize,
    /// Early-stopping patience, in epochs.
    #[arg(long, default_value_t = 20)]
    patience: usize,
    /// Minimum loss improvement that resets the patience counter.
    #[arg(long, default_value_t = 1e-4)]
    min_delta: f64,
}

#[derive(Args)]
struct EvalArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Dataset base path.
    #[arg(long)]
    data: PathBuf,
    /// Which split to evaluate: test or train.
    #[arg(long, default_value = "test")]
    split: String,
    /// Emit a machine-readable JSON record instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Which table to reproduce: table3, table4, table6, or appendix.
    #[arg(long)]
    scope: String,
    /// Master seed; every dataset, split, initialization, and shuffle
    /// derives from it.
    #[arg(long, default_value_t = 1)]
    master_seed: u64,
    /// Results store directory.
    #[arg(long, env = "CUESEL_STORE", default_value = "cuesel-store")]
    store: PathBuf,
    /// Independent runs per scenario.
    #[arg(long, default_value_t = 5)]
    runs: u32,
    /// Worker threads (1 = fully deterministic single-context mode,
    /// 0 = one per core).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Reuse one dataset realization across runs instead of regenerating
    /// data per run.
    #[arg(long)]
    fixed_data: bool,
    /// Epoch cap override (paper protocol: 1000).
    #[arg(long, default_value_t = 1000)]
    max_epochs: usize,
    /// Report format: tsv, table, or both.
    #[arg(long, default_value = "both")]
    format: String,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated hidden-layer counts.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = GRID_DEPTHS)]
    depths: Vec<usize>,
    /// Comma-separated layer widths.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = GRID_WIDTHS)]
    widths: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    master_seed: u64,
    #[arg(long, env = "CUESEL_STORE", default_value = "cuesel-store")]
    store: PathBuf,
    #[arg(long, default_value_t = 5)]
    runs: u32,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    fixed_data: bool,
    #[arg(long, default_value_t = 1000)]
    max_epochs: usize,
    #[arg(long, default_value = "both")]
    format: String,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, env = "CUESEL_STORE", default_value = "cuesel-store")]
    store: PathBuf,
    #[arg(long, default_value_t = 1)]
    master_seed: u64,
    #[arg(long, default_value_t = 5)]
    runs: u32,
    #[arg(long)]
    fixed_data: bool,
    #[arg(long, default_value = "both")]
    format: String,
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Gen(args) => cmd_gen(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Reproduce(args) => cmd_reproduce(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<()> {
    let base = args
        .out
        .unwrap_or_else(|| PathBuf::from(args.kind.name()));
    let dataset = build_dataset(args.kind, args.seed)?;
    let split_seed = seeds::split_seed(args.seed, args.kind);
    let split_ds = split(dataset, split_seed);
    save_dataset(&split_ds, &base).context("writing dataset files")?;

    let manifest = read_manifest(&base)?;
    println!("dataset: {}", manifest.kind);
    println!(
        "seed:    {} (split seed {})",
        manifest.dataset_seed, manifest.split_seed
    );
    println!(
        "samples: {} total, per class {:?}",
        manifest.total_samples, manifest.class_counts
    );
    println!(
        "split:   {} train / {} test",
        manifest.train_len, manifest.test_len
    );
    println!(
        "distorted: {} total, per class {:?}",
        manifest.distorted_total, manifest.distorted_per_class
    );
    println!("checksum: {}", manifest.payload_checksum);
    println!(
        "files: {} , {}",
        cuesel::dataset_io::payload_path(&base).display(),
        cuesel::dataset_io::manifest_path(&base).display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<()> {
    let dataset = load_dataset(&args.data)
        .with_context(|| format!("loading dataset {}", args.data.display()))?;
    let net_config = NetworkConfig::image_classifier(args.depth, args.width);
    let train_config = TrainConfig {
        batch_size: args.batch,
        learning_rate: args.lr,
        max_epochs: args.max_epochs,
        patience: args.patience,
        min_delta: args.min_delta,
        seed: args.seed,
    };
    eprintln!(
        "training {}x{} on {} ({} samples)",
        args.depth,
        args.width,
        dataset.kind.name(),
        dataset.train.len()
    );
    let (params, report) = train(&dataset.train, &net_config, &train_config)?;
    save_model(&params, &args.out).context("writing model file")?;

    let log_path = args.epoch_log.unwrap_or_else(|| {
        let mut os = args.out.as_os_str().to_owned();
        os.push(".epochs.tsv");
        PathBuf::from(os)
    });
    let mut log = Vec::new();
    report.write_epoch_log(&mut log)?;
    fs::write(&log_path, log).with_context(|| format!("writing {}", log_path.display()))?;

    println!(
        "epochs: {} ({})",
        report.epochs_run,
        report.stop_reason.name()
    );
    println!("final train loss: {:.6}", report.final_loss());
    println!("best train loss:  {:.6}", report.best_loss());
    println!("model: {}", args.out.display());
    println!("epoch log: {}", log_path.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<()> {
    let params = load_model(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let dataset = load_dataset(&args.data)
        .with_context(|| format!("loading dataset {}", args.data.display()))?;
    let samples = match args.split.as_str() {
        "test" => &dataset.test,
        "train" => &dataset.train,
        other => bail!("unknown split {other:?} (expected test or train)"),
    };
    let report = evaluate(&params, samples)?;

    if args.json {
        let confusion: Vec<Vec<u32>> = report.confusion.iter().map(|r| r.to_vec()).collect();
        let record = serde_json::json!({
            "model": args.model.display().to_string(),
            "data": args.data.display().to_string(),
            "split": args.split,
            "total": report.total,
            "accuracy_percent": report.accuracy_percent(),
            "confusion": confusion,
        });
        println!("{}", serde_json::to_string_pretty(&record)?);
    } else {
        println!(
            "accuracy: {:.2}% ({} samples)",
            report.accuracy_percent(),
            report.total
        );
        println!("confusion (rows = true class I/II/III, cols = predicted):");
        for row in &report.confusion {
            println!("  {:>6} {:>6} {:>6}", row[0], row[1], row[2]);
        }
    }
    Ok(())
}

fn parse_formats(s: &str) -> anyhow::Result<Vec<ReportFormat>> {
    match s {
        "tsv" => Ok(vec![ReportFormat::Delimited]),
        "table" => Ok(vec![ReportFormat::PlainTable]),
        "both" => Ok(vec![ReportFormat::Delimited, ReportFormat::PlainTable]),
        other => bail!("unknown format {other:?} (expected tsv, table, or both)"),
    }
}

fn run_plan_and_report(
    plan: &ExperimentPlan,
    store: &Path,
    jobs: usize,
    formats: &[ReportFormat],
) -> anyhow::Result<(ResultSet, PathBuf)> {
    let results = execute_plan(plan, store, jobs, true)?;
    let reports_dir = store.join("reports");
    for &format in formats {
        emit_reports(&results, &reports_dir, format)?;
    }
    Ok((results, reports_dir))
}

fn fail_on_missing(plan: &ExperimentPlan, results: &ResultSet) -> anyhow::Result<()> {
    let missing = results.missing_units(plan);
    if missing.is_empty() {
        return Ok(());
    }
    for failure in &results.failures {
        eprintln!(
            "failed: {} run {}: {}",
            failure.scenario.dir_name(),
            failure.run_index,
            failure.reason
        );
    }
    bail!(
        "{} of {} units missing ({} recorded failures)",
        missing.len(),
        plan.scenarios.len() * plan.runs as usize,
        results.failures.len()
    );
}

fn cmd_reproduce(args: ReproduceArgs) -> anyhow::Result<()> {
    let formats = parse_formats(&args.format)?;
    let mut plan = match args.scope.as_str() {
        "table3" | "table4" | "table6" => ExperimentPlan::headline(args.master_seed),
        "appendix" => ExperimentPlan::grid(args.master_seed, &GRID_DEPTHS, &GRID_WIDTHS),
        other => bail!("unknown scope {other:?} (expected table3, table4, table6, or appendix)"),
    };
    plan.runs = args.runs;
    plan.fixed_data = args.fixed_data;
    plan.tuning.max_epochs = args.max_epochs;

    let (results, reports_dir) = run_plan_and_report(&plan, &args.store, args.jobs, &formats)?;

    let table_file = match args.scope.as_str() {
        "table3" => "symbolic_overview.txt".to_string(),
        "table6" => "epochs.txt".to_string(),
        "table4" => format!("accuracy_d{HEADLINE_DEPTH}_w{HEADLINE_WIDTH}.txt"),
        _ => "depth_series.txt".to_string(),
    };
    let table_path = reports_dir.join(&table_file);
    if table_path.exists() {
        println!("{}", fs::read_to_string(&table_path)?);
    }
    println!("reports: {}", reports_dir.display());
    fail_on_missing(&plan, &results)
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let formats = parse_formats(&args.format)?;
    let mut plan = ExperimentPlan::grid(args.master_seed, &args.depths, &args.widths);
    plan.runs = args.runs;
    plan.fixed_data = args.fixed_data;
    plan.tuning.max_epochs = args.max_epochs;

    let (results, reports_dir) = run_plan_and_report(&plan, &args.store, args.jobs, &formats)?;
    println!(
        "{} records over {} scenarios; reports: {}",
        results.records.len(),
        plan.scenarios.len(),
        reports_dir.display()
    );
    fail_on_missing(&plan, &results)
}

fn cmd_report(args: ReportArgs) -> anyhow::Result<()> {
    let formats = parse_formats(&args.format)?;
    // The union plan covering everything a store may hold: the full grid
    // plus the headline-depth scenarios.
    let mut plan = ExperimentPlan::grid(args.master_seed, &GRID_DEPTHS, &GRID_WIDTHS);
    for width in GRID_WIDTHS {
        for kind in DatasetKind::ALL {
            let scenario = Scenario::new(kind, HEADLINE_DEPTH, width);
            if !plan.scenarios.contains(&scenario) {
                plan.scenarios.push(scenario);
            }
        }
    }
    plan.runs = args.runs;
    plan.fixed_data = args.fixed_data;
    plan.tuning = TrainTuning::default();

    let store = cuesel::experiment::ResultsStore::open(&args.store, &plan)?;
    let results = store.collect(&plan)?;
    if results.records.is_empty() {
        bail!("no records found in {}", args.store.display());
    }
    let reports_dir = store.reports_dir();
    for &format in &formats {
        emit_reports(&results, &reports_dir, format)?;
    }
    println!(
        "{} records re-aggregated; reports: {}",
        results.records.len(),
        reports_dir.display()
    );
    Ok(())
}
