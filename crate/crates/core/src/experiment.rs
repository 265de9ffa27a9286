//! Experiment orchestration: train networks on the four train subsets,
//! cross-evaluate each on all four test subsets, aggregate over runs.
//!
//! Results live in a filesystem store so sweeps are resumable: each
//! (scenario, run) unit commits its record file atomically after training,
//! and re-running a plan retrains nothing that is already recorded.
//! Records carry full-precision values; every aggregate and report is
//! computed from the parsed store contents, never from transient in-memory
//! state, so a resumed plan reproduces reports byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{build_dataset, split, DatasetKind, SplitDataset};
use crate::dataset_io::{self, DataFileError};
use crate::mlp::{evaluate, NetworkConfig};
use crate::model_io::{self, ModelFileError};
use crate::seeds;
use crate::train::{train, TrainConfig, TrainError};

pub const DEFAULT_RUNS: u32 = 5;
pub const STORE_FORMAT_VERSION: u32 = 1;

/// The paper-reproduction grid axes.
pub const GRID_DEPTHS: [usize; 4] = [1, 2, 3, 10];
pub const GRID_WIDTHS: [usize; 3] = [10, 100, 500];
/// Architecture used for the representative single-architecture tables.
pub const HEADLINE_DEPTH: usize = 1;
pub const HEADLINE_WIDTH: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataFileError),
    #[error(transparent)]
    Model(#[from] ModelFileError),
    #[error("training setup rejected: {0}")]
    Train(#[from] TrainError),
    #[error(
        "results store at {root} was created with master seed {found_seed} \
         (fixed_data={found_fixed}); requested {want_seed} (fixed_data={want_fixed}). \
         Use a fresh store directory."
    )]
    StoreMismatch {
        root: PathBuf,
        found_seed: u64,
        found_fixed: bool,
        want_seed: u64,
        want_fixed: bool,
    },
    #[error("corrupt results store: {0}")]
    StoreCorrupt(String),
}

/// One training scenario: which subset to train on and the architecture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Scenario {
    pub train_kind: DatasetKind,
    pub depth: usize,
    pub width: usize,
}

impl Scenario {
    pub fn new(train_kind: DatasetKind, depth: usize, width: usize) -> Self {
        Self {
            train_kind,
            depth,
            width,
        }
    }

    pub fn net_config(&self) -> NetworkConfig {
        NetworkConfig::image_classifier(self.depth, self.width)
    }

    pub fn dir_name(&self) -> String {
        format!("{}_d{}_w{}", self.train_kind.name(), self.depth, self.width)
    }
}

/// Optimizer/stopping knobs shared by every run of a plan.
#[derive(Clone, Debug)]
pub struct TrainTuning {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
}

impl Default for TrainTuning {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
            max_epochs: d.max_epochs,
            patience: d.patience,
            min_delta: d.min_delta,
        }
    }
}

impl TrainTuning {
    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            max_epochs: self.max_epochs,
            patience: self.patience,
            min_delta: self.min_delta,
            seed,
        }
    }
}

/// A full experiment: scenarios x run indices, under one master seed.
#[derive(Clone, Debug)]
pub struct ExperimentPlan {
    pub master_seed: u64,
    pub runs: u32,
    /// Reuse one dataset realization across all runs instead of
    /// regenerating data per run.
    pub fixed_data: bool,
    pub scenarios: Vec<Scenario>,
    pub tuning: TrainTuning,
}

impl ExperimentPlan {
    /// All four train kinds at the headline 1x100 architecture.
    pub fn headline(master_seed: u64) -> Self {
        Self {
            master_seed,
            runs: DEFAULT_RUNS,
            fixed_data: false,
            scenarios: DatasetKind::ALL
                .into_iter()
                .map(|k| Scenario::new(k, HEADLINE_DEPTH, HEADLINE_WIDTH))
                .collect(),
            tuning: TrainTuning::default(),
        }
    }

    /// The full grid: four train kinds x depths x widths.
    pub fn grid(master_seed: u64, depths: &[usize], widths: &[usize]) -> Self {
        let mut scenarios = Vec::new();
        for kind in DatasetKind::ALL {
            for &depth in depths {
                for &width in widths {
                    scenarios.push(Scenario::new(kind, depth, width));
                }
            }
        }
        Self {
            master_seed,
            runs: DEFAULT_RUNS,
            fixed_data: false,
            scenarios,
            tuning: TrainTuning::default(),
        }
    }

    fn units(&self) -> Vec<(Scenario, u32)> {
        let mut units = Vec::new();
        for &scenario in &self.scenarios {
            for run in 0..self.runs {
                units.push((scenario, run));
            }
        }
        units
    }
}

/// One completed (scenario, run) unit: accuracies on all four test splits.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub train_kind: DatasetKind,
    pub depth: usize,
    pub width: usize,
    pub run_index: u32,
    pub seed: u64,
    /// Percent accuracy per test kind, indexed like `DatasetKind::ALL`.
    pub accuracies: [f64; 4],
    pub epochs: usize,
    pub wall_seconds: f64,
}

/// A unit that did not produce a model (e.g. diverged), kept out of
/// aggregation.
#[derive(Clone, Debug)]
pub struct RunFailure {
    pub scenario: Scenario,
    pub run_index: u32,
    pub reason: String,
}

/// Everything a finished (or partially finished) plan produced.
#[derive(Clone, Debug, Default)]
pub struct ResultSet {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

impl ResultSet {
    /// Per-run accuracies of one table cell, ordered by run index.
    pub fn cell(
        &self,
        train_kind: DatasetKind,
        depth: usize,
        width: usize,
        test_kind: DatasetKind,
    ) -> Vec<f64> {
        let test_idx = DatasetKind::ALL.iter().position(|&k| k == test_kind).unwrap();
        self.records
            .iter()
            .filter(|r| r.train_kind == train_kind && r.depth == depth && r.width == width)
            .map(|r| r.accuracies[test_idx])
            .collect()
    }

    pub fn epochs(&self, train_kind: DatasetKind, depth: usize, width: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.train_kind == train_kind && r.depth == depth && r.width == width)
            .map(|r| r.epochs as f64)
            .collect()
    }

    /// Distinct (depth, width) pairs present, sorted.
    pub fn architectures(&self) -> Vec<(usize, usize)> {
        let mut archs: Vec<(usize, usize)> = self
            .records
            .iter()
            .map(|r| (r.depth, r.width))
            .collect();
        archs.sort_unstable();
        archs.dedup();
        archs
    }

    /// Scenario/run pairs of `plan` that have no record.
    pub fn missing_units(&self, plan: &ExperimentPlan) -> Vec<(Scenario, u32)> {
        plan.units()
            .into_iter()
            .filter(|(s, run)| {
                !self.records.iter().any(|r| {
                    r.train_kind == s.train_kind
                        && r.depth == s.depth
                        && r.width == s.width
                        && r.run_index == *run
                })
            })
            .collect()
    }
}

/// Mean and standard error of the mean over runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateStats {
    pub mean: f64,
    /// Absent when fewer than two values exist.
    pub sem: Option<f64>,
    pub n: usize,
}

/// Mean plus SEM with the (n-1)-denominator standard deviation.
pub fn aggregate(values: &[f64]) -> AggregateStats {
    let n = values.len();
    assert!(n > 0, "aggregate of an empty cell");
    let mean = values.iter().sum::<f64>() / n as f64;
    let sem = if n >= 2 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        Some((var / n as f64).sqrt())
    } else {
        None
    };
    AggregateStats { mean, sem, n }
}

/// Coarse performance coding of a mean test accuracy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerformanceSymbol {
    Check,
    Circle,
    Cross,
}

impl PerformanceSymbol {
    pub fn glyph(self) -> &'static str {
        match self {
            PerformanceSymbol::Check => "\u{2713}",
            PerformanceSymbol::Circle => "\u{25CB}",
            PerformanceSymbol::Cross => "\u{00D7}",
        }
    }
}

/// `> 90` is a check, `< 40` a cross, anything else (boundaries included)
/// a circle.
pub fn symbolize(mean_percent: f64) -> PerformanceSymbol {
    assert!((0.0..=100.0).contains(&mean_percent));
    if mean_percent > 90.0 {
        PerformanceSymbol::Check
    } else if mean_percent < 40.0 {
        PerformanceSymbol::Cross
    } else {
        PerformanceSymbol::Circle
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
struct StoreMeta {
    format_version: u32,
    master_seed: u64,
    fixed_data: bool,
}

/// Filesystem layout of one experiment store.
#[derive(Debug)]
pub struct ResultsStore {
    root: PathBuf,
}

impl ResultsStore {
    /// Open or create a store rooted at `root`, pinning it to the plan's
    /// master seed; a store created under different settings is rejected.
    pub fn open(root: &Path, plan: &ExperimentPlan) -> Result<Self, ExperimentError> {
        let store = Self {
            root: root.to_path_buf(),
        };
        let meta_path = store.root.join("store.json");
        let want = StoreMeta {
            format_version: STORE_FORMAT_VERSION,
            master_seed: plan.master_seed,
            fixed_data: plan.fixed_data,
        };
        if meta_path.exists() {
            let bytes = fs::read(&meta_path).map_err(|source| ExperimentError::Io {
                path: meta_path.clone(),
                source,
            })?;
            let found: StoreMeta = serde_json::from_slice(&bytes)
                .map_err(|e| ExperimentError::StoreCorrupt(format!("store.json: {e}")))?;
            if found != want {
                return Err(ExperimentError::StoreMismatch {
                    root: store.root,
                    found_seed: found.master_seed,
                    found_fixed: found.fixed_data,
                    want_seed: want.master_seed,
                    want_fixed: want.fixed_data,
                });
            }
        } else {
            fs::create_dir_all(&store.root).map_err(|source| ExperimentError::Io {
                path: store.root.clone(),
                source,
            })?;
            let bytes = serde_json::to_vec_pretty(&want).expect("meta serializes");
            fs::write(&meta_path, bytes).map_err(|source| ExperimentError::Io {
                path: meta_path.clone(),
                source,
            })?;
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    fn dataset_base(&self, plan: &ExperimentPlan, run: u32, kind: DatasetKind) -> PathBuf {
        let dir = if plan.fixed_data {
            self.root.join("datasets").join("fixed")
        } else {
            self.root.join("datasets").join(format!("r{run}"))
        };
        dir.join(kind.name())
    }

    fn scenario_dir(&self, scenario: &Scenario) -> PathBuf {
        self.root.join("runs").join(scenario.dir_name())
    }

    pub fn record_path(&self, scenario: &Scenario, run: u32) -> PathBuf {
        self.scenario_dir(scenario).join(format!("run{run}.tsv"))
    }

    pub fn model_path(&self, scenario: &Scenario, run: u32) -> PathBuf {
        self.scenario_dir(scenario).join(format!("run{run}.model"))
    }

    fn failure_path(&self, scenario: &Scenario, run: u32) -> PathBuf {
        self.scenario_dir(scenario).join(format!("run{run}.failed"))
    }

    /// Load or generate the four split datasets of one run index.
    fn ensure_run_datasets(
        &self,
        plan: &ExperimentPlan,
        run: u32,
    ) -> Result<Vec<SplitDataset>, ExperimentError> {
        let data_base = seeds::data_base(plan.master_seed, run, plan.fixed_data);
        DatasetKind::ALL
            .into_iter()
            .map(|kind| {
                let base = self.dataset_base(plan, run, kind);
                let dataset_seed = seeds::dataset_seed(data_base, kind);
                let split_seed = seeds::split_seed(data_base, kind);
                if dataset_io::manifest_path(&base).exists() {
                    let loaded = dataset_io::load_dataset(&base)?;
                    if loaded.dataset_seed != dataset_seed || loaded.split_seed != split_seed {
                        return Err(ExperimentError::StoreCorrupt(format!(
                            "{}: dataset seeds disagree with the plan derivation",
                            base.display()
                        )));
                    }
                    return Ok(loaded);
                }
                let dataset = build_dataset(kind, dataset_seed)
                    .map_err(|e| ExperimentError::StoreCorrupt(e.to_string()))?;
                let split_ds = split(dataset, split_seed);
                dataset_io::save_dataset(&split_ds, &base)?;
                Ok(split_ds)
            })
            .collect()
    }

    fn write_record(&self, record: &RunRecord) -> Result<(), ExperimentError> {
        let scenario = Scenario::new(record.train_kind, record.depth, record.width);
        let path = self.record_path(&scenario, record.run_index);
        let mut text = String::from(
            "train_kind\tdepth\twidth\tseed\ttest_kind\taccuracy\tepochs\twall_time\n",
        );
        for (i, kind) in DatasetKind::ALL.iter().enumerate() {
            text.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                record.train_kind.name(),
                record.depth,
                record.width,
                record.seed,
                kind.name(),
                record.accuracies[i],
                record.epochs,
                record.wall_seconds,
            ));
        }
        write_atomic_text(&path, &text)
    }

    fn read_record(
        &self,
        scenario: &Scenario,
        run: u32,
    ) -> Result<Option<RunRecord>, ExperimentError> {
        let path = self.record_path(scenario, run);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|source| ExperimentError::Io {
            path: path.clone(),
            source,
        })?;
        let corrupt = |msg: String| {
            ExperimentError::StoreCorrupt(format!("{}: {msg}", path.display()))
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| corrupt("empty record".into()))?;
        if header != "train_kind\tdepth\twidth\tseed\ttest_kind\taccuracy\tepochs\twall_time" {
            return Err(corrupt(format!("unexpected header {header:?}")));
        }
        let mut accuracies = [f64::NAN; 4];
        let mut seen = [false; 4];
        let mut seed = 0u64;
        let mut epochs = 0usize;
        let mut wall_seconds = 0.0f64;
        for line in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 8 {
                return Err(corrupt(format!("bad field count in {line:?}")));
            }
            if fields[0] != scenario.train_kind.name() {
                return Err(corrupt(format!("train kind {:?} does not match", fields[0])));
            }
            let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| corrupt(e.to_string()));
            if parse_usize(fields[1])? != scenario.depth
                || parse_usize(fields[2])? != scenario.width
            {
                return Err(corrupt("architecture does not match directory".into()));
            }
            seed = fields[3].parse().map_err(|e| corrupt(format!("seed: {e}")))?;
            let test_kind = DatasetKind::from_name(fields[4])
                .ok_or_else(|| corrupt(format!("unknown test kind {:?}", fields[4])))?;
            let idx = DatasetKind::ALL.iter().position(|&k| k == test_kind).unwrap();
            accuracies[idx] = fields[5]
                .parse()
                .map_err(|e| corrupt(format!("accuracy: {e}")))?;
            seen[idx] = true;
            epochs = parse_usize(fields[6])?;
            wall_seconds = fields[7]
                .parse()
                .map_err(|e| corrupt(format!("wall_time: {e}")))?;
        }
        if !seen.iter().all(|&s| s) {
            return Err(corrupt("record misses a test kind".into()));
        }
        if accuracies.iter().any(|a| !(0.0..=100.0).contains(a)) {
            return Err(corrupt(format!("accuracy out of range: {accuracies:?}")));
        }
        Ok(Some(RunRecord {
            train_kind: scenario.train_kind,
            depth: scenario.depth,
            width: scenario.width,
            run_index: run,
            seed,
            accuracies,
            epochs,
            wall_seconds,
        }))
    }

    fn read_failure(&self, scenario: &Scenario, run: u32) -> Option<RunFailure> {
        let path = self.failure_path(scenario, run);
        let reason = fs::read_to_string(path).ok()?;
        Some(RunFailure {
            scenario: *scenario,
            run_index: run,
            reason: reason.trim().to_string(),
        })
    }

    /// Everything recorded for `plan`, sorted canonically.
    pub fn collect(&self, plan: &ExperimentPlan) -> Result<ResultSet, ExperimentError> {
        let mut results = ResultSet::default();
        for (scenario, run) in plan.units() {
            if let Some(record) = self.read_record(&scenario, run)? {
                results.records.push(record);
            } else if let Some(failure) = self.read_failure(&scenario, run) {
                results.failures.push(failure);
            }
        }
        results.records.sort_by(|a, b| {
            (a.train_kind, a.depth, a.width, a.run_index)
                .cmp(&(b.train_kind, b.depth, b.width, b.run_index))
        });
        Ok(results)
    }
}

fn write_atomic_text(path: &Path, text: &str) -> Result<(), ExperimentError> {
    let io_err = |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

/// Execute every missing unit of `plan` against the store at `store_root`,
/// then return the full result set (existing records included).
///
/// `jobs` bounds the worker threads (1 = strictly single-context, the
/// bit-reproducibility mode; 0 = one per core). Units are independent:
/// each trains one network and evaluates it on all four test splits of its
/// run, committing its record atomically. Diverged runs are recorded as
/// failures and excluded from aggregation.
pub fn execute_plan(
    plan: &ExperimentPlan,
    store_root: &Path,
    jobs: usize,
    progress: bool,
) -> Result<ResultSet, ExperimentError> {
    let store = ResultsStore::open(store_root, plan)?;

    let existing = store.collect(plan)?;
    let todo: Vec<(Scenario, u32)> = existing
        .missing_units(plan)
        .into_iter()
        .filter(|(s, run)| store.read_failure(s, *run).is_none())
        .collect();

    if !todo.is_empty() {
        // Materialize datasets first so workers only ever read them.
        let mut run_indices: Vec<u32> = todo.iter().map(|&(_, run)| run).collect();
        run_indices.sort_unstable();
        run_indices.dedup();
        for &run in &run_indices {
            if progress {
                eprintln!("[data] preparing datasets for run {run}");
            }
            store.ensure_run_datasets(plan, run)?;
        }

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| ExperimentError::StoreCorrupt(format!("thread pool: {e}")))?;
        let outcomes: Vec<Result<(), ExperimentError>> = pool.install(|| {
            todo.par_iter()
                .map(|&(scenario, run)| execute_unit(plan, &store, scenario, run, progress))
                .collect()
        });
        for outcome in outcomes {
            outcome?;
        }
    }

    store.collect(plan)
}

fn execute_unit(
    plan: &ExperimentPlan,
    store: &ResultsStore,
    scenario: Scenario,
    run: u32,
    progress: bool,
) -> Result<(), ExperimentError> {
    let splits = store.ensure_run_datasets(plan, run)?;
    let train_split = splits
        .iter()
        .find(|s| s.kind == scenario.train_kind)
        .expect("all four kinds materialized");

    let seed = seeds::train_seed(
        plan.master_seed,
        run,
        scenario.train_kind,
        scenario.depth,
        scenario.width,
    );
    if progress {
        eprintln!(
            "[train] {} run {run} (seed {seed:016x})",
            scenario.dir_name()
        );
    }
    let net_config = scenario.net_config();
    let train_config = plan.tuning.train_config(seed);
    let (params, report) = match train(&train_split.train, &net_config, &train_config) {
        Ok(ok) => ok,
        Err(TrainError::Diverged { epoch, loss }) => {
            let reason = format!("diverged at epoch {epoch}: mean batch loss {loss}");
            if progress {
                eprintln!("[fail ] {} run {run}: {reason}", scenario.dir_name());
            }
            write_atomic_text(&store.failure_path(&scenario, run), &reason)?;
            return Ok(());
        }
        Err(other) => return Err(other.into()),
    };

    let mut accuracies = [0.0f64; 4];
    for (i, split_ds) in splits.iter().enumerate() {
        let eval = evaluate(&params, &split_ds.test)
            .map_err(|e| ExperimentError::StoreCorrupt(e.to_string()))?;
        accuracies[i] = eval.accuracy_percent();
    }

    model_io::save_model(&params, &store.model_path(&scenario, run))?;
    let record = RunRecord {
        train_kind: scenario.train_kind,
        depth: scenario.depth,
        width: scenario.width,
        run_index: run,
        seed,
        accuracies,
        epochs: report.epochs_run,
        wall_seconds: report.wall_seconds,
    };
    store.write_record(&record)?;
    if progress {
        eprintln!(
            "[done ] {} run {run}: epochs={} acc={:.2}/{:.2}/{:.2}/{:.2}",
            scenario.dir_name(),
            report.epochs_run,
            accuracies[0],
            accuracies[1],
            accuracies[2],
            accuracies[3]
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_mean_and_sem() {
        let stats = aggregate(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!((stats.mean - 3.0).abs() < 1e-12);
        let expected_sem = (2.5f64 / 5.0).sqrt();
        assert!((stats.sem.unwrap() - expected_sem).abs() < 1e-12);
        assert!((stats.sem.unwrap() - 0.7071).abs() < 1e-4);
        assert_eq!(stats.n, 5);
    }

    #[test]
    fn aggregate_of_constant_values_has_zero_sem() {
        let stats = aggregate(&[42.0; 5]);
        assert_eq!(stats.mean, 42.0);
        assert_eq!(stats.sem, Some(0.0));
    }

    #[test]
    fn aggregate_of_single_value_has_no_sem() {
        let stats = aggregate(&[7.5]);
        assert_eq!(stats.mean, 7.5);
        assert_eq!(stats.sem, None);
        assert_eq!(stats.n, 1);
    }

    #[test]
    fn symbolize_thresholds_and_boundaries() {
        assert_eq!(symbolize(97.46), PerformanceSymbol::Check);
        assert_eq!(symbolize(33.26), PerformanceSymbol::Cross);
        assert_eq!(symbolize(67.93), PerformanceSymbol::Circle);
        // Boundaries map to the middle symbol.
        assert_eq!(symbolize(90.0), PerformanceSymbol::Circle);
        assert_eq!(symbolize(40.0), PerformanceSymbol::Circle);
        assert_eq!(symbolize(100.0), PerformanceSymbol::Check);
        assert_eq!(symbolize(0.0), PerformanceSymbol::Cross);
    }

    #[test]
    fn scenario_dir_names_are_distinct() {
        let mut names = std::collections::HashSet::new();
        for kind in DatasetKind::ALL {
            for depth in GRID_DEPTHS {
                for width in GRID_WIDTHS {
                    assert!(names.insert(Scenario::new(kind, depth, width).dir_name()));
                }
            }
        }
    }

    #[test]
    fn record_roundtrips_through_store_files() {
        let dir = tempfile::tempdir().unwrap();
        let plan = ExperimentPlan::headline(5);
        let store = ResultsStore::open(dir.path(), &plan).unwrap();
        let record = RunRecord {
            train_kind: DatasetKind::Symbol,
            depth: 1,
            width: 100,
            run_index: 3,
            seed: 0xDEADBEEF,
            accuracies: [61.170000000000016, 99.75, 37.857142857142854, 60.9],
            epochs: 842,
            wall_seconds: 123.456789,
        };
        store.write_record(&record).unwrap();
        let scenario = Scenario::new(DatasetKind::Symbol, 1, 100);
        let back = store.read_record(&scenario, 3).unwrap().unwrap();
        assert_eq!(back, record);
        assert!(store.read_record(&scenario, 4).unwrap().is_none());
    }

    #[test]
    fn store_rejects_mismatched_master_seed() {
        let dir = tempfile::tempdir().unwrap();
        let plan_a = ExperimentPlan::headline(5);
        ResultsStore::open(dir.path(), &plan_a).unwrap();
        let plan_b = ExperimentPlan::headline(6);
        let err = ResultsStore::open(dir.path(), &plan_b).unwrap_err();
        assert!(matches!(err, ExperimentError::StoreMismatch { .. }));
    }

    #[test]
    fn missing_units_reflect_partial_stores() {
        let dir = tempfile::tempdir().unwrap();
        let mut plan = ExperimentPlan::headline(5);
        plan.runs = 2;
        let store = ResultsStore::open(dir.path(), &plan).unwrap();
        assert_eq!(store.collect(&plan).unwrap().missing_units(&plan).len(), 8);

        let record = RunRecord {
            train_kind: DatasetKind::BothCues,
            depth: 1,
            width: 100,
            run_index: 0,
            seed: 1,
            accuracies: [97.0, 33.0, 96.0, 76.0],
            epochs: 46,
            wall_seconds: 1.0,
        };
        store.write_record(&record).unwrap();
        let results = store.collect(&plan).unwrap();
        assert_eq!(results.records.len(), 1);
        assert_eq!(results.missing_units(&plan).len(), 7);
    }
}
