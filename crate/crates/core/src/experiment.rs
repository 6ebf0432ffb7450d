//! The four-way comparison: every representation runs the active-learning
//! loop on identical folds, initial sets and pools, and the per-fold curves
//! are averaged.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::active::{prepare_split, run_active, ActiveConfig, ActiveSplit, CurvePoint, LearningCurve};
use crate::dataset::{class_histogram, load_csv, ten_fold_splits, DataTable, Schema, FOLD_COUNT};
use crate::error::{Result, WdneError};
use crate::linalg::{covariance, eigen_sym};
use crate::mlp::MlpConfig;
use crate::normalize::{ModelSummary, NormalizationMode, Standardizer};
use crate::seed::derive_path;

const STREAM_PREPARE: u64 = 11;
const STREAM_RUN: u64 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetTag {
    Heart,
    Spam,
    Waveform,
    Custom,
}

impl DatasetTag {
    pub fn tag(self) -> &'static str {
        match self {
            DatasetTag::Heart => "heart",
            DatasetTag::Spam => "spam",
            DatasetTag::Waveform => "waveform",
            DatasetTag::Custom => "custom",
        }
    }

    /// Active-learning parameters used for this dataset.
    pub fn active_preset(self) -> ActiveConfig {
        match self {
            DatasetTag::Heart | DatasetTag::Custom => ActiveConfig::heart(),
            DatasetTag::Spam => ActiveConfig::spam(),
            DatasetTag::Waveform => ActiveConfig::waveform(),
        }
    }
}

impl fmt::Display for DatasetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DatasetTag {
    type Err = WdneError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "heart" => Ok(DatasetTag::Heart),
            "spam" | "spambase" => Ok(DatasetTag::Spam),
            "waveform" => Ok(DatasetTag::Waveform),
            "custom" => Ok(DatasetTag::Custom),
            other => Err(WdneError::Config(format!(
                "unknown dataset '{other}' (expected heart, spam, waveform or custom)"
            ))),
        }
    }
}

fn default_standardize() -> bool {
    true
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetTag,
    pub data_dir: PathBuf,
    /// Manifest path; defaults to `<data_dir>/<dataset>/manifest.json`.
    #[serde(default)]
    pub schema: Option<PathBuf>,
    pub representations: Vec<NormalizationMode>,
    pub active: ActiveConfig,
    /// Shared by every representation; only `inputs`/`outputs`/`seed` vary per network.
    pub mlp: MlpConfig,
    pub seeds: Vec<u64>,
    /// Subset of fold indices to run; all ten when absent.
    #[serde(default)]
    pub folds: Option<Vec<usize>>,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Z-score every feature (with training-partition statistics) before
    /// fitting the representations.
    #[serde(default = "default_standardize")]
    pub standardize: bool,
}

impl ExperimentConfig {
    pub fn preset(dataset: DatasetTag, data_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            dataset,
            data_dir: data_dir.into(),
            schema: None,
            representations: NormalizationMode::ALL.to_vec(),
            active: dataset.active_preset(),
            mlp: MlpConfig::default(),
            seeds: vec![1],
            folds: None,
            jobs: default_jobs(),
            standardize: default_standardize(),
        }
    }

    pub fn manifest_path(&self) -> Result<PathBuf> {
        match (&self.schema, self.dataset) {
            (Some(p), _) => Ok(p.clone()),
            (None, DatasetTag::Custom) => Err(WdneError::Config(
                "a custom dataset needs an explicit schema manifest".into(),
            )),
            (None, tag) => Ok(self.data_dir.join(tag.tag()).join("manifest.json")),
        }
    }

    fn fold_indices(&self) -> Vec<usize> {
        self.folds.clone().unwrap_or_else(|| (0..FOLD_COUNT).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.representations.is_empty() {
            return Err(WdneError::Config("at least one representation is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(WdneError::Config("at least one repetition seed is required".into()));
        }
        if let Some(f) = self.fold_indices().iter().find(|&&f| f >= FOLD_COUNT) {
            return Err(WdneError::Config(format!("fold index {f} out of range 0..{FOLD_COUNT}")));
        }
        if self.jobs == 0 {
            return Err(WdneError::Config("jobs must be >= 1".into()));
        }
        self.active.validate()?;
        self.mlp.validate()
    }
}

/// Original-file row ids of the examples a run used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIds {
    pub initial: Vec<usize>,
    pub pool: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIds {
    fn from_split(table: &DataTable, split: &ActiveSplit) -> Self {
        let ids = |pos: &[usize]| -> Vec<usize> { pos.iter().map(|&p| table.row_ids()[p]).collect() };
        SplitIds {
            initial: ids(&split.initial),
            pool: ids(&split.pool),
            validation: ids(&split.validation),
            test: ids(&split.test),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunPoint {
    pub round: usize,
    pub labeled_count: usize,
    pub accuracy: f64,
}

/// One active-learning run: a representation on one fold under one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub representation: NormalizationMode,
    pub fold: usize,
    pub seed: u64,
    pub points: Vec<RunPoint>,
    pub model: ModelSummary,
    pub split: SplitIds,
    /// Row ids acquired in each round after the first.
    pub acquired: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSpectrum {
    pub fold: usize,
    pub seed: u64,
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
    /// Seconds per run, in the same order as `runs`.
    pub run_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub config: ExperimentConfig,
    pub examples: usize,
    pub features: usize,
    pub class_counts: std::collections::BTreeMap<String, usize>,
    /// One aggregated curve per representation, in representation order.
    pub curves: Vec<LearningCurve>,
    /// Sorted by `(representation, fold, seed)`.
    pub runs: Vec<RunRecord>,
    pub spectra: Vec<FoldSpectrum>,
    pub timings: Timings,
}

impl ExperimentReport {
    pub fn curve(&self, mode: NormalizationMode) -> Option<&LearningCurve> {
        self.curves.iter().find(|c| c.representation == mode)
    }

    /// Mean accuracy at the last point of a representation's curve.
    pub fn final_mean(&self, mode: NormalizationMode) -> Option<f64> {
        self.curve(mode).and_then(|c| c.points.last()).map(|p| p.accuracy_mean)
    }
}

/// Loads the dataset named by the config and runs the comparison.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let schema = Schema::load(config.manifest_path()?)?;
    let table = load_csv(schema.data_path()?, &schema)?;
    let name = if config.dataset == DatasetTag::Custom {
        schema.name.clone()
    } else {
        config.dataset.tag().to_string()
    };
    run_on_table(&table, &name, config)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-representation mean and sample standard deviation over runs, on the
/// grid of rounds every run reached.
pub fn aggregate(
    dataset: &str,
    representations: &[NormalizationMode],
    runs: &[RunRecord],
) -> Vec<LearningCurve> {
    let grid = runs.iter().map(|r| r.points.len()).min().unwrap_or(0);
    let mut modes = representations.to_vec();
    modes.sort();
    modes.dedup();
    modes
        .into_iter()
        .map(|mode| {
            let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.representation == mode).collect();
            let points = (0..grid)
                .map(|i| {
                    let accs: Vec<f64> = mine.iter().map(|r| r.points[i].accuracy).collect();
                    let (accuracy_mean, accuracy_std) = mean_std(&accs);
                    CurvePoint {
                        labeled_count: mine[0].points[i].labeled_count,
                        accuracy_mean,
                        accuracy_std,
                    }
                })
                .collect();
            LearningCurve {
                dataset: dataset.to_string(),
                representation: mode,
                points,
            }
        })
        .collect()
}

struct Task<'a> {
    mode: NormalizationMode,
    seed: u64,
    split: &'a ActiveSplit,
    table: &'a DataTable,
}

/// Runs the comparison on an already loaded table.
pub fn run_on_table(table: &DataTable, dataset: &str, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let workers = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| WdneError::Config(format!("cannot start {} worker threads: {e}", config.jobs)))?;

    let mut prepared = Vec::new();
    for &seed in &config.seeds {
        let splits = ten_fold_splits(table, seed)?;
        for f in config.fold_indices() {
            let split = prepare_split(table, &splits[f], &config.active, derive_path(seed, &[STREAM_PREPARE, f as u64]))
                .map_err(|e| e.context(format!("preparing fold {f} (seed {seed})")))?;
            let fold_table = if config.standardize {
                let z = Standardizer::fit(&table.features().select_rows(&split.fit_rows))?;
                table.with_features(z.transform_table(table.features())?)?
            } else {
                table.clone()
            };
            prepared.push((seed, split, fold_table));
        }
    }

    let mut modes = config.representations.clone();
    modes.sort();
    modes.dedup();
    let tasks: Vec<Task> = modes
        .iter()
        .flat_map(|&mode| {
            prepared.iter().map(move |(seed, split, table)| Task {
                mode,
                seed: *seed,
                split,
                table,
            })
        })
        .collect();

    let spectra = workers.install(|| {
        prepared
            .par_iter()
            .map(|(seed, split, table)| {
                let (_, cov) = covariance(&table.features().select_rows(&split.fit_rows))?;
                Ok(FoldSpectrum {
                    fold: split.fold_index,
                    seed: *seed,
                    eigenvalues: eigen_sym(&cov)?.values,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let outcomes = workers.install(|| {
        tasks
            .par_iter()
            .map(|task| {
                let t0 = Instant::now();
                let fold = task.split.fold_index;
                let active = ActiveConfig {
                    seed: derive_path(task.seed, &[STREAM_RUN, fold as u64]),
                    ..config.active.clone()
                };
                let run = run_active(task.table, task.split, task.mode, &active, &config.mlp).map_err(|e| {
                    e.context(format!("{dataset}/{} fold {fold} seed {}", task.mode, task.seed))
                })?;
                let ids = |pos: &[usize]| -> Vec<usize> { pos.iter().map(|&p| table.row_ids()[p]).collect() };
                let record = RunRecord {
                    representation: task.mode,
                    fold,
                    seed: task.seed,
                    points: run
                        .rounds
                        .iter()
                        .map(|r| RunPoint {
                            round: r.round,
                            labeled_count: r.labeled_count,
                            accuracy: r.accuracy,
                        })
                        .collect(),
                    model: run.model,
                    split: SplitIds::from_split(table, task.split),
                    acquired: run.rounds.iter().skip(1).map(|r| ids(&r.acquired)).collect(),
                    warnings: run.warnings,
                };
                Ok((record, t0.elapsed().as_secs_f64()))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut outcomes = outcomes;
    outcomes.sort_by(|(a, _), (b, _)| {
        (a.representation, a.fold, a.seed).cmp(&(b.representation, b.fold, b.seed))
    });
    let (runs, run_seconds): (Vec<RunRecord>, Vec<f64>) = outcomes.into_iter().unzip();
    let curves = aggregate(dataset, &modes, &runs);

    Ok(ExperimentReport {
        dataset: dataset.to_string(),
        config: config.clone(),
        examples: table.len(),
        features: table.feature_count(),
        class_counts: class_histogram(table),
        curves,
        runs,
        spectra,
        timings: Timings {
            total_seconds: start.elapsed().as_secs_f64(),
            run_seconds,
        },
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| WdneError::io(path, e))?;
    f.write_all(contents).map_err(|e| WdneError::io(path, e))
}

pub const CURVES_HEADER: &str = "dataset,representation,fold,seed,round,labeled_count,accuracy";
pub const SUMMARY_HEADER: &str = "dataset,representation,labeled_count,mean,std,runs";

/// Per-run rows, one per round.
pub fn curves_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(CURVES_HEADER);
    out.push('\n');
    for run in &report.runs {
        for p in &run.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                report.dataset, run.representation, run.fold, run.seed, p.round, p.labeled_count, p.accuracy
            ));
        }
    }
    out
}

/// Final-round mean and standard deviation per representation.
pub fn summary_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for curve in &report.curves {
        let runs = report.runs.iter().filter(|r| r.representation == curve.representation).count();
        if let Some(p) = curve.points.last() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                report.dataset, curve.representation, p.labeled_count, p.accuracy_mean, p.accuracy_std, runs
            ));
        }
    }
    out
}

/// Writes `curves.csv`, `summary.csv` and `meta.json` into `dir`, creating it if needed.
pub fn emit_csv(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| WdneError::io(dir, e))?;
    let curves = dir.join("curves.csv");
    let summary = dir.join("summary.csv");
    let meta = dir.join("meta.json");
    write_file(&curves, curves_csv(report).as_bytes())?;
    write_file(&summary, summary_csv(report).as_bytes())?;
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| WdneError::Config(format!("cannot serialize report: {e}")))?;
    write_file(&meta, json.as_bytes())?;
    Ok(vec![curves, summary, meta])
}
