//! Pool-based active learning: each round the committee scores the unlabeled
//! pool, the `beta` most informative examples are shortlisted, and `alpha` of
//! them are drawn at random and labeled.

use std::collections::HashSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::committee::{train_committee, Committee, Informativeness};
use crate::dataset::{stratified_initial, DataTable, FoldSplit};
use crate::error::{Result, WdneError};
use crate::mlp::MlpConfig;
use crate::normalize::{ModelSummary, NormalizationMode, NormalizationModel};
use crate::seed::{derive_path, derive_seed};

const STREAM_INITIAL: u64 = 1;
const STREAM_POOL: u64 = 2;
const STREAM_ACQUIRE: u64 = 3;
const STREAM_COMMITTEE: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveConfig {
    pub init_pos: usize,
    pub init_neg: usize,
    pub pool_size: usize,
    /// Shortlist size.
    pub beta: usize,
    /// Examples acquired per round.
    pub alpha: usize,
    pub rounds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub informativeness: Informativeness,
}

impl ActiveConfig {
    /// 6 + 6 initial, pool of 100, 4 drawn from 16 candidates.
    pub fn heart() -> Self {
        ActiveConfig {
            init_pos: 6,
            init_neg: 6,
            pool_size: 100,
            beta: 16,
            alpha: 4,
            rounds: 22,
            seed: 0,
            informativeness: Informativeness::VoteEntropy,
        }
    }

    /// 6 + 9 initial, pool of 240, 10 drawn from 32 candidates.
    pub fn spam() -> Self {
        ActiveConfig {
            init_pos: 6,
            init_neg: 9,
            pool_size: 240,
            beta: 32,
            alpha: 10,
            rounds: 24,
            ..ActiveConfig::heart()
        }
    }

    /// 6 + 6 initial, pool of 200, 8 drawn from 32 candidates.
    pub fn waveform() -> Self {
        ActiveConfig {
            init_pos: 6,
            init_neg: 6,
            pool_size: 200,
            beta: 32,
            alpha: 8,
            rounds: 24,
            ..ActiveConfig::heart()
        }
    }

    pub fn initial_count(&self) -> usize {
        self.init_pos + self.init_neg
    }

    pub fn validate(&self) -> Result<()> {
        if self.init_pos == 0 || self.init_neg == 0 {
            return Err(WdneError::Config("initial labeled counts must be >= 1".into()));
        }
        if self.alpha == 0 || self.alpha > self.beta || self.beta > self.pool_size {
            return Err(WdneError::Config(format!(
                "need 1 <= alpha <= beta <= pool_size, got alpha={} beta={} pool_size={}",
                self.alpha, self.beta, self.pool_size
            )));
        }
        if self.rounds == 0 {
            return Err(WdneError::Config("rounds must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub labeled_count: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
}

/// Test accuracy against labeled-set size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub dataset: String,
    pub representation: NormalizationMode,
    pub points: Vec<CurvePoint>,
}

/// Table positions used by one active-learning run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSplit {
    pub fold_index: usize,
    /// Rows the normalization is fitted on: the whole training partition.
    pub fit_rows: Vec<usize>,
    pub initial: Vec<usize>,
    pub pool: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Draws the stratified initial labeled set and the unlabeled pool from a fold's training partition.
pub fn prepare_split(
    table: &DataTable,
    fold: &FoldSplit,
    config: &ActiveConfig,
    seed: u64,
) -> Result<ActiveSplit> {
    config.validate()?;
    let (initial, remainder) = stratified_initial(
        table,
        &fold.train,
        config.init_pos,
        config.init_neg,
        derive_seed(seed, STREAM_INITIAL),
    )?;
    if remainder.len() < config.pool_size {
        return Err(WdneError::Config(format!(
            "fold {} leaves {} unlabeled training examples, fewer than the pool size {}",
            fold.fold_index,
            remainder.len(),
            config.pool_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_POOL));
    let mut pool: Vec<usize> = index::sample(&mut rng, remainder.len(), config.pool_size)
        .into_iter()
        .map(|i| remainder[i])
        .collect();
    pool.sort_unstable();

    Ok(ActiveSplit {
        fold_index: fold.fold_index,
        fit_rows: fold.train.clone(),
        initial,
        pool,
        validation: fold.validation.clone(),
        test: fold.test.clone(),
    })
}

/// Indices of the `beta` largest scores, ties broken by ascending index; returned ascending.
pub fn select_candidates(scores: &[f64], beta: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(beta);
    order.sort_unstable();
    order
}

/// What happened in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub labeled_count: usize,
    pub accuracy: f64,
    /// Table positions shortlisted this round (empty for round 0).
    pub candidates: Vec<usize>,
    /// Table positions acquired this round (empty for round 0).
    pub acquired: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveRun {
    pub curve: LearningCurve,
    pub rounds: Vec<RoundRecord>,
    pub model: ModelSummary,
    pub warnings: Vec<String>,
}

/// Runs the active-learning loop on one fold under one representation.
///
/// The normalization is fitted on the features of `split.fit_rows` (labels
/// unused) and applied to every split. Round 0 trains on the initial set;
/// each later round acquires `alpha` pool examples and retrains from fresh
/// seeds. The curve has `rounds + 1` points unless the pool runs out.
pub fn run_active(
    table: &DataTable,
    split: &ActiveSplit,
    mode: NormalizationMode,
    active: &ActiveConfig,
    mlp: &MlpConfig,
) -> Result<ActiveRun> {
    active.validate()?;
    if split.validation.is_empty() || split.test.is_empty() {
        return Err(WdneError::Precondition("validation and test sets must be non-empty".into()));
    }
    if split.pool.len() < active.pool_size {
        return Err(WdneError::Precondition(format!(
            "pool has {} examples, configured size is {}",
            split.pool.len(),
            active.pool_size
        )));
    }

    let model = NormalizationModel::fit(&table.features().select_rows(&split.fit_rows), mode, None)?;
    let data = table.with_features(model.transform_table(table.features())?)?;
    let validation = data.subset(&split.validation);
    let test = data.subset(&split.test);

    let mut labeled = split.initial.clone();
    let mut pool = split.pool.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(active.seed, STREAM_ACQUIRE));
    let mut rounds = Vec::with_capacity(active.rounds + 1);
    let mut warnings = Vec::new();
    let mut last_committee: Option<Committee> = None;

    for round in 0..=active.rounds {
        let mut candidates = Vec::new();
        let mut acquired = Vec::new();
        if round > 0 {
            if pool.len() < active.alpha {
                warnings.push(format!(
                    "pool exhausted before round {round}: {} examples left, {} needed",
                    pool.len(),
                    active.alpha
                ));
                break;
            }
            let committee = last_committee.as_ref().expect("round 0 trains a committee");
            let scores = pool
                .iter()
                .map(|&i| committee.informativeness(data.features().row(i), active.informativeness))
                .collect::<Result<Vec<f64>>>()?;
            let shortlist = select_candidates(&scores, active.beta.min(pool.len()));
            let picks = index::sample(&mut rng, shortlist.len(), active.alpha);
            let picked: HashSet<usize> = picks.iter().map(|k| shortlist[k]).collect();

            candidates = shortlist.iter().map(|&k| pool[k]).collect();
            acquired = picks.iter().map(|k| pool[shortlist[k]]).collect();
            labeled.extend_from_slice(&acquired);
            pool = pool
                .iter()
                .enumerate()
                .filter(|(k, _)| !picked.contains(k))
                .map(|(_, &i)| i)
                .collect();
        }

        let train = data.subset(&labeled);
        let round_seed = derive_path(active.seed, &[STREAM_COMMITTEE, round as u64]);
        let committee = train_committee(&train, &validation, mlp, round_seed)?;
        let accuracy = committee.accuracy(&test)?;
        rounds.push(RoundRecord {
            round,
            labeled_count: labeled.len(),
            accuracy,
            candidates,
            acquired,
        });
        last_committee = Some(committee);
    }

    let curve = LearningCurve {
        dataset: String::new(),
        representation: mode,
        points: rounds
            .iter()
            .map(|r| CurvePoint {
                labeled_count: r.labeled_count,
                accuracy_mean: r.accuracy,
                accuracy_std: 0.0,
            })
            .collect(),
    };
    Ok(ActiveRun {
        curve,
        rounds,
        model: model.summary(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ten_fold_splits;
    use crate::linalg::Matrix;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn blobs(seed: u64, n: usize) -> DataTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let features = Matrix::from_fn(n, 3, |i, j| {
            let shift = if j == 0 { if labels[i] == 0 { -1.0 } else { 1.0 } } else { 0.0 };
            shift + rng.sample::<f64, _>(StandardNormal)
        });
        DataTable::new(features, labels, vec!["a".into(), "b".into()]).unwrap()
    }

    fn small_config() -> ActiveConfig {
        ActiveConfig {
            init_pos: 3,
            init_neg: 3,
            pool_size: 30,
            beta: 6,
            alpha: 2,
            rounds: 4,
            seed: 9,
            informativeness: Informativeness::VoteEntropy,
        }
    }

    fn quick_mlp() -> MlpConfig {
        MlpConfig { max_epochs: 40, patience: 5, ..MlpConfig::default() }
    }

    fn setup() -> (DataTable, ActiveSplit, ActiveConfig) {
        let table = blobs(3, 120);
        let folds = ten_fold_splits(&table, 1).unwrap();
        let cfg = small_config();
        let split = prepare_split(&table, &folds[0], &cfg, 5).unwrap();
        (table, split, cfg)
    }

    #[test]
    fn select_candidates_examples() {
        assert_eq!(select_candidates(&[0.1, 0.9, 0.5], 2), vec![1, 2]);
        assert_eq!(select_candidates(&[0.3; 4], 2), vec![0, 1]);
        assert_eq!(select_candidates(&[0.2, 0.1, 0.7], 3), vec![0, 1, 2]);
        assert_eq!(select_candidates(&[0.0, 1.0, 1.0, 0.5], 1), vec![1]);
    }

    #[test]
    fn presets_match_published_settings() {
        let h = ActiveConfig::heart();
        assert_eq!((h.initial_count(), h.pool_size, h.beta, h.alpha), (12, 100, 16, 4));
        let s = ActiveConfig::spam();
        assert_eq!((s.initial_count(), s.pool_size, s.beta, s.alpha), (15, 240, 32, 10));
        let w = ActiveConfig::waveform();
        assert_eq!((w.initial_count(), w.pool_size, w.beta, w.alpha), (12, 200, 32, 8));
        for c in [h, s, w] {
            c.validate().unwrap();
        }
    }

    #[test]
    fn validate_rejects_bad_sizes() {
        let bad = [
            ActiveConfig { alpha: 0, ..small_config() },
            ActiveConfig { alpha: 7, ..small_config() },
            ActiveConfig { beta: 31, ..small_config() },
            ActiveConfig { init_neg: 0, ..small_config() },
            ActiveConfig { rounds: 0, ..small_config() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(WdneError::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn split_sets_are_disjoint() {
        let (table, split, cfg) = setup();
        assert_eq!(split.initial.len(), 6);
        assert_eq!(split.pool.len(), cfg.pool_size);
        let mut seen = HashSet::new();
        for &i in split.initial.iter().chain(&split.pool).chain(&split.validation).chain(&split.test) {
            assert!(seen.insert(i), "position {i} used twice");
        }
        let fit: HashSet<usize> = split.fit_rows.iter().copied().collect();
        assert!(split.initial.iter().chain(&split.pool).all(|i| fit.contains(i)));
        let positives = split.initial.iter().filter(|&&i| table.labels()[i] == table.positive_class()).count();
        assert_eq!(positives, cfg.init_pos);
    }

    #[test]
    fn oversized_pool_is_config_error() {
        let table = blobs(3, 120);
        let folds = ten_fold_splits(&table, 1).unwrap();
        let cfg = ActiveConfig { pool_size: 200, beta: 6, ..small_config() };
        assert!(matches!(prepare_split(&table, &folds[0], &cfg, 5), Err(WdneError::Config(_))));
    }

    #[test]
    fn loop_acquires_alpha_from_shortlist_each_round() {
        let (_, split, cfg) = setup();
        let table = blobs(3, 120);
        let run = run_active(&table, &split, NormalizationMode::WdnePositive, &cfg, &quick_mlp()).unwrap();
        assert_eq!(run.rounds.len(), cfg.rounds + 1);
        assert_eq!(run.curve.points.len(), cfg.rounds + 1);
        assert!(run.warnings.is_empty());

        let pool: HashSet<usize> = split.pool.iter().copied().collect();
        let mut taken = HashSet::new();
        for (r, rec) in run.rounds.iter().enumerate() {
            assert_eq!(rec.labeled_count, cfg.initial_count() + r * cfg.alpha);
            assert!((0.0..=1.0).contains(&rec.accuracy));
            if r == 0 {
                assert!(rec.acquired.is_empty());
                continue;
            }
            assert_eq!(rec.candidates.len(), cfg.beta);
            assert_eq!(rec.acquired.len(), cfg.alpha);
            for a in &rec.acquired {
                assert!(rec.candidates.contains(a));
                assert!(pool.contains(a));
                assert!(taken.insert(*a), "{a} acquired twice");
            }
        }
    }

    #[test]
    fn loop_is_reproducible() {
        let (table, split, cfg) = setup();
        let a = run_active(&table, &split, NormalizationMode::PcaOnly, &cfg, &quick_mlp()).unwrap();
        let b = run_active(&table, &split, NormalizationMode::PcaOnly, &cfg, &quick_mlp()).unwrap();
        assert_eq!(a.rounds, b.rounds);
        let c = run_active(&table, &split, NormalizationMode::PcaOnly, &ActiveConfig { seed: 10, ..cfg }, &quick_mlp())
            .unwrap();
        assert_ne!(a.rounds, c.rounds);
    }

    #[test]
    fn pool_exhaustion_stops_with_warning() {
        let (table, split, _) = setup();
        let cfg = ActiveConfig { rounds: 20, alpha: 6, ..small_config() };
        let run = run_active(&table, &split, NormalizationMode::Raw, &cfg, &quick_mlp()).unwrap();
        assert_eq!(run.rounds.len(), 6);
        assert_eq!(run.warnings.len(), 1);
        assert!(run.warnings[0].contains("pool exhausted"));
    }

    #[test]
    fn model_summary_reports_mode() {
        let (table, split, cfg) = setup();
        let run = run_active(&table, &split, NormalizationMode::WdneNegative, &ActiveConfig { rounds: 1, ..cfg }, &quick_mlp())
            .unwrap();
        assert_eq!(run.model.mode, NormalizationMode::WdneNegative);
        assert_eq!(run.model.weights.len(), 3);
        assert_eq!(*run.model.weights.last().unwrap(), 1.0);
    }
}
