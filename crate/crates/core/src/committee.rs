//! Five independently seeded networks combined by plurality vote.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::DataTable;
use crate::error::{Result, WdneError};
use crate::mlp::{self, argmax, MlpConfig, MlpModel};
use crate::seed::derive_seed;

pub const COMMITTEE_SIZE: usize = 5;

/// How informative an unlabeled example is to the committee.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Informativeness {
    /// Normalized entropy of the members' hard votes.
    #[default]
    VoteEntropy,
    /// One minus the gap between the two largest mean member probabilities.
    ProbabilityMargin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Committee {
    members: Vec<MlpModel>,
    class_count: usize,
}

/// Seed of member `index` in a committee trained with `round_seed`.
pub fn member_seed(round_seed: u64, index: usize) -> u64 {
    derive_seed(round_seed, index as u64)
}

/// Trains the five members on the same data; member `i` uses
/// [`member_seed`]`(round_seed, i)` for initialization and shuffling.
pub fn train_committee(
    train: &DataTable,
    validation: &DataTable,
    base_config: &MlpConfig,
    round_seed: u64,
) -> Result<Committee> {
    let members = (0..COMMITTEE_SIZE)
        .into_par_iter()
        .map(|i| {
            let cfg = base_config.for_shape(
                train.feature_count(),
                train.class_count(),
                member_seed(round_seed, i),
            );
            let model = MlpModel::init(&cfg)?;
            mlp::train(model, train, validation, &cfg).map(|(m, _)| m)
        })
        .collect::<Result<Vec<_>>>()?;
    Committee::from_members(members)
}

/// Plurality class of a set of votes; ties go to the lowest class index.
pub fn plurality(votes: &[usize], class_count: usize) -> usize {
    argmax(&tally(votes, class_count))
}

fn tally(votes: &[usize], class_count: usize) -> Vec<f64> {
    let mut counts = vec![0.0; class_count];
    for &v in votes {
        counts[v] += 1.0;
    }
    counts
}

/// `−Σ vₖ log vₖ / log(min(voters, classes))`, where `vₖ` is the fraction of votes for class `k`.
pub fn vote_entropy(votes: &[usize], class_count: usize) -> f64 {
    let denom = (votes.len().min(class_count) as f64).ln();
    if votes.is_empty() || denom <= 0.0 {
        return 0.0;
    }
    let n = votes.len() as f64;
    let h: f64 = tally(votes, class_count)
        .into_iter()
        .filter(|&c| c > 0.0)
        .map(|c| {
            let p = c / n;
            -p * p.ln()
        })
        .sum();
    (h / denom).clamp(0.0, 1.0)
}

impl Committee {
    pub fn from_members(members: Vec<MlpModel>) -> Result<Self> {
        if members.len() != COMMITTEE_SIZE {
            return Err(WdneError::Precondition(format!(
                "a committee has exactly {COMMITTEE_SIZE} members, got {}",
                members.len()
            )));
        }
        let class_count = members[0].outputs();
        if members.iter().any(|m| m.outputs() != class_count || m.inputs() != members[0].inputs()) {
            return Err(WdneError::Precondition("committee members differ in shape".into()));
        }
        Ok(Committee {
            members,
            class_count,
        })
    }

    pub fn members(&self) -> &[MlpModel] {
        &self.members
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>> {
        self.members.iter().map(|m| m.predict(x)).collect()
    }

    pub fn vote(&self, x: &[f64]) -> Result<usize> {
        Ok(plurality(&self.votes(x)?, self.class_count))
    }

    /// Vote entropy in `[0, 1]`: 0 when all members agree.
    pub fn disagreement(&self, x: &[f64]) -> Result<f64> {
        Ok(vote_entropy(&self.votes(x)?, self.class_count))
    }

    pub fn informativeness(&self, x: &[f64], measure: Informativeness) -> Result<f64> {
        match measure {
            Informativeness::VoteEntropy => self.disagreement(x),
            Informativeness::ProbabilityMargin => {
                let mut mean = vec![0.0; self.class_count];
                for m in &self.members {
                    for (acc, p) in mean.iter_mut().zip(m.forward(x)?) {
                        *acc += p / COMMITTEE_SIZE as f64;
                    }
                }
                mean.sort_by(|a, b| b.total_cmp(a));
                let second = mean.get(1).copied().unwrap_or(0.0);
                Ok(1.0 - (mean[0] - second))
            }
        }
    }

    /// Fraction of rows whose committee vote equals the label.
    pub fn accuracy(&self, test: &DataTable) -> Result<f64> {
        if test.is_empty() {
            return Err(WdneError::Precondition("accuracy of an empty test set".into()));
        }
        let mut correct = 0;
        for (x, &y) in test.features().row_iter().zip(test.labels()) {
            if self.vote(x)? == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / test.len() as f64)
    }
}
