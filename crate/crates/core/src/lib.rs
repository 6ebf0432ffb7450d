//! Eigenvalue-weighted data normalization (WDNE) and the workbench used to
//! evaluate it.
//!
//! Raw features are projected onto their principal components and each
//! component is scaled by its eigenvalue relative to the largest one, so
//! high-variance directions dominate the inputs of a neural network. The
//! crate compares four representations ([`NormalizationMode`]) by training a
//! committee of five small MLPs inside a pool-based active-learning loop,
//! evaluated with ten-fold cross-validation.
//!
//! - [`linalg`]: covariance and the Jacobi symmetric eigensolver
//! - [`normalize`]: fitting and applying the four representations
//! - [`mlp`]: the three-layer backpropagation network
//! - [`committee`]: five-member voting and disagreement scores
//! - [`active`]: the acquisition loop and learning curves
//! - [`dataset`]: UCI-style loading, fold splits, initial labeled sets
//! - [`experiment`]: the full comparison and its CSV/JSON output

pub mod active;
pub mod committee;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod mlp;
pub mod normalize;
pub mod seed;

pub use active::{run_active, select_candidates, ActiveConfig, ActiveRun, ActiveSplit, LearningCurve};
pub use committee::{train_committee, Committee, Informativeness};
pub use dataset::{ten_fold_splits, DataTable, FoldSplit, Schema};
pub use error::{Result, WdneError};
pub use experiment::{emit_csv, run_experiment, ExperimentConfig, ExperimentReport};
pub use linalg::{covariance, eigen_sym, EigenDecomposition, Matrix, SymMatrix};
pub use mlp::{hidden_size, MlpConfig, MlpModel};
pub use normalize::{negative_weights, positive_weights, NormalizationMode, NormalizationModel};
