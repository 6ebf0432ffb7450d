use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, WdneError>;

#[derive(Debug, Error)]
pub enum WdneError {
    /// An operation was called on input that violates its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("data error at row {row}, column {column}: {message}")]
    Data {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("degenerate spectrum: largest eigenvalue is {0}, data has no variance")]
    DegenerateSpectrum(f64),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("training diverged at epoch {epoch} with learning rate {learning_rate}: loss is not finite")]
    Divergence { epoch: usize, learning_rate: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<WdneError>,
    },
}

impl WdneError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        WdneError::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a description of the run it occurred in.
    pub fn context(self, context: impl Into<String>) -> Self {
        WdneError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code for the CLI: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            WdneError::Precondition(_) | WdneError::Config(_) | WdneError::Shape { .. } => 2,
            WdneError::Data { .. } | WdneError::Schema(_) | WdneError::Io { .. } => 3,
            WdneError::DegenerateSpectrum(_)
            | WdneError::NoConvergence { .. }
            | WdneError::Divergence { .. } => 4,
            WdneError::Context { source, .. } => source.exit_code(),
        }
    }
}
