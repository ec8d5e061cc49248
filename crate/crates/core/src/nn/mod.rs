//! Small dense networks trained by backpropagation.

mod checkpoint;
mod mlp;
mod optim;
mod regressor;

use thiserror::Error;

pub use checkpoint::Checkpoint;
pub use mlp::{Activation, Dense, Gradients, Mlp, Tape};
pub use optim::{Optimizer, OptimizerKind};
pub use regressor::{FitSpec, Regressor, Standardizer};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("checkpoint line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error("loss became non-finite at step {step}")]
    NonFiniteLoss { step: usize },
}
