use thiserror::Error;

use crate::graph::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("trajectories are not aligned: {0}")]
    Alignment(String),

    #[error("velocity is not antisymmetric: |v[{i}][{j}] + v[{j}][{i}]| = {residual:e}")]
    Antisymmetry { i: usize, j: usize, residual: f64 },

    #[error("invalid input: {0}")]
    Validation(String),

    /// A non-finite value appeared mid-run. The trajectory up to the last
    /// finite sample is kept so callers can still write it out.
    #[error("integration diverged at step {step} (t = {time})")]
    Divergence {
        step: usize,
        time: f64,
        partial: Box<Trajectory>,
    },

    #[error("Picard iteration did not converge in {} iterations (last gap {:e})", gaps.len(), gaps.last().copied().unwrap_or(f64::NAN))]
    NonConvergence { gaps: Vec<f64> },

    #[error("rate fit needs at least 3 usable points, got {usable}")]
    InsufficientData { usable: usize },
}
