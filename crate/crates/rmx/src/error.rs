use thiserror::Error;

use crate::core::SeedSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("eigensolver failed for seed {seed:?}: {msg}")]
    Eigensolver { seed: SeedSpec, msg: String },
    #[error("quadrature did not converge: {what} (error estimate {estimate:e})")]
    Quadrature { what: String, estimate: f64 },
    #[error("contour quadrature did not converge after {nodes} nodes (last relative change {change:e})")]
    Contour { nodes: usize, change: f64 },
    #[error("points {0} and {1} coincide")]
    Coincident(usize, usize),
    #[error("line search stagnated at iteration {iter} (grad norm {grad_norm:e})")]
    Stagnation { iter: usize, grad_norm: f64 },
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
