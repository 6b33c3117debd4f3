//! Correlated non-Hermitian Wishart and chiral Dirac random matrices.

pub mod core;
pub mod coulomb;
pub mod ensembles;
pub mod error;
pub mod globallaw;
pub mod kernels;
pub mod quadrature;
pub mod specialfn;
pub mod verify;

pub use crate::core::{make_params, scaled_value, EnsembleParams, Grid2D, ScaledComplex, SeedSpec};
pub use crate::error::{Error, Result};
