//! Bayesian-optimization adaptation of SARDONICS parameters: a Gaussian
//! process over the unit-box encoding of the parameters, expected
//! improvement maximized by rectangle subdivision, and a Boltzmann policy
//! over candidates for the sampling phase.

mod acquisition;
mod adapt;
mod gp;
mod lhs;
mod policy;
mod space;

use thiserror::Error;

pub use acquisition::{acq_optimize, direct_maximize, expected_improvement, expected_improvement_from};
pub use adapt::{adapt, AdaptConfig, AdaptEntry, AdaptResult, MAX_ITERATIONS};
pub use gp::{ard_kernel, gp_fit, FitOptions, GpSurrogate, Hypers};
pub use lhs::{latin_hypercube, lhs_init};
pub use policy::{boltzmann_policy, BoltzmannPolicy, PolicyCandidate};
pub use space::{ParamSpace, SpaceBounds, DIMS, DIM_NAMES};

#[derive(Debug, Error)]
pub enum BayesOptError {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("invalid adaptation settings: {0}")]
    InvalidConfig(String),
    #[error("covariance not positive definite after jitter escalation")]
    NotPositiveDefinite,
    #[error("need at least 2 observations to fit, got {0}")]
    TooFewObservations(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Kernel(#[from] crate::saw::KernelError),
    #[error(transparent)]
    Diagnostics(#[from] crate::diagnostics::DiagnosticsError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
