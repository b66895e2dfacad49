//! Self-avoiding-walk samplers for discrete Ising-type models, with
//! Bayesian-optimization adaptation of the kernel parameters.

pub mod baseline;
pub mod bayes_opt;
pub mod diagnostics;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod sampler;
pub mod saw;
pub mod weight_tree;
