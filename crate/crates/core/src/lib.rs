//! Tempered quasi-posteriors for the diffusion variance of a Lévy process
//! observed with additive microstructure noise.
//!
//! The crate covers path simulation, the sine-basis Gaussian quasi-likelihood,
//! frequentist estimators of the variance and the jump contribution, the
//! tempered posterior with its location adjustment, a Gibbs sampler for a
//! fully specified jump-diffusion model, and a Monte Carlo harness.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod error;
pub mod estimators;
pub mod harness;
pub mod likelihood;
pub mod posterior;
pub mod quadrature;
pub mod reference;
pub mod rng;
pub mod sim;
pub mod spectral;
pub mod stats;

pub use error::{Result, VolError};
pub use estimators::{estimate, EstimatorReport, EstimatorSettings, Regime};
pub use likelihood::{Bounds, LikelihoodContext, MleReport};
pub use posterior::{PriorSpec, TemperedPosterior};
pub use rng::{ReplicationSeed, StreamRole};
pub use sim::{simulate_path, JumpFamily, JumpSpec, ModelSpec, SamplePath};
