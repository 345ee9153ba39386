//! Frequency-shift sensing with time-resolved two-photon interference.
//!
//! * [`model`]: outcome probabilities and delay densities.
//! * [`sampler`]: seeded synthetic records and their CSV form.
//! * [`fisher`]: classical and quantum Fisher information.
//! * [`estimator`]: maximum-likelihood estimation and Monte-Carlo harness.
//! * [`cli`]: figure data, sweeps and file outputs behind the binary.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimator;
pub mod fisher;
pub mod model;
pub mod quadrature;
pub mod sampler;

pub use error::{Error, Result};
pub use estimator::{mle, monte_carlo, EstimationResult, EstimatorConfig, MonteCarloSummary};
pub use fisher::{FisherMethod, FisherReport};
pub use model::{DetectionOutcome, EventClass, ModelParams};
pub use quadrature::QuadratureSpec;
pub use sampler::{draw_batch, SampleBatch, SamplerConfig, TrialRecord};
