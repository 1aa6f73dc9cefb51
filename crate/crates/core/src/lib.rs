//! Laplace-transform censoring estimators and goodness-of-fit tests for
//! positive stable, Tweedie and generalized Jacobi laws, with samplers and a
//! reproducible Monte Carlo harness.

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod input;
pub mod laplace_core;
pub mod montecarlo;
pub mod numdiff;
pub mod numeric;
pub mod rng;

pub use distributions::{DistributionSpec, PsParams, Tw0Params, TweedieParams};
pub use error::{Error, Result};
pub use estimators::{default_registry, Family, FamilyRegistry, FitSummary, GofOutcome};
pub use laplace_core::Sample;
pub use rng::RngStream;
