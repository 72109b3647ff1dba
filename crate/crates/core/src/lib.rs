//! Gaussian and bootstrap approximations for scaled sums of independent
//! high-dimensional vectors.
//!
//! The crate covers the statistics behind the approximations (covariance
//! gaps, moment functionals, bound shapes), samplers for the designs used to
//! probe them, Monte Carlo estimators of Kolmogorov-type distances over
//! rectangle families, the mixed smoothing functions with exact derivatives,
//! and the two-point and zero-skewness lower-bound constructions.

pub mod bootstrap;
pub mod bounds;
pub mod distance;
pub mod error;
pub mod lowerbound;
pub mod matcore;
pub mod rng;
pub mod sampler;
pub mod smoothing;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use matcore::{CovarianceModel, RectangleSpec};
