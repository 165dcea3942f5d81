//! Group-level causal discovery in multivariate time series.
//!
//! A probabilistic recurrent forecaster is trained on all variables. Each
//! group of variables is then intervened on by swapping its conditioning
//! history for second-order Gaussian knockoffs, and a two-sample
//! Kolmogorov–Smirnov test decides whether the forecast residuals of another
//! group change. A change means the intervened group causes the other one.
//!
//! The pipeline, bottom up:
//!
//! - [`series`]: observations, group partitions, forecast windows, scaling.
//! - [`knockoff`]: Gaussian knockoff fitting and sampling.
//! - [`forecaster`]: gated recurrent forecaster with Gaussian output heads.
//! - [`invariance`]: residual distributions, KS tests, group verdicts.
//! - [`synth`]: ground-truth graphs and nonlinear lagged benchmark data.

// Index loops mirror the matrix formulas they implement.
#![allow(clippy::needless_range_loop)]
// `!(x > 0.0)` rejects NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod forecaster;
pub mod invariance;
pub mod knockoff;
mod linalg;
pub mod plot;
pub mod rng;
pub mod series;
pub mod synth;

pub use error::{Error, PartitionViolation, Result};
pub use series::{GroupPartition, MultivariateSeries, WindowSet};
