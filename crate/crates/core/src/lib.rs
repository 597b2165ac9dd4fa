//! Sequential detection of a random wireless source with a uniform linear
//! array whose sensors only report the sign of their I/Q samples.
//!
//! * [`array_model`]: steering matrix, snapshot covariance, sampling and the
//!   sign quantizer.
//! * [`ideal_receiver`]: exact Gaussian LLR of the unquantized array.
//! * [`binary_model`]: pairwise sign statistics, their arcsine/orthant
//!   moments and the exponential-family approximation of the 1-bit LLR.
//! * [`sprt`]: Wald's test, thresholds, ASN, latency and efficiency.
//! * [`montecarlo`]: seeded simulation experiments.
//! * [`cli`]: command-line front end producing CSV tables.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod array_model;
pub mod binary_model;
pub mod cli;
pub mod error;
pub mod ideal_receiver;
pub mod montecarlo;
pub mod quadrature;
pub mod sprt;

pub use error::{Error, Result};
