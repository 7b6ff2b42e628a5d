//! Deterministic Johnson-Lindenstrauss matrices found by descending over
//! Gaussian solution samplers `A ~ N(M, sigma^2)`.
//!
//! The exact objective is a union bound of noncentral chi-squared tail
//! probabilities plus `sigma^2/2`; a second-order method drives the variance
//! to zero and returns the mean matrix. A Monte Carlo variant trains the same
//! sampler with Adam on the expected max distortion.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterexample;
pub mod dataset;
pub mod distortion;
pub mod eigen;
pub mod error;
pub mod gamma;
pub mod io;
pub mod mcsim;
pub mod ncx2;
pub mod objective;
pub mod optimizer;
pub mod sampling;

pub use error::{Error, Result};
