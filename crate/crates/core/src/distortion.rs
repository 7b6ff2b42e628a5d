//! Norm distortion of a fixed projection matrix.
//!
//! Squared norms are normalized by the target dimension: a point `x` has
//! distortion `|(1/k) * ||A x||^2 - 1|`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{param, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionReport {
    pub per_point: Vec<f64>,
    pub max: f64,
    pub mean: f64,
}

impl DistortionReport {
    fn from_per_point(per_point: Vec<f64>) -> Self {
        let max = per_point.iter().copied().fold(0.0, f64::max);
        let mean = per_point.iter().sum::<f64>() / per_point.len() as f64;
        Self { per_point, max, mean }
    }
}

pub(crate) fn check_shape(a: &DMatrix<f64>, d: usize) -> Result<()> {
    if a.ncols() != d || a.nrows() == 0 {
        return Err(Error::Shape {
            expected: format!("k x {d} with k >= 1"),
            got: format!("{} x {}", a.nrows(), a.ncols()),
        });
    }
    Ok(())
}

/// Per-point squared norms `||A x_j||^2`.
pub(crate) fn projected_sq_norms(a: &DMatrix<f64>, data: &Dataset) -> Vec<f64> {
    // columns of A X^T are the projected points
    let proj = a * data.points().transpose();
    proj.column_iter().map(|c| c.norm_squared()).collect()
}

/// Distortion of every point under `a`, plus the max and mean.
pub fn max_distortion(a: &DMatrix<f64>, data: &Dataset) -> Result<DistortionReport> {
    check_shape(a, data.d())?;
    let k = a.nrows() as f64;
    let per_point = projected_sq_norms(a, data)
        .into_iter()
        .map(|s| (s / k - 1.0).abs())
        .collect();
    Ok(DistortionReport::from_per_point(per_point))
}

/// Just the maximum distortion; the hot path for Monte Carlo loops.
pub(crate) fn max_distortion_value(a: &DMatrix<f64>, data: &Dataset) -> f64 {
    let k = a.nrows() as f64;
    projected_sq_norms(a, data)
        .into_iter()
        .map(|s| (s / k - 1.0).abs())
        .fold(0.0, f64::max)
}

/// The distortion level `C * sqrt(ln n / k)` of a Gaussian JL embedding.
pub fn jl_epsilon(n: f64, k: usize, c: f64) -> Result<f64> {
    if !(n >= 2.0) || k == 0 || !(c > 0.0) {
        return Err(param(format!(
            "jl_epsilon needs n >= 2, k >= 1, C > 0 (got n={n}, k={k}, C={c})"
        )));
    }
    Ok(c * (n.ln() / k as f64).sqrt())
}

/// Parallel variant of [`max_distortion`] over many matrices, returning the
/// maximum distortion of each in input order.
pub fn max_distortions(mats: &[DMatrix<f64>], data: &Dataset) -> Result<Vec<f64>> {
    for a in mats {
        check_shape(a, data.d())?;
    }
    Ok(mats.par_iter().map(|a| max_distortion_value(a, data)).collect())
}
