//! Gaussian solution samplers and the random-matrix baseline.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::distortion::max_distortion_value;
use crate::error::{param, Result};

/// A Gaussian sampler over `k x d` matrices: every entry is independent
/// `N(mean[i, l], variance)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerParams {
    pub mean: DMatrix<f64>,
    pub variance: f64,
}

impl SamplerParams {
    pub fn new(mean: DMatrix<f64>, variance: f64) -> Result<Self> {
        if mean.nrows() == 0 {
            return Err(param("target dimension k must be >= 1"));
        }
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(param(format!("variance must be finite and >= 0, got {variance}")));
        }
        Ok(Self { mean, variance })
    }

    /// The standard starting point: zero mean, unit variance.
    pub fn origin(k: usize, d: usize) -> Self {
        Self {
            mean: DMatrix::zeros(k, d),
            variance: 1.0,
        }
    }

    pub fn k(&self) -> usize {
        self.mean.nrows()
    }

    pub fn d(&self) -> usize {
        self.mean.ncols()
    }

    /// Flattened `(M row-major, sigma^2)` coordinates, length `k*d + 1`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.k() * self.d() + 1);
        for row in self.mean.row_iter() {
            out.extend(row.iter());
        }
        out.push(self.variance);
        out
    }

    pub fn from_flat(k: usize, d: usize, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), k * d + 1);
        Self {
            mean: DMatrix::from_row_slice(k, d, &flat[..k * d]),
            variance: flat[k * d],
        }
    }
}

/// A seeded generator for stream `stream` of `seed`. Streams are independent
/// ChaCha sequences, so parallel trials stay reproducible.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fills a `k x d` matrix with standard normal draws in row-major order.
pub fn standard_normal_matrix(k: usize, d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let raw: Vec<f64> = (0..k * d).map(|_| StandardNormal.sample(rng)).collect();
    DMatrix::from_row_slice(k, d, &raw)
}

/// Draws one matrix from `N(M, sigma^2)`. Zero variance returns `M` as is.
pub fn sample_gaussian_matrix(params: &SamplerParams, seed: u64) -> DMatrix<f64> {
    if params.variance == 0.0 {
        return params.mean.clone();
    }
    let mut rng = stream_rng(seed, 0);
    let z = standard_normal_matrix(params.k(), params.d(), &mut rng);
    &params.mean + z * params.variance.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineSummary {
    pub avg_max_distortion: f64,
    pub min_max_distortion: f64,
    pub trials: usize,
}

/// Max distortion of `trials` independent `N(0, 1)` matrices, in trial order.
pub fn baseline_max_distortions(data: &Dataset, k: usize, trials: usize, seed: u64) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(param("trials must be >= 1"));
    }
    if k == 0 {
        return Err(param("k must be >= 1"));
    }
    let d = data.d();
    Ok((0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let z = standard_normal_matrix(k, d, &mut rng);
            max_distortion_value(&z, data)
        })
        .collect())
}

/// Average and minimum max-distortion over `trials` random Gaussian matrices.
pub fn baseline_gaussian_trials(data: &Dataset, k: usize, trials: usize, seed: u64) -> Result<BaselineSummary> {
    let vals = baseline_max_distortions(data, k, trials, seed)?;
    let avg = vals.iter().sum::<f64>() / trials as f64;
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BaselineSummary {
        avg_max_distortion: avg,
        min_max_distortion: min,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::make_unit_dataset;

    #[test]
    fn zero_variance_returns_mean() {
        let mean = DMatrix::from_fn(3, 4, |i, j| (i as f64) * 0.3 - j as f64);
        let p = SamplerParams::new(mean.clone(), 0.0).unwrap();
        assert_eq!(sample_gaussian_matrix(&p, 9), mean);
    }

    #[test]
    fn seeded_sampling_is_replayable() {
        let p = SamplerParams::origin(4, 6);
        assert_eq!(sample_gaussian_matrix(&p, 5), sample_gaussian_matrix(&p, 5));
        assert_ne!(sample_gaussian_matrix(&p, 5), sample_gaussian_matrix(&p, 6));
    }

    #[test]
    fn standard_entries_have_unit_moments() {
        let p = SamplerParams::origin(200, 250);
        let a = sample_gaussian_matrix(&p, 11);
        let m = a.len() as f64;
        let mean = a.iter().sum::<f64>() / m;
        let var = a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        // 3 standard errors for the mean and the sample variance
        assert!(mean.abs() < 3.0 / m.sqrt());
        assert!((var - 1.0).abs() < 3.0 * (2.0 / m).sqrt());
    }

    #[test]
    fn single_trial_avg_equals_min() {
        let ds = make_unit_dataset(10, 8, 2).unwrap();
        let s = baseline_gaussian_trials(&ds, 3, 1, 4).unwrap();
        assert_eq!(s.avg_max_distortion, s.min_max_distortion);
    }

    #[test]
    fn baseline_ordering_and_errors() {
        let ds = make_unit_dataset(1, 8, 2).unwrap();
        let s = baseline_gaussian_trials(&ds, 4, 50, 4).unwrap();
        assert!(s.min_max_distortion <= s.avg_max_distortion);
        assert!(baseline_gaussian_trials(&ds, 4, 0, 4).is_err());
    }

    #[test]
    fn flat_roundtrip() {
        let p = SamplerParams::new(DMatrix::from_fn(2, 3, |i, j| (i * 3 + j) as f64), 0.25).unwrap();
        let flat = p.to_flat();
        assert_eq!(flat, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 0.25]);
        assert_eq!(SamplerParams::from_flat(2, 3, &flat), p);
    }
}
