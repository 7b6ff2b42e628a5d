//! Monte Carlo training of a Gaussian sampler on the expected max distortion.
//!
//! The proxy objective is `E[h(M + sigma Z)] + sigma^2/2` with
//! `h(A) = max_j |(1/k)||A x_j||^2 - 1|`, estimated from a batch of `Z`
//! draws. Gradients are pathwise: each sample is differentiated at its
//! worst point. Training runs Adam on `(M, sigma)` and squares `sigma` for
//! use, so the variance stays nonnegative without projection.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::distortion::{check_shape, max_distortion_value};
use crate::error::{param, Error, Result};
use crate::io::fmt_f64;
use crate::objective::GradientVector;
use crate::sampling::{standard_normal_matrix, stream_rng, SamplerParams};

/// Points closer than this to the current maximum count as ties.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub iters: usize,
    pub batch: usize,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Added to the root of the second moment.
    pub adam_eps: f64,
    pub seed: u64,
    pub log_every: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            iters: 5000,
            batch: 20,
            step_size: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            log_every: 1,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(param("batch must be >= 1"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(param(format!("step_size must be positive, got {}", self.step_size)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(param(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.adam_eps > 0.0) {
            return Err(param("adam_eps must be positive"));
        }
        if self.log_every == 0 {
            return Err(param("log_every must be >= 1"));
        }
        Ok(())
    }
}

/// `h` at one matrix together with the worst point and the kink sign.
struct WorstPoint {
    h: f64,
    j: usize,
    sign: f64,
    /// `A x_j`.
    ax: Vec<f64>,
}

fn worst_point(a: &DMatrix<f64>, data: &Dataset) -> WorstPoint {
    let k = a.nrows() as f64;
    let proj = a * data.points().transpose();
    let mut best = (f64::NEG_INFINITY, 0usize, 0.0);
    for (j, col) in proj.column_iter().enumerate() {
        let r = col.norm_squared() / k - 1.0;
        if r.abs() > best.0 + TIE_TOL {
            best = (r.abs(), j, r);
        }
    }
    let (h, j, r) = best;
    WorstPoint {
        h,
        j,
        sign: if r >= 0.0 { 1.0 } else { -1.0 },
        ax: proj.column(j).iter().copied().collect(),
    }
}

/// One draw's contribution: value, gradient in `A` and derivative along `Z`.
struct SampleTerm {
    h: f64,
    grad_a: DMatrix<f64>,
    d_sigma: f64,
}

fn sample_term(mean: &DMatrix<f64>, sigma: f64, z: &DMatrix<f64>, data: &Dataset) -> SampleTerm {
    let a = mean + z * sigma;
    let w = worst_point(&a, data);
    let k = a.nrows() as f64;
    let x = data.points().row(w.j);
    let scale = w.sign * 2.0 / k;
    let mut grad_a = DMatrix::zeros(a.nrows(), a.ncols());
    for (r, axr) in w.ax.iter().enumerate() {
        for c in 0..a.ncols() {
            grad_a[(r, c)] = scale * axr * x[c];
        }
    }
    let zx = z * x.transpose();
    let d_sigma = scale * w.ax.iter().zip(zx.iter()).map(|(p, q)| p * q).sum::<f64>();
    SampleTerm {
        h: w.h,
        grad_a,
        d_sigma,
    }
}

/// Batch of draws `Z_i` from streams `base .. base + batch`.
fn batch_terms(mean: &DMatrix<f64>, sigma: f64, data: &Dataset, batch: usize, seed: u64, base: u64) -> Vec<SampleTerm> {
    let (k, d) = (mean.nrows(), mean.ncols());
    (0..batch)
        .into_par_iter()
        .map(|i| {
            let z = standard_normal_matrix(k, d, &mut stream_rng(seed, base + i as u64));
            sample_term(mean, sigma, &z, data)
        })
        .collect()
}

fn check(params: &SamplerParams, data: &Dataset, batch: usize) -> Result<()> {
    check_shape(&params.mean, data.d())?;
    if batch == 0 {
        return Err(param("batch must be >= 1"));
    }
    if !(params.variance >= 0.0) {
        return Err(param(format!("variance must be >= 0, got {}", params.variance)));
    }
    Ok(())
}

/// `(1/N) sum_i h(M + sigma Z_i) + sigma^2/2`, with `Z_i` drawn from streams
/// `0..N` of `seed`.
pub fn proxy_objective(params: &SamplerParams, data: &Dataset, batch: usize, seed: u64) -> Result<f64> {
    check(params, data, batch)?;
    let terms = batch_terms(&params.mean, params.variance.sqrt(), data, batch, seed, 0);
    Ok(terms.iter().map(|t| t.h).sum::<f64>() / batch as f64 + params.variance / 2.0)
}

/// Pathwise gradient of [`proxy_objective`] (same draws) with respect to
/// `(M, sigma^2)`.
///
/// At `sigma^2 = 0` the sampling term has no derivative in `sigma^2`; only
/// the regularizer's `1/2` is reported there.
pub fn proxy_gradient(params: &SamplerParams, data: &Dataset, batch: usize, seed: u64) -> Result<GradientVector> {
    check(params, data, batch)?;
    let sigma = params.variance.sqrt();
    let terms = batch_terms(&params.mean, sigma, data, batch, seed, 0);
    let nb = batch as f64;
    let mut d_mean = DMatrix::zeros(params.k(), params.d());
    let mut d_sigma = 0.0;
    for t in &terms {
        d_mean += &t.grad_a;
        d_sigma += t.d_sigma;
    }
    d_mean /= nb;
    d_sigma /= nb;
    let d_tau = if sigma > 0.0 { d_sigma / (2.0 * sigma) } else { 0.0 } + 0.5;
    Ok(GradientVector { d_mean, d_tau })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub iter: usize,
    /// `h` of one matrix drawn from the current sampler.
    pub sampled_distortion: f64,
    /// `h(M)`.
    pub mean_matrix_distortion: f64,
    pub sigma2: f64,
    /// Batch estimate of the proxy objective.
    pub proxy_value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub const CSV_HEADER: &'static str = "iter,sampled_distortion,mean_matrix_distortion,sigma2,proxy_value";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iter,
                fmt_f64(r.sampled_distortion),
                fmt_f64(r.mean_matrix_distortion),
                fmt_f64(r.sigma2),
                fmt_f64(r.proxy_value)
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct McResult {
    pub params: SamplerParams,
    pub trajectory: Trajectory,
    /// `h` of the final mean matrix.
    pub final_distortion: f64,
}

/// Adam moment estimates over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(dim: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            theta[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Consecutive logged proxies above `DIVERGE_FACTOR` times the first one
/// that count as divergence.
const DIVERGE_LOGS: usize = 100;
const DIVERGE_FACTOR: f64 = 10.0;

/// Adam on `(M, sigma)` from `(0, 1)`.
///
/// Iteration `t` draws its batch from streams `t*(N+1) .. t*(N+1)+N` and the
/// logged sample from stream `t*(N+1)+N`. A row is logged at `t = 0`, every
/// `log_every` iterations and for the final state at `t = iters`.
pub fn run_mc_training(data: &Dataset, k: usize, cfg: &McConfig) -> Result<McResult> {
    cfg.validate()?;
    if k == 0 {
        return Err(param("k must be >= 1"));
    }
    let d = data.d();
    let mut mean = DMatrix::zeros(k, d);
    let mut sigma: f64 = 1.0;
    let mut adam = Adam::new(k * d + 1, cfg.step_size, cfg.beta1, cfg.beta2, cfg.adam_eps);
    let mut traj = Trajectory::default();
    let stride = cfg.batch as u64 + 1;
    let mut initial_proxy = None;
    let mut high_run = 0usize;

    for t in 0..=cfg.iters {
        let base = t as u64 * stride;
        let terms = batch_terms(&mean, sigma, data, cfg.batch, cfg.seed, base);
        let nb = cfg.batch as f64;
        let proxy = terms.iter().map(|s| s.h).sum::<f64>() / nb + sigma * sigma / 2.0;

        if t % cfg.log_every == 0 || t == cfg.iters {
            let z = standard_normal_matrix(k, d, &mut stream_rng(cfg.seed, base + cfg.batch as u64));
            let sampled = &mean + z * sigma;
            traj.rows.push(TrajectoryRow {
                iter: t,
                sampled_distortion: max_distortion_value(&sampled, data),
                mean_matrix_distortion: max_distortion_value(&mean, data),
                sigma2: sigma * sigma,
                proxy_value: proxy,
            });
            let first = *initial_proxy.get_or_insert(proxy);
            if proxy > DIVERGE_FACTOR * first {
                high_run += 1;
                if high_run >= DIVERGE_LOGS {
                    return Err(Error::Divergence {
                        iter: t,
                        trajectory: Box::new(traj),
                    });
                }
            } else {
                high_run = 0;
            }
        }
        if !proxy.is_finite() {
            return Err(Error::Numerical(format!("non-finite proxy at iteration {t}")));
        }
        if t == cfg.iters {
            break;
        }

        let mut grad: Vec<f64> = vec![0.0; k * d + 1];
        for s in &terms {
            for (r, row) in s.grad_a.row_iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    grad[r * d + c] += v;
                }
            }
            grad[k * d] += s.d_sigma;
        }
        grad.iter_mut().for_each(|g| *g /= nb);
        grad[k * d] += sigma;

        let mut theta: Vec<f64> = mean.transpose().iter().copied().collect();
        theta.push(sigma);
        adam.step(&mut theta, &grad);
        sigma = theta[k * d].clamp(0.0, 1.0);
        mean = DMatrix::from_row_slice(k, d, &theta[..k * d]);
    }

    let final_distortion = max_distortion_value(&mean, data);
    Ok(McResult {
        params: SamplerParams::new(mean, sigma * sigma)?,
        trajectory: traj,
        final_distortion,
    })
}
