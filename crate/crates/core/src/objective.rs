//! The regularized sampler objective
//!
//! ```text
//! g(M, s2) = sum_j [1 + F_{k,delta_j}(k(1-eps)/s2) - F_{k,delta_j}(k(1+eps)/s2)] + s2/2
//! ```
//!
//! with `delta_j = ||M x_j||^2 / s2`. Each data point enters only through its
//! reduced coordinates `v = M x_j` and `tau = s2`, so value, gradient and
//! Hessian are assembled from per-point `(k+1)`-dimensional blocks and pulled
//! back through `x_j`.
//!
//! Per point, with `a = k(1-eps)/tau`, `b = k(1+eps)/tau`, `s = ||v||^2` and
//! `f_m`, `F_m` the noncentral density and CDF with `m` degrees of freedom:
//!
//! ```text
//! dphi/dv_i = (v_i/tau) [-(F_k - F_{k+2})(a) + (F_k - F_{k+2})(b)]
//! dphi/dtau = s/(2tau^2) (F_k - F_{k+2})(a) - k(1-eps)/tau^2 f_k(a)
//!           - s/(2tau^2) (F_k - F_{k+2})(b) + k(1+eps)/tau^2 f_k(b)
//! ```
//!
//! Second derivatives use `dF_m/d delta = -f_{m+2}` and
//! `df_m/d delta = (f_{m+2} - f_m)/2`, giving the reduced Hessian
//! `c1 I + c2 v v^T` on the `v` block, `c3 v` in the mixed column and a
//! scalar `h_tt`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::distortion::check_shape;
use crate::error::{param, Error, Result};
use crate::ncx2::{bundle, Ncx2Bundle};
use crate::sampling::SamplerParams;

/// Variance floor used when none is configured.
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-8;

/// Everything the objective needs besides the sampler parameters.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    pub data: Dataset,
    pub k: usize,
    pub eps: f64,
    pub sigma_floor: f64,
}

impl ObjectiveContext {
    /// `eps >= 1` is accepted: the lower band edge is then non-positive and
    /// only the upper constraint is active.
    pub fn new(data: Dataset, k: usize, eps: f64, sigma_floor: f64) -> Result<Self> {
        if k == 0 {
            return Err(param("target dimension k must be >= 1"));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(param(format!("eps must be positive, got {eps}")));
        }
        if !(sigma_floor > 0.0 && sigma_floor <= 1e-4) {
            return Err(param(format!("sigma_floor must lie in (0, 1e-4], got {sigma_floor}")));
        }
        Ok(Self {
            data,
            k,
            eps,
            sigma_floor,
        })
    }

    pub fn with_default_floor(data: Dataset, k: usize, eps: f64) -> Result<Self> {
        Self::new(data, k, eps, DEFAULT_SIGMA_FLOOR)
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn d(&self) -> usize {
        self.data.d()
    }

    /// Number of optimization coordinates, `k*d + 1`.
    pub fn dim(&self) -> usize {
        self.k * self.d() + 1
    }

    fn check(&self, params: &SamplerParams) -> Result<()> {
        check_shape(&params.mean, self.d())?;
        if params.k() != self.k {
            return Err(Error::Shape {
                expected: format!("{} x {}", self.k, self.d()),
                got: format!("{} x {}", params.k(), params.d()),
            });
        }
        if !(params.variance >= 0.0) {
            return Err(param(format!("variance must be >= 0, got {}", params.variance)));
        }
        Ok(())
    }

    /// Variance actually used for evaluation, clamped at the floor.
    pub fn effective_tau(&self, variance: f64) -> f64 {
        variance.max(self.sigma_floor)
    }
}

/// Reduced coordinates of one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPoint {
    pub v: Vec<f64>,
    pub tau: f64,
    pub delta: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ReducedPoint {
    pub fn new(v: &[f64], tau: f64, k: usize, eps: f64) -> Self {
        let s: f64 = v.iter().map(|x| x * x).sum();
        let kf = k as f64;
        Self {
            v: v.to_vec(),
            tau,
            delta: s / tau,
            lo: kf * (1.0 - eps) / tau,
            hi: kf * (1.0 + eps) / tau,
        }
    }
}

/// Per-point value and derivative coefficients at one `(v, tau)`.
#[derive(Debug, Clone, Copy, Default)]
struct PointTerms {
    fail: f64,
    /// `dphi/dv = g_v * v`
    g_v: f64,
    g_tau: f64,
    c1: f64,
    c2: f64,
    c3: f64,
    h_tt: f64,
}

fn point_terms(sq_norm: f64, tau: f64, k: usize, eps: f64, hessian: bool) -> PointTerms {
    let kf = k as f64;
    let alpha = kf * (1.0 - eps);
    let beta = kf * (1.0 + eps);
    let delta = sq_norm / tau;
    let a = alpha / tau;
    let b = beta / tau;
    let k = k as u32;
    let lower: Ncx2Bundle = if alpha > 0.0 {
        bundle(a, k, delta)
    } else {
        bundle(0.0, k, delta)
    };
    let upper = bundle(b, k, delta);
    let alpha = alpha.max(0.0);
    let a = a.max(0.0);

    // 1 + F(a) - F(b) = F(a) + (1 - F(b))
    let fail = (lower.cdf[0] + upper.sf[0]).min(1.0);

    let step_a = lower.cdf_step(0);
    let step_b = upper.cdf_step(0);
    let tau2 = tau * tau;
    let g_v = (-step_a + step_b) / tau;
    let g_tau = sq_norm / (2.0 * tau2) * step_a - alpha / tau2 * lower.pdf[0] - sq_norm / (2.0 * tau2) * step_b
        + beta / tau2 * upper.pdf[0];

    let mut t = PointTerms {
        fail,
        g_v,
        g_tau,
        ..Default::default()
    };
    if hessian {
        let tau3 = tau2 * tau;
        let diff2 = upper.pdf[1] - lower.pdf[1];
        let e = 0.5 * ((upper.pdf[2] - upper.pdf[1]) - (lower.pdf[2] - lower.pdf[1]));
        let slope = b * upper.dpdf[1] - a * lower.dpdf[1];
        t.c1 = 2.0 * diff2 / tau;
        t.c2 = 4.0 * e / tau2;
        t.c3 = -2.0 / tau2 * (diff2 + delta * e + slope);
        let d_diff2 = -delta * e / tau - slope / tau;
        let term_s = -sq_norm * (-2.0 * diff2 / tau3 + d_diff2 / tau2);
        let term_a = -alpha
            * (-2.0 * lower.pdf[0] / tau3
                + (0.5 * (lower.pdf[1] - lower.pdf[0]) * (-delta / tau) - lower.dpdf[0] * a / tau) / tau2);
        let term_b = beta
            * (-2.0 * upper.pdf[0] / tau3
                + (0.5 * (upper.pdf[1] - upper.pdf[0]) * (-delta / tau) - upper.dpdf[0] * b / tau) / tau2);
        t.h_tt = term_s + term_a + term_b;
    }
    t
}

/// Probability that a row-Gaussian sample with mean projection `v` and
/// variance `tau` violates the band `(1/k)||Ax||^2 in (1 - eps, 1 + eps)`.
pub fn failure_prob_point(v: &[f64], tau: f64, k: usize, eps: f64) -> Result<f64> {
    if v.len() != k || k == 0 {
        return Err(param(format!("v must have k = {k} entries, got {}", v.len())));
    }
    if !(tau > 0.0) {
        return Err(param(format!("tau must be > 0, got {tau}")));
    }
    if !(eps > 0.0) {
        return Err(param(format!("eps must be > 0, got {eps}")));
    }
    if tau.is_infinite() {
        return Ok(1.0);
    }
    let s: f64 = v.iter().map(|x| x * x).sum();
    Ok(point_terms(s, tau, k, eps, false).fail)
}

/// Gradient of `g` in matrix form.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub d_mean: DMatrix<f64>,
    pub d_tau: f64,
}

impl GradientVector {
    pub fn norm(&self) -> f64 {
        (self.d_mean.norm_squared() + self.d_tau * self.d_tau).sqrt()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(self.d_mean.len() + 1);
        for row in self.d_mean.row_iter() {
            out.extend(row.iter());
        }
        out.push(self.d_tau);
        out
    }
}

/// Objective, gradient and (optionally) Hessian data at one point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub f: f64,
    pub g: f64,
    pub grad: GradientVector,
    /// Whether the variance was raised to the floor for evaluation.
    pub clamped: bool,
    tau: f64,
    projections: DMatrix<f64>,
    terms: Vec<PointTerms>,
    hessian: bool,
}

impl ObjectiveContext {
    fn point_terms_all(&self, params: &SamplerParams, hessian: bool) -> (DMatrix<f64>, f64, Vec<PointTerms>) {
        let tau = self.effective_tau(params.variance);
        // column j is v_j = M x_j
        let proj = &params.mean * self.data.points().transpose();
        let sq: Vec<f64> = proj.column_iter().map(|c| c.norm_squared()).collect();
        let terms: Vec<PointTerms> = sq
            .par_iter()
            .map(|&s| point_terms(s, tau, self.k, self.eps, hessian))
            .collect();
        (proj, tau, terms)
    }

    /// Union-bound failure probability `f`.
    pub fn f_value(&self, params: &SamplerParams) -> Result<f64> {
        self.check(params)?;
        let (_, _, terms) = self.point_terms_all(params, false);
        finite(terms.iter().map(|t| t.fail).sum(), "f")
    }

    /// `f + sigma^2 / 2`.
    pub fn g_value(&self, params: &SamplerParams) -> Result<f64> {
        Ok(self.f_value(params)? + params.variance / 2.0)
    }

    /// Value and gradient, plus Hessian coefficients when `hessian` is set.
    pub fn evaluate(&self, params: &SamplerParams, hessian: bool) -> Result<Evaluation> {
        self.check(params)?;
        let (proj, tau, terms) = self.point_terms_all(params, hessian);
        let f = finite(terms.iter().map(|t| t.fail).sum(), "f")?;
        let n = self.n();
        let mut coef = DMatrix::zeros(self.k, n);
        let mut d_tau = 0.5;
        for (j, t) in terms.iter().enumerate() {
            coef.set_column(j, &(proj.column(j) * t.g_v));
            d_tau += t.g_tau;
        }
        let d_mean = coef * self.data.points();
        let grad = GradientVector { d_mean, d_tau };
        if !grad.d_tau.is_finite() || grad.d_mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite gradient".into()));
        }
        Ok(Evaluation {
            f,
            g: f + params.variance / 2.0,
            grad,
            clamped: params.variance < self.sigma_floor,
            tau,
            projections: proj,
            terms,
            hessian,
        })
    }

    pub fn grad_g(&self, params: &SamplerParams) -> Result<GradientVector> {
        Ok(self.evaluate(params, false)?.grad)
    }

    /// `(Hessian of g) * w` for a flat direction `w` of length `k*d + 1`.
    pub fn hessian_vec_product(&self, params: &SamplerParams, w: &[f64]) -> Result<Vec<f64>> {
        let ev = self.evaluate(params, true)?;
        ev.hvp(self, w)
    }
}

impl Evaluation {
    /// Variance the evaluation used.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Hessian-vector product reusing the cached per-point coefficients.
    pub fn hvp(&self, ctx: &ObjectiveContext, w: &[f64]) -> Result<Vec<f64>> {
        if !self.hessian {
            return Err(param("evaluation was built without Hessian data"));
        }
        let (k, d) = (ctx.k, ctx.d());
        if w.len() != k * d + 1 {
            return Err(Error::Shape {
                expected: format!("{}", k * d + 1),
                got: format!("{}", w.len()),
            });
        }
        let dir = DMatrix::from_row_slice(k, d, &w[..k * d]);
        let w_tau = w[k * d];
        let dv = dir * ctx.data.points().transpose();
        let mut out_v = DMatrix::zeros(k, ctx.n());
        let mut out_tau = 0.0;
        for (j, t) in self.terms.iter().enumerate() {
            let v = self.projections.column(j);
            let dvj = dv.column(j);
            let vdv = v.dot(&dvj);
            let col: DVector<f64> = dvj * t.c1 + v * (t.c2 * vdv + t.c3 * w_tau);
            out_v.set_column(j, &col);
            out_tau += t.c3 * vdv + t.h_tt * w_tau;
        }
        let out_m = out_v * ctx.data.points();
        let mut out = Vec::with_capacity(k * d + 1);
        for row in out_m.row_iter() {
            out.extend(row.iter());
        }
        out.push(out_tau);
        Ok(out)
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("{what} evaluated to {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::make_unit_dataset;

    fn ctx(n: usize, d: usize, k: usize, eps: f64) -> ObjectiveContext {
        ObjectiveContext::with_default_floor(make_unit_dataset(n, d, 17).unwrap(), k, eps).unwrap()
    }

    #[test]
    fn infinite_variance_always_fails() {
        assert_eq!(failure_prob_point(&[0.3, 0.1], f64::INFINITY, 2, 0.5).unwrap(), 1.0);
        let big = failure_prob_point(&[0.3, 0.1], 1e12, 2, 0.5).unwrap();
        assert!(big > 1.0 - 1e-9);
    }

    #[test]
    fn widening_band_never_increases_failure() {
        let v = vec![0.0; 30];
        let mut prev = 1.0;
        for eps in [0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.95, 0.999] {
            let p = failure_prob_point(&v, 1.0, 30, eps).unwrap();
            assert!(p <= prev);
            prev = p;
        }
        assert!(prev < 2e-3);
    }

    #[test]
    fn zero_variance_g_equals_f() {
        let c = ctx(4, 5, 3, 0.5);
        let p = SamplerParams::new(DMatrix::from_element(3, 5, 0.4), 0.0).unwrap();
        assert_eq!(c.g_value(&p).unwrap(), c.f_value(&p).unwrap());
    }

    #[test]
    fn g_minus_f_is_half_variance() {
        let c = ctx(4, 5, 3, 0.5);
        for s2 in [1e-3, 0.25, 0.7, 1.0] {
            let p = SamplerParams::new(DMatrix::from_element(3, 5, 0.2), s2).unwrap();
            let diff = c.g_value(&p).unwrap() - c.f_value(&p).unwrap();
            assert!((diff - s2 / 2.0).abs() <= 4.0 * f64::EPSILON, "{diff}");
        }
    }

    #[test]
    fn f_bounded_by_point_count() {
        let c = ctx(6, 4, 2, 0.3);
        for (scale, s2) in [(0.0, 1.0), (5.0, 0.5), (0.7, 0.01), (0.1, 3.0)] {
            let p = SamplerParams::new(DMatrix::from_fn(2, 4, |i, j| scale * (i as f64 - j as f64)), s2).unwrap();
            let f = c.f_value(&p).unwrap();
            assert!((0.0..=6.0).contains(&f), "{f}");
        }
    }

    #[test]
    fn gradient_vanishes_in_mean_at_origin() {
        let c = ctx(5, 6, 3, 0.5);
        let g = c.grad_g(&SamplerParams::origin(3, 6)).unwrap();
        assert!(g.d_mean.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn huge_variance_leaves_only_regularizer() {
        let c = ctx(3, 4, 2, 0.5);
        let p = SamplerParams::new(DMatrix::from_element(2, 4, 0.1), 1e9).unwrap();
        let g = c.grad_g(&p).unwrap();
        assert!((g.d_tau - 0.5).abs() < 1e-8, "{}", g.d_tau);
    }

    #[test]
    fn wide_band_only_has_upper_constraint() {
        let c = ctx(3, 4, 2, 1.5);
        let p = SamplerParams::new(DMatrix::zeros(2, 4), 1e-4).unwrap();
        assert!(c.f_value(&p).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_bad_context() {
        let ds = make_unit_dataset(3, 4, 0).unwrap();
        assert!(ObjectiveContext::new(ds.clone(), 0, 0.5, 1e-8).is_err());
        assert!(ObjectiveContext::new(ds.clone(), 2, 0.0, 1e-8).is_err());
        assert!(ObjectiveContext::new(ds.clone(), 2, 0.5, 1e-3).is_err());
        assert!(ObjectiveContext::new(ds, 2, 0.5, 0.0).is_err());
    }

    #[test]
    fn reduced_point_fields() {
        let r = ReducedPoint::new(&[3.0, 4.0], 0.5, 2, 0.25);
        assert_eq!(r.delta, 50.0);
        assert_eq!(r.lo, 3.0);
        assert_eq!(r.hi, 5.0);
    }
}
