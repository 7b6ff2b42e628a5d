//! Deterministic second-order descent on the sampler objective, the epsilon
//! grid search around it, and calibration of the JL constant.
//!
//! The variance coordinate lives in the box `[sigma_floor, 1]`. Steps are
//! projected onto the box, stationarity is measured with the projected
//! gradient, and when the variance sits on a bound with the gradient pushing
//! outward the curvature test runs on the mean block only.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distortion::{jl_epsilon, max_distortion_value};
use crate::eigen::min_eigenpair;
use crate::error::{param, Error, Result};
use crate::io::fmt_f64;
use crate::objective::{failure_prob_point, Evaluation, ObjectiveContext};
use crate::sampling::SamplerParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DescentMode {
    /// Backtracking on both step sizes; `smoothness` and `hessian_lipschitz`
    /// only seed the first trial steps.
    Adaptive,
    /// Fixed `nu = 1/L`, `h = 3 sqrt(rho) / K`, with the sufficient-decrease
    /// floors asserted on every step.
    FixedConstants,
}

impl fmt::Display for DescentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DescentMode::Adaptive => "adaptive",
            DescentMode::FixedConstants => "fixed-constants",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescentConfig {
    pub rho: f64,
    /// Gradient Lipschitz constant `L`.
    pub smoothness: f64,
    /// Hessian Lipschitz constant `K`.
    pub hessian_lipschitz: f64,
    pub mode: DescentMode,
    pub max_iters: usize,
    pub eig_tol: f64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            rho: 1e-4,
            smoothness: 1.0,
            hessian_lipschitz: 1.0,
            mode: DescentMode::Adaptive,
            max_iters: 50_000,
            eig_tol: 1e-6,
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.rho) {
            return Err(param(format!("rho must be positive, got {}", self.rho)));
        }
        if !pos(self.smoothness) || !pos(self.hessian_lipschitz) {
            return Err(param("L and K must be positive and finite"));
        }
        if !pos(self.eig_tol) {
            return Err(param(format!("eig_tol must be positive, got {}", self.eig_tol)));
        }
        if self.max_iters == 0 {
            return Err(param("max_iters must be >= 1"));
        }
        if !pos(self.step_size()) || !pos(self.curvature_step()) {
            return Err(param("derived step sizes are not positive and finite"));
        }
        Ok(())
    }

    /// `nu = 1/L`.
    pub fn step_size(&self) -> f64 {
        1.0 / self.smoothness
    }

    /// `h = 3 sqrt(rho) / K`.
    pub fn curvature_step(&self) -> f64 {
        3.0 * self.rho.sqrt() / self.hessian_lipschitz
    }

    /// Guaranteed decrease of a gradient step.
    pub fn gradient_floor(&self) -> f64 {
        self.step_size() * self.rho * self.rho / 2.0
    }

    /// Guaranteed decrease of a curvature step.
    pub fn curvature_floor(&self) -> f64 {
        3.0 * self.rho.powf(1.5) / (4.0 * self.hessian_lipschitz.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepType {
    Gradient,
    Curvature,
    Terminate,
}

impl fmt::Display for StepType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepType::Gradient => "gradient",
            StepType::Curvature => "curvature",
            StepType::Terminate => "terminate",
        })
    }
}

/// One iteration: the state before the step and what the step achieved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub step_type: StepType,
    pub g: f64,
    pub f: f64,
    pub sigma2: f64,
    /// Norm of the projected gradient.
    pub grad_norm: f64,
    /// Only set when the Hessian was examined.
    pub lambda_min: Option<f64>,
    /// `g(x_t) - g(x_{t+1})`, zero on termination.
    pub decrease: f64,
    /// Step length actually used (`nu` or `h`).
    pub step: f64,
    /// Evaluation raised the variance to the floor.
    pub clamped: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptTrace {
    pub records: Vec<TraceRecord>,
}

impl OptTrace {
    pub const CSV_HEADER: &'static str = "iter,step_type,g,f,sigma2,grad_norm,lambda_min,decrease";

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count(&self, step: StepType) -> usize {
        self.records.iter().filter(|r| r.step_type == step).count()
    }

    /// `lambda_min` is left empty on rows where it was not computed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let lam = r.lambda_min.map(fmt_f64).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.iter,
                r.step_type,
                fmt_f64(r.g),
                fmt_f64(r.f),
                fmt_f64(r.sigma2),
                fmt_f64(r.grad_norm),
                lam,
                fmt_f64(r.decrease)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Approximate second-order stationary point reached.
    Converged,
    MaxIters,
    /// Backtracking could no longer find a decrease above rounding level.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct DescentResult {
    /// Final iterate; the returned matrix is `params.mean`.
    pub params: SamplerParams,
    pub trace: OptTrace,
    pub converged: bool,
    pub stop: StopReason,
    /// Largest `1/nu` accepted (in fixed mode simply `L`).
    pub smoothness_estimate: f64,
    /// Largest `3 sqrt(rho) / h` accepted (in fixed mode simply `K`).
    pub hessian_lipschitz_estimate: f64,
    pub final_g: f64,
    pub final_f: f64,
    pub final_grad_norm: f64,
}

impl DescentResult {
    pub fn mean(&self) -> &DMatrix<f64> {
        &self.params.mean
    }
}

const MIN_STEP: f64 = 1e-14;

/// Which bound, if any, pins the variance coordinate.
fn tau_pinned(ctx: &ObjectiveContext, params: &SamplerParams, d_tau: f64) -> bool {
    (params.variance <= ctx.sigma_floor && d_tau > 0.0) || (params.variance >= 1.0 && d_tau < 0.0)
}

fn projected_grad(ctx: &ObjectiveContext, params: &SamplerParams, ev: &Evaluation) -> Vec<f64> {
    let mut g = ev.grad.to_flat();
    if tau_pinned(ctx, params, ev.grad.d_tau) {
        *g.last_mut().unwrap() = 0.0;
    }
    g
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `x + t * dir`, with the variance projected onto `[floor, 1]`.
fn moved(ctx: &ObjectiveContext, params: &SamplerParams, t: f64, dir: &[f64]) -> SamplerParams {
    let (k, d) = (params.k(), params.d());
    let x: Vec<f64> = params.to_flat().iter().zip(dir).map(|(a, b)| a + t * b).collect();
    let mut p = SamplerParams::from_flat(k, d, &x);
    p.variance = p.variance.clamp(ctx.sigma_floor, 1.0);
    p
}

fn diff_norm_sq(a: &SamplerParams, b: &SamplerParams) -> f64 {
    (&a.mean - &b.mean).norm_squared() + (a.variance - b.variance).powi(2)
}

/// Smallest Hessian eigenpair on the free coordinates, lifted back to the
/// full space.
fn curvature(
    ctx: &ObjectiveContext,
    params: &SamplerParams,
    ev: &Evaluation,
    pinned: bool,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let full = ctx.dim();
    let dim = if pinned { full - 1 } else { full };
    let op = |w: &[f64]| -> Result<Vec<f64>> {
        if pinned {
            let mut ww = w.to_vec();
            ww.push(0.0);
            let mut out = ev.hvp(ctx, &ww)?;
            out.pop();
            Ok(out)
        } else {
            ev.hvp(ctx, w)
        }
    };
    let _ = params;
    let eig = min_eigenpair(dim, op, tol, dim, None)?;
    let mut u = eig.vector;
    if pinned {
        u.push(0.0);
    }
    Ok((eig.value, u))
}

/// Second-order descent from `init`.
///
/// Each iteration takes a (projected) gradient step while the projected
/// gradient norm exceeds `rho`, otherwise a step of length `h` along the most
/// negative Hessian eigenvector when its eigenvalue is below
/// `-sqrt(K rho)`, otherwise stops.
pub fn hessian_descent(ctx: &ObjectiveContext, cfg: &DescentConfig, init: &SamplerParams) -> Result<DescentResult> {
    cfg.validate()?;
    if init.k() != ctx.k || init.d() != ctx.d() {
        return Err(Error::Shape {
            expected: format!("{} x {}", ctx.k, ctx.d()),
            got: format!("{} x {}", init.k(), init.d()),
        });
    }
    if !(init.variance >= 0.0 && init.variance <= 1.0) {
        return Err(param(format!(
            "initial variance must lie in [0, 1], got {}",
            init.variance
        )));
    }
    let fixed = cfg.mode == DescentMode::FixedConstants;
    let rho = cfg.rho;

    let mut x = init.clone();
    x.variance = x.variance.max(ctx.sigma_floor);
    let mut ev = ctx.evaluate(&x, false)?;
    let mut trace = OptTrace::default();

    let mut nu = cfg.step_size();
    let mut h_trial = cfg.curvature_step();
    let mut k_cur = cfg.hessian_lipschitz;
    let mut l_max: f64 = if fixed { cfg.smoothness } else { 0.0 };
    let mut k_max: f64 = if fixed { cfg.hessian_lipschitz } else { 0.0 };
    let mut stop = StopReason::MaxIters;

    for iter in 0..cfg.max_iters {
        let pg = projected_grad(ctx, &x, &ev);
        let gnorm = norm(&pg);
        let base = TraceRecord {
            iter,
            step_type: StepType::Gradient,
            g: ev.g,
            f: ev.f,
            sigma2: x.variance,
            grad_norm: gnorm,
            lambda_min: None,
            decrease: 0.0,
            step: 0.0,
            clamped: ev.clamped,
        };

        if gnorm > rho {
            let full = ev.grad.to_flat();
            let (next, next_ev, used) = if fixed {
                let p = moved(ctx, &x, -nu, &full);
                let e = ctx.evaluate(&p, false)?;
                let dec = ev.g - e.g;
                let floor = cfg.gradient_floor();
                if !(dec >= floor) {
                    return Err(Error::ConstantMisestimate {
                        iter,
                        step: "gradient",
                        decrease: dec,
                        floor,
                    });
                }
                (p, e, nu)
            } else {
                // grow, then halve until the sufficient-decrease test holds
                let mut t = nu * 2.0;
                loop {
                    let p = moved(ctx, &x, -t, &full);
                    let e = ctx.evaluate(&p, false)?;
                    let gm_sq = diff_norm_sq(&x, &p) / (t * t);
                    if ev.g - e.g >= t * gm_sq / 2.0 && e.g < ev.g {
                        break (p, e, t);
                    }
                    t /= 2.0;
                    if t < MIN_STEP {
                        stop = StopReason::Stalled;
                        break (x.clone(), ev.clone(), 0.0);
                    }
                }
            };
            if stop == StopReason::Stalled {
                break;
            }
            if !fixed {
                nu = used;
                l_max = l_max.max(1.0 / used);
            }
            trace.records.push(TraceRecord {
                decrease: ev.g - next_ev.g,
                step: used,
                ..base
            });
            x = next;
            ev = next_ev;
            continue;
        }

        let hev = ctx.evaluate(&x, true)?;
        let pinned = tau_pinned(ctx, &x, hev.grad.d_tau);
        let (lambda, mut u) = curvature(ctx, &x, &hev, pinned, cfg.eig_tol)?;
        let thresh = -(k_cur * rho).sqrt();
        if lambda >= thresh {
            trace.records.push(TraceRecord {
                step_type: StepType::Terminate,
                lambda_min: Some(lambda),
                ..base
            });
            stop = StopReason::Converged;
            break;
        }
        let gu: f64 = u.iter().zip(&pg).map(|(a, b)| a * b).sum();
        if gu > 0.0 {
            u.iter_mut().for_each(|v| *v = -*v);
        }

        let (next, next_ev, used) = if fixed {
            let h = cfg.curvature_step();
            let p = moved(ctx, &x, h, &u);
            let e = ctx.evaluate(&p, false)?;
            let dec = ev.g - e.g;
            let floor = cfg.curvature_floor();
            if !(dec >= floor) {
                return Err(Error::ConstantMisestimate {
                    iter,
                    step: "curvature",
                    decrease: dec,
                    floor,
                });
            }
            (p, e, h)
        } else {
            let mut h = h_trial * 2.0;
            loop {
                let p = moved(ctx, &x, h, &u);
                let e = ctx.evaluate(&p, false)?;
                if e.g < ev.g {
                    break (p, e, h);
                }
                h /= 2.0;
                if h < MIN_STEP {
                    stop = StopReason::Stalled;
                    break (x.clone(), ev.clone(), 0.0);
                }
            }
        };
        if stop == StopReason::Stalled {
            break;
        }
        if !fixed {
            h_trial = used;
            k_cur = 3.0 * rho.sqrt() / used;
            k_max = k_max.max(k_cur);
        }
        trace.records.push(TraceRecord {
            step_type: StepType::Curvature,
            lambda_min: Some(lambda),
            decrease: ev.g - next_ev.g,
            step: used,
            ..base
        });
        x = next;
        ev = next_ev;
    }

    let final_grad_norm = norm(&projected_grad(ctx, &x, &ev));
    Ok(DescentResult {
        converged: stop == StopReason::Converged,
        stop,
        smoothness_estimate: l_max,
        hessian_lipschitz_estimate: k_max,
        final_g: ev.g,
        final_f: ev.f,
        final_grad_norm,
        params: x,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub eps: f64,
    /// `+inf` when the run failed or did not converge.
    pub max_distortion: f64,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub best_eps: f64,
    pub best_max_distortion: f64,
    pub best_mean: DMatrix<f64>,
    pub cells: Vec<GridCell>,
}

/// Runs [`hessian_descent`] from `(0, 1)` once per `eps` and keeps the
/// matrix with the smallest max distortion. Ties go to the earliest grid
/// entry. Fails only when every run fails.
pub fn grid_search(template: &ObjectiveContext, cfg: &DescentConfig, eps_grid: &[f64]) -> Result<GridSearchResult> {
    if eps_grid.is_empty() {
        return Err(param("eps grid must be non-empty"));
    }
    cfg.validate()?;
    let runs: Vec<(GridCell, Option<DMatrix<f64>>)> = eps_grid
        .par_iter()
        .map(|&eps| {
            let attempt = || -> Result<DescentResult> {
                let ctx = ObjectiveContext::new(template.data.clone(), template.k, eps, template.sigma_floor)?;
                hessian_descent(&ctx, cfg, &SamplerParams::origin(template.k, template.d()))
            };
            match attempt() {
                Ok(res) if res.converged => {
                    let md = max_distortion_value(res.mean(), &template.data);
                    let cell = GridCell {
                        eps,
                        max_distortion: md,
                        converged: true,
                        error: None,
                    };
                    (cell, Some(res.params.mean))
                }
                Ok(res) => (
                    GridCell {
                        eps,
                        max_distortion: f64::INFINITY,
                        converged: false,
                        error: Some(format!("did not converge ({:?})", res.stop)),
                    },
                    None,
                ),
                Err(e) => (
                    GridCell {
                        eps,
                        max_distortion: f64::INFINITY,
                        converged: false,
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();

    let mut best: Option<usize> = None;
    for (i, (cell, m)) in runs.iter().enumerate() {
        if m.is_none() {
            continue;
        }
        if best.is_none_or(|b| cell.max_distortion < runs[b].0.max_distortion) {
            best = Some(i);
        }
    }
    let b = best.ok_or_else(|| Error::Numerical("no epsilon in the grid produced a converged run".into()))?;
    let cells: Vec<GridCell> = runs.iter().map(|(c, _)| c.clone()).collect();
    let (cell, mean) = runs.into_iter().nth(b).unwrap();
    Ok(GridSearchResult {
        best_eps: cell.eps,
        best_max_distortion: cell.max_distortion,
        best_mean: mean.unwrap(),
        cells,
    })
}

/// The fixed calibration grid `0.5, 0.75, ..., 6.0`.
pub fn calibration_grid() -> Vec<f64> {
    (0..=22).map(|i| 0.5 + 0.25 * i as f64).collect()
}

/// Smallest `C` on [`calibration_grid`] for which a standard Gaussian matrix
/// misses the band `jl_epsilon(n, k, C)` on a unit vector with probability
/// below `1/(3n)`.
pub fn calibrate_epsilon_constant(n: usize, k: usize) -> Result<f64> {
    if n < 2 {
        return Err(param(format!("n must be >= 2, got {n}")));
    }
    if k == 0 {
        return Err(param("k must be >= 1"));
    }
    let target = 1.0 / (3.0 * n as f64);
    let zero = vec![0.0; k];
    for c in calibration_grid() {
        let eps = jl_epsilon(n as f64, k, c)?;
        if failure_prob_point(&zero, 1.0, k, eps)? < target {
            return Ok(c);
        }
    }
    Err(Error::Calibration { n, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::make_unit_dataset;

    fn ctx(n: usize, d: usize, k: usize, eps: f64) -> ObjectiveContext {
        ObjectiveContext::new(make_unit_dataset(n, d, 5).unwrap(), k, eps, 1e-6).unwrap()
    }

    #[test]
    fn derived_steps_and_floors() {
        let cfg = DescentConfig {
            rho: 1e-4,
            smoothness: 4.0,
            hessian_lipschitz: 9.0,
            ..Default::default()
        };
        assert_eq!(cfg.step_size(), 0.25);
        assert!((cfg.curvature_step() - 3.0 * 0.01 / 9.0).abs() < 1e-18);
        assert!((cfg.gradient_floor() - 0.25 * 1e-8 / 2.0).abs() < 1e-24);
        assert!((cfg.curvature_floor() - 3.0 * 1e-6 / 12.0).abs() < 1e-20);
    }

    #[test]
    fn config_validation() {
        assert!(DescentConfig::default().validate().is_ok());
        for bad in [
            DescentConfig {
                rho: 0.0,
                ..Default::default()
            },
            DescentConfig {
                smoothness: -1.0,
                ..Default::default()
            },
            DescentConfig {
                hessian_lipschitz: f64::INFINITY,
                ..Default::default()
            },
            DescentConfig {
                max_iters: 0,
                ..Default::default()
            },
            DescentConfig {
                eig_tol: 0.0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn mode_display() {
        assert_eq!(DescentMode::FixedConstants.to_string(), "fixed-constants");
        assert_eq!(DescentMode::Adaptive.to_string(), "adaptive");
    }

    #[test]
    fn stationary_init_terminates_immediately() {
        // huge rho and K: the first point already passes both tests
        let c = ctx(4, 5, 3, 0.5);
        let cfg = DescentConfig {
            rho: 1e3,
            hessian_lipschitz: 1e6,
            ..Default::default()
        };
        let init = SamplerParams::new(DMatrix::from_element(3, 5, 0.1), 0.5).unwrap();
        let res = hessian_descent(&c, &cfg, &init).unwrap();
        assert!(res.converged);
        assert_eq!(res.trace.len(), 1);
        assert_eq!(res.trace.records[0].step_type, StepType::Terminate);
        assert_eq!(res.params.mean, init.mean);
    }

    #[test]
    fn max_iters_returns_unconverged_best() {
        let c = ctx(6, 6, 3, 0.5);
        let cfg = DescentConfig {
            max_iters: 3,
            ..Default::default()
        };
        let res = hessian_descent(&c, &cfg, &SamplerParams::origin(3, 6)).unwrap();
        assert!(!res.converged);
        assert_eq!(res.stop, StopReason::MaxIters);
        assert_eq!(res.trace.len(), 3);
        assert!(res.final_g <= res.trace.records[0].g);
    }

    #[test]
    fn short_run_descends_monotonically() {
        let c = ctx(6, 8, 4, 0.5);
        let cfg = DescentConfig {
            max_iters: 300,
            rho: 1e-3,
            ..Default::default()
        };
        let res = hessian_descent(&c, &cfg, &SamplerParams::origin(4, 8)).unwrap();
        let gs: Vec<f64> = res.trace.records.iter().map(|r| r.g).collect();
        for w in gs.windows(2) {
            assert!(w[1] < w[0], "{} then {}", w[0], w[1]);
        }
        for r in &res.trace.records {
            assert!(r.sigma2 >= c.sigma_floor && r.sigma2 <= 1.0);
        }
        assert!(res.trace.count(StepType::Curvature) >= 1);
    }

    #[test]
    fn fixed_mode_with_huge_step_reports_misestimate() {
        let c = ctx(6, 8, 4, 0.5);
        let cfg = DescentConfig {
            mode: DescentMode::FixedConstants,
            smoothness: 1e-3,
            ..Default::default()
        };
        match hessian_descent(&c, &cfg, &SamplerParams::origin(4, 8)) {
            Err(Error::ConstantMisestimate { step, .. }) => assert_eq!(step, "gradient"),
            other => panic!("expected misestimate, got {other:?}"),
        }
    }

    #[test]
    fn trace_csv_layout() {
        let c = ctx(4, 5, 3, 0.5);
        let cfg = DescentConfig {
            max_iters: 2,
            ..Default::default()
        };
        let res = hessian_descent(&c, &cfg, &SamplerParams::origin(3, 5)).unwrap();
        let csv = res.trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), OptTrace::CSV_HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 8);
        assert_eq!(row[1], "gradient");
        assert_eq!(row[6], "");
        let g: f64 = row[2].parse().unwrap();
        assert_eq!(g, res.trace.records[0].g);
    }

    #[test]
    fn calibration_grid_shape() {
        let g = calibration_grid();
        assert_eq!(g.len(), 23);
        assert_eq!(g[0], 0.5);
        assert_eq!(*g.last().unwrap(), 6.0);
    }

    #[test]
    fn calibration_rejects_bad_input() {
        assert!(calibrate_epsilon_constant(1, 30).is_err());
        assert!(calibrate_epsilon_constant(100, 0).is_err());
    }

    #[test]
    fn calibration_fails_for_tiny_k() {
        // k = 1 cannot reach failure probability 1/300000 with C <= 6
        match calibrate_epsilon_constant(100_000, 1) {
            Err(Error::Calibration { n, k }) => assert_eq!((n, k), (100_000, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_search_rejects_empty_grid() {
        let c = ctx(4, 5, 3, 0.5);
        assert!(grid_search(&c, &DescentConfig::default(), &[]).is_err());
    }
}
