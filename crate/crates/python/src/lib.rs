//! Python bindings. Matrices cross the boundary as lists of rows.

use nalgebra::DMatrix;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use jlsampler::counterexample::{build_bad_instance, instance_distortion_with, verify_local_min_with, Convention};
use jlsampler::dataset::{make_unit_dataset, Dataset};
use jlsampler::distortion::{jl_epsilon, max_distortion};
use jlsampler::mcsim::{run_mc_training, McConfig};
use jlsampler::ncx2;
use jlsampler::objective::ObjectiveContext;
use jlsampler::optimizer::{calibrate_epsilon_constant, hessian_descent, DescentConfig, DescentMode, StopReason};
use jlsampler::sampling::{baseline_gaussian_trials, SamplerParams};
use jlsampler::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Param(_) | Error::Shape { .. } | Error::Calibration { .. } | Error::Parse { .. } => {
            PyValueError::new_err(e.to_string())
        }
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

type Rows = Vec<Vec<f64>>;

fn to_matrix(rows: &Rows) -> PyResult<DMatrix<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(PyValueError::new_err("matrix rows must all have the same length"));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn parse_mode(mode: &str) -> PyResult<DescentMode> {
    match mode {
        "adaptive" => Ok(DescentMode::Adaptive),
        "fixed-constants" => Ok(DescentMode::FixedConstants),
        _ => Err(PyValueError::new_err(format!("unknown mode `{mode}`"))),
    }
}

fn parse_convention(conv: &str) -> PyResult<Convention> {
    match conv {
        "squared" => Ok(Convention::Squared),
        "norm-ratio" => Ok(Convention::NormRatio),
        _ => Err(PyValueError::new_err(format!("unknown convention `{conv}`"))),
    }
}

/// Unit-norm points, one per row.
#[pyclass(name = "Dataset", module = "jlsampler_py", frozen, skip_from_py_object)]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    /// Rows are normalized to unit length.
    #[new]
    fn new(rows: Rows) -> PyResult<Self> {
        Ok(Self {
            inner: Dataset::from_vecs(&rows).map_err(py_err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, d, seed=0))]
    fn random(n: usize, d: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: make_unit_dataset(n, d, seed).map_err(py_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    fn points(&self) -> Rows {
        to_rows(self.inner.points())
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, d={})", self.inner.n(), self.inner.d())
    }
}

/// The exact union-bound objective `g(M, sigma^2) = f + sigma^2 / 2`.
#[pyclass(name = "Objective", module = "jlsampler_py", frozen)]
struct PyObjective {
    ctx: ObjectiveContext,
}

impl PyObjective {
    fn params(&self, mean: &Rows, variance: f64) -> PyResult<SamplerParams> {
        SamplerParams::new(to_matrix(mean)?, variance).map_err(py_err)
    }
}

#[pymethods]
impl PyObjective {
    #[new]
    #[pyo3(signature = (data, k, eps, sigma_floor=1e-8))]
    fn new(data: &PyDataset, k: usize, eps: f64, sigma_floor: f64) -> PyResult<Self> {
        Ok(Self {
            ctx: ObjectiveContext::new(data.inner.clone(), k, eps, sigma_floor).map_err(py_err)?,
        })
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.ctx.eps
    }

    #[getter]
    fn k(&self) -> usize {
        self.ctx.k
    }

    fn f(&self, mean: Rows, variance: f64) -> PyResult<f64> {
        self.ctx.f_value(&self.params(&mean, variance)?).map_err(py_err)
    }

    fn g(&self, mean: Rows, variance: f64) -> PyResult<f64> {
        self.ctx.g_value(&self.params(&mean, variance)?).map_err(py_err)
    }

    /// `(dg/dM, dg/dsigma^2)`.
    fn gradient(&self, mean: Rows, variance: f64) -> PyResult<(Rows, f64)> {
        let gv = self.ctx.grad_g(&self.params(&mean, variance)?).map_err(py_err)?;
        Ok((to_rows(&gv.d_mean), gv.d_tau))
    }

    /// Hessian-vector product in flattened `(M row-major, sigma^2)` coordinates.
    fn hvp(&self, mean: Rows, variance: f64, w: Vec<f64>) -> PyResult<Vec<f64>> {
        let p = self.params(&mean, variance)?;
        self.ctx.hessian_vec_product(&p, &w).map_err(py_err)
    }
}

#[pyclass(name = "DescentResult", module = "jlsampler_py", frozen, get_all)]
struct PyDescentResult {
    mean: Rows,
    variance: f64,
    converged: bool,
    stop: String,
    iterations: usize,
    g: f64,
    f: f64,
    grad_norm: f64,
    max_distortion: f64,
    smoothness_estimate: f64,
    hessian_lipschitz_estimate: f64,
    trace_csv: String,
}

#[pyfunction]
#[pyo3(signature = (data, k, eps=None, rho=1e-4, mode="adaptive", smoothness=1.0, hessian_lipschitz=1.0, max_iters=50_000, eig_tol=1e-6, sigma_floor=1e-8))]
#[allow(clippy::too_many_arguments)]
fn optimize(
    py: Python<'_>,
    data: &PyDataset,
    k: usize,
    eps: Option<f64>,
    rho: f64,
    mode: &str,
    smoothness: f64,
    hessian_lipschitz: f64,
    max_iters: usize,
    eig_tol: f64,
    sigma_floor: f64,
) -> PyResult<PyDescentResult> {
    let cfg = DescentConfig {
        rho,
        smoothness,
        hessian_lipschitz,
        mode: parse_mode(mode)?,
        max_iters,
        eig_tol,
    };
    let data = data.inner.clone();
    let res = py.detach(move || -> jlsampler::Result<_> {
        let (n, d) = (data.n(), data.d());
        let eps = match eps {
            Some(e) => e,
            None => jl_epsilon(n as f64, k, calibrate_epsilon_constant(n, k)?)?,
        };
        let ctx = ObjectiveContext::new(data, k, eps, sigma_floor)?;
        let res = hessian_descent(&ctx, &cfg, &SamplerParams::origin(k, d))?;
        let md = max_distortion(res.mean(), &ctx.data)?.max;
        Ok((res, md))
    });
    let (res, md) = res.map_err(py_err)?;
    Ok(PyDescentResult {
        mean: to_rows(res.mean()),
        variance: res.params.variance,
        converged: res.converged,
        stop: match res.stop {
            StopReason::Converged => "converged",
            StopReason::MaxIters => "max-iters",
            StopReason::Stalled => "stalled",
        }
        .to_string(),
        iterations: res.trace.len(),
        g: res.final_g,
        f: res.final_f,
        grad_norm: res.final_grad_norm,
        max_distortion: md,
        smoothness_estimate: res.smoothness_estimate,
        hessian_lipschitz_estimate: res.hessian_lipschitz_estimate,
        trace_csv: res.trace.to_csv(),
    })
}

#[pyclass(name = "McResult", module = "jlsampler_py", frozen, get_all)]
struct PyMcResult {
    mean: Rows,
    variance: f64,
    final_distortion: f64,
    trajectory_csv: String,
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (data, k, iters=5000, batch=20, step_size=0.01, seed=0, log_every=1))]
fn train_mc(
    py: Python<'_>,
    data: &PyDataset,
    k: usize,
    iters: usize,
    batch: usize,
    step_size: f64,
    seed: u64,
    log_every: usize,
) -> PyResult<PyMcResult> {
    let cfg = McConfig {
        iters,
        batch,
        step_size,
        seed,
        log_every,
        ..McConfig::default()
    };
    let data = data.inner.clone();
    let res = py.detach(move || run_mc_training(&data, k, &cfg)).map_err(py_err)?;
    Ok(PyMcResult {
        mean: to_rows(&res.params.mean),
        variance: res.params.variance,
        final_distortion: res.final_distortion,
        trajectory_csv: res.trajectory.to_csv(),
    })
}

/// `max_j | ||A x_j||^2 / k - 1 |`.
#[pyfunction(name = "max_distortion")]
fn py_max_distortion(a: Rows, data: &PyDataset) -> PyResult<f64> {
    Ok(max_distortion(&to_matrix(&a)?, &data.inner).map_err(py_err)?.max)
}

/// `(average, minimum)` max distortion over i.i.d. standard Gaussian matrices.
#[pyfunction]
#[pyo3(signature = (data, k, trials=1000, seed=0))]
fn baseline(py: Python<'_>, data: &PyDataset, k: usize, trials: usize, seed: u64) -> PyResult<(f64, f64)> {
    let data = data.inner.clone();
    let s = py
        .detach(move || baseline_gaussian_trials(&data, k, trials, seed))
        .map_err(py_err)?;
    Ok((s.avg_max_distortion, s.min_max_distortion))
}

#[pyfunction]
fn calibrate_constant(n: usize, k: usize) -> PyResult<f64> {
    calibrate_epsilon_constant(n, k).map_err(py_err)
}

/// `c sqrt(ln n / k)`.
#[pyfunction]
fn epsilon(n: f64, k: usize, c: f64) -> PyResult<f64> {
    jl_epsilon(n, k, c).map_err(py_err)
}

#[pyclass(name = "LocalMinReport", module = "jlsampler_py", frozen, get_all)]
struct PyLocalMinReport {
    k: usize,
    points: usize,
    distortion: f64,
    all_worse: bool,
    violations: usize,
    min_margin: f64,
    min_margin_per_level: Vec<f64>,
}

/// Checks the bad instance of block size `k` around `[2I | 0]`.
#[pyfunction]
#[pyo3(signature = (k, radius=1e-3, trials=10_000, seed=0, convention="squared"))]
fn counterexample(
    py: Python<'_>,
    k: usize,
    radius: f64,
    trials: usize,
    seed: u64,
    convention: &str,
) -> PyResult<PyLocalMinReport> {
    let conv = parse_convention(convention)?;
    let out = py.detach(move || -> jlsampler::Result<_> {
        let inst = build_bad_instance(k)?;
        let dist = instance_distortion_with(&inst, &inst.a_star, conv)?;
        let rep = verify_local_min_with(&inst, radius, trials, seed, conv)?;
        Ok((inst.len(), dist, rep))
    });
    let (points, distortion, rep) = out.map_err(py_err)?;
    Ok(PyLocalMinReport {
        k,
        points,
        distortion,
        all_worse: rep.all_worse,
        violations: rep.violations,
        min_margin: rep.min_margin,
        min_margin_per_level: rep.min_margin_per_level,
    })
}

#[pyfunction]
fn ncx2_cdf(x: f64, k: u32, delta: f64) -> PyResult<f64> {
    ncx2::ncx2_cdf(x, k, delta).map_err(py_err)
}

#[pyfunction]
fn ncx2_sf(x: f64, k: u32, delta: f64) -> PyResult<f64> {
    ncx2::ncx2_sf(x, k, delta).map_err(py_err)
}

#[pyfunction]
fn ncx2_pdf(x: f64, k: u32, delta: f64) -> PyResult<f64> {
    ncx2::ncx2_pdf(x, k, delta).map_err(py_err)
}

#[pyfunction]
fn ncx2_cdf_ddelta(x: f64, k: u32, delta: f64) -> PyResult<f64> {
    ncx2::ncx2_cdf_ddelta(x, k, delta).map_err(py_err)
}

#[pymodule]
fn jlsampler_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyObjective>()?;
    m.add_class::<PyDescentResult>()?;
    m.add_class::<PyMcResult>()?;
    m.add_class::<PyLocalMinReport>()?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(train_mc, m)?)?;
    m.add_function(wrap_pyfunction!(py_max_distortion, m)?)?;
    m.add_function(wrap_pyfunction!(baseline, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_constant, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample, m)?)?;
    m.add_function(wrap_pyfunction!(ncx2_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(ncx2_sf, m)?)?;
    m.add_function(wrap_pyfunction!(ncx2_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(ncx2_cdf_ddelta, m)?)?;
    Ok(())
}
