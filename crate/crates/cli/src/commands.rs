use std::path::{Path, PathBuf};
use std::time::Instant;

use jlsampler::counterexample::{build_bad_instance, instance_distortion_with, verify_local_min_with, Convention};
use jlsampler::dataset::{make_unit_dataset, Dataset};
use jlsampler::distortion::{jl_epsilon, max_distortion};
use jlsampler::io::{dataset_to_csv, matrix_to_csv, parse_dataset_csv};
use jlsampler::mcsim::{run_mc_training, McConfig, Trajectory};
use jlsampler::objective::{ObjectiveContext, DEFAULT_SIGMA_FLOOR};
use jlsampler::optimizer::{
    calibrate_epsilon_constant, grid_search as run_grid, hessian_descent, DescentConfig, StepType,
};
use jlsampler::sampling::{baseline_gaussian_trials, SamplerParams};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::output::{num, nums, read_text, sha256_hex, to_json, write_text};
use crate::plot::trajectory_svg;

const DESCENT_KEYS: &[&str] = &["rho", "smoothness", "hessian_lipschitz", "mode", "max_iters", "eig_tol"];
const MC_KEYS: &[&str] = &[
    "iters",
    "batch",
    "step_size",
    "beta1",
    "beta2",
    "adam_eps",
    "seed",
    "log_every",
];

/// Rejects unknown keys, then deserializes.
fn parse<T: DeserializeOwned>(params: Value, allowed: &[&[&str]]) -> CliResult<T> {
    if let Value::Object(map) = &params {
        for key in map.keys() {
            if !allowed.iter().any(|set| set.contains(&key.as_str())) {
                return Err(CliError::Validation(format!("unknown parameter `{key}`")));
            }
        }
    }
    Ok(serde_json::from_value(params)?)
}

fn load_dataset(path: &Path) -> CliResult<Dataset> {
    Ok(parse_dataset_csv(&read_text(path)?)?)
}

fn emit_summary(summary: &Value, out: Option<&PathBuf>) -> CliResult<()> {
    let text = to_json(summary);
    if let Some(p) = out {
        write_text(p, &text)?;
    }
    print!("{text}");
    Ok(())
}

#[derive(Debug, Deserialize)]
struct GenDataConfig {
    n: usize,
    d: usize,
    #[serde(default)]
    seed: u64,
    out: PathBuf,
}

pub fn gen_data(params: Value) -> CliResult<()> {
    let cfg: GenDataConfig = parse(params, &[&["n", "d", "seed", "out"]])?;
    let data = make_unit_dataset(cfg.n, cfg.d, cfg.seed)?;
    let text = dataset_to_csv(&data);
    write_text(&cfg.out, &text)?;
    println!("n={} d={} checksum={}", data.n(), data.d(), sha256_hex(text.as_bytes()));
    Ok(())
}

#[derive(Debug, Deserialize)]
struct OptimizeConfig {
    data: PathBuf,
    k: usize,
    eps: Option<f64>,
    c: Option<f64>,
    #[serde(default = "default_floor")]
    sigma_floor: f64,
    #[serde(flatten)]
    descent: DescentConfig,
    out_matrix: Option<PathBuf>,
    out_trace: Option<PathBuf>,
    out_summary: Option<PathBuf>,
    #[serde(default)]
    omit_timing: bool,
}

fn default_floor() -> f64 {
    DEFAULT_SIGMA_FLOOR
}

/// Explicit epsilon, else `c sqrt(ln n / k)`, else the calibrated constant.
fn resolve_eps(n: usize, k: usize, eps: Option<f64>, c: Option<f64>) -> CliResult<(f64, Option<f64>, &'static str)> {
    if eps.is_some() && c.is_some() {
        return Err(CliError::Validation("give at most one of `eps` and `c`".into()));
    }
    if let Some(e) = eps {
        return Ok((e, None, "given"));
    }
    if let Some(c) = c {
        return Ok((jl_epsilon(n as f64, k, c)?, Some(c), "constant"));
    }
    let c = calibrate_epsilon_constant(n, k)?;
    Ok((jl_epsilon(n as f64, k, c)?, Some(c), "calibrated"))
}

pub fn optimize(params: Value) -> CliResult<()> {
    let cfg: OptimizeConfig = parse(
        params,
        &[
            &[
                "data",
                "k",
                "eps",
                "c",
                "sigma_floor",
                "out_matrix",
                "out_trace",
                "out_summary",
                "omit_timing",
            ],
            DESCENT_KEYS,
        ],
    )?;
    cfg.descent.validate()?;
    let data = load_dataset(&cfg.data)?;
    let (n, d, k) = (data.n(), data.d(), cfg.k);
    if k == 0 {
        return Err(CliError::Validation("k must be >= 1".into()));
    }
    let (eps, c, source) = resolve_eps(n, k, cfg.eps, cfg.c)?;
    let ctx = ObjectiveContext::new(data, k, eps, cfg.sigma_floor)?;

    let start = Instant::now();
    let res = hessian_descent(&ctx, &cfg.descent, &SamplerParams::origin(k, d))?;
    let wall = start.elapsed().as_secs_f64();
    let md = max_distortion(res.mean(), &ctx.data)?.max;

    let mut summary = json!({
        "n": n,
        "d": d,
        "k": k,
        "eps": num(eps),
        "eps_source": source,
        "c": c.map(num),
        "sigma_floor": num(cfg.sigma_floor),
        "mode": cfg.descent.mode.to_string(),
        "rho": num(cfg.descent.rho),
        "converged": res.converged,
        "stop": res.stop,
        "iterations": res.trace.len(),
        "gradient_steps": res.trace.count(StepType::Gradient),
        "curvature_steps": res.trace.count(StepType::Curvature),
        "g": num(res.final_g),
        "f": num(res.final_f),
        "sigma2": num(res.params.variance),
        "grad_norm": num(res.final_grad_norm),
        "max_distortion": num(md),
        "within_eps": md <= eps,
        "smoothness_estimate": num(res.smoothness_estimate),
        "hessian_lipschitz_estimate": num(res.hessian_lipschitz_estimate),
    });
    if !cfg.omit_timing {
        summary["wall_time_s"] = num(wall);
    }
    if let Some(p) = &cfg.out_matrix {
        write_text(p, &matrix_to_csv(res.mean()))?;
    }
    if let Some(p) = &cfg.out_trace {
        write_text(p, &res.trace.to_csv())?;
    }
    emit_summary(&summary, cfg.out_summary.as_ref())?;
    if !res.converged {
        return Err(CliError::NonConvergence(format!(
            "descent stopped without convergence ({:?}) after {} iterations",
            res.stop,
            res.trace.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct McCommandConfig {
    data: PathBuf,
    k: usize,
    #[serde(flatten)]
    mc: McConfig,
    out_matrix: Option<PathBuf>,
    out_trajectory: Option<PathBuf>,
    out_summary: Option<PathBuf>,
    svg: Option<PathBuf>,
}

fn write_trajectory(traj: &Trajectory, csv: Option<&PathBuf>, svg: Option<&PathBuf>) -> CliResult<()> {
    if let Some(p) = csv {
        write_text(p, &traj.to_csv())?;
    }
    if let Some(p) = svg {
        write_text(p, &trajectory_svg(traj)?)?;
    }
    Ok(())
}

pub fn mc(params: Value) -> CliResult<()> {
    let cfg: McCommandConfig = parse(
        params,
        &[
            &["data", "k", "out_matrix", "out_trajectory", "out_summary", "svg"],
            MC_KEYS,
        ],
    )?;
    cfg.mc.validate()?;
    if cfg.k == 0 {
        return Err(CliError::Validation("k must be >= 1".into()));
    }
    let data = load_dataset(&cfg.data)?;
    let res = match run_mc_training(&data, cfg.k, &cfg.mc) {
        Ok(r) => r,
        Err(jlsampler::Error::Divergence { iter, trajectory }) => {
            write_trajectory(&trajectory, cfg.out_trajectory.as_ref(), cfg.svg.as_ref())?;
            return Err(CliError::NonConvergence(format!(
                "training diverged at iteration {iter}"
            )));
        }
        Err(e) => return Err(e.into()),
    };
    let kf = cfg.k as f64;
    let proj = &res.params.mean * data.points().transpose();
    let ratios: Vec<f64> = proj.column_iter().map(|c| c.norm_squared() / kf).collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let summary = json!({
        "n": data.n(),
        "d": data.d(),
        "k": cfg.k,
        "iters": cfg.mc.iters,
        "batch": cfg.mc.batch,
        "step_size": num(cfg.mc.step_size),
        "seed": cfg.mc.seed,
        "final_distortion": num(res.final_distortion),
        "sigma2": num(res.params.variance),
        "min_norm_ratio": num(lo),
        "max_norm_ratio": num(hi),
        "final_proxy": res.trajectory.rows.last().map(|r| num(r.proxy_value)),
    });
    if let Some(p) = &cfg.out_matrix {
        write_text(p, &matrix_to_csv(&res.params.mean))?;
    }
    write_trajectory(&res.trajectory, cfg.out_trajectory.as_ref(), cfg.svg.as_ref())?;
    emit_summary(&summary, cfg.out_summary.as_ref())
}

#[derive(Debug, Deserialize)]
struct BaselineConfig {
    data: PathBuf,
    k: usize,
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default)]
    seed: u64,
    out: Option<PathBuf>,
}

fn default_trials() -> usize {
    1000
}

pub fn baseline(params: Value) -> CliResult<()> {
    let cfg: BaselineConfig = parse(params, &[&["data", "k", "trials", "seed", "out"]])?;
    let data = load_dataset(&cfg.data)?;
    let b = baseline_gaussian_trials(&data, cfg.k, cfg.trials, cfg.seed)?;
    let summary = json!({
        "n": data.n(),
        "d": data.d(),
        "k": cfg.k,
        "trials": b.trials,
        "seed": cfg.seed,
        "avg_max_distortion": num(b.avg_max_distortion),
        "min_max_distortion": num(b.min_max_distortion),
    });
    emit_summary(&summary, cfg.out.as_ref())
}

#[derive(Debug, Deserialize)]
struct CounterexampleConfig {
    #[serde(default = "default_ks")]
    ks: Vec<usize>,
    #[serde(default = "default_radius")]
    radius: f64,
    #[serde(default = "default_ce_trials")]
    trials: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    convention: Convention,
    out: Option<PathBuf>,
}

fn default_ks() -> Vec<usize> {
    (2..=8).collect()
}

fn default_radius() -> f64 {
    1e-3
}

fn default_ce_trials() -> usize {
    10_000
}

pub fn counterexample(params: Value) -> CliResult<()> {
    let cfg: CounterexampleConfig = parse(params, &[&["ks", "radius", "trials", "seed", "convention", "out"]])?;
    if cfg.ks.is_empty() {
        return Err(CliError::Validation("ks must be non-empty".into()));
    }
    // validate every k before running anything
    let insts = cfg
        .ks
        .iter()
        .map(|&k| build_bad_instance(k))
        .collect::<Result<Vec<_>, _>>()?;
    let mut reports = Vec::new();
    for inst in &insts {
        let rep = verify_local_min_with(inst, cfg.radius, cfg.trials, cfg.seed, cfg.convention)?;
        reports.push(json!({
            "k": rep.k,
            "points": inst.len(),
            "convention": rep.convention,
            "distortion": num(instance_distortion_with(inst, &inst.a_star, cfg.convention)?),
            "radius_levels": nums(&rep.radius_levels),
            "trials": rep.trials,
            "all_worse": rep.all_worse,
            "violations": rep.violations,
            "min_margin": num(rep.min_margin),
            "min_margin_per_level": nums(&rep.min_margin_per_level),
        }));
    }
    emit_summary(&json!({ "reports": reports }), cfg.out.as_ref())
}

#[derive(Debug, Deserialize)]
struct GridConfig {
    data: PathBuf,
    k: usize,
    eps_grid: Vec<f64>,
    #[serde(default = "default_floor")]
    sigma_floor: f64,
    #[serde(flatten)]
    descent: DescentConfig,
    out_summary: Option<PathBuf>,
    out_matrix: Option<PathBuf>,
}

pub fn grid_search(params: Value) -> CliResult<()> {
    let cfg: GridConfig = parse(
        params,
        &[
            &["data", "k", "eps_grid", "sigma_floor", "out_summary", "out_matrix"],
            DESCENT_KEYS,
        ],
    )?;
    if cfg.eps_grid.is_empty() {
        return Err(CliError::Validation("eps_grid must be non-empty".into()));
    }
    cfg.descent.validate()?;
    let data = load_dataset(&cfg.data)?;
    // the template's eps is replaced per grid entry
    let template = ObjectiveContext::new(data, cfg.k, cfg.eps_grid[0], cfg.sigma_floor)?;
    for &e in &cfg.eps_grid {
        if !(e > 0.0 && e.is_finite()) {
            return Err(CliError::Validation(format!("grid epsilon must be positive, got {e}")));
        }
    }
    let res = run_grid(&template, &cfg.descent, &cfg.eps_grid)?;
    let cells: Vec<Value> = res
        .cells
        .iter()
        .map(|c| {
            json!({
                "eps": num(c.eps),
                "max_distortion": num(c.max_distortion),
                "converged": c.converged,
                "error": c.error,
            })
        })
        .collect();
    let summary = json!({
        "k": cfg.k,
        "eps_grid": nums(&cfg.eps_grid),
        "best_eps": num(res.best_eps),
        "best_max_distortion": num(res.best_max_distortion),
        "cells": cells,
    });
    if let Some(p) = &cfg.out_matrix {
        write_text(p, &matrix_to_csv(&res.best_mean))?;
    }
    emit_summary(&summary, cfg.out_summary.as_ref())
}
