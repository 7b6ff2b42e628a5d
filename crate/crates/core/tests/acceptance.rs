//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Built with `harness = false` so the lines are printed on every run. The
//! process fails if any criterion other than the documented counterexample
//! local-minimality check fails, or if that check changes its outcome.

use std::process::ExitCode;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

use jlsampler::counterexample::{
    build_bad_instance, instance_distortion, instance_distortion_with, verify_local_min, verify_local_min_with,
    Convention, LocalMinReport,
};
use jlsampler::dataset::{make_unit_dataset, Dataset};
use jlsampler::distortion::{jl_epsilon, max_distortion};
use jlsampler::io::{fmt_f64, matrix_to_csv};
use jlsampler::mcsim::{run_mc_training, McConfig, McResult};
use jlsampler::ncx2::{ncx2_cdf, ncx2_cdf_ddelta};
use jlsampler::objective::ObjectiveContext;
use jlsampler::optimizer::{calibrate_epsilon_constant, hessian_descent, DescentConfig, DescentMode, DescentResult};
use jlsampler::sampling::{baseline_max_distortions, standard_normal_matrix, stream_rng, SamplerParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(n: u32, o: &Outcome) {
    println!("criterion {n}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

// ---------------------------------------------------------------- 1

const MC_DRAWS: usize = 10_000_000;
const MC_CHUNKS: usize = 200;

/// Evaluation points: `mean + c sd` for `c in {-1, 0, 1}`, plus `c = 2.5` for
/// the `delta = 10` cases, giving 30 points.
fn ncx2_points() -> Vec<(u32, f64, Vec<f64>)> {
    let mut out = Vec::new();
    for k in [1u32, 5, 30] {
        for delta in [0.0, 1.0, 10.0] {
            let mean = k as f64 + delta;
            let sd = (2.0 * (k as f64 + 2.0 * delta)).sqrt();
            let mut cs = vec![-1.0, 0.0, 1.0];
            if delta == 10.0 {
                cs.push(2.5);
            }
            let xs = cs.iter().map(|c| (mean + c * sd).max(0.05 * mean)).collect();
            out.push((k, delta, xs));
        }
    }
    out
}

/// Empirical CDF at `xs` from `MC_DRAWS` draws of `(Z + sqrt delta)^2 + chi^2_{k-1}`.
fn ncx2_empirical(k: u32, delta: f64, xs: &[f64], seed: u64) -> Vec<f64> {
    let per = MC_DRAWS / MC_CHUNKS;
    let counts = (0..MC_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let central = (k > 1).then(|| ChiSquared::new((k - 1) as f64).unwrap());
            let mut cnt = vec![0u64; xs.len()];
            for _ in 0..per {
                let z: f64 = StandardNormal.sample(&mut rng);
                let mut v = (z + delta.sqrt()).powi(2);
                if let Some(cs) = &central {
                    v += cs.sample(&mut rng);
                }
                for (i, &x) in xs.iter().enumerate() {
                    cnt[i] += (v <= x) as u64;
                }
            }
            cnt
        })
        .reduce(
            || vec![0u64; xs.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    counts
        .into_iter()
        .map(|c| c as f64 / (per * MC_CHUNKS) as f64)
        .collect()
}

/// Second-order finite difference in delta; one-sided at delta = 0.
fn fd_ddelta(x: f64, k: u32, delta: f64) -> f64 {
    let f = |d: f64| ncx2_cdf(x, k, d).unwrap();
    let h = 1e-3 * delta.max(1.0);
    if delta == 0.0 {
        (-3.0 * f(0.0) + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h)
    } else {
        (f(delta + h) - f(delta - h)) / (2.0 * h)
    }
}

fn criterion_1() -> Outcome {
    let mut worst_abs: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    let mut count = 0;
    for (idx, (k, delta, xs)) in ncx2_points().into_iter().enumerate() {
        let emp = ncx2_empirical(k, delta, &xs, 1000 + idx as u64);
        for (x, e) in xs.iter().zip(emp) {
            let c = ncx2_cdf(*x, k, delta).unwrap();
            worst_abs = worst_abs.max((c - e).abs());
            let an = ncx2_cdf_ddelta(*x, k, delta).unwrap();
            let fd = fd_ddelta(*x, k, delta);
            worst_rel = worst_rel.max((an - fd).abs() / an.abs());
            count += 1;
        }
    }
    Outcome {
        pass: count == 30 && worst_abs <= 2e-3 && worst_rel <= 1e-5,
        detail: format!(
            "({count} points) max |cdf - MC| = {worst_abs:.2e} (tol 2e-3), max rel ddelta FD err = {worst_rel:.2e} (tol 1e-5)"
        ),
    }
}

// ---------------------------------------------------------------- 2

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn criterion_2() -> Outcome {
    let (n, d, k) = (5, 8, 3);
    let ctx = ObjectiveContext::with_default_floor(make_unit_dataset(n, d, 21).unwrap(), k, 0.5).unwrap();
    let g_at = |flat: &[f64]| ctx.g_value(&SamplerParams::from_flat(k, d, flat)).unwrap();
    let h = 1e-5;

    let mut worst_grad: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    for point in 0..20u64 {
        let mut rng = stream_rng(point, 99);
        let mean = standard_normal_matrix(k, d, &mut rng) * 0.8;
        let p = SamplerParams::new(mean, rng.random_range(0.25..=1.0)).unwrap();
        let x = p.to_flat();
        let ev = ctx.evaluate(&p, true).unwrap();
        let an = ev.grad.to_flat();
        for i in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = (g_at(&xp) - g_at(&xm)) / (2.0 * h);
            worst_grad = worst_grad.max((an[i] - fd).abs() / an[i].abs().max(1e-7));
        }
        for _ in 0..5 {
            let a: Vec<f64> = (0..x.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..x.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let ab = dot(&a, &ev.hvp(&ctx, &b).unwrap());
            let ba = dot(&b, &ev.hvp(&ctx, &a).unwrap());
            worst_sym = worst_sym.max((ab - ba).abs() / ab.abs().max(1.0));
        }
    }

    // Taylor remainder of the quadratic model should shrink like t^3
    let mut rng = stream_rng(7, 7);
    let p = SamplerParams::new(standard_normal_matrix(k, d, &mut rng) * 0.8, 0.6).unwrap();
    let x = p.to_flat();
    let w: Vec<f64> = (0..x.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let ev = ctx.evaluate(&p, true).unwrap();
    let (gw, whw) = (dot(&ev.grad.to_flat(), &w), dot(&w, &ev.hvp(&ctx, &w).unwrap()));
    let rem = |t: f64| {
        let y: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a + t * b).collect();
        (g_at(&y) - ev.g - t * gw - 0.5 * t * t * whw).abs()
    };
    let slope = (rem(1e-2) / rem(2.5e-3)).ln() / 4f64.ln();

    Outcome {
        pass: worst_grad <= 1e-4 && worst_sym <= 1e-8 && (slope - 3.0).abs() < 0.3,
        detail: format!(
            "max rel grad FD err = {worst_grad:.2e} (tol 1e-4), HVP asymmetry = {worst_sym:.2e}, Taylor slope = {slope:.3}"
        ),
    }
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let (n, k) = (100, 30);
    let c = calibrate_epsilon_constant(n, k).unwrap();
    let eps = jl_epsilon(n as f64, k, c).unwrap();
    let ctx = ObjectiveContext::with_default_floor(make_unit_dataset(n, 50, 0).unwrap(), k, eps).unwrap();
    let p = SamplerParams::origin(k, 50);
    let f = ctx.f_value(&p).unwrap();
    let g = ctx.g_value(&p).unwrap();
    Outcome {
        pass: f < 1.0 / 3.0 && g < 5.0 / 6.0,
        detail: format!("C = {c}, eps = {eps:.5}, f(0,1) = {f:.5} (< 1/3), g(0,1) = {g:.5} (< 5/6)"),
    }
}

// ---------------------------------------------------------------- 4, 5

const EPS_DESCENT: f64 = 0.75;

fn descent_ctx() -> ObjectiveContext {
    ObjectiveContext::with_default_floor(make_unit_dataset(20, 30, 1).unwrap(), 10, EPS_DESCENT).unwrap()
}

fn adaptive_run(ctx: &ObjectiveContext) -> DescentResult {
    let cfg = DescentConfig {
        rho: 1e-4,
        mode: DescentMode::Adaptive,
        max_iters: 50_000,
        ..DescentConfig::default()
    };
    hessian_descent(ctx, &cfg, &SamplerParams::origin(10, 30)).unwrap()
}

fn criterion_4(ctx: &ObjectiveContext, res: &DescentResult) -> Outcome {
    let gs: Vec<f64> = res.trace.records.iter().map(|r| r.g).collect();
    let monotone = gs.windows(2).all(|w| w[1] <= w[0]);
    let md = max_distortion(res.mean(), &ctx.data).unwrap().max;
    let s2 = res.params.variance;
    Outcome {
        pass: res.converged && res.trace.len() <= 50_000 && s2 <= 1e-3 && monotone && md <= ctx.eps,
        detail: format!(
            "converged = {} in {} iterations, sigma^2 = {s2:.1e} (<= 1e-3), g monotone = {monotone}, max distortion = {md:.5} (<= eps {})",
            res.converged,
            res.trace.len(),
            ctx.eps
        ),
    }
}

fn criterion_5(ctx: &ObjectiveContext, adaptive: &DescentResult) -> Outcome {
    let l = 2.0 * adaptive.smoothness_estimate;
    let kk = 2.0 * adaptive.hessian_lipschitz_estimate;
    let cfg = DescentConfig {
        rho: 1e-4,
        smoothness: l,
        hessian_lipschitz: kk,
        mode: DescentMode::FixedConstants,
        max_iters: 50_000,
        ..DescentConfig::default()
    };
    match hessian_descent(ctx, &cfg, &SamplerParams::origin(10, 30)) {
        Ok(res) => Outcome {
            pass: true,
            detail: format!(
                "L = {l}, K = {kk}: 0 violations over {} iterations (converged = {})",
                res.trace.len(),
                res.converged
            ),
        },
        Err(e) => Outcome {
            pass: false,
            detail: format!("L = {l}, K = {kk}: {e}"),
        },
    }
}

// ---------------------------------------------------------------- 6

fn mc_data() -> Dataset {
    make_unit_dataset(50, 100, 0).unwrap()
}

fn mc_run(data: &Dataset) -> McResult {
    let cfg = McConfig {
        iters: 2000,
        batch: 20,
        step_size: 0.01,
        seed: 0,
        ..McConfig::default()
    };
    run_mc_training(data, 20, &cfg).unwrap()
}

fn criterion_6(data: &Dataset, res: &McResult) -> Outcome {
    let base = baseline_max_distortions(data, 20, 1000, 1).unwrap();
    let min = base.iter().copied().fold(f64::INFINITY, f64::min);
    let h = res.final_distortion;
    let s2 = res.params.variance;
    Outcome {
        pass: h <= 0.15 && s2 <= 0.05 && h < min,
        detail: format!("h(M) = {h:.4} (<= 0.15), sigma^2 = {s2:.2e} (<= 0.05), Gaussian min over 1000 = {min:.4}"),
    }
}

// ---------------------------------------------------------------- 7

fn counterexample_reports(conv: Convention) -> Vec<(usize, f64, LocalMinReport)> {
    (2..=8)
        .map(|k| {
            let inst = build_bad_instance(k).unwrap();
            let dist = instance_distortion_with(&inst, &inst.a_star, conv).unwrap();
            let rep = verify_local_min_with(&inst, 1e-3, 10_000, 0, conv).unwrap();
            (k, dist, rep)
        })
        .collect()
}

fn criterion_7(squared: &[(usize, f64, LocalMinReport)], ratio: &[(usize, f64, LocalMinReport)]) -> (Outcome, bool) {
    let value_ok = squared.iter().all(|(_, d, _)| (d - 1.25).abs() <= 1e-12);
    let local_ok = squared.iter().all(|(_, _, r)| r.all_worse && r.min_margin > 0.0);
    let summary: Vec<String> = squared
        .iter()
        .map(|(k, _, r)| format!("k={k}: {} violations, min margin {:.1e}", r.violations, r.min_margin))
        .collect();
    let ratio_ok = ratio
        .iter()
        .all(|(_, d, r)| (d - 0.5).abs() <= 1e-12 && r.all_worse && r.min_margin > 0.0);
    let ratio_min = ratio.iter().map(|(_, _, r)| r.min_margin).fold(f64::INFINITY, f64::min);
    // The squared-distortion local-minimum check is known to fail: uniformly
    // shrinking the first k columns lowers every 9/4 ratio. Anything else
    // (a pass, or a broken 1.25 value) is a regression.
    let as_analyzed = value_ok && !local_ok && ratio_ok;
    let o = Outcome {
        pass: value_ok && local_ok,
        detail: format!(
            "distortion(A*) = 1.25 for k=2..8: {value_ok}; local min (squared): {local_ok} [{}]; norm-ratio convention: distortion 0.5 and strict local min for k=2..8: {ratio_ok} (min margin {ratio_min:.1e})",
            summary.join("; ")
        ),
    };
    (o, as_analyzed)
}

// ---------------------------------------------------------------- 8

fn descent_bytes(res: &DescentResult) -> String {
    let mut s = matrix_to_csv(res.mean());
    s.push_str(&res.trace.to_csv());
    s
}

fn mc_bytes(res: &McResult) -> String {
    let mut s = matrix_to_csv(&res.params.mean);
    s.push_str(&res.trajectory.to_csv());
    s.push_str(&fmt_f64(res.final_distortion));
    s
}

fn ce_bytes(reps: &[(usize, f64, LocalMinReport)]) -> String {
    reps.iter()
        .map(|(k, d, r)| format!("{k},{},{r:?}\n", fmt_f64(*d)))
        .collect()
}

fn main() -> ExitCode {
    let mut ok = true;

    let c1 = criterion_1();
    report(1, &c1);
    let c2 = criterion_2();
    report(2, &c2);
    let c3 = criterion_3();
    report(3, &c3);

    let ctx = descent_ctx();
    let adaptive = adaptive_run(&ctx);
    let c4 = criterion_4(&ctx, &adaptive);
    report(4, &c4);
    let c5 = criterion_5(&ctx, &adaptive);
    report(5, &c5);

    let data = mc_data();
    let mc = mc_run(&data);
    let c6 = criterion_6(&data, &mc);
    report(6, &c6);

    let squared = counterexample_reports(Convention::Squared);
    let ratio = counterexample_reports(Convention::NormRatio);
    // the defaults of the convenience wrappers must agree with the squared runs
    let inst = build_bad_instance(2).unwrap();
    let wrappers_agree = instance_distortion(&inst, &inst.a_star).unwrap() == squared[0].1
        && verify_local_min(&inst, 1e-3, 10_000, 0).unwrap() == squared[0].2;
    let (c7, c7_as_analyzed) = criterion_7(&squared, &ratio);
    report(7, &c7);

    let same4 = descent_bytes(&adaptive) == descent_bytes(&adaptive_run(&ctx));
    let same6 = mc_bytes(&mc) == mc_bytes(&mc_run(&data));
    let same7 = ce_bytes(&squared) == ce_bytes(&counterexample_reports(Convention::Squared))
        && ce_bytes(&ratio) == ce_bytes(&counterexample_reports(Convention::NormRatio));
    let c8 = Outcome {
        pass: same4 && same6 && same7,
        detail: format!("byte-identical reruns: descent {same4}, mc {same6}, counterexample {same7}"),
    };
    report(8, &c8);

    for c in [&c1, &c2, &c3, &c4, &c5, &c6, &c8] {
        ok &= c.pass;
    }
    ok &= c7_as_analyzed && wrappers_agree;
    if !c7.pass && c7_as_analyzed {
        println!("note: criterion 7 fails as analyzed (the squared-distortion A* is not a local minimum); see README");
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
