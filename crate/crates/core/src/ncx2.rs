//! Noncentral chi-squared distribution.
//!
//! `F_{k,delta}(x) = sum_j w_j P(k/2 + j, x/2)` with Poisson weights
//! `w_j = e^{-delta/2} (delta/2)^j / j!`. Weights are evaluated in log space
//! starting from the modal index and kept while `w_j >= 1e-21`, so the
//! dropped mass is below `1e-20`. Only the two extreme central terms are
//! computed directly; every other term follows from the exact recurrences
//!
//! ```text
//! P(s, y) = P(s + 1, y) + y^s e^{-y} / Gamma(s + 1)
//! Q(s + 1, y) = Q(s, y) + y^s e^{-y} / Gamma(s + 1)
//! ```
//!
//! run in the direction where they only add positive terms.

use crate::error::{param, Error, Result};
use crate::gamma::{log_poisson_term, reg_gamma_pq};

const LOG_WEIGHT_CUTOFF: f64 = -48.354_9; // ln(1e-21)
/// Tail exponent for the short circuit: probabilities below e^-700 are zero.
const TAIL_EXPONENT: f64 = 700.0;

/// CDF, survival, density and density slope at one argument for the three
/// degrees of freedom `k`, `k + 2`, `k + 4` sharing one noncentrality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ncx2Bundle {
    pub cdf: [f64; 3],
    pub sf: [f64; 3],
    pub pdf: [f64; 3],
    pub dpdf: [f64; 3],
}

impl Ncx2Bundle {
    const BELOW: Self = Self {
        cdf: [0.0; 3],
        sf: [1.0; 3],
        pdf: [0.0; 3],
        dpdf: [0.0; 3],
    };
    const ABOVE: Self = Self {
        cdf: [1.0; 3],
        sf: [0.0; 3],
        pdf: [0.0; 3],
        dpdf: [0.0; 3],
    };

    /// `F_{k+2r} - F_{k+2r+2}`, taken from whichever side of the distribution
    /// carries the precision.
    pub fn cdf_step(&self, r: usize) -> f64 {
        if self.cdf[r] <= 0.5 {
            self.cdf[r] - self.cdf[r + 1]
        } else {
            self.sf[r + 1] - self.sf[r]
        }
    }
}

/// Whether every dof's mass sits on one side of `x` beyond `e^-700`, using
/// the Birge concentration bounds for noncentral chi-squared variables. The
/// unit slack makes the density bound follow from unimodality.
fn far_tail(x: f64, k: f64, delta: f64) -> Option<bool> {
    let mut above = true;
    let mut below = true;
    for r in 0..3 {
        let dof = k + 2.0 * r as f64;
        let mean = dof + delta;
        let spread = 2.0 * ((dof + 2.0 * delta) * TAIL_EXPONENT).sqrt();
        above &= x - 1.0 >= mean + spread + 2.0 * TAIL_EXPONENT;
        below &= x + 1.0 <= mean - spread;
    }
    if above {
        Some(true)
    } else if below {
        Some(false)
    } else {
        None
    }
}

/// First index and log weights of the Poisson terms with `w_j >= 1e-21`.
fn poisson_window(lambda: f64) -> (usize, usize) {
    if lambda == 0.0 {
        return (0, 0);
    }
    let mode = lambda.floor() as usize;
    let mut lo = mode;
    while lo > 0 && log_poisson_term((lo - 1) as f64, lambda) >= LOG_WEIGHT_CUTOFF {
        lo -= 1;
    }
    let mut hi = mode;
    while log_poisson_term((hi + 1) as f64, lambda) >= LOG_WEIGHT_CUTOFF {
        hi += 1;
    }
    (lo, hi)
}

/// Relative size below which a window-edge contribution counts as converged.
const EDGE_TOL: f64 = 1e-17;

struct WindowSums {
    bundle: Ncx2Bundle,
    /// Whether the lower / upper edge still carries non-negligible mass.
    grow_lo: bool,
    grow_hi: bool,
}

fn sum_window(x: f64, kf: f64, lambda: f64, lo: usize, hi: usize) -> WindowSums {
    let terms = hi - lo + 1;
    let y = x / 2.0;
    let shape = |idx: usize| kf / 2.0 + (lo + idx) as f64;

    // step[i] = y^{s_i - 1} e^{-y} / Gamma(s_i); the central density of dof
    // 2 s_i at x is step[i] / 2.
    let step: Vec<f64> = (0..terms + 3)
        .map(|i| log_poisson_term(shape(i) - 1.0, y).exp())
        .collect();

    let mut p = vec![0.0; terms + 2];
    let mut q = vec![0.0; terms + 2];
    p[terms + 1] = reg_gamma_pq(shape(terms + 1), y).0;
    for i in (0..terms + 1).rev() {
        p[i] = p[i + 1] + step[i + 1];
    }
    q[0] = reg_gamma_pq(shape(0), y).1;
    for i in 0..terms + 1 {
        q[i + 1] = q[i] + step[i + 1];
    }

    let mut out = Ncx2Bundle {
        cdf: [0.0; 3],
        sf: [0.0; 3],
        pdf: [0.0; 3],
        dpdf: [0.0; 3],
    };
    let weight = |i: usize| {
        if lambda == 0.0 {
            1.0
        } else {
            log_poisson_term((lo + i) as f64, lambda).exp()
        }
    };
    let mut first = [0.0; 3];
    let mut last = [0.0; 3];
    for i in 0..terms {
        let w = weight(i);
        for r in 0..3 {
            let dens = 0.5 * step[i + r];
            out.cdf[r] += w * p[i + r].min(1.0);
            out.sf[r] += w * q[i + r].min(1.0);
            out.pdf[r] += w * dens;
            out.dpdf[r] += w * dens * ((shape(i + r) - 1.0) / x - 0.5);
        }
        if i == 0 {
            first = [w * p[0].min(1.0), w * step[0], w * q[0].min(1.0)];
        }
        if i == terms - 1 {
            last = [w * q[i + 2].min(1.0), w * step[i + 2], w * p[i].min(1.0)];
        }
    }
    for r in 0..3 {
        out.cdf[r] = out.cdf[r].clamp(0.0, 1.0);
        out.sf[r] = out.sf[r].clamp(0.0, 1.0);
    }
    // Lower tails (cdf) and densities concentrate below the Poisson mode,
    // upper tails above it.
    let grow_lo = lo > 0 && (first[0] > EDGE_TOL * out.cdf[0] || first[1] > EDGE_TOL * out.pdf[0]) && lambda > 0.0;
    let grow_hi =
        lambda > 0.0 && (last[0] > EDGE_TOL * out.sf[2] || last[1] > EDGE_TOL * out.pdf[2]) && last[2] + last[0] > 0.0;
    WindowSums {
        bundle: out,
        grow_lo,
        grow_hi,
    }
}

/// Evaluates the bundle at `x` for `k` degrees of freedom and noncentrality
/// `delta`. Inputs are assumed valid (`k >= 1`, `delta >= 0`, `x >= 0`).
pub(crate) fn bundle(x: f64, k: u32, delta: f64) -> Ncx2Bundle {
    if x <= 0.0 {
        return Ncx2Bundle::BELOW;
    }
    if x.is_infinite() {
        return Ncx2Bundle::ABOVE;
    }
    let kf = k as f64;
    match far_tail(x, kf, delta) {
        Some(true) => return Ncx2Bundle::ABOVE,
        Some(false) => return Ncx2Bundle::BELOW,
        None => {}
    }
    let lambda = delta / 2.0;
    let (mut lo, mut hi) = poisson_window(lambda);
    loop {
        let sums = sum_window(x, kf, lambda, lo, hi);
        if !(sums.grow_lo || sums.grow_hi) {
            return sums.bundle;
        }
        let widen = (hi - lo).div_ceil(2).max(16);
        if sums.grow_lo {
            lo = lo.saturating_sub(widen);
        }
        if sums.grow_hi {
            hi += widen;
        }
    }
}

fn validate(x: f64, k: u32, delta: f64) -> Result<()> {
    if k == 0 {
        return Err(param("degrees of freedom must be >= 1"));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(param(format!("noncentrality must be finite and >= 0, got {delta}")));
    }
    if !(x >= 0.0) {
        return Err(param(format!("argument must be >= 0, got {x}")));
    }
    Ok(())
}

fn checked(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("{what} evaluated to {v}")))
    }
}

/// `P(X <= x)` for `X ~ chi^2_k(delta)`.
pub fn ncx2_cdf(x: f64, k: u32, delta: f64) -> Result<f64> {
    validate(x, k, delta)?;
    checked(bundle(x, k, delta).cdf[0], "ncx2 cdf")
}

/// `P(X > x)`, accurate when the upper tail is tiny.
pub fn ncx2_sf(x: f64, k: u32, delta: f64) -> Result<f64> {
    validate(x, k, delta)?;
    checked(bundle(x, k, delta).sf[0], "ncx2 survival")
}

/// Density of `chi^2_k(delta)` at `x > 0`.
pub fn ncx2_pdf(x: f64, k: u32, delta: f64) -> Result<f64> {
    validate(x, k, delta)?;
    if x == 0.0 {
        return Err(param("density is evaluated at x > 0 only"));
    }
    checked(bundle(x, k, delta).pdf[0], "ncx2 pdf")
}

/// `dF_{k,delta}(x) / d delta = (F_{k+2,delta}(x) - F_{k,delta}(x)) / 2`.
pub fn ncx2_cdf_ddelta(x: f64, k: u32, delta: f64) -> Result<f64> {
    validate(x, k, delta)?;
    checked(-0.5 * bundle(x, k, delta).cdf_step(0), "ncx2 cdf delta-derivative")
}
