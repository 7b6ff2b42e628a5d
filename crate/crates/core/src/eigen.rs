//! Smallest eigenpair of a symmetric operator given only matrix-vector
//! products.
//!
//! Plain Lanczos with full reorthogonalization. The Krylov dimensions used
//! here stay in the hundreds, so storing the basis is cheap and avoids ghost
//! eigenvalues. The start vector is drawn from a fixed seed, which keeps the
//! solver deterministic.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{param, Error, Result};
use crate::sampling::stream_rng;

const START_SEED: u64 = 0x1a2c_05e5;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit-norm eigenvector estimate.
    pub vector: Vec<f64>,
    /// `||H u - value * u||`, measured with a fresh product.
    pub residual: f64,
    /// Number of operator applications used by the Lanczos recurrence.
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}

/// Smallest Ritz pair of the tridiagonal `(alpha, beta)`: value and the
/// coefficients in the Lanczos basis.
fn smallest_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(tridiagonal(alpha, beta));
    let (idx, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty tridiagonal");
    (value, eig.eigenvectors.column(idx).iter().copied().collect())
}

/// Smallest eigenvalue and eigenvector of the symmetric operator `op` of
/// dimension `dim`.
///
/// Converged means `||H u - lambda u|| <= tol * max(1, |lambda|)`. On running
/// out of iterations the best Ritz pair is returned inside
/// [`Error::EigenConvergence`].
pub fn min_eigenpair<F>(dim: usize, mut op: F, tol: f64, max_iters: usize, start: Option<&[f64]>) -> Result<EigenPair>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if dim == 0 {
        return Err(param("operator dimension must be >= 1"));
    }
    if !(tol > 0.0) {
        return Err(param(format!("tolerance must be > 0, got {tol}")));
    }
    if max_iters == 0 {
        return Err(param("max_iters must be >= 1"));
    }

    let mut q0: Vec<f64> = match start {
        Some(s) if s.len() == dim && norm(s) > 0.0 => s.to_vec(),
        _ => {
            let mut rng = stream_rng(START_SEED, dim as u64);
            (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
    };
    let n0 = norm(&q0);
    q0.iter_mut().for_each(|x| *x /= n0);

    let mut basis: Vec<Vec<f64>> = vec![q0];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut best = (f64::INFINITY, Vec::new(), f64::INFINITY);
    let steps = max_iters.min(dim);

    for m in 0..steps {
        let q = basis[m].clone();
        let mut w = op(&q)?;
        if w.len() != dim {
            return Err(Error::Shape {
                expected: format!("{dim}"),
                got: format!("{}", w.len()),
            });
        }
        let a = dot(&q, &w);
        alpha.push(a);
        axpy(&mut w, -a, &q);
        if m > 0 {
            axpy(&mut w, -beta[m - 1], &basis[m - 1]);
        }
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                axpy(&mut w, -c, b);
            }
        }
        let b_next = norm(&w);
        let t_scale = alpha.iter().chain(beta.iter()).fold(0.0f64, |s, x| s.max(x.abs()));
        let breakdown = b_next <= 1e-12 * t_scale.max(1e-300);
        let last = m + 1 == steps;

        if m < 30 || m % 5 == 4 || breakdown || last {
            let (theta, s) = smallest_ritz(&alpha, &beta);
            let ritz_resid = if breakdown { 0.0 } else { b_next * s[m].abs() };
            let thresh = tol * theta.abs().max(1.0);
            if ritz_resid <= thresh || breakdown || last {
                let mut u = vec![0.0; dim];
                for (coef, b) in s.iter().zip(&basis) {
                    axpy(&mut u, *coef, b);
                }
                let un = norm(&u);
                u.iter_mut().for_each(|x| *x /= un);
                let hu = op(&u)?;
                let resid = hu
                    .iter()
                    .zip(&u)
                    .map(|(h, x)| (h - theta * x).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if resid <= thresh {
                    return Ok(EigenPair {
                        value: theta,
                        vector: u,
                        residual: resid,
                        iterations: m + 1,
                    });
                }
                if resid < best.2 {
                    best = (theta, u, resid);
                }
                if breakdown {
                    break;
                }
            }
        }
        if last {
            break;
        }
        beta.push(b_next);
        w.iter_mut().for_each(|x| *x /= b_next);
        basis.push(w);
    }
    Err(Error::EigenConvergence {
        iters: alpha.len(),
        residual: best.2,
        lambda: best.0,
        vector: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_op(d: Vec<f64>) -> impl FnMut(&[f64]) -> Result<Vec<f64>> {
        move |x: &[f64]| Ok(x.iter().zip(&d).map(|(a, b)| a * b).collect())
    }

    #[test]
    fn diagonal_operator() {
        let d: Vec<f64> = (0..40).map(|i| (i as f64 - 7.3).powi(2) - 3.0).collect();
        let want = d.iter().copied().fold(f64::INFINITY, f64::min);
        let e = min_eigenpair(40, diag_op(d), 1e-10, 200, None).unwrap();
        assert!((e.value - want).abs() < 1e-9);
        assert!((norm(&e.vector) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional() {
        let e = min_eigenpair(1, diag_op(vec![-2.5]), 1e-12, 5, None).unwrap();
        assert_eq!(e.value, -2.5);
        assert_eq!(e.vector.len(), 1);
    }

    #[test]
    fn degenerate_spectrum_breaks_down_cleanly() {
        // three distinct eigenvalues in 30 dimensions
        let d: Vec<f64> = (0..30).map(|i| [1.0, -4.0, 2.0][i % 3]).collect();
        let e = min_eigenpair(30, diag_op(d), 1e-10, 100, None).unwrap();
        assert!((e.value + 4.0).abs() < 1e-10);
        assert!(e.iterations <= 4);
    }

    #[test]
    fn too_few_iterations_reports_best() {
        let d: Vec<f64> = (0..200).map(|i| (i as f64).sqrt()).collect();
        match min_eigenpair(200, diag_op(d), 1e-14, 3, None) {
            Err(Error::EigenConvergence { iters, vector, .. }) => {
                assert_eq!(iters, 3);
                assert_eq!(vector.len(), 200);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(min_eigenpair(0, diag_op(vec![]), 1e-8, 10, None).is_err());
        assert!(min_eigenpair(2, diag_op(vec![1.0, 2.0]), 0.0, 10, None).is_err());
        assert!(min_eigenpair(2, diag_op(vec![1.0, 2.0]), 1e-8, 0, None).is_err());
    }
}
