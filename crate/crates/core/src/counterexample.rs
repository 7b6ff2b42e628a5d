//! A dataset whose distortion landscape has a bad local minimum near
//! `A* = [2I | 0]`.
//!
//! Base vectors `x` in `R^k` are the `e_i` and the `e_i + e_j` (`i < j`). Each
//! is completed with a last coordinate `c ||x||`, `c in {+-sqrt(15),
//! +-sqrt(7)/3}`. Points are not unit length, so distortion here is relative
//! to `||x~||` instead of the `1/k` convention used elsewhere.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::sampling::{standard_normal_matrix, stream_rng};

/// How a point's distortion is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `| ||A x||^2 / ||x||^2 - 1 |`. `A*` scores 5/4.
    #[default]
    Squared,
    /// `| ||A x|| / ||x|| - 1 |`. `A*` scores 1/2 on every point.
    NormRatio,
}

#[derive(Debug, Clone)]
pub struct BadInstance {
    pub k: usize,
    /// One point per row, `4 (k + k(k-1)/2)` rows of width `k + 1`.
    pub points: DMatrix<f64>,
    pub a_star: DMatrix<f64>,
}

/// Last-coordinate multipliers, in construction order.
pub fn completions() -> [f64; 4] {
    let a = 15f64.sqrt();
    let b = 7f64.sqrt() / 3.0;
    [a, -a, b, -b]
}

pub fn build_bad_instance(k: usize) -> Result<BadInstance> {
    if k < 2 {
        return Err(param(format!("block dimension k must be >= 2, got {k}")));
    }
    let mut bases: Vec<Vec<f64>> = Vec::new();
    for i in 0..k {
        let mut x = vec![0.0; k];
        x[i] = 1.0;
        bases.push(x);
    }
    for i in 0..k {
        for j in i + 1..k {
            let mut x = vec![0.0; k];
            x[i] = 1.0;
            x[j] = 1.0;
            bases.push(x);
        }
    }
    let rows: Vec<Vec<f64>> = bases
        .iter()
        .flat_map(|x| {
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            completions().into_iter().map(move |c| {
                let mut p = x.clone();
                p.push(c * nx);
                p
            })
        })
        .collect();
    let points = DMatrix::from_fn(rows.len(), k + 1, |r, c| rows[r][c]);
    let mut a_star = DMatrix::zeros(k, k + 1);
    for i in 0..k {
        a_star[(i, i)] = 2.0;
    }
    Ok(BadInstance { k, points, a_star })
}

impl BadInstance {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    fn check(&self, a: &DMatrix<f64>) -> Result<()> {
        if a.shape() != (self.k, self.k + 1) {
            return Err(Error::Shape {
                expected: format!("{} x {}", self.k, self.k + 1),
                got: format!("{} x {}", a.nrows(), a.ncols()),
            });
        }
        Ok(())
    }

    /// Distortion of every point under `a`.
    pub fn point_distortions(&self, a: &DMatrix<f64>, conv: Convention) -> Result<Vec<f64>> {
        self.check(a)?;
        let proj = a * self.points.transpose();
        Ok(proj
            .column_iter()
            .zip(self.points.row_iter())
            .map(|(ax, x)| {
                let r = ax.norm_squared() / x.norm_squared();
                match conv {
                    Convention::Squared => (r - 1.0).abs(),
                    Convention::NormRatio => (r.sqrt() - 1.0).abs(),
                }
            })
            .collect())
    }
}

/// Max relative distortion `max |(||A x~|| / ||x~||)^2 - 1|`.
pub fn instance_distortion(inst: &BadInstance, a: &DMatrix<f64>) -> Result<f64> {
    instance_distortion_with(inst, a, Convention::Squared)
}

pub fn instance_distortion_with(inst: &BadInstance, a: &DMatrix<f64>, conv: Convention) -> Result<f64> {
    Ok(inst.point_distortions(a, conv)?.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMinReport {
    pub k: usize,
    pub convention: Convention,
    pub radius_levels: Vec<f64>,
    pub trials: usize,
    /// No perturbation lowered the max distortion.
    pub all_worse: bool,
    /// Smallest `distortion(A* + dA) - distortion(A*)` seen at each level;
    /// axis perturbations count toward the first level.
    pub min_margin_per_level: Vec<f64>,
    pub min_margin: f64,
    /// Perturbations that lowered the max distortion.
    pub violations: usize,
}

/// Margins of the `2 k (k+1)` perturbations `+-radius * E_{i,l}` around `A*`.
pub fn axis_margins(inst: &BadInstance, radius: f64, conv: Convention) -> Result<Vec<f64>> {
    let base = instance_distortion_with(inst, &inst.a_star, conv)?;
    let (k, c) = (inst.k, inst.k + 1);
    let mut out = Vec::with_capacity(2 * k * c);
    for i in 0..k {
        for l in 0..c {
            for s in [1.0, -1.0] {
                let mut a = inst.a_star.clone();
                a[(i, l)] += s * radius;
                out.push(instance_distortion_with(inst, &a, conv)? - base);
            }
        }
    }
    Ok(out)
}

/// Samples `trials` perturbations uniformly on each Frobenius sphere of
/// radius `radius`, `radius/10` and `radius/100`, plus the axis
/// perturbations at `radius`, and checks that none lowers the distortion
/// of `A*`.
pub fn verify_local_min(inst: &BadInstance, radius: f64, trials: usize, seed: u64) -> Result<LocalMinReport> {
    verify_local_min_with(inst, radius, trials, seed, Convention::Squared)
}

pub fn verify_local_min_with(
    inst: &BadInstance,
    radius: f64,
    trials: usize,
    seed: u64,
    conv: Convention,
) -> Result<LocalMinReport> {
    if !(radius > 0.0 && radius <= 1e-2) {
        return Err(param(format!("radius must lie in (0, 1e-2], got {radius}")));
    }
    if trials == 0 {
        return Err(param("trials must be >= 1"));
    }
    let base = instance_distortion_with(inst, &inst.a_star, conv)?;
    let levels = vec![radius, radius / 10.0, radius / 100.0];
    let (k, c) = (inst.k, inst.k + 1);
    let mut per_level = Vec::with_capacity(3);
    let mut violations = 0usize;
    for (li, &r) in levels.iter().enumerate() {
        let margins: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(seed, (li * trials + t) as u64);
                let dir = standard_normal_matrix(k, c, &mut rng);
                let a = &inst.a_star + &dir * (r / dir.norm());
                instance_distortion_with(inst, &a, conv).map(|v| v - base)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut all = margins;
        if li == 0 {
            all.extend(axis_margins(inst, r, conv)?);
        }
        violations += all.iter().filter(|&&m| m < 0.0).count();
        per_level.push(all.into_iter().fold(f64::INFINITY, f64::min));
    }
    let min_margin = per_level.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(LocalMinReport {
        k,
        convention: conv,
        radius_levels: levels,
        trials,
        all_worse: violations == 0,
        min_margin_per_level: per_level,
        min_margin,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_star_shape() {
        for k in 2..6 {
            let inst = build_bad_instance(k).unwrap();
            assert_eq!(inst.len(), 4 * (k + k * (k - 1) / 2));
            assert_eq!(inst.points.ncols(), k + 1);
            for i in 0..k {
                for j in 0..=k {
                    let want = if i == j { 2.0 } else { 0.0 };
                    assert_eq!(inst.a_star[(i, j)], want);
                }
            }
        }
        assert_eq!(build_bad_instance(2).unwrap().len(), 12);
        assert!(build_bad_instance(1).is_err());
    }

    #[test]
    fn first_points_have_the_stated_norms() {
        let inst = build_bad_instance(3).unwrap();
        let sq = |r: usize| inst.points.row(r).norm_squared();
        let proj = |r: usize| (&inst.a_star * inst.points.row(r).transpose()).norm_squared();
        // rows 0 and 2 are (e_1, sqrt 15) and (e_1, sqrt 7 / 3)
        assert!((sq(0) - 16.0).abs() < 1e-13);
        assert_eq!(proj(0), 4.0);
        assert!((sq(2) - 16.0 / 9.0).abs() < 1e-14);
        assert_eq!(proj(2), 4.0);
    }

    #[test]
    fn star_distortions() {
        let inst = build_bad_instance(4).unwrap();
        let d = inst.point_distortions(&inst.a_star, Convention::Squared).unwrap();
        for (r, v) in d.iter().enumerate() {
            let want = if r % 4 < 2 { 0.75 } else { 1.25 };
            assert!((v - want).abs() < 1e-12, "row {r}: {v}");
        }
        let nr = inst.point_distortions(&inst.a_star, Convention::NormRatio).unwrap();
        assert!(nr.iter().all(|v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn zero_matrix_distorts_everything_fully() {
        let inst = build_bad_instance(3).unwrap();
        let d = inst
            .point_distortions(&DMatrix::zeros(3, 4), Convention::Squared)
            .unwrap();
        assert!(d.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn shape_is_checked() {
        let inst = build_bad_instance(3).unwrap();
        assert!(instance_distortion(&inst, &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn axis_count_and_zero_perturbation() {
        let inst = build_bad_instance(3).unwrap();
        assert_eq!(axis_margins(&inst, 1e-3, Convention::Squared).unwrap().len(), 2 * 3 * 4);
        let same = instance_distortion(&inst, &inst.a_star).unwrap();
        assert_eq!(same - instance_distortion(&inst, &inst.a_star).unwrap(), 0.0);
    }

    #[test]
    fn verify_rejects_bad_arguments() {
        let inst = build_bad_instance(2).unwrap();
        assert!(verify_local_min(&inst, 0.1, 10, 0).is_err());
        assert!(verify_local_min(&inst, 1e-3, 0, 0).is_err());
    }
}
