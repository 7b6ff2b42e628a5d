//! Unit-norm point sets.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{param, Result};

/// `n` points in `d` dimensions, stored one point per row, each of unit
/// Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: DMatrix<f64>,
}

impl Dataset {
    /// Builds a dataset from rows, normalizing every row to unit norm.
    ///
    /// Rows with zero norm cannot be normalized and are rejected. Rows that
    /// are already unit length up to rounding are kept bit for bit, so a
    /// dataset survives a text round trip unchanged.
    pub fn from_rows(points: DMatrix<f64>) -> Result<Self> {
        let (n, d) = points.shape();
        if n == 0 {
            return Err(param("dataset needs at least one point"));
        }
        if d < 2 {
            return Err(param(format!("ambient dimension must be >= 2, got {d}")));
        }
        let mut points = points;
        for (j, mut row) in points.row_iter_mut().enumerate() {
            let norm = row.norm();
            if !norm.is_finite() || norm == 0.0 {
                return Err(param(format!("point {j} has norm {norm}, cannot normalize")));
            }
            if (norm - 1.0).abs() > 4.0 * f64::EPSILON {
                row /= norm;
            }
        }
        Ok(Self { points })
    }

    /// Builds a dataset from a list of equal-length vectors.
    pub fn from_vecs(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(param("dataset needs at least one point"));
        }
        let d = rows[0].len();
        if let Some((j, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(param(format!("point {j} has {} coordinates, expected {d}", r.len())));
        }
        Self::from_rows(DMatrix::from_fn(n, d, |i, l| rows[i][l]))
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn d(&self) -> usize {
        self.points.ncols()
    }

    /// The `n x d` point matrix.
    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    /// Copies point `j` out as a dense vector.
    pub fn point(&self, j: usize) -> Vec<f64> {
        self.points.row(j).iter().copied().collect()
    }
}

/// Draws `n` standard Gaussian points in `d` dimensions and normalizes each,
/// which gives points uniform on the unit sphere.
pub fn make_unit_dataset(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(param("n must be >= 1"));
    }
    if d < 2 {
        return Err(param(format!("d must be >= 2, got {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Row-major fill so the draw order does not depend on storage layout.
    let mut raw = vec![0.0; n * d];
    for x in raw.iter_mut() {
        *x = StandardNormal.sample(&mut rng);
    }
    Dataset::from_rows(DMatrix::from_row_slice(n, d, &raw))
}
