//! Lower-triangular Cholesky factor that grows one row/column at a time.
//!
//! Appending a point to an `n`-point factor `L11` of `A11` uses the block
//! relations
//!
//! ```text
//! S11 = L11
//! S12 = L11^T \ A12      (forward substitution, stored as the new row)
//! S22 = chol(A22 - S12^T S12)
//! ```
//!
//! so a new observation costs `O(n^2)` instead of a full `O(n^3)` refactorization.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Packed row-major lower triangle: row `i` occupies `i + 1` entries starting at `i (i + 1) / 2`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CholeskyFactor {
    packed: Vec<f64>,
    n: usize,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl CholeskyFactor {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            packed: Vec::with_capacity(row_start(n)),
            n: 0,
        }
    }

    /// Factorizes a symmetric positive definite matrix by bordering, i.e.
    /// appending its rows one at a time.
    pub fn factorize(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidInput(format!(
                "cannot factorize a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        let mut f = Self::with_capacity(n);
        let mut cross = Vec::with_capacity(n);
        for i in 0..n {
            cross.clear();
            cross.extend((0..i).map(|j| a[(j, i)]));
            f.push(&cross, a[(i, i)])?;
        }
        Ok(f)
    }

    /// Number of points (rows) covered by the factor.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n && j < self.n);
        if j > i {
            0.0
        } else {
            self.packed[row_start(i) + j]
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.packed[row_start(i)..row_start(i + 1)]
    }

    /// Extends the factor in place with one new point.
    ///
    /// `cross` holds `A12` (covariances to the existing points) and `diag`
    /// is `A22`. On error the factor is left unchanged.
    pub fn push(&mut self, cross: &[f64], diag: f64) -> Result<()> {
        Error::check_dim(self.n, cross.len())?;
        let s12 = self.solve_lower(cross)?;
        let schur = diag - s12.iter().map(|v| v * v).sum::<f64>();
        if !(schur > 0.0) || !schur.is_finite() {
            return Err(Error::NotPositiveDefinite { row: self.n, pivot: schur });
        }
        self.packed.extend_from_slice(&s12);
        self.packed.push(schur.sqrt());
        self.n += 1;
        Ok(())
    }

    /// Returns the factor of the `(n+1)`-point matrix, leaving `self` untouched.
    pub fn append(&self, cross: &[f64], diag: f64) -> Result<Self> {
        let mut next = self.clone();
        next.push(cross, diag)?;
        Ok(next)
    }

    /// Solves `L z = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.n, b.len())?;
        let mut z = b.to_vec();
        self.solve_lower_in_place(&mut z);
        Ok(z)
    }

    pub(crate) fn solve_lower_in_place(&self, z: &mut [f64]) {
        for i in 0..self.n {
            let row = self.row(i);
            let s: f64 = row[..i].iter().zip(&z[..i]).map(|(l, v)| l * v).sum();
            z[i] = (z[i] - s) / row[i];
        }
    }

    /// Solves `L^T x = z`.
    pub fn solve_upper(&self, z: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.n, z.len())?;
        let mut x = z.to_vec();
        self.solve_upper_in_place(&mut x);
        Ok(x)
    }

    pub(crate) fn solve_upper_in_place(&self, x: &mut [f64]) {
        for i in (0..self.n).rev() {
            let row = self.row(i);
            x[i] /= row[i];
            let xi = x[i];
            for (xj, l) in x[..i].iter_mut().zip(&row[..i]) {
                *xj -= l * xi;
            }
        }
    }

    /// Solves `A x = b` with `A = L L^T`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.solve_lower(b)?;
        self.solve_upper_in_place(&mut x);
        Ok(x)
    }

    /// `log det A = 2 sum log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.get(i, i).ln()).sum::<f64>()
    }

    /// Dense lower-triangular matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Dense inverse `A^{-1}`, column by column.
    pub fn inverse(&self) -> DMatrix<f64> {
        let mut inv = DMatrix::zeros(self.n, self.n);
        let mut e = vec![0.0; self.n];
        for j in 0..self.n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            self.solve_lower_in_place(&mut e);
            self.solve_upper_in_place(&mut e);
            inv.column_mut(j).copy_from_slice(&e);
        }
        inv
    }
}
