//! Minimal dense matrix support for the Kalman-type filters.
//!
//! The filters only need products, transposes and a Cholesky test on small
//! symmetric matrices, so this stays generic over [`Scalar`] instead of
//! pulling in a full linear algebra crate.

use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matrix product shape");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `A · B · Aᵀ`
    pub fn sandwich(&self, inner: &Self) -> Self {
        self.mul(inner).mul(&self.transpose())
    }

    pub fn add_assign(&mut self, rhs: &Self) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    /// Adds `s · u vᵀ`.
    pub fn add_outer(&mut self, s: T, u: &[T], v: &[T]) {
        assert_eq!((self.rows, self.cols), (u.len(), v.len()));
        for (i, &ui) in u.iter().enumerate() {
            let su = s * ui;
            for (j, &vj) in v.iter().enumerate() {
                self.data[i * self.cols + j] += su * vj;
            }
        }
    }

    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        let half = T::lit(0.5);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = half * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Lower Cholesky factor, or `None` if the matrix is not positive definite.
    pub fn cholesky(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(l)
    }

    /// Restores positive definiteness by symmetrising and adding diagonal
    /// jitter. Returns `true` if the matrix had to be modified beyond
    /// symmetrisation.
    pub fn recondition(&mut self) -> bool {
        self.symmetrize();
        if self.cholesky().is_some() {
            return false;
        }
        let n = T::from_usize_lossy(self.rows);
        let scale = (self.trace().abs() / n).max(T::min_positive_value().sqrt());
        let mut jitter = scale * T::epsilon().sqrt();
        for _ in 0..60 {
            for i in 0..self.rows {
                let d = self[(i, i)];
                self[(i, i)] = d.max(T::zero()) + jitter;
            }
            if self.cholesky().is_some() {
                return true;
            }
            jitter *= T::lit(10.0);
        }
        true
    }

    /// Solves `A x = b` for symmetric positive definite `A`.
    pub fn solve_spd(&self, b: &[T]) -> Option<Vec<T>> {
        let l = self.cholesky()?;
        let n = self.rows;
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        Some(x)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_and_solve() {
        let mut a = Matrix::<f64>::zeros(3, 3);
        let vals = [[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = vals[i][j];
            }
        }
        let x = a.solve_spd(&[1.0, 2.0, 3.0]).unwrap();
        let back = a.mul_vec(&x);
        for (b, want) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - want).abs() < 1e-12);
        }
    }

    #[test]
    fn recondition_repairs_indefinite() {
        let mut a = Matrix::<f64>::identity(2);
        a[(0, 1)] = 2.0;
        a[(1, 0)] = 2.0;
        assert!(a.cholesky().is_none());
        assert!(a.recondition());
        assert!(a.cholesky().is_some());
    }

    #[test]
    fn sandwich_matches_explicit_product() {
        let mut f = Matrix::<f64>::zeros(2, 2);
        f[(0, 0)] = 0.0;
        f[(0, 1)] = -1.0;
        f[(1, 0)] = 1.0;
        let p = Matrix::from_diagonal(&[2.0, 3.0]);
        let s = f.sandwich(&p);
        assert_eq!(s[(0, 0)], 3.0);
        assert_eq!(s[(1, 1)], 2.0);
        assert_eq!(s[(0, 1)], 0.0);
    }
}
