//! Small dense linear algebra for the stacking solvers.
//!
//! Stacking systems are k×k with k the number of base learners, so a
//! row-major matrix and an in-place Cholesky factorization are all we need.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Dense row-major matrix.
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
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                what: "matrix data vs rows*cols".into(),
                left: data.len(),
                right: rows * cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds an n×k matrix from k columns of length n.
    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::LengthMismatch {
                    what: format!("column {j} length"),
                    left: col.len(),
                    right: rows,
                });
            }
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Appends a column, returning its index.
    pub fn push_column(&mut self, col: &[T]) -> Result<usize> {
        if col.len() != self.rows {
            return Err(Error::LengthMismatch {
                what: "appended column length".into(),
                left: col.len(),
                right: self.rows,
            });
        }
        let cols = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * cols);
        for (i, &v) in col.iter().enumerate() {
            data.extend_from_slice(self.row(i));
            data.push(v);
        }
        self.cols = cols;
        self.data = data;
        Ok(cols - 1)
    }

    /// `self * w`.
    pub fn mul_vec(&self, w: &[T]) -> Vec<T> {
        debug_assert_eq!(w.len(), self.cols);
        (0..self.rows)
            .map(|i| crate::scalar::dot(self.row(i), w))
            .collect()
    }

    /// `selfᵀ * v`.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &h) in out.iter_mut().zip(self.row(i)) {
                *o = *o + h * vi;
            }
        }
        out
    }

    /// `selfᵀ * diag(d) * self`; `d = None` means the identity.
    pub fn weighted_gram(&self, d: Option<&[T]>) -> Self {
        let k = self.cols;
        let mut g = Self::zeros(k, k);
        for i in 0..self.rows {
            let r = self.row(i);
            let di = d.map_or(T::one(), |d| d[i]);
            for a in 0..k {
                let ra = r[a] * di;
                if ra == T::zero() {
                    continue;
                }
                for b in a..k {
                    g.data[a * k + b] = g.data[a * k + b] + ra * r[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                g.data[a * k + b] = g.data[b * k + a];
            }
        }
        g
    }

    /// Adds `scale * v vᵀ` in place.
    pub fn add_outer(&mut self, v: &[T], scale: T) {
        let k = self.cols;
        for a in 0..k {
            for b in 0..k {
                self.data[a * k + b] = self.data[a * k + b] + scale * v[a] * v[b];
            }
        }
    }

    pub fn add_diagonal(&mut self, value: T) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] = self[(i, i)] + value;
        }
    }

    pub fn max_abs_diagonal(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |m, i| m.max(self[(i, i)].abs()))
    }

    /// Index of the first non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|p| (p / self.cols, p % self.cols))
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors `a`. Pivots at or below `rel_tol * max|diag|` are treated as a
    /// rank deficiency.
    pub fn new(a: &Matrix<T>, rel_tol: T) -> Result<Self> {
        let n = a.rows();
        if n != a.cols() {
            return Err(Error::InvalidInput("Cholesky needs a square matrix".into()));
        }
        let floor = rel_tol * a.max_abs_diagonal().max(T::min_positive_value());
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for p in 0..j {
                d = d - l[(j, p)] * l[(j, p)];
            }
            if !(d > floor) {
                return Err(Error::Singular(format!(
                    "pivot {j} is {} (floor {})",
                    d.to_f64().unwrap_or(f64::NAN),
                    floor.to_f64().unwrap_or(f64::NAN)
                )));
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for p in 0..j {
                    s = s - l[(i, p)] * l[(j, p)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    /// Factors `a`, retrying once with a diagonal jitter of `jitter * max|diag|`.
    pub fn with_jitter(a: &Matrix<T>, jitter: T) -> Result<Self> {
        let tol = T::epsilon() * lit(16.0);
        match Self::new(a, tol) {
            Ok(c) => Ok(c),
            Err(_) => {
                let mut b = a.clone();
                b.add_diagonal(jitter * a.max_abs_diagonal().max(T::one()));
                Self::new(&b, tol)
            }
        }
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut z = rhs.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for p in 0..i {
                s = s - self.l[(i, p)] * z[p];
            }
            z[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for p in (i + 1)..n {
                s = s - self.l[(p, i)] * z[p];
            }
            z[i] = s / self.l[(i, i)];
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Matrix::from_row_major(3, 3, vec![4.0, 2.0, 0.6, 2.0, 2.0, 0.5, 0.6, 0.5, 3.0])
            .unwrap();
        let x_true = [1.0f64, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let x = Cholesky::new(&a, 1e-14).unwrap().solve(&b);
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_rank_deficient() {
        let a = Matrix::from_row_major(2, 2, vec![1.0f64, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(Cholesky::new(&a, 1e-12), Err(Error::Singular(_))));
    }

    #[test]
    fn gram_matches_explicit_product() {
        let h = Matrix::from_row_major(3, 2, vec![1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let g = h.weighted_gram(None);
        assert_eq!(g.as_slice(), &[35.0, 44.0, 44.0, 56.0]);
        let gw = h.weighted_gram(Some(&[1.0, 0.0, 2.0]));
        assert_eq!(gw.as_slice(), &[51.0, 62.0, 62.0, 76.0]);
    }

    #[test]
    fn push_column_and_select_rows() {
        let mut h = Matrix::from_columns(&[vec![1.0f64, 2.0, 3.0]]).unwrap();
        assert_eq!(h.push_column(&[7.0, 8.0, 9.0]).unwrap(), 1);
        let s = h.select_rows(&[2, 0]);
        assert_eq!(s.as_slice(), &[3.0, 9.0, 1.0, 7.0]);
        assert_eq!(h.tr_mul_vec(&[1.0, 1.0, 1.0]), vec![6.0, 24.0]);
    }
}
