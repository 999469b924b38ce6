//! Small dense vectors and matrices.
//!
//! Everything in the crate works at desk scale (dimensions below ten), so
//! vectors are plain `Vec<f64>` slices and `Mat` is a row-major dense matrix.
//! Spectral quantities are delegated to nalgebra.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], t: f64) -> Vec<f64> {
    a.iter().map(|x| t * x).collect()
}

/// `a + t * b` in one pass.
pub fn axpy(a: &[f64], t: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * y).collect()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self^T * v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j] += self.get(i, j) * v[i];
            }
        }
        out
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &Mat) -> Result<Mat> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(
                "hcat requires equal row counts".into(),
            ));
        }
        let mut rows = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut row = self.row(i).to_vec();
            row.extend_from_slice(other.row(i));
            rows.push(row);
        }
        Mat::from_rows(rows)
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.rows, self.cols, self.data.iter().copied())
    }

    /// Smallest singular value, computed as the square root of the smallest
    /// eigenvalue of the Gram matrix `self * self^T`. Rank deficiency and the
    /// wide/tall distinction are handled by the Gram construction itself: when
    /// `rows > cols` the Gram matrix is singular and the result is zero.
    pub fn min_singular_value(&self) -> f64 {
        let a = self.to_dmatrix();
        let gram = &a * a.transpose();
        let eig = gram.symmetric_eigen();
        let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        min.max(0.0).sqrt()
    }

    /// Smallest eigenvalue of a symmetric matrix. The caller is responsible
    /// for symmetry; the decomposition reads only the symmetric part.
    pub fn min_symmetric_eigenvalue(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        if self.rows == 0 {
            return 0.0;
        }
        let a = self.to_dmatrix();
        let sym = (&a + a.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        eig.eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Largest singular value (operator norm).
    pub fn op_norm(&self) -> f64 {
        let a = self.to_dmatrix();
        let gram = &a * a.transpose();
        let eig = gram.symmetric_eigen();
        let max = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
        max.max(0.0).sqrt()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Mat {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Mat::from_rows(rows)
    }
}

impl From<Mat> for Vec<Vec<f64>> {
    fn from(m: Mat) -> Self {
        m.to_rows()
    }
}

/// Solves the square system `a · x = b` by Gaussian elimination with partial
/// pivoting; `None` when the matrix is singular at the given tolerance.
pub fn solve_square(a: &[Vec<f64>], b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return None;
    }
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(*rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() <= tol {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..=n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Orthonormal basis of the null space `{x : rows * x = 0}`, where `rows` are
/// stacked as the rows of a matrix over `dim` columns. Singular directions are
/// kept when their singular value is at most `tol`.
pub fn null_space(rows: &[Vec<f64>], dim: usize, tol: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
    }
    // Pad with zero rows so the thin SVD still returns a full basis of right
    // singular vectors when the system is underdetermined.
    let padded = rows.len().max(dim);
    let mut flat: Vec<f64> = rows.iter().flatten().copied().collect();
    flat.resize(padded * dim, 0.0);
    let a = DMatrix::from_row_iterator(padded, dim, flat);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("svd requested v_t");
    let mut basis = Vec::new();
    for k in 0..dim {
        let sigma = if k < svd.singular_values.len() {
            svd.singular_values[k]
        } else {
            0.0
        };
        if sigma <= tol {
            basis.push(vt.row(k).iter().copied().collect());
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mat_vec_products() {
        let m = Mat::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![3.0, 7.0, 11.0]);
        assert_eq!(m.tr_mul_vec(&[1.0, 0.0, 1.0]), vec![6.0, 8.0]);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Mat::from_rows(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn singular_values_of_diagonal() {
        let m = Mat::from_rows(vec![vec![3.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert!((m.min_singular_value() - 3.0).abs() < 1e-12);
        assert!((m.op_norm() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn wide_matrix_min_singular_value() {
        // One row, two columns: the Gram matrix is 1x1 with entry 2.
        let m = Mat::from_rows(vec![vec![-1.0, 1.0]]).unwrap();
        assert!((m.min_singular_value() - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn tall_matrix_min_singular_value_is_zero() {
        // More rows than columns: the transpose cannot cover, bound is zero.
        let m = Mat::from_rows(vec![vec![1.0], vec![1.0]]).unwrap();
        assert!(m.min_singular_value().abs() < 1e-12);
    }

    #[test]
    fn null_space_of_single_row() {
        let basis = null_space(&[vec![1.0, 1.0]], 2, 1e-10);
        assert_eq!(basis.len(), 1);
        let v = &basis[0];
        assert!(dot(v, &[1.0, 1.0]).abs() < 1e-10);
        assert!((norm2(v) - 1.0).abs() < 1e-10);
    }
}
