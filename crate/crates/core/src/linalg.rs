//! Dense matrices, sample covariance and the symmetric eigensolver used by PCA.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Result, WdneError};

/// Maximum number of cyclic Jacobi sweeps before giving up.
pub const MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius norm, relative to `‖S‖_F`, at which Jacobi stops.
pub const CONVERGENCE_TOL: f64 = 1e-12;
/// Eigenvalues smaller than this fraction of the largest magnitude are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Matrix::zeros(order, order);
        for i in 0..order {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(WdneError::Shape {
                context: "Matrix::from_vec",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from row vectors; all rows must share one length.
    ///
    /// An empty slice yields a `0 × 0` matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(WdneError::Shape {
                    context: "Matrix::from_rows",
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(WdneError::Shape {
                context: "Matrix::matmul",
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Gathers the given rows, in order, into a new matrix.
    pub fn select_rows(&self, ids: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(ids.len() * self.cols);
        for &i in ids {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: ids.len(),
            cols: self.cols,
            data,
        }
    }

    /// Keeps the first `k` columns.
    pub fn leading_columns(&self, k: usize) -> Matrix {
        Matrix::from_fn(self.rows, k.min(self.cols), |i, j| self[(i, j)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square matrix whose entries are exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    inner: Matrix,
}

impl SymMatrix {
    /// Builds the matrix from its upper triangle; `f(i, j)` is called for `i <= j`.
    pub fn from_upper(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if order == 0 {
            return Err(WdneError::Precondition("symmetric matrix order must be >= 1".into()));
        }
        let mut m = Matrix::zeros(order, order);
        for i in 0..order {
            for j in i..order {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(SymMatrix { inner: m })
    }

    /// Accepts a square matrix only if it is exactly symmetric.
    pub fn try_from_matrix(m: Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(WdneError::Shape {
                context: "SymMatrix::try_from_matrix",
                expected: m.rows(),
                got: m.cols(),
            });
        }
        if m.rows() == 0 {
            return Err(WdneError::Precondition("symmetric matrix order must be >= 1".into()));
        }
        for i in 0..m.rows() {
            for j in (i + 1)..m.cols() {
                if m[(i, j)] != m[(j, i)] {
                    return Err(WdneError::Precondition(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SymMatrix { inner: m })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        SymMatrix::try_from_matrix(Matrix::from_rows(rows)?)
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.inner.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn trace(&self) -> f64 {
        (0..self.order()).map(|i| self.inner[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.inner[idx]
    }
}

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
///
/// Column `j` of `vectors` is the unit eigenvector for `values[j]`, with its
/// largest-magnitude entry made positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenDecomposition {
    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j)
    }

    /// `U · diag(λ) · Uᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let d = self.order();
        Matrix::from_fn(d, d, |i, j| {
            (0..d)
                .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)])
                .sum()
        })
    }
}

/// Column means and the population covariance `(1/n) Σ (xᵢ−μ)(xᵢ−μ)ᵀ`.
pub fn covariance(x: &Matrix) -> Result<(Vec<f64>, SymMatrix)> {
    let (n, d) = (x.rows(), x.cols());
    if n == 0 || d == 0 {
        return Err(WdneError::Precondition(format!(
            "covariance needs at least one row and column, got {n}x{d}"
        )));
    }
    for (i, row) in x.row_iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(WdneError::Data {
                row: i,
                column: j,
                message: format!("non-finite value {}", row[j]),
            });
        }
    }

    let mut mean = vec![0.0; d];
    for row in x.row_iter() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let inv_n = 1.0 / n as f64;
    mean.iter_mut().for_each(|m| *m *= inv_n);

    let mut acc = Matrix::zeros(d, d);
    let mut centered = vec![0.0; d];
    for row in x.row_iter() {
        for ((c, v), m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = v - m;
        }
        for i in 0..d {
            let ci = centered[i];
            for j in i..d {
                acc[(i, j)] += ci * centered[j];
            }
        }
    }
    let cov = SymMatrix::from_upper(d, |i, j| acc[(i, j)] * inv_n)?;
    Ok((mean, cov))
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let d = a.rows();
    let mut sum = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn eigen_sym(s: &SymMatrix) -> Result<EigenDecomposition> {
    let d = s.order();
    if let Some(v) = s.as_matrix().as_slice().iter().find(|v| !v.is_finite()) {
        return Err(WdneError::Precondition(format!(
            "eigen_sym requires finite entries, found {v}"
        )));
    }

    let mut a = s.as_matrix().clone();
    let mut v = Matrix::identity(d);
    let tol = CONVERGENCE_TOL * a.frobenius();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..d.saturating_sub(1) {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;

                for k in 0..d {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..d {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let residual = off_diagonal_norm(&a);
        if residual > tol {
            return Err(WdneError::NoConvergence {
                sweeps: MAX_SWEEPS,
                residual,
            });
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));

    let largest = order.iter().fold(0.0f64, |m, &i| m.max(a[(i, i)].abs()));
    let mut values = Vec::with_capacity(d);
    let mut vectors = Matrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let lambda = a[(src, src)];
        values.push(if lambda.abs() < CLAMP_TOL * largest { 0.0 } else { lambda });

        let mut pivot = 0;
        for k in 1..d {
            if v[(k, src)].abs() > v[(pivot, src)].abs() {
                pivot = k;
            }
        }
        let sign = if v[(pivot, src)] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..d {
            vectors[(k, dst)] = sign * v[(k, src)];
        }
    }

    Ok(EigenDecomposition { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn covariance_of_two_symmetric_points() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let (mean, cov) = covariance(&x).unwrap();
        assert_eq!(mean, vec![0.0, 0.0]);
        assert_eq!(cov, SymMatrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap());
    }

    #[test]
    fn covariance_of_single_row_is_zero() {
        let x = Matrix::from_rows(&[[5.0, 7.0, 9.0]]).unwrap();
        let (mean, cov) = covariance(&x).unwrap();
        assert_eq!(mean, vec![5.0, 7.0, 9.0]);
        assert!(cov.as_matrix().as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(cov.order(), 3);
    }

    #[test]
    fn covariance_of_cross_pattern() {
        // Outer products: (2,0)->[[4,0],[0,0]], (0,2)->[[0,0],[0,4]], twice each; sum/4.
        let x = Matrix::from_rows(&[[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -2.0]]).unwrap();
        let (_, cov) = covariance(&x).unwrap();
        assert_eq!(cov, SymMatrix::from_rows(&[[2.0, 0.0], [0.0, 2.0]]).unwrap());
    }

    #[test]
    fn covariance_rejects_empty_and_non_finite() {
        let empty = Matrix::zeros(0, 3);
        assert!(matches!(covariance(&empty), Err(WdneError::Precondition(_))));

        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, f64::NAN]]).unwrap();
        match covariance(&x) {
            Err(WdneError::Data { row, column, .. }) => assert_eq!((row, column), (1, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sym_matrix_rejects_asymmetry() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [2.000001, 1.0]]).unwrap();
        assert!(SymMatrix::try_from_matrix(m).is_err());
        assert!(SymMatrix::from_upper(0, |_, _| 0.0).is_err());
    }

    #[test]
    fn eigen_of_diagonal() {
        let s = SymMatrix::from_rows(&[[2.0, 0.0], [0.0, 1.0]]).unwrap();
        let e = eigen_sym(&s).unwrap();
        assert_eq!(e.values, vec![2.0, 1.0]);
        assert_eq!(e.vectors, Matrix::identity(2));
    }

    #[test]
    fn eigen_of_diagonal_sorts_descending() {
        let s = SymMatrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        let e = eigen_sym(&s).unwrap();
        assert_eq!(e.values, vec![2.0, 1.0]);
        assert_eq!(e.vector(0), vec![0.0, 1.0]);
    }

    #[test]
    fn eigen_of_2x2_coupled() {
        let s = SymMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = eigen_sym(&s).unwrap();
        assert_close(e.values[0], 3.0, 1e-12);
        assert_close(e.values[1], 1.0, 1e-12);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let u0 = e.vector(0);
        let u1 = e.vector(1);
        assert_close(u0[0], r, 1e-12);
        assert_close(u0[1], r, 1e-12);
        // (1,-1)/√2 up to sign; canonical form makes the first (tied) max entry positive.
        assert_close(u1[0].abs(), r, 1e-12);
        assert_close(u1[0], -u1[1], 1e-12);
    }

    #[test]
    fn eigen_of_swap_matrix() {
        let s = SymMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let e = eigen_sym(&s).unwrap();
        assert_close(e.values[0], 1.0, 1e-12);
        assert_close(e.values[1], -1.0, 1e-12);
    }

    #[test]
    fn eigen_of_zero_matrix() {
        let s = SymMatrix::from_upper(3, |_, _| 0.0).unwrap();
        let e = eigen_sym(&s).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
        assert_eq!(e.vectors, Matrix::identity(3));
    }

    #[test]
    fn eigen_clamps_rounding_noise() {
        // Rank-one PSD matrix: the two null eigenvalues come out as exact zeros.
        let v = [0.3, -1.2, 2.5];
        let s = SymMatrix::from_upper(3, |i, j| v[i] * v[j]).unwrap();
        let e = eigen_sym(&s).unwrap();
        assert_close(e.values[0], v.iter().map(|x| x * x).sum(), 1e-12);
        assert_eq!(&e.values[1..], &[0.0, 0.0]);
    }

    #[test]
    fn eigen_rejects_non_finite() {
        let s = SymMatrix::from_upper(2, |i, j| if i == j { f64::INFINITY } else { 0.0 }).unwrap();
        assert!(eigen_sym(&s).is_err());
    }

    fn sym_strategy() -> impl Strategy<Value = SymMatrix> {
        (1usize..=8).prop_flat_map(|d| {
            proptest::collection::vec(-10.0f64..10.0, d * d).prop_map(move |vals| {
                SymMatrix::from_upper(d, |i, j| vals[i * d + j]).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn eigen_reconstructs_and_is_orthonormal(s in sym_strategy()) {
            let e = eigen_sym(&s).unwrap();
            let d = s.order();
            let scale = 1.0 + s.as_matrix().max_abs();
            let r = e.reconstruct();
            for i in 0..d {
                for j in 0..d {
                    prop_assert!((r[(i, j)] - s[(i, j)]).abs() <= 1e-8 * scale);
                    let dot: f64 = (0..d).map(|k| e.vectors[(k, i)] * e.vectors[(k, j)]).sum();
                    let delta = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((dot - delta).abs() <= 1e-8);
                }
            }
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            let sum: f64 = e.values.iter().sum();
            prop_assert!((sum - s.trace()).abs() <= 1e-8 * (1.0 + s.trace().abs()).max(scale));
        }

        #[test]
        fn covariance_is_psd(rows in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 4), 1..30)) {
            let x = Matrix::from_rows(&rows).unwrap();
            let (_, cov) = covariance(&x).unwrap();
            let e = eigen_sym(&cov).unwrap();
            prop_assert!(e.values.iter().all(|&l| l >= -1e-10));
        }

        #[test]
        fn covariance_is_translation_invariant(
            rows in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 2..20),
            shift in proptest::collection::vec(-100.0f64..100.0, 3),
        ) {
            let x = Matrix::from_rows(&rows).unwrap();
            let shifted: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.iter().zip(&shift).map(|(a, b)| a + b).collect())
                .collect();
            let (_, c0) = covariance(&x).unwrap();
            let (_, c1) = covariance(&Matrix::from_rows(&shifted).unwrap()).unwrap();
            for (a, b) in c0.as_matrix().as_slice().iter().zip(c1.as_matrix().as_slice()) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }
    }
}
