//! Dense linear algebra for small square matrices.
//!
//! Everything here is sized for `n` up to a few dozen: matrices are stored
//! row-major in a flat `Vec<f64>` and the symmetric eigensolver is a cyclic
//! Jacobi iteration, which is slow asymptotically but accurate and fully
//! deterministic.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Sweep cap for the Jacobi eigensolver.
pub const MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius norm, relative to `|A|_F`, at which Jacobi stops.
pub const JACOBI_TOL: f64 = 1e-12;
/// Eigenvalues in `(-PSD_TOL, 0)` are clamped to zero before taking roots.
pub const PSD_TOL: f64 = 1e-10;
/// Relative rank tolerance: `lambda_1 <= RANK_TOL * n * lambda_n` means singular.
pub const RANK_TOL: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Returns `a / |a|`, or `None` for the zero vector.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let len = norm(a);
    if len == 0.0 || !len.is_finite() {
        return None;
    }
    Some(a.iter().map(|x| x / len).collect())
}

/// Square `n x n` matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from `n` rows of length `n`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    row: i,
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1)).take(self.n)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += aik * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, v.len(), "dimension mismatch");
        self.rows().map(|r| dot(r, v)).collect()
    }

    /// `A^T v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, v.len(), "dimension mismatch");
        let mut out = vec![0.0; self.n];
        for (row, &vi) in self.rows().zip(v) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl fmt::Display for Matrix {
    /// Whitespace-separated rows, one per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|x| format!("{x:.17e}")).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Symmetric matrix. Only the upper triangle is ever computed; the lower
/// triangle is a mirror, so `m[(j, k)] == m[(k, j)]` holds bit for bit.
#[derive(Clone, PartialEq)]
pub struct SymmetricMatrix(Matrix);

impl SymmetricMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    /// Takes the upper triangle of `m` and mirrors it.
    pub fn from_upper(m: &Matrix) -> Self {
        Self::from_fn(m.dim(), |i, j| m[(i, j)])
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Matrix::from_rows(rows).map(|m| Self::from_upper(&m))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn diag(&self) -> Vec<f64> {
        self.0.diag()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.0.mul_vec(v)
    }

    /// Congruence `D A D` with `D = diag(d)`.
    pub fn scale_congruent(&self, d: &[f64]) -> Self {
        Self::from_fn(self.dim(), |i, j| d[i] * self[(i, j)] * d[j])
    }
}

impl Index<(usize, usize)> for SymmetricMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl fmt::Debug for SymmetricMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for SymmetricMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// (column `k` of `eigenvectors` belongs to `eigenvalues[k]`).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn rank_tolerance(&self) -> f64 {
        RANK_TOL * self.dim() as f64 * self.max()
    }

    pub fn is_singular(&self) -> bool {
        self.min() <= self.rank_tolerance()
    }

    /// `Q diag(f(lambda)) Q^T`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let q = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        SymmetricMatrix::from_fn(self.dim(), |i, j| {
            (0..fl.len()).map(|k| q[(i, k)] * fl[k] * q[(j, k)]).sum()
        })
    }

    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.map(|l| l)
    }

    /// Principal square root; eigenvalues above `-PSD_TOL` are clamped at zero.
    pub fn sqrt(&self) -> Result<SymmetricMatrix> {
        if self.min() < -PSD_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: self.min(),
            });
        }
        Ok(self.map(|l| l.max(0.0).sqrt()))
    }

    pub fn inv_sqrt(&self) -> Result<SymmetricMatrix> {
        if self.is_singular() {
            return Err(Error::SingularGram {
                min_eigenvalue: self.min(),
                tolerance: self.rank_tolerance(),
            });
        }
        Ok(self.map(|l| 1.0 / l.sqrt()))
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps run until the off-diagonal Frobenius norm drops below
/// `JACOBI_TOL * |A|_F`; the first three sweeps skip rotations whose pivot is
/// small relative to the current off-diagonal mass. Eigenvalues come back in
/// ascending order and each eigenvector has its first nonzero coordinate
/// positive.
pub fn eigen_sym(a: &SymmetricMatrix) -> Result<SpectralDecomposition> {
    let n = a.dim();
    let mut w = a.as_matrix().clone();
    let mut v = Matrix::identity(n);
    let target = JACOBI_TOL * w.frobenius_norm();

    let off_norm = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += m[(p, q)] * m[(p, q)];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&w);
        if off <= target {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        let threshold = if sweeps < 3 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[(p, q)];
                if apq.abs() <= threshold || apq == 0.0 {
                    continue;
                }
                let app = w[(p, p)];
                let aqq = w[(q, q)];
                // negligible against both diagonal entries: drop it
                let g = 100.0 * apq.abs();
                if sweeps > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    w[(p, q)] = 0.0;
                    w[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                w[(p, p)] = app - t * apq;
                w[(q, q)] = aqq + t * apq;
                w[(p, q)] = 0.0;
                w[(q, p)] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = w[(k, p)];
                    let akq = w[(k, q)];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    w[(k, p)] = new_kp;
                    w[(p, k)] = new_kp;
                    w[(k, q)] = new_kq;
                    w[(q, k)] = new_kq;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].total_cmp(&w[(j, j)]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| w[(k, k)]).collect();
    let mut eigenvectors = Matrix::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        let sign = v
            .column(k)
            .into_iter()
            .find(|x| x.abs() > 1e-14)
            .map_or(1.0, f64::signum);
        for i in 0..n {
            eigenvectors[(i, col)] = sign * v[(i, k)];
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

pub fn sym_sqrt(a: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    eigen_sym(a)?.sqrt()
}

/// `A^{-1/2}`; fails with [`Error::SingularGram`] when
/// `lambda_1 <= 1e-10 * n * lambda_n`.
pub fn sym_inv_sqrt(a: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    eigen_sym(a)?.inv_sqrt()
}

/// Euclidean lengths of the columns of `a`.
pub fn column_lengths(a: &SymmetricMatrix) -> Vec<f64> {
    let m = a.as_matrix();
    (0..m.dim()).map(|j| norm(&m.column(j))).collect()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot vanishes.
pub fn solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.dim();
    assert_eq!(n, b.len(), "dimension mismatch");
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.max_abs();
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .unwrap();
        if m[(pivot, col)].abs() <= f64::EPSILON * scale {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            x.swap(col, pivot);
        }
        let d = m[(col, col)];
        for i in col + 1..n {
            let factor = m[(i, col)] / d;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                m[(i, j)] -= factor * m[(col, j)];
            }
            x[i] -= factor * x[col];
        }
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[(i, j)] * x[j]).sum();
        x[i] = (x[i] - s) / m[(i, i)];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
