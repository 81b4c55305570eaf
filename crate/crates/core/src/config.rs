//! Problem instances: `n` unit vectors in `R^n`, stored as the rows of `X`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix, SpectralDecomposition, SymmetricMatrix};

/// Rows further than this from unit length are rejected.
pub const NORMALIZE_TOL: f64 = 1e-6;
/// Tolerance on `|y| = 1` for evaluation points.
pub const UNIT_TOL: f64 = 1e-10;

/// `n` unit vectors in `R^n`, one per row.
///
/// Rows within `1e-6` of unit length are renormalized on construction, so
/// every stored row has norm 1 up to rounding.
#[derive(Clone, PartialEq)]
pub struct Configuration {
    rows: Matrix,
}

impl Configuration {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyConfiguration);
        }
        let mut normalized = Vec::with_capacity(n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    row: i,
                    expected: n,
                    found: row.len(),
                });
            }
            if let Some(col) = row.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { row: i, col });
            }
            let len = norm(&row);
            if (len - 1.0).abs() > NORMALIZE_TOL {
                return Err(Error::NotUnitRow { row: i, norm: len });
            }
            normalized.push(row.iter().map(|x| x / len).collect());
        }
        Ok(Self {
            rows: Matrix::from_rows(&normalized)?,
        })
    }

    /// Normalizes arbitrary nonzero rows. Used by generators, never by
    /// parsers.
    pub fn from_directions(rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            let len = norm(&row);
            if len == 0.0 || !len.is_finite() {
                return Err(Error::NotUnitRow { row: i, norm: len });
            }
            out.push(row.iter().map(|x| x / len).collect());
        }
        Self::new(out)
    }

    pub fn orthonormal(n: usize) -> Self {
        Self {
            rows: Matrix::identity(n),
        }
    }

    /// `x_1 = (1, 0)`, `x_2 = (cos theta, sin theta)`.
    pub fn pair(theta: f64) -> Self {
        Self {
            rows: Matrix::from_rows(&[vec![1.0, 0.0], vec![theta.cos(), theta.sin()]]).unwrap(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.dim()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        self.rows.row(j)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.rows
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows.to_rows()
    }

    /// `X Q`, i.e. every row rotated by the orthogonal matrix `q`.
    pub fn rotated(&self, q: &Matrix) -> Result<Self> {
        Self::from_directions(self.rows.mul(q).to_rows())
    }

    /// Rows reordered so that new row `i` is old row `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let rows: Vec<Vec<f64>> = perm.iter().map(|&j| self.row(j).to_vec()).collect();
        Self {
            rows: Matrix::from_rows(&rows).unwrap(),
        }
    }

    /// Parses the text format: the dimension `n` on the first non-blank
    /// line, then `n` lines of `n` whitespace-separated numbers. Lines
    /// starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (header_line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            column: 1,
            message: "missing dimension line".into(),
        })?;
        let n: usize = header.trim().parse().map_err(|_| Error::Parse {
            line: header_line,
            column: column_of(header, header.trim()),
            message: format!("expected a positive integer dimension, found {:?}", header.trim()),
        })?;
        if n == 0 {
            return Err(Error::Parse {
                line: header_line,
                column: column_of(header, header.trim()),
                message: "dimension must be at least 1".into(),
            });
        }
        let mut rows = Vec::with_capacity(n);
        let mut last_line = header_line;
        for (line_no, line) in lines {
            if rows.len() == n {
                return Err(Error::Parse {
                    line: line_no,
                    column: 1,
                    message: format!("unexpected extra line after {n} rows"),
                });
            }
            last_line = line_no;
            let mut row = Vec::with_capacity(n);
            for tok in line.split_whitespace() {
                let column = column_of(line, tok);
                if row.len() == n {
                    return Err(Error::Parse {
                        line: line_no,
                        column,
                        message: format!("row has more than {n} entries"),
                    });
                }
                let x = f64::from_str(tok).map_err(|_| Error::Parse {
                    line: line_no,
                    column,
                    message: format!("cannot parse {tok:?} as a number"),
                })?;
                if !x.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        column,
                        message: format!("non-finite entry {tok:?}"),
                    });
                }
                row.push(x);
            }
            if row.len() < n {
                return Err(Error::Parse {
                    line: line_no,
                    column: line.len() + 1,
                    message: format!("row has {} entries, expected {n}", row.len()),
                });
            }
            let len = norm(&row);
            if (len - 1.0).abs() > NORMALIZE_TOL {
                return Err(Error::Parse {
                    line: line_no,
                    column: 1,
                    message: format!("row norm {len} is not within 1e-6 of 1"),
                });
            }
            rows.push(row);
        }
        if rows.len() < n {
            return Err(Error::Parse {
                line: last_line + 1,
                column: 1,
                message: format!("expected {n} rows, found {}", rows.len()),
            });
        }
        Self::new(rows)
    }

    pub fn to_text(&self) -> String {
        format!("{}\n{}", self.dim(), self.rows)
    }
}

fn column_of(line: &str, token: &str) -> usize {
    // token is a subslice of line
    let offset = token.as_ptr() as usize - line.as_ptr() as usize;
    line[..offset].chars().count() + 1
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Configuration").field("rows", &self.rows).finish()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Gram matrix `G = X X^T`, entries `<x_j, x_k>`.
pub fn gram(config: &Configuration) -> SymmetricMatrix {
    SymmetricMatrix::from_fn(config.dim(), |j, k| dot(config.row(j), config.row(k)))
}

fn check_unit(y: &[f64]) -> Result<()> {
    let len = norm(y);
    if (len - 1.0).abs() > UNIT_TOL || !len.is_finite() {
        return Err(Error::NotUnit { norm: len });
    }
    Ok(())
}

/// `prod_j |<x_j, y>|` for a unit vector `y`.
pub fn product_at(config: &Configuration, y: &[f64]) -> Result<f64> {
    check_unit(y)?;
    assert_eq!(y.len(), config.dim(), "dimension mismatch");
    Ok(config.matrix().rows().map(|x| dot(x, y).abs()).product())
}

/// `sum_j log |<x_j, y>|`, the log of [`product_at`]; `-inf` at a zero.
pub fn log_product_at(config: &Configuration, y: &[f64]) -> Result<f64> {
    check_unit(y)?;
    assert_eq!(y.len(), config.dim(), "dimension mismatch");
    Ok(config.matrix().rows().map(|x| dot(x, y).abs().ln()).sum())
}

/// Orthogonal `P` with `X = S P`, where `S = (X X^T)^{1/2}` is built from
/// `spec`, the eigendecomposition of `X X^T`.
///
/// With `G = W diag(lambda) W^T`, the right singular vectors of `X` are
/// `X^T w_k / sqrt(lambda_k)` for nonzero `lambda_k`; the remaining ones are
/// completed to an orthonormal basis. `P = W V^T`.
pub fn polar_factor(config: &Configuration, spec: &SpectralDecomposition) -> Matrix {
    let n = config.dim();
    let w = &spec.eigenvectors;
    let tol = spec.rank_tolerance().max(f64::MIN_POSITIVE);
    let mut basis: Vec<Option<Vec<f64>>> = vec![None; n];
    // largest singular values first: they are the most accurate
    for k in (0..n).rev() {
        let lambda = spec.eigenvalues[k];
        if lambda <= tol {
            continue;
        }
        let v = config.matrix().tr_mul_vec(&w.column(k));
        let v: Vec<f64> = v.iter().map(|x| x / lambda.sqrt()).collect();
        basis[k] = orthonormalize_against(&v, basis.iter().flatten());
    }
    for k in 0..n {
        if basis[k].is_some() {
            continue;
        }
        for e in 0..n {
            let mut unit = vec![0.0; n];
            unit[e] = 1.0;
            if let Some(v) = orthonormalize_against(&unit, basis.iter().flatten()) {
                basis[k] = Some(v);
                break;
            }
        }
    }
    let v: Vec<Vec<f64>> = basis.into_iter().map(|b| b.expect("basis completion")).collect();
    // P = W V^T: P[i][j] = sum_k W[i][k] v_k[j]
    Matrix::from_fn(n, |i, j| (0..n).map(|k| w[(i, k)] * v[k][j]).sum())
}

/// Two passes of modified Gram-Schmidt; `None` if `v` is (numerically) in
/// the span of `others`.
fn orthonormalize_against<'a>(v: &[f64], others: impl Iterator<Item = &'a Vec<f64>> + Clone) -> Option<Vec<f64>> {
    let mut u = v.to_vec();
    let start = norm(&u);
    for _ in 0..2 {
        for o in others.clone() {
            let c = dot(&u, o);
            for (ui, oi) in u.iter_mut().zip(o) {
                *ui -= c * oi;
            }
        }
    }
    let len = norm(&u);
    if len <= 1e-8 * start.max(f64::MIN_POSITIVE) {
        return None;
    }
    Some(u.iter().map(|x| x / len).collect())
}
