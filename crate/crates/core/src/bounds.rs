//! Lower bounds on `sup_{|y|=1} prod_j |<x_j, y>|` and the unit vectors
//! that attain them.
//!
//! All five bounds depend on the configuration only through its Gram matrix
//! `G = X X^T`. Three of them come with an explicit witness `y`; these are
//! constructed for the symmetrized matrix `S = G^{1/2}` and then carried back
//! to `X` through the orthogonal polar factor `P` (`X = S P`), so that
//! `prod_j |(X y)_j|` is evaluated on the original rows.
//!
//! Values are computed in the log domain: the bounds are of order
//! `n^{-n/2}` and leave the range of `f64` for a few hundred dimensions.
//!
//! | bound    | value                                   |
//! |----------|-----------------------------------------|
//! | marcus   | `(lambda_1 / n)^{n/2}`                  |
//! | harmonic | `(HM(lambda) / n)^{n/2}`                |
//! | thm1     | `(V_1 ... V_n)^{-1} n^{-n/2}`           |
//! | thm2     | `(n lambda_n)^{-n/2}`                   |
//! | thm3     | `(a_1 ... a_n) n^{-n/2}`                |
//!
//! `lambda` are the Gram eigenvalues, `V_j` the column lengths of `S^{-1}`
//! and `a_j` the diagonal of `S`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bang::{bang_signs, maximize_sign_form, BangInstance, SignVector, EXHAUSTIVE_MAX_N};
use crate::config::{gram, log_product_at, polar_factor, Configuration};
use crate::error::{Error, Result};
use crate::linalg::{column_lengths, eigen_sym, normalized, Matrix, SpectralDecomposition, SymmetricMatrix};
use crate::optimizer::{sup_product_seeded, OptimizerSettings};
use crate::{log_threshold, threshold};

/// Diagonal entries of `S` at or below this make the diagonal bound zero.
pub const DEGENERATE_DIAGONAL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Construction {
    /// Averaging over sign patterns of `S^{-1} c`.
    Thm1Averaging,
    /// `y = S eps / |S eps|` with Bang signs for `G`.
    Thm2Bang,
    /// `y = eps / sqrt(n)` with Bang signs for the diagonally scaled `S`.
    Thm3Bang,
}

impl Construction {
    pub fn label(self) -> &'static str {
        match self {
            Construction::Thm1Averaging => "thm1-averaging",
            Construction::Thm2Bang => "thm2-bang",
            Construction::Thm3Bang => "thm3-bang",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "thm1-averaging" => Some(Construction::Thm1Averaging),
            "thm2-bang" => Some(Construction::Thm2Bang),
            "thm3-bang" => Some(Construction::Thm3Bang),
            _ => None,
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A unit vector together with the product it attains on the original rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub construction: Construction,
    pub y: Vec<f64>,
    pub achieved: f64,
    pub log_achieved: f64,
}

/// How the signs behind a witness were certified.
#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// Signs with `|S^{-1} c(eps)|^2 <= sum_k c_k^2 V_k^2`; `slack` is the
    /// right side minus the left side.
    Averaging { signs: Vec<i8>, slack: f64 },
    Bang(SignVector),
}

impl Certificate {
    pub fn signs(&self) -> &[i8] {
        match self {
            Certificate::Averaging { signs, .. } => signs,
            Certificate::Bang(s) => &s.signs,
        }
    }

    pub fn min_slack(&self) -> f64 {
        match self {
            Certificate::Averaging { slack, .. } => *slack,
            Certificate::Bang(s) => s.min_slack(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremBound {
    pub log_bound: f64,
    pub witness: Witness,
    pub certificate: Certificate,
}

impl TheoremBound {
    pub fn bound(&self) -> f64 {
        self.log_bound.exp()
    }
}

/// Spectral data shared by all bounds of one configuration.
struct Symmetrized<'a> {
    config: &'a Configuration,
    spec: SpectralDecomposition,
    sqrt: SymmetricMatrix,
    polar: Matrix,
}

impl<'a> Symmetrized<'a> {
    fn new(config: &'a Configuration) -> Result<Self> {
        let spec = eigen_sym(&gram(config))?;
        let sqrt = spec.sqrt()?;
        let polar = polar_factor(config, &spec);
        Ok(Self {
            config,
            spec,
            sqrt,
            polar,
        })
    }

    fn n(&self) -> usize {
        self.config.dim()
    }

    /// Normalizes `y_s`, maps it from `S` coordinates to `X` coordinates
    /// and evaluates the product there.
    fn witness(&self, construction: Construction, y_s: &[f64]) -> Result<Witness> {
        let y_s = normalized(y_s).ok_or(Error::NotUnit { norm: 0.0 })?;
        let y = normalized(&self.polar.tr_mul_vec(&y_s)).ok_or(Error::NotUnit { norm: 0.0 })?;
        let log_achieved = log_product_at(self.config, &y)?;
        Ok(Witness {
            construction,
            y,
            achieved: log_achieved.exp(),
            log_achieved,
        })
    }
}

/// `S = (X X^T)^{1/2}`. Its rows are unit vectors and
/// `max_y prod |(S y)_j| = max_y prod |(X y)_j|`.
pub fn symmetrize(config: &Configuration) -> Result<SymmetricMatrix> {
    Ok(Symmetrized::new(config)?.sqrt)
}

/// Natural log of [`marcus_bound`]; `-inf` when `lambda_1 <= 0`.
pub fn log_marcus_bound(spec: &SpectralDecomposition) -> f64 {
    let n = spec.dim() as f64;
    let l1 = spec.min();
    if l1 <= 0.0 {
        return f64::NEG_INFINITY;
    }
    0.5 * n * (l1.ln() - n.ln())
}

/// `(lambda_1 / n)^{n/2}`, zero for a singular Gram matrix.
pub fn marcus_bound(spec: &SpectralDecomposition) -> f64 {
    log_marcus_bound(spec).exp()
}

pub fn log_harmonic_bound(spec: &SpectralDecomposition) -> Result<f64> {
    if spec.is_singular() {
        return Err(Error::SingularGram {
            min_eigenvalue: spec.min(),
            tolerance: spec.rank_tolerance(),
        });
    }
    let n = spec.dim() as f64;
    let inv_sum: f64 = spec.eigenvalues.iter().map(|l| 1.0 / l).sum();
    // (n / sum 1/lambda)^{n/2} * n^{-n/2}
    Ok(-0.5 * n * inv_sum.ln())
}

/// `(n / sum_i 1/lambda_i)^{n/2} n^{-n/2}`.
///
/// This is the column length bound weakened by AM-GM:
/// `1 / (V_1...V_n) >= (n / sum V_k^2)^{n/2}` and `sum V_k^2 = sum 1/lambda_k`.
pub fn harmonic_bound(spec: &SpectralDecomposition) -> Result<f64> {
    log_harmonic_bound(spec).map(f64::exp)
}

pub fn thm1_bound_and_witness(config: &Configuration) -> Result<TheoremBound> {
    thm1(&Symmetrized::new(config)?)
}

fn thm1(sym: &Symmetrized) -> Result<TheoremBound> {
    let n = sym.n();
    let inv_sqrt = sym.spec.inv_sqrt()?;
    let v = column_lengths(&inv_sqrt);
    let c: Vec<f64> = v.iter().map(|x| 1.0 / x).collect();
    // |S^{-1} c(eps)|^2 = eps^T C G^{-1} C eps with C = diag(c)
    let g_inv = sym.spec.map(|l| 1.0 / l);
    let form = g_inv.scale_congruent(&c);
    let budget: f64 = c.iter().zip(&v).map(|(ci, vi)| ci * ci * vi * vi).sum();
    let signs = minimize_averaging_form(&form, budget)?;
    let value = quadratic(&form, &signs);
    let slack = budget - value;
    if slack < -1e-10 * budget {
        return Err(Error::CertificateFailed { worst_slack: slack });
    }
    let c_eps: Vec<f64> = c.iter().zip(&signs).map(|(ci, &s)| ci * f64::from(s)).collect();
    let witness = sym.witness(Construction::Thm1Averaging, &inv_sqrt.mul_vec(&c_eps))?;
    let log_bound = -v.iter().map(|x| x.ln()).sum::<f64>() + log_threshold(n);
    Ok(TheoremBound {
        log_bound,
        witness,
        certificate: Certificate::Averaging { signs, slack },
    })
}

fn quadratic(m: &SymmetricMatrix, signs: &[i8]) -> f64 {
    let e: Vec<f64> = signs.iter().map(|&s| f64::from(s)).collect();
    crate::linalg::dot(&e, &m.mul_vec(&e))
}

/// Signs with `eps^T M eps <= budget`. The average of the form over all
/// sign patterns equals `trace(M) = budget`, so the minimum qualifies.
/// Exhaustive for small `n`; greedy descent plus seeded restarts otherwise.
fn minimize_averaging_form(m: &SymmetricMatrix, budget: f64) -> Result<Vec<i8>> {
    let n = m.dim();
    if n <= EXHAUSTIVE_MAX_N {
        let negated = SymmetricMatrix::from_fn(n, |i, j| -m[(i, j)]);
        return maximize_sign_form(&negated);
    }
    let tol = 1e-10 * budget;
    let mut rng = ChaCha8Rng::seed_from_u64(0x7468_6d31);
    let mut start = vec![1i8; n];
    let mut best: Option<(f64, Vec<i8>)> = None;
    for _ in 0..64 {
        let signs = greedy_descent(m, start);
        let value = quadratic(m, &signs);
        if value <= budget + tol {
            return Ok(signs);
        }
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, signs));
        }
        start = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    }
    let (value, _) = best.expect("at least one restart");
    Err(Error::CertificateFailed {
        worst_slack: budget - value,
    })
}

/// Flip the coordinate with the largest decrease of `eps^T M eps` until no
/// flip decreases it.
fn greedy_descent(m: &SymmetricMatrix, mut signs: Vec<i8>) -> Vec<i8> {
    let n = m.dim();
    loop {
        let e: Vec<f64> = signs.iter().map(|&s| f64::from(s)).collect();
        let u = m.mul_vec(&e);
        // flipping k changes the form by -4 e_k u_k + 4 m_kk
        let (k, delta) = (0..n)
            .map(|k| (k, -4.0 * e[k] * u[k] + 4.0 * m[(k, k)]))
            .fold((0, 0.0), |(bk, bd), (k, d)| if d < bd { (k, d) } else { (bk, bd) });
        if delta >= -1e-14 * m.as_matrix().max_abs() {
            return signs;
        }
        signs[k] = -signs[k];
    }
}

pub fn thm2_bound_and_witness(config: &Configuration) -> Result<TheoremBound> {
    thm2(&Symmetrized::new(config)?)
}

fn thm2(sym: &Symmetrized) -> Result<TheoremBound> {
    let n = sym.n();
    let inst = BangInstance::unweighted(gram(sym.config))?;
    let eps = bang_signs(&inst)?;
    let witness = sym.witness(Construction::Thm2Bang, &sym.sqrt.mul_vec(&eps.as_f64()))?;
    let nf = n as f64;
    let log_bound = -0.5 * nf * (nf * sym.spec.max()).ln();
    Ok(TheoremBound {
        log_bound,
        witness,
        certificate: Certificate::Bang(eps),
    })
}

pub fn thm3_bound_and_witness(config: &Configuration) -> Result<TheoremBound> {
    thm3(&Symmetrized::new(config)?)
}

fn thm3(sym: &Symmetrized) -> Result<TheoremBound> {
    let n = sym.n();
    let a = sym.sqrt.diag();
    if let Some(index) = a.iter().position(|&x| x <= DEGENERATE_DIAGONAL) {
        return Err(Error::DegenerateDiagonal { index, value: a[index] });
    }
    // B = A^{-1/2} S A^{-1/2} has unit diagonal
    let inv_root: Vec<f64> = a.iter().map(|x| 1.0 / x.sqrt()).collect();
    let b = SymmetricMatrix::from_fn(n, |i, j| {
        if i == j {
            1.0
        } else {
            inv_root[i] * sym.sqrt[(i, j)] * inv_root[j]
        }
    });
    let r: Vec<f64> = a.iter().map(|x| x.sqrt()).collect();
    let eps = bang_signs(&BangInstance::new(b, r)?)?;
    let witness = sym.witness(Construction::Thm3Bang, &eps.as_f64())?;
    let log_bound = a.iter().map(|x| x.ln()).sum::<f64>() + log_threshold(n);
    Ok(TheoremBound {
        log_bound,
        witness,
        certificate: Certificate::Bang(eps),
    })
}

/// Every bound for one configuration, plus the spectral data behind them.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    /// Diagonal of `S = G^{1/2}`.
    pub a_diag: Vec<f64>,
    /// Column lengths of `S^{-1}`; absent for a singular Gram matrix.
    pub v_lengths: Option<Vec<f64>>,
    pub log_marcus: f64,
    pub log_harmonic: Option<f64>,
    pub thm1: Option<TheoremBound>,
    pub thm2: Option<TheoremBound>,
    /// Absent when a diagonal entry of `S` is degenerate; the bound is then 0.
    pub thm3: Option<TheoremBound>,
    pub log_threshold: f64,
    pub sup_estimate: Option<f64>,
    /// `(field, reason)` for every absent field.
    pub absent: Vec<(String, String)>,
}

impl BoundReport {
    pub fn marcus(&self) -> f64 {
        self.log_marcus.exp()
    }

    pub fn harmonic(&self) -> Option<f64> {
        self.log_harmonic.map(f64::exp)
    }

    pub fn thm1_value(&self) -> Option<f64> {
        self.thm1.as_ref().map(TheoremBound::bound)
    }

    pub fn thm2_value(&self) -> Option<f64> {
        self.thm2.as_ref().map(TheoremBound::bound)
    }

    /// Zero when the diagonal is degenerate.
    pub fn thm3_value(&self) -> Option<f64> {
        match &self.thm3 {
            Some(t) => Some(t.bound()),
            None if self.is_degenerate_diagonal() => Some(0.0),
            None => None,
        }
    }

    fn is_degenerate_diagonal(&self) -> bool {
        self.a_diag.iter().any(|&x| x <= DEGENERATE_DIAGONAL)
    }

    pub fn threshold(&self) -> f64 {
        self.log_threshold.exp()
    }

    pub fn theorems(&self) -> impl Iterator<Item = &TheoremBound> {
        [&self.thm1, &self.thm2, &self.thm3].into_iter().flatten()
    }

    pub fn witnesses(&self) -> impl Iterator<Item = &Witness> {
        self.theorems().map(|t| &t.witness)
    }

    /// `(name, value)` for every defined bound.
    pub fn defined_bounds(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![("marcus", self.marcus())];
        if let Some(v) = self.harmonic() {
            out.push(("harmonic", v));
        }
        if let Some(v) = self.thm1_value() {
            out.push(("thm1", v));
        }
        if let Some(v) = self.thm2_value() {
            out.push(("thm2", v));
        }
        if let Some(v) = self.thm3_value() {
            out.push(("thm3", v));
        }
        out
    }

    /// The witness-backed bound that is strictly largest, if any is.
    pub fn winner(&self) -> Option<Construction> {
        let mut vals: Vec<(Construction, f64)> = self
            .theorems()
            .map(|t| (t.witness.construction, t.log_bound))
            .collect();
        vals.sort_by(|a, b| b.1.total_cmp(&a.1));
        match vals.as_slice() {
            [(c, _)] => Some(*c),
            [(c, first), (_, second), ..] if first > second => Some(*c),
            _ => None,
        }
    }

    /// Violations of `marcus <= harmonic <= thm1` and `marcus <= thm3`,
    /// compared on the linear scale with absolute slack `tol`.
    pub fn ordering_violations(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |lo_name: &str, lo: Option<f64>, hi_name: &str, hi: Option<f64>| {
            if let (Some(lo), Some(hi)) = (lo, hi) {
                if lo > hi + tol {
                    out.push(format!("{lo_name} = {lo:e} > {hi_name} = {hi:e}"));
                }
            }
        };
        check("marcus", Some(self.marcus()), "harmonic", self.harmonic());
        check("harmonic", self.harmonic(), "thm1", self.thm1_value());
        check("marcus", Some(self.marcus()), "thm1", self.thm1_value());
        check("marcus", Some(self.marcus()), "thm3", self.thm3_value());
        out
    }

    /// Witnesses whose achieved product falls below their bound by more
    /// than `tol`.
    pub fn witness_violations(&self, tol: f64) -> Vec<String> {
        self.theorems()
            .filter(|t| t.witness.achieved < t.bound() - tol)
            .map(|t| {
                format!(
                    "{} witness achieves {:e} < bound {:e}",
                    t.witness.construction,
                    t.witness.achieved,
                    t.bound()
                )
            })
            .collect()
    }
}

/// Computes every bound and witness. A singular Gram matrix leaves the
/// harmonic and first theorem bounds absent; other failures inside a single
/// bound are recorded in `absent` instead of aborting the report. Only a
/// failure of the Gram eigendecomposition itself is returned as an error.
///
/// With `sup` set, the supremum is also estimated; the witnesses seed the
/// multi-start ascent.
pub fn full_report(config: &Configuration, sup: Option<&OptimizerSettings>) -> Result<BoundReport> {
    let n = config.dim();
    let sym = Symmetrized::new(config)?;
    let mut absent = Vec::new();
    let mut note = |field: &str, err: &Error| absent.push((field.to_string(), err.to_string()));

    let log_harmonic = match log_harmonic_bound(&sym.spec) {
        Ok(v) => Some(v),
        Err(e) => {
            note("harmonic", &e);
            None
        }
    };
    let v_lengths = match sym.spec.inv_sqrt() {
        Ok(m) => Some(column_lengths(&m)),
        Err(e) => {
            note("v_lengths", &e);
            None
        }
    };
    let thm1 = thm1(&sym).map_err(|e| note("thm1", &e)).ok();
    let thm2 = thm2(&sym).map_err(|e| note("thm2", &e)).ok();
    let thm3 = thm3(&sym).map_err(|e| note("thm3", &e)).ok();

    let mut report = BoundReport {
        n,
        eigenvalues: sym.spec.eigenvalues.clone(),
        a_diag: sym.sqrt.diag(),
        v_lengths,
        log_marcus: log_marcus_bound(&sym.spec),
        log_harmonic,
        thm1,
        thm2,
        thm3,
        log_threshold: log_threshold(n),
        sup_estimate: None,
        absent,
    };
    debug_assert!((report.threshold() - threshold(n)).abs() <= f64::EPSILON);
    if let Some(settings) = sup {
        let seeds: Vec<Vec<f64>> = report.witnesses().map(|w| w.y.clone()).collect();
        match sup_product_seeded(config, settings, &seeds) {
            Ok(r) => report.sup_estimate = Some(r.best_value),
            Err(e) => report.absent.push(("sup_estimate".into(), e.to_string())),
        }
    }
    Ok(report)
}

/// Witness vectors of the three theorems, in the order thm2, thm3, thm1.
pub(crate) fn witness_seeds(config: &Configuration) -> Vec<Vec<f64>> {
    let Ok(sym) = Symmetrized::new(config) else {
        return Vec::new();
    };
    [thm2(&sym), thm3(&sym), thm1(&sym)]
        .into_iter()
        .flatten()
        .map(|t| t.witness.y)
        .collect()
}
