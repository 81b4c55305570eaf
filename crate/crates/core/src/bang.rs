//! Sign vectors for Bang's lemma.
//!
//! For a unit-diagonal Gram matrix `H` and positive weights `r`, there are
//! signs `eps` with
//!
//! ```text
//! eps_j r_j sum_k h_jk r_k eps_k >= r_j^2    for every j.
//! ```
//!
//! Any maximizer of the quadratic form `Q(eps) = sum_jk eps_j r_j h_jk r_k eps_k`
//! satisfies this: flipping `eps_j` changes `Q` by `-4 * slack_j`, where
//! `slack_j` is the left side minus the right side. Small instances are
//! searched exhaustively for the global maximizer; larger ones run a flip
//! local search that only ever increases `Q`.

use crate::error::{Error, Result};
use crate::linalg::{eigen_sym, SymmetricMatrix};

/// Largest `n` searched exhaustively (`2^(n-1)` candidates).
pub const EXHAUSTIVE_MAX_N: usize = 20;
/// Slack below which a certificate is rejected.
pub const CERTIFICATE_TOL: f64 = 1e-10;
const DIAGONAL_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-9;

/// A validated lemma instance: unit-diagonal PSD `h` and positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct BangInstance {
    h: SymmetricMatrix,
    r: Vec<f64>,
}

impl BangInstance {
    pub fn new(h: SymmetricMatrix, r: Vec<f64>) -> Result<Self> {
        let n = h.dim();
        if n == 0 {
            return Err(Error::InvalidBangInstance("empty matrix".into()));
        }
        if r.len() != n {
            return Err(Error::InvalidBangInstance(format!(
                "{} weights for a {n}x{n} matrix",
                r.len()
            )));
        }
        if let Some(j) = r.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidBangInstance(format!("weight {j} is {} (must be positive)", r[j])));
        }
        if let Some(j) = (0..n).find(|&j| (h[(j, j)] - 1.0).abs() > DIAGONAL_TOL) {
            return Err(Error::InvalidBangInstance(format!(
                "diagonal entry {j} is {} (must be 1)",
                h[(j, j)]
            )));
        }
        let spec = eigen_sym(&h)?;
        if spec.min() < -PSD_TOL * spec.max().max(1.0) {
            return Err(Error::InvalidBangInstance(format!(
                "matrix is not positive semidefinite (smallest eigenvalue {:e})",
                spec.min()
            )));
        }
        Ok(Self { h, r })
    }

    /// Unit weights.
    pub fn unweighted(h: SymmetricMatrix) -> Result<Self> {
        let n = h.dim();
        Self::new(h, vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    pub fn h(&self) -> &SymmetricMatrix {
        &self.h
    }

    pub fn weights(&self) -> &[f64] {
        &self.r
    }

    /// `M = diag(r) H diag(r)`; then `Q(eps) = eps^T M eps`.
    fn weighted(&self) -> SymmetricMatrix {
        self.h.scale_congruent(&self.r)
    }

    /// `Q(eps)`.
    pub fn quadratic_form(&self, signs: &[i8]) -> f64 {
        let m = self.weighted();
        let n = self.dim();
        let mut q = 0.0;
        for j in 0..n {
            for k in 0..n {
                q += f64::from(signs[j]) * m[(j, k)] * f64::from(signs[k]);
            }
        }
        q
    }
}

/// Signs together with the per-row residual of the lemma's inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct SignVector {
    pub signs: Vec<i8>,
    pub slack: Vec<f64>,
}

impl SignVector {
    pub fn as_f64(&self) -> Vec<f64> {
        self.signs.iter().map(|&s| f64::from(s)).collect()
    }

    pub fn min_slack(&self) -> f64 {
        self.slack.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_certificate(&self) -> bool {
        self.min_slack() >= -CERTIFICATE_TOL
    }
}

/// Signs satisfying the lemma. Exhaustive (global maximizer of `Q`,
/// lexicographically first with `+1` before `-1`) up to
/// [`EXHAUSTIVE_MAX_N`], flip local search beyond.
pub fn bang_signs(inst: &BangInstance) -> Result<SignVector> {
    if inst.dim() <= EXHAUSTIVE_MAX_N {
        bang_signs_exhaustive(inst)
    } else {
        bang_signs_local(inst)
    }
}

/// `eps_j r_j sum_k h_jk r_k eps_k - r_j^2` for each `j`.
pub fn verify_bang(inst: &BangInstance, signs: &[i8]) -> Vec<f64> {
    let n = inst.dim();
    assert_eq!(signs.len(), n, "dimension mismatch");
    let (h, r) = (&inst.h, &inst.r);
    (0..n)
        .map(|j| {
            let row: f64 = (0..n).map(|k| h[(j, k)] * r[k] * f64::from(signs[k])).sum();
            f64::from(signs[j]) * r[j] * row - r[j] * r[j]
        })
        .collect()
}

fn certified(inst: &BangInstance, signs: Vec<i8>) -> Result<SignVector> {
    let slack = verify_bang(inst, &signs);
    let out = SignVector { signs, slack };
    if !out.is_certificate() {
        return Err(Error::CertificateFailed {
            worst_slack: out.min_slack(),
        });
    }
    Ok(out)
}

/// Global maximizer of `Q` by exhaustive enumeration.
pub fn bang_signs_exhaustive(inst: &BangInstance) -> Result<SignVector> {
    let signs = maximize_sign_form(&inst.weighted())?;
    certified(inst, signs)
}

/// `argmax eps^T M eps` over `eps in {-1, +1}^n` by Gray-code enumeration
/// with `eps_0 = +1` (the form is even, so this loses nothing). Ties, up to
/// rounding, go to the lexicographically smallest sign vector with `+1`
/// ordered before `-1`.
pub fn maximize_sign_form(m: &SymmetricMatrix) -> Result<Vec<i8>> {
    let n = m.dim();
    if n == 0 || n > 63 {
        return Err(Error::InvalidArgument(format!("exhaustive sign search needs 1 <= n <= 63, got {n}")));
    }
    let mut eps = vec![1i8; n];
    let mut u: Vec<f64> = (0..n).map(|j| (0..n).map(|k| m[(j, k)]).sum()).collect();
    let mut q: f64 = u.iter().sum();
    let scale = m.as_matrix().as_slice().iter().map(|x| x.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let tie_tol = 1e-12 * scale;

    // bit b of the code is coordinate n-1-b, so integer order is
    // lexicographic order on (eps_1, ..., eps_{n-1}) with +1 < -1
    let mut best_q = q;
    let mut best_code: u64 = 0;
    let mut code: u64 = 0;
    let total: u64 = 1u64 << (n - 1);
    for i in 1..total {
        let bit = i.trailing_zeros() as usize;
        let k = n - 1 - bit;
        code ^= 1u64 << bit;
        let ek = f64::from(eps[k]);
        q += -4.0 * ek * u[k] + 4.0 * m[(k, k)];
        for (j, uj) in u.iter_mut().enumerate() {
            *uj -= 2.0 * ek * m[(j, k)];
        }
        eps[k] = -eps[k];
        if q > best_q + tie_tol || ((q - best_q).abs() <= tie_tol && code < best_code) {
            best_q = q.max(best_q);
            best_code = code;
        }
    }
    Ok((0..n)
        .map(|k| {
            if k == 0 || best_code & (1u64 << (n - 1 - k)) == 0 {
                1
            } else {
                -1
            }
        })
        .collect())
}

/// Flip local search from `eps = (+1, ..., +1)`: repeatedly flip the
/// coordinate with the most negative slack (lowest index on ties). Each
/// flip raises `Q` by `-4 * slack`, so the search terminates.
pub fn bang_signs_local(inst: &BangInstance) -> Result<SignVector> {
    let n = inst.dim();
    let mut signs = vec![1i8; n];
    let scale: f64 = inst.r.iter().map(|x| x * x).sum();
    let flip_tol = 1e-13 * scale;
    let max_flips = if n < 40 { 1usize << n } else { usize::MAX };
    let mut flips = 0usize;
    loop {
        let slack = verify_bang(inst, &signs);
        let (j, worst) = slack
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |(bj, bs), (j, s)| if s < bs { (j, s) } else { (bj, bs) });
        if worst >= -flip_tol {
            return certified(inst, signs);
        }
        if flips == max_flips {
            return Err(Error::CertificateFailed { worst_slack: worst });
        }
        signs[j] = -signs[j];
        flips += 1;
    }
}
