//! Monte Carlo estimate of `L(n) = E log |<x, e>|` for `x` uniform on the
//! unit sphere of `R^n`. The asymptotic polarization constant of `R^n` is
//! `exp(-L(n))`.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, normalized};

use super::{random_unit, stream_rng};

pub const MIN_SAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LEstimate {
    pub n: usize,
    pub samples: usize,
    pub mean: f64,
    pub stderr: f64,
}

impl LEstimate {
    /// `exp(-L)`.
    pub fn constant(&self) -> f64 {
        (-self.mean).exp()
    }
}

/// Estimate along the first basis vector.
pub fn estimate_l(n: usize, samples: usize, seed: u64) -> Result<LEstimate> {
    let mut e = vec![0.0; n.max(1)];
    e[0] = 1.0;
    estimate_l_along(n, samples, seed, &e)
}

/// Estimate along an arbitrary direction `e` (normalized internally).
pub fn estimate_l_along(n: usize, samples: usize, seed: u64, e: &[f64]) -> Result<LEstimate> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    if e.len() != n {
        return Err(Error::InvalidArgument(format!("direction has {} coordinates, expected {n}", e.len())));
    }
    let e = normalized(e).ok_or(Error::NotUnit { norm: norm(e) })?;
    let mut rng = stream_rng(seed, 0);
    // Welford
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for k in 0..samples {
        let x = random_unit(&mut rng, n);
        let v = dot(&x, &e).abs().ln();
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok(LEstimate {
        n,
        samples,
        mean,
        stderr: (var / samples as f64).sqrt(),
    })
}
