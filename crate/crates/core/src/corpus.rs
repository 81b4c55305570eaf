//! Seeded random configurations for property runs.
//!
//! Instance `index` of dimension `n` under `seed` is drawn from its own
//! ChaCha stream, so any single instance can be regenerated without the
//! rest of the corpus. Three families alternate by `index % 3`:
//!
//! * isotropic: rows uniform on the sphere;
//! * clustered: rows `d + s g`, a common random direction `d` plus Gaussian
//!   noise with spread `s ~ U(0.05, 1.5)`;
//! * near-orthonormal: a random orthogonal matrix plus noise of size
//!   `s ~ U(0, 0.5)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::Configuration;
use crate::linalg::{dot, normalized, Matrix};
use crate::optimizer::{random_unit, stream_rng};

fn gaussian_rows(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..n).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

pub fn rng_for(seed: u64, n: usize, index: usize) -> ChaCha8Rng {
    stream_rng(seed, ((n as u64) << 32) | index as u64)
}

/// Haar-distributed orthogonal matrix by Gram-Schmidt on Gaussian columns.
pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        if let Some(u) = normalized(&v) {
            basis.push(u);
        }
    }
    Matrix::from_rows(&basis).unwrap()
}

pub fn random_config(n: usize, seed: u64, index: usize) -> Configuration {
    let mut rng = rng_for(seed, n, index);
    loop {
        let rows = match index % 3 {
            0 => (0..n).map(|_| random_unit(&mut rng, n)).collect(),
            1 => {
                let d = random_unit(&mut rng, n);
                let s: f64 = rng.random_range(0.05..1.5);
                gaussian_rows(n, &mut rng)
                    .into_iter()
                    .map(|g| d.iter().zip(&g).map(|(di, gi)| di + s * gi).collect())
                    .collect()
            }
            _ => {
                let q = random_orthogonal(n, &mut rng);
                let s: f64 = rng.random_range(0.0..0.5);
                gaussian_rows(n, &mut rng)
                    .into_iter()
                    .zip(q.rows())
                    .map(|(g, qr)| qr.iter().zip(&g).map(|(qi, gi)| qi + s * gi).collect())
                    .collect()
            }
        };
        if let Ok(c) = Configuration::from_directions(rows) {
            return c;
        }
    }
}

/// `count` instances of dimension `n`.
pub fn corpus(n: usize, count: usize, seed: u64) -> impl Iterator<Item = Configuration> {
    (0..count).map(move |i| random_config(n, seed, i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_distinct() {
        assert_eq!(random_config(4, 1, 7), random_config(4, 1, 7));
        assert_ne!(random_config(4, 1, 7), random_config(4, 1, 8));
        assert_ne!(random_config(4, 1, 7), random_config(4, 2, 7));
    }

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut rng = rng_for(3, 5, 0);
        let q = random_orthogonal(5, &mut rng);
        assert!(q.mul(&q.transpose()).max_abs_diff(&Matrix::identity(5)) < 1e-12);
    }

    #[test]
    fn trace_of_gram_is_n() {
        let c = random_config(4, 9, 0);
        let g = crate::config::gram(&c);
        assert!((g.as_matrix().trace() - 4.0).abs() < 1e-12);
    }
}
