//! Brute-force maximization over an angular grid, used as an independent
//! check on the ascent in two and three dimensions.

use std::f64::consts::PI;

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::linalg::dot;

pub const DEFAULT_GRID_N2: usize = 2000;
pub const DEFAULT_GRID_N3: usize = 600;

fn product(config: &Configuration, y: &[f64]) -> f64 {
    config.matrix().rows().map(|x| dot(x, y).abs()).product()
}

/// Maximum of the product over a grid of unit vectors. `y` and `-y` give
/// the same product, so only half of each great circle is sampled.
///
/// * `n = 2`: `y = (cos a, sin a)`, `a = k pi / resolution`, `k < resolution`.
/// * `n = 3`: polar angle `t = i pi / resolution` (`i <= resolution`) and
///   azimuth `f = k pi / resolution` (`k < resolution`).
///
/// `resolution` defaults to 2000 for `n = 2` and 600 for `n = 3`.
pub fn grid_oracle(config: &Configuration, resolution: Option<usize>) -> Result<f64> {
    match config.dim() {
        2 => {
            let res = resolution.unwrap_or(DEFAULT_GRID_N2).max(1);
            Ok((0..res)
                .map(|k| {
                    let a = k as f64 * PI / res as f64;
                    product(config, &[a.cos(), a.sin()])
                })
                .fold(0.0, f64::max))
        }
        3 => {
            let res = resolution.unwrap_or(DEFAULT_GRID_N3).max(1);
            let mut best = 0.0f64;
            for i in 0..=res {
                let t = i as f64 * PI / res as f64;
                let (st, ct) = t.sin_cos();
                for k in 0..res {
                    let f = k as f64 * PI / res as f64;
                    let (sf, cf) = f.sin_cos();
                    best = best.max(product(config, &[st * cf, st * sf, ct]));
                }
            }
            Ok(best)
        }
        n => Err(Error::UnsupportedDimension(n)),
    }
}
