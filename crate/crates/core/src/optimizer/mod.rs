//! Numerical estimation of `sup_{|y|=1} prod_j |<x_j, y>|`.
//!
//! The objective is maximized in the log domain,
//! `g(y) = sum_j log |<x_j, y>|`, by multi-start ascent on the sphere.
//! Its Euclidean gradient is `sum_j x_j / <x_j, y>` and `<y, grad g> = n`
//! identically, so the Riemannian Hessian
//!
//! ```text
//! P (-sum_j x_j x_j^T / <x_j, y>^2) P - n P,     P = I - y y^T
//! ```
//!
//! is negative definite on the tangent space everywhere off the zero set.
//! Each sign region of `X y` therefore holds exactly one local maximum, and
//! the Newton direction is always an ascent direction.

mod grid;
mod lconst;
mod search;

pub use grid::{grid_oracle, DEFAULT_GRID_N2, DEFAULT_GRID_N3};
pub use lconst::{estimate_l, estimate_l_along, LEstimate, MIN_SAMPLES};
pub use search::{conjecture_search, conjecture_search_with, SearchResult, SearchSettings, TracePoint};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{product_at, Configuration};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, normalized, solve, Matrix};

/// Starts with `min_j |<x_j, y>|` below this are perturbed before ascent.
pub const DEGENERATE_START: f64 = 1e-9;
const PERTURB_SCALE: f64 = 1e-6;
const PERTURB_ATTEMPTS: usize = 10;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
/// Relative tangential gradient norm treated as a critical point.
pub const CRITICAL_TOL: f64 = 1e-8;
/// Stream offset separating perturbation noise from start sampling.
const PERTURB_STREAM: u64 = 1 << 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AscentDirection {
    /// Projected gradient.
    Gradient,
    /// Riemannian Newton step, falling back to the projected gradient when
    /// the bordered Newton system cannot be solved.
    Newton,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerSettings {
    /// Random restarts; `None` means `32 n`.
    pub restarts: Option<usize>,
    pub max_iterations: usize,
    /// Iteration stops once a step moves `y` by less than this.
    pub step_tolerance: f64,
    pub seed: u64,
    pub direction: AscentDirection,
    /// Seed one start inside every sign region of `X y` when `n` is at most
    /// this (and `X` is invertible): `y = X^{-1} sigma / |X^{-1} sigma|`.
    pub orthant_starts_max_n: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            restarts: None,
            max_iterations: 500,
            step_tolerance: 1e-12,
            seed: 0,
            direction: AscentDirection::Newton,
            orthant_starts_max_n: 10,
        }
    }
}

impl OptimizerSettings {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn random_restarts(&self, n: usize) -> usize {
        self.restarts.unwrap_or(32 * n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerResult {
    pub best_y: Vec<f64>,
    pub best_value: f64,
    pub log_best_value: f64,
    /// Starts that were actually ascended (degenerate ones excluded).
    pub restarts_used: usize,
    /// Whether the winning restart met the stopping criterion.
    pub converged: bool,
    /// Final product of every start in order; `0` for skipped starts.
    pub per_restart_values: Vec<f64>,
}

/// One ascent run from a single start.
#[derive(Clone, Debug, PartialEq)]
pub struct Ascent {
    pub y: Vec<f64>,
    pub log_value: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `g` at every accepted iterate, starting point included.
    pub history: Vec<f64>,
}

/// `sum_j log |<x_j, y>|` without the unit-norm check.
pub fn log_objective(config: &Configuration, y: &[f64]) -> f64 {
    config.matrix().rows().map(|x| dot(x, y).abs().ln()).sum()
}

/// Euclidean gradient `sum_j x_j / <x_j, y>` of [`log_objective`].
pub fn log_gradient(config: &Configuration, y: &[f64]) -> Vec<f64> {
    let n = config.dim();
    let mut grad = vec![0.0; n];
    for x in config.matrix().rows() {
        let p = dot(x, y);
        for (g, xi) in grad.iter_mut().zip(x) {
            *g += xi / p;
        }
    }
    grad
}

fn tangent(y: &[f64], v: &[f64]) -> Vec<f64> {
    let c = dot(y, v);
    v.iter().zip(y).map(|(vi, yi)| vi - c * yi).collect()
}

fn min_abs_inner(config: &Configuration, y: &[f64]) -> f64 {
    config
        .matrix()
        .rows()
        .map(|x| dot(x, y).abs())
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        if let Some(u) = normalized(&g) {
            return u;
        }
    }
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Moves `y` off the zero set of the product with small tangential noise.
fn nondegenerate_start(config: &Configuration, y: Vec<f64>, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    if min_abs_inner(config, &y) >= DEGENERATE_START {
        return Some(y);
    }
    let n = y.len();
    for _ in 0..PERTURB_ATTEMPTS {
        let noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let t = tangent(&y, &noise);
        let cand: Vec<f64> = y.iter().zip(&t).map(|(a, b)| a + PERTURB_SCALE * b).collect();
        if let Some(c) = normalized(&cand) {
            if min_abs_inner(config, &c) >= DEGENERATE_START {
                return Some(c);
            }
        }
    }
    None
}

/// Newton direction from the bordered system
/// `[[M, y], [y^T, 0]] [d; mu] = [-rgrad; 0]`, `M = -sum x x^T / p^2 - n I`.
fn newton_direction(config: &Configuration, y: &[f64], rgrad: &[f64]) -> Option<Vec<f64>> {
    let n = y.len();
    let mut m = Matrix::zeros(n + 1);
    for x in config.matrix().rows() {
        let p = dot(x, y);
        let w = 1.0 / (p * p);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] -= w * x[i] * x[j];
            }
        }
    }
    for i in 0..n {
        m[(i, i)] -= n as f64;
        m[(i, n)] = y[i];
        m[(n, i)] = y[i];
    }
    let mut rhs: Vec<f64> = rgrad.iter().map(|g| -g).collect();
    rhs.push(0.0);
    let sol = solve(&m, &rhs)?;
    let d = tangent(y, &sol[..n]);
    (dot(&d, rgrad) > 0.0).then_some(d)
}

/// Ascends `g` on the sphere from `y0` with backtracking (initial step 1,
/// halving, Armijo constant `1e-4`, at most 60 halvings).
pub fn ascend(config: &Configuration, y0: &[f64], settings: &OptimizerSettings) -> Ascent {
    let mut y = normalized(y0).expect("nonzero start");
    let mut value = log_objective(config, &y);
    let mut history = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < settings.max_iterations {
        let grad = log_gradient(config, &y);
        let rgrad = tangent(&y, &grad);
        let gnorm = norm(&rgrad);
        if gnorm <= CRITICAL_TOL * norm(&grad) {
            converged = true;
            break;
        }
        let dir = match settings.direction {
            AscentDirection::Newton => newton_direction(config, &y, &rgrad).unwrap_or_else(|| rgrad.clone()),
            AscentDirection::Gradient => rgrad.clone(),
        };
        let slope = dot(&dir, &rgrad);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = y.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            if let Some(c) = normalized(&cand) {
                let v = log_objective(config, &c);
                if v.is_finite() && v >= value + ARMIJO * step * slope {
                    accepted = Some((c, v));
                    break;
                }
            }
            step *= 0.5;
        }
        iterations += 1;
        let Some((next, next_value)) = accepted else {
            // no admissible step left at working precision
            converged = gnorm <= 1e-6 * norm(&grad);
            break;
        };
        let moved = norm(&next.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        y = next;
        value = next_value;
        history.push(value);
        if moved < settings.step_tolerance {
            converged = true;
            break;
        }
    }
    Ascent {
        y,
        log_value: value,
        converged,
        iterations,
        history,
    }
}

/// `sup_{|y|=1} prod_j |<x_j, y>|` by multi-start ascent, seeded with the
/// witness vectors of the bound constructions.
pub fn sup_product(config: &Configuration, settings: &OptimizerSettings) -> Result<OptimizerResult> {
    let seeds = crate::bounds::witness_seeds(config);
    sup_product_seeded(config, settings, &seeds)
}

/// Starting points of [`sup_product_seeded`], in restart order: `seeds`,
/// one point per sign region (small `n` only), then uniform random points.
pub fn starting_points(config: &Configuration, settings: &OptimizerSettings, seeds: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = config.dim();
    let mut starts: Vec<Vec<f64>> = seeds.iter().filter_map(|s| normalized(s)).collect();
    if n <= settings.orthant_starts_max_n && n < 64 {
        let total = 1u64 << (n - 1);
        for code in 0..total {
            let sigma: Vec<f64> = (0..n)
                .map(|k| if k > 0 && code & (1 << (k - 1)) != 0 { -1.0 } else { 1.0 })
                .collect();
            match solve(config.matrix(), &sigma).and_then(|y| normalized(&y)) {
                Some(y) => starts.push(y),
                // singular X: sign regions are not all reachable
                None => break,
            }
        }
    }
    for k in 0..settings.random_restarts(n) {
        let mut rng = stream_rng(settings.seed, k as u64);
        starts.push(random_unit(&mut rng, n));
    }
    starts
}

pub fn sup_product_seeded(
    config: &Configuration,
    settings: &OptimizerSettings,
    seeds: &[Vec<f64>],
) -> Result<OptimizerResult> {
    let starts = starting_points(config, settings, seeds);
    let mut per_restart_values = Vec::with_capacity(starts.len());
    let mut best: Option<Ascent> = None;
    let mut used = 0;
    for (k, y0) in starts.into_iter().enumerate() {
        let mut rng = stream_rng(settings.seed, PERTURB_STREAM + k as u64);
        let Some(y0) = nondegenerate_start(config, y0, &mut rng) else {
            per_restart_values.push(0.0);
            continue;
        };
        used += 1;
        let run = ascend(config, &y0, settings);
        per_restart_values.push(run.log_value.exp());
        // strict comparison keeps the lowest index on ties
        if best.as_ref().is_none_or(|b| run.log_value > b.log_value) {
            best = Some(run);
        }
    }
    let best = best.ok_or(Error::AllRestartsDegenerate)?;
    let best_value = product_at(config, &best.y)?;
    Ok(OptimizerResult {
        log_best_value: best_value.ln(),
        best_value,
        best_y: best.y,
        restarts_used: used,
        converged: best.converged,
        per_restart_values,
    })
}
