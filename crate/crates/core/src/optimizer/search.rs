//! Search over configurations for a small supremum.
//!
//! The outer problem `inf_X sup_y prod |<x_j, y>|` is attacked by
//! perturbation descent: rows receive tangential Gaussian noise and a
//! candidate is kept only if its (multi-start) supremum is lower. The noise
//! scale grows by 1.5 after an accepted step and shrinks by 0.85 after a
//! rejected one, between `final_scale` and `initial_scale`. Each cycle starts
//! from a fresh random configuration.

use rand_distr::{Distribution, StandardNormal};

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::{log_threshold, threshold};

use super::{random_unit, stream_rng, sup_product, OptimizerSettings};

/// Stream range used for outer-loop randomness, far from restart streams.
const SEARCH_STREAM: u64 = 1 << 48;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchSettings {
    /// Total outer iterations (candidate evaluations).
    pub budget: usize,
    pub seed: u64,
    /// Iterations per cycle before restarting from a random configuration.
    pub cycle_length: usize,
    /// Starting (and largest) perturbation scale.
    pub initial_scale: f64,
    /// Smallest perturbation scale.
    pub final_scale: f64,
    /// Inner supremum settings; its seed is fixed across all evaluations.
    pub inner: OptimizerSettings,
}

impl SearchSettings {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            seed,
            cycle_length: 100,
            initial_scale: 0.5,
            final_scale: 1e-7,
            inner: OptimizerSettings::with_seed(seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub value: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub worst_config: Configuration,
    /// Supremum on `worst_config`, recomputed with four times the restarts.
    pub worst_sup: f64,
    /// Supremum as seen during the search.
    pub search_sup: f64,
    pub threshold: f64,
    pub iterations: usize,
    /// Every new overall minimum, in order.
    pub trace: Vec<TracePoint>,
}

impl SearchResult {
    /// `worst_sup - n^{-n/2}`; negative would contradict the conjecture.
    pub fn gap(&self) -> f64 {
        self.worst_sup - self.threshold
    }
}

fn random_config(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Configuration {
    let rows = (0..n).map(|_| random_unit(rng, n)).collect();
    Configuration::new(rows).expect("unit rows")
}

fn perturb(config: &Configuration, scale: f64, rng: &mut rand_chacha::ChaCha8Rng) -> Configuration {
    let n = config.dim();
    let rows = config
        .matrix()
        .rows()
        .map(|x| {
            let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            let c = dot(&g, x);
            let moved: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + scale * (gi - c * xi)).collect();
            moved
        })
        .collect();
    Configuration::from_directions(rows).unwrap_or_else(|_| config.clone())
}

/// Default settings; see [`conjecture_search_with`].
pub fn conjecture_search(n: usize, budget: usize, seed: u64) -> Result<SearchResult> {
    conjecture_search_with(n, &SearchSettings::new(budget, seed))
}

pub fn conjecture_search_with(n: usize, settings: &SearchSettings) -> Result<SearchResult> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("search needs n >= 2, got {n}")));
    }
    if settings.budget == 0 {
        return Err(Error::InvalidArgument("budget must be positive".into()));
    }
    let sup = |c: &Configuration| sup_product(c, &settings.inner).map(|r| r.best_value);
    let cycle = settings.cycle_length.max(1);
    let log_t = log_threshold(n);

    let mut best: Option<(Configuration, f64)> = None;
    let mut trace = Vec::new();
    let mut iteration = 0usize;
    let mut cycle_index = 0u64;
    while iteration < settings.budget {
        let mut rng = stream_rng(settings.seed, SEARCH_STREAM + cycle_index);
        cycle_index += 1;
        let steps = cycle.min(settings.budget - iteration);
        let mut current = random_config(n, &mut rng);
        let mut current_sup = sup(&current)?;
        let mut scale = settings.initial_scale;
        for _ in 0..steps {
            let cand = perturb(&current, scale, &mut rng);
            let cand_sup = sup(&cand)?;
            if cand_sup < current_sup {
                current = cand;
                current_sup = cand_sup;
                scale = (scale * 1.5).min(settings.initial_scale);
            } else {
                scale = (scale * 0.85).max(settings.final_scale);
            }
            iteration += 1;
            if best.as_ref().is_none_or(|(_, b)| current_sup < *b) {
                best = Some((current.clone(), current_sup));
                trace.push(TracePoint {
                    iteration,
                    value: current_sup,
                    gap: current_sup - log_t.exp(),
                });
            }
        }
    }
    let (worst_config, search_sup) = best.expect("budget > 0");
    let verify = OptimizerSettings {
        restarts: Some(4 * settings.inner.random_restarts(n)),
        seed: settings.inner.seed.wrapping_add(1),
        ..settings.inner.clone()
    };
    let worst_sup = sup_product(&worst_config, &verify)?.best_value.max(search_sup);
    Ok(SearchResult {
        worst_config,
        worst_sup,
        search_sup,
        threshold: threshold(n),
        iterations: iteration,
        trace,
    })
}
