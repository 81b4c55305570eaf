//! Lower bounds and numerical estimates for the linear polarization
//! constant of real Euclidean space.
//!
//! Given unit vectors `x_1, ..., x_n` in `R^n` (the rows of a matrix `X`),
//! the quantity of interest is
//!
//! ```text
//! sup_{|y| = 1} |<x_1, y> ... <x_n, y>|
//! ```
//!
//! The crate computes five certified lower bounds on it (each, except the
//! purely spectral ones, with an explicit unit vector `y` that attains at
//! least the bound), estimates the supremum itself by multi-start ascent on
//! the sphere, searches configuration space for small suprema, and
//! estimates the spherical log-average that governs the asymptotic
//! polarization constant.
//!
//! Everything in the crate is deterministic: random quantities are drawn
//! from seeded ChaCha streams.

pub mod bang;
pub mod bounds;
pub mod config;
pub mod corpus;
mod error;
pub mod linalg;
pub mod optimizer;

pub use bang::{bang_signs, verify_bang, BangInstance, SignVector};
pub use bounds::{
    full_report, harmonic_bound, marcus_bound, symmetrize, thm1_bound_and_witness,
    thm2_bound_and_witness, thm3_bound_and_witness, BoundReport, Certificate, Construction,
    TheoremBound, Witness,
};
pub use config::{gram, product_at, Configuration};
pub use error::{Error, Result};
pub use linalg::{column_lengths, eigen_sym, sym_inv_sqrt, sym_sqrt, Matrix, SpectralDecomposition, SymmetricMatrix};
pub use optimizer::{
    conjecture_search, estimate_l, grid_oracle, sup_product, LEstimate, OptimizerResult,
    OptimizerSettings, SearchResult, SearchSettings,
};

/// `n^{-n/2}`: the product attained by an orthonormal system, conjectured to
/// be the smallest possible supremum.
pub fn threshold(n: usize) -> f64 {
    log_threshold(n).exp()
}

/// Natural log of [`threshold`].
pub fn log_threshold(n: usize) -> f64 {
    let n = n as f64;
    -0.5 * n * n.ln()
}
