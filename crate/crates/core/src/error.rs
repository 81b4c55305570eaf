use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration must contain at least one vector")]
    EmptyConfiguration,

    #[error("row {row} has {found} coordinates, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row} has norm {norm}, which is not within 1e-6 of 1")]
    NotUnitRow { row: usize, norm: f64 },

    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("vector has norm {norm}, expected a unit vector")]
    NotUnit { norm: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("Gram matrix is singular (smallest eigenvalue {min_eigenvalue:e} <= tolerance {tolerance:e})")]
    SingularGram { min_eigenvalue: f64, tolerance: f64 },

    #[error("invalid Bang instance: {0}")]
    InvalidBangInstance(String),

    #[error("sign search ended at an invalid certificate (worst slack {worst_slack:e})")]
    CertificateFailed { worst_slack: f64 },

    #[error("diagonal entry {index} of the symmetrized matrix is {value:e}, too small for the diagonal bound")]
    DegenerateDiagonal { index: usize, value: f64 },

    #[error("every restart started on a zero of the product and could not be perturbed away")]
    AllRestartsDegenerate,

    #[error("grid oracle supports n = 2 or n = 3, got n = {0}")]
    UnsupportedDimension(usize),

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
