use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{}: {source}", path.display())]
    Instance {
        path: PathBuf,
        source: polarization::Error,
    },

    #[error("{0}")]
    Numerical(polarization::Error),

    #[error("{failures} property check(s) failed")]
    PropertyFailure { failures: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 1 property failure, 2 input error, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::PropertyFailure { .. } => 1,
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<polarization::Error> for CliError {
    fn from(e: polarization::Error) -> Self {
        use polarization::Error as E;
        match e {
            E::NoConvergence { .. }
            | E::NotPsd { .. }
            | E::CertificateFailed { .. }
            | E::AllRestartsDegenerate => CliError::Numerical(e),
            other => CliError::Input(other.to_string()),
        }
    }
}
