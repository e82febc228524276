use std::path::Path;

use slimtune::oracle::{IndicatorError, OracleError};
use slimtune::prune::PruneError;
use slimtune::tuner::TunerError;
use slimtune::SpaceError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Constraint(String),
    #[error("{0}")]
    Oracle(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Constraint(_) => 3,
            CliError::Oracle(_) => 4,
            CliError::Internal(_) => 5,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Internal(format!("{}: {e}", path.display()))
    }
}

impl From<SpaceError> for CliError {
    fn from(e: SpaceError) -> Self {
        match e {
            SpaceError::Unsatisfiable(_) => CliError::Constraint(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<PruneError> for CliError {
    fn from(e: PruneError) -> Self {
        match e {
            PruneError::Infeasible { .. } => CliError::Constraint(e.to_string()),
            PruneError::Space(inner) => inner.into(),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BadSpec(_) => CliError::Parse(e.to_string()),
            _ => CliError::Oracle(e.to_string()),
        }
    }
}

impl From<IndicatorError> for CliError {
    fn from(e: IndicatorError) -> Self {
        match e {
            IndicatorError::Oracle { source, .. } => source.into(),
            IndicatorError::Space(inner) => inner.into(),
            IndicatorError::TooFewSamples(_) => CliError::Parse(e.to_string()),
            IndicatorError::Surrogate(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<TunerError> for CliError {
    fn from(e: TunerError) -> Self {
        match e {
            TunerError::Space(inner) => inner.into(),
            TunerError::Budget(inner) => inner.into(),
            _ => CliError::Parse(e.to_string()),
        }
    }
}
