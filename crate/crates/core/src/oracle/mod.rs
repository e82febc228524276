//! Ground-truth effectiveness sources, the distillation loss, and the
//! sample → evaluate → fit pipeline that produces an effectiveness indicator.

mod external;
mod kd;
mod synthetic;

use std::time::Duration;

use rayon::prelude::*;
use thiserror::Error;

pub use external::{ExternalOracle, DEFAULT_TIMEOUT, TIMEOUT_ENV};
pub use kd::{kd_loss, log_softmax, DistillationBatch, KdError};
pub use synthetic::{SyntheticOracle, ACCURACY_SPAN, BASE_ACCURACY};

use crate::space::{encode, sample_uniform, validate, Configuration, ConfigurationSpace, SpaceError};
use crate::surrogate::{fit, FitOptions, SurrogateError, SurrogateModel, TrainingSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("could not start evaluator: {0}")]
    Spawn(String),
    #[error("evaluator exited with status {status:?}: {stderr}")]
    ProcessFailed { status: Option<i32>, stderr: String },
    #[error("evaluator did not finish within {0:?}")]
    Timeout(Duration),
    #[error("malformed evaluator response: {0}")]
    MalformedResponse(String),
    #[error("evaluator answered {} of {expected} requests; missing ids {missing:?}", expected - missing.len())]
    PartialResponse { expected: usize, missing: Vec<usize> },
    #[error("evaluator answered unknown id {0}")]
    UnknownId(usize),
    #[error("evaluator answered id {0} twice")]
    DuplicateId(usize),
    #[error("oracle I/O: {0}")]
    Io(String),
    #[error("unrecognized oracle `{0}`; expected `synthetic`, `synthetic:noise=<sigma>` or `external:<command>`")]
    BadSpec(String),
    #[error("refusing to evaluate an invalid configuration: {0}")]
    InvalidConfiguration(String),
}

/// Where effectiveness figures come from.
#[derive(Debug, Clone, PartialEq)]
pub enum EffectivenessOracle {
    Synthetic(SyntheticOracle),
    External(ExternalOracle),
}

impl EffectivenessOracle {
    /// Parses `synthetic`, `synthetic:noise=<sigma>` or `external:<command>`.
    /// `seed` keys the synthetic noise.
    pub fn parse_spec(spec: &str, space: &ConfigurationSpace, seed: u64) -> Result<Self, OracleError> {
        let bad = || OracleError::BadSpec(spec.to_string());
        if spec == "synthetic" {
            return Ok(Self::Synthetic(SyntheticOracle::for_space(space)));
        }
        if let Some(rest) = spec.strip_prefix("synthetic:") {
            let sigma: f64 = rest
                .strip_prefix("noise=")
                .and_then(|s| s.parse().ok())
                .filter(|s: &f64| s.is_finite() && *s >= 0.0)
                .ok_or_else(bad)?;
            return Ok(Self::Synthetic(SyntheticOracle::for_space(space).with_noise(sigma, seed)));
        }
        match spec.strip_prefix("external:") {
            Some(cmd) if !cmd.trim().is_empty() => {
                Ok(Self::External(ExternalOracle::new(cmd, space.checksum())))
            }
            _ => Err(bad()),
        }
    }

    pub fn evaluate(&self, c: &Configuration) -> Result<f64, OracleError> {
        match self {
            Self::Synthetic(o) => Ok(o.evaluate(c)),
            Self::External(o) => Ok(o.evaluate_batch(std::slice::from_ref(c))?[0]),
        }
    }

    /// Results are in input order. Synthetic evaluations run in parallel;
    /// an external evaluator receives the whole batch in one request.
    pub fn evaluate_batch(&self, configs: &[Configuration]) -> Result<Vec<f64>, OracleError> {
        match self {
            Self::Synthetic(o) => Ok(configs.par_iter().map(|c| o.evaluate(c)).collect()),
            Self::External(o) => o.evaluate_batch(configs),
        }
    }
}

/// One audited training row.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub config: Configuration,
    pub effectiveness: f64,
}

/// A fitted indicator and the table it was fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct Indicator {
    pub model: SurrogateModel,
    pub table: Vec<Sample>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndicatorError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("oracle failed after {} evaluations: {source}", partial.len())]
    Oracle {
        source: OracleError,
        partial: Vec<Sample>,
    },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
}

/// Samples `k` configurations, scores them with `oracle` and fits the
/// surrogate on their raw encodings.
///
/// External evaluators get one request per configuration so a failure keeps
/// every row scored before it.
pub fn build_indicator(
    space: &ConfigurationSpace,
    oracle: &EffectivenessOracle,
    k: usize,
    seed: u64,
) -> Result<Indicator, IndicatorError> {
    if k < 2 {
        return Err(IndicatorError::TooFewSamples(k));
    }
    let configs = sample_uniform(space, k, seed)?;
    let scores = match oracle {
        EffectivenessOracle::Synthetic(_) => oracle
            .evaluate_batch(&configs)
            .map_err(|source| IndicatorError::Oracle { source, partial: Vec::new() })?,
        EffectivenessOracle::External(_) => {
            let mut scores = Vec::with_capacity(k);
            for c in &configs {
                match oracle.evaluate(c) {
                    Ok(e) => scores.push(e),
                    Err(source) => {
                        let partial = configs
                            .iter()
                            .zip(&scores)
                            .map(|(c, e)| Sample { config: c.clone(), effectiveness: *e })
                            .collect();
                        return Err(IndicatorError::Oracle { source, partial });
                    }
                }
            }
            scores
        }
    };

    let table: Vec<Sample> = configs
        .into_iter()
        .zip(scores)
        .map(|(config, effectiveness)| Sample { config, effectiveness })
        .collect();
    let features = table
        .iter()
        .map(|s| encode(&s.config, space, false))
        .collect::<Result<Vec<_>, _>>()?;
    let targets = table.iter().map(|s| s.effectiveness).collect();
    let mut model = fit(&TrainingSet::new(features, targets)?, &FitOptions::default())?;
    model.space_checksum = Some(space.checksum());
    debug_assert!(table.iter().all(|s| validate(&s.config, space).is_valid()));
    Ok(Indicator { model, table })
}
