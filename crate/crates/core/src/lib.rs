//! Size-constrained tuning of compact code models: declare a configuration
//! space, prune it under a size budget, fit an effectiveness indicator and
//! search for Pareto-optimal configurations.

pub mod cost;
pub mod oracle;
pub mod prune;
pub mod seed;
pub mod space;
pub mod surrogate;
pub mod tuner;

pub use cost::{emissions, forward_gflops, model_size, CostReport, Emissions, SizeBreakdown};
pub use oracle::{build_indicator, EffectivenessOracle, Indicator, OracleError};
pub use prune::{prune, PruneReport, SizeConstraint};
pub use space::{
    parse_space, sample_uniform, validate, Configuration, ConfigurationSpace, Domain, Param,
    SpaceError, Value,
};
pub use surrogate::{fit, FitOptions, SurrogateModel, TrainingSet};
pub use tuner::{
    select_deployment_config, tune, EffectivenessIndicator, FittedIndicator, Individual,
    ObjectiveVector, ParetoArchive, TuneRun, TunerParams,
};
