//! Shared inputs for the benchmarks.

use slimtune::oracle::EffectivenessOracle;
use slimtune::{build_indicator, prune, ConfigurationSpace, FittedIndicator, SizeConstraint};

pub fn pruned_space() -> ConfigurationSpace {
    prune(&ConfigurationSpace::listing3(), &SizeConstraint::default(), 13)
        .expect("the shipped space has feasible configurations")
}

/// Indicator fitted on twenty synthetic-oracle samples.
pub fn fitted_indicator(space: &ConfigurationSpace) -> FittedIndicator {
    let oracle = EffectivenessOracle::parse_spec("synthetic", space, 0).expect("known oracle");
    let ind = build_indicator(space, &oracle, 20, 0).expect("synthetic oracle cannot fail");
    FittedIndicator::new(ind.model, space).expect("fitted on this space")
}
