//! Multi-objective configuration tuning: a genetic search over the pruned
//! space that minimizes size, GFLOPs and negated effectiveness.

mod archive;
mod operators;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use archive::{
    crowding_distances, deployment_index, dominates, hypervolume, select_deployment_config, Individual,
    ObjectiveVector, ParetoArchive,
};
pub use operators::{
    adaptive_random_init, adaptive_random_init_with, all_valid, boundary_random_mutation,
    correct, min_pairwise_distance, size_bytes, tournament_select, two_point_crossover,
    two_point_crossover_at, ART_CANDIDATES,
};

use crate::cost::{forward_gflops, model_size};
use crate::oracle::SyntheticOracle;
use crate::prune::{PruneError, SizeConstraint};
use crate::space::{encode, Configuration, ConfigurationSpace, SpaceError};
use crate::surrogate::SurrogateModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TunerError {
    #[error("invalid tuner parameter: {0}")]
    BadParams(String),
    #[error("indicator was fitted on space {model}, but the space has checksum {space}")]
    ChecksumMismatch { model: String, space: String },
    #[error("indicator expects {expected} features, the space encodes {found}")]
    FeatureMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Budget(#[from] PruneError),
}

/// Anything that scores a configuration's effectiveness in `[0, 1]`.
pub trait EffectivenessIndicator: Sync {
    fn effectiveness(&self, c: &Configuration) -> f64;
}

impl EffectivenessIndicator for SyntheticOracle {
    fn effectiveness(&self, c: &Configuration) -> f64 {
        self.evaluate(c)
    }
}

/// A surrogate bound to the space whose encoding it was fitted on.
#[derive(Debug, Clone)]
pub struct FittedIndicator {
    model: SurrogateModel,
    space: ConfigurationSpace,
}

impl FittedIndicator {
    /// Rejects a model whose recorded space checksum differs from `space`.
    pub fn new(model: SurrogateModel, space: &ConfigurationSpace) -> Result<Self, TunerError> {
        if let Some(sum) = &model.space_checksum {
            let here = space.checksum();
            if *sum != here {
                return Err(TunerError::ChecksumMismatch {
                    model: sum.clone(),
                    space: here,
                });
            }
        }
        let found = space.dimensions().len();
        if model.num_features() != found {
            return Err(TunerError::FeatureMismatch {
                expected: model.num_features(),
                found,
            });
        }
        Ok(Self {
            model,
            space: space.clone(),
        })
    }

    pub fn model(&self) -> &SurrogateModel {
        &self.model
    }
}

impl EffectivenessIndicator for FittedIndicator {
    /// Mean prediction clamped to `[0, 1]`.
    fn effectiveness(&self, c: &Configuration) -> f64 {
        let x = encode(c, &self.space, false).expect("tuner only scores valid configurations");
        self.model
            .predict_mean(&x)
            .expect("feature count checked at construction")
            .clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub art_candidates: usize,
    pub seed: u64,
    /// Every initial and offspring configuration is repaired to fit this.
    pub size_budget_mb: Option<f64>,
}

impl Default for TunerParams {
    fn default() -> Self {
        Self {
            population_size: 20,
            generations: 50,
            crossover_rate: 0.6,
            mutation_rate: 0.1,
            tournament_size: 2,
            art_candidates: ART_CANDIDATES,
            seed: 0,
            size_budget_mb: Some(SizeConstraint::DEFAULT_BUDGET_MB),
        }
    }
}

impl TunerParams {
    pub fn validate(&self) -> Result<(), TunerError> {
        let bad = |s: String| Err(TunerError::BadParams(s));
        if self.population_size < 1 {
            return bad("population size must be at least 1".into());
        }
        if self.tournament_size < 1 {
            return bad("tournament size must be at least 1".into());
        }
        for (name, r) in [("crossover", self.crossover_rate), ("mutation", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{name} rate {r} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub archive_size: usize,
    /// Against the per-objective maxima over every evaluation in the run.
    pub hypervolume: f64,
    /// Lowest value of each objective among archive members.
    pub best: ObjectiveVector,
}

#[derive(Debug, Clone)]
pub struct TuneRun {
    pub archive: ParetoArchive,
    pub generations: Vec<GenerationRecord>,
    /// Every distinct configuration scored during the run, in first-seen order.
    pub evaluated: Vec<Individual>,
    pub reference_point: [f64; 3],
}

struct Evaluator<'a, I: ?Sized> {
    indicator: &'a I,
    memo: HashMap<Configuration, ObjectiveVector>,
    log: Vec<Individual>,
}

impl<I: EffectivenessIndicator + ?Sized> Evaluator<'_, I> {
    /// Scores new configurations in parallel, records them in input order.
    fn evaluate(&mut self, configs: Vec<Configuration>) -> Vec<Individual> {
        let mut fresh: Vec<Configuration> = Vec::new();
        for c in &configs {
            if !self.memo.contains_key(c) && !fresh.contains(c) {
                fresh.push(c.clone());
            }
        }
        let indicator = self.indicator;
        let scored: Vec<ObjectiveVector> = fresh
            .par_iter()
            .map(|c| objectives(c, indicator))
            .collect();
        for (c, o) in fresh.into_iter().zip(scored) {
            self.memo.insert(c.clone(), o);
            self.log.push(Individual { config: c, objectives: o });
        }
        configs
            .into_iter()
            .map(|c| {
                let objectives = self.memo[&c];
                Individual { config: c, objectives }
            })
            .collect()
    }
}

/// Size, GFLOPs and negated effectiveness of a valid configuration.
pub fn objectives<I: EffectivenessIndicator + ?Sized>(c: &Configuration, indicator: &I) -> ObjectiveVector {
    let shape = c.shape().expect("valid configuration");
    ObjectiveVector::new(
        model_size(&shape).total_mb(),
        forward_gflops(&shape),
        indicator.effectiveness(c),
    )
}

fn best_of(points: &[[f64; 3]]) -> ObjectiveVector {
    let m = |k: usize| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
    ObjectiveVector {
        size_mb: m(0),
        gflops: m(1),
        neg_effectiveness: m(2),
    }
}

/// Runs the genetic search and returns the final archive with telemetry.
///
/// Each generation pairs a seeded shuffle of the population, crosses each
/// pair with probability `crossover_rate`, mutates and repairs the
/// offspring, scores them, updates the archive, then picks the next
/// population from parents and offspring by binary tournament.
pub fn tune<I: EffectivenessIndicator + ?Sized>(
    space: &ConfigurationSpace,
    indicator: &I,
    params: &TunerParams,
) -> Result<TuneRun, TunerError> {
    params.validate()?;
    let budget = params.size_budget_mb.map(SizeConstraint::new).transpose()?;
    let budget = budget.as_ref();
    let n = params.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut eval = Evaluator {
        indicator,
        memo: HashMap::new(),
        log: Vec::new(),
    };

    let init = adaptive_random_init_with(space, n, params.art_candidates, budget, &mut rng)?;
    let mut population = eval.evaluate(init);
    let mut archive = ParetoArchive::new();
    archive.update(population.iter().cloned());
    let mut snapshots = vec![archive.objective_points()];

    for _ in 0..params.generations {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut offspring: Vec<Configuration> = Vec::with_capacity(n + 1);
        for pair in order.chunks(2) {
            let a = &population[pair[0]].config;
            match pair.get(1) {
                Some(&j) => {
                    let b = &population[j].config;
                    if rng.random::<f64>() < params.crossover_rate {
                        let (x, y) = two_point_crossover(a, b, &mut rng);
                        offspring.extend([x, y]);
                    } else {
                        offspring.extend([a.clone(), b.clone()]);
                    }
                }
                None => offspring.push(a.clone()),
            }
        }
        offspring.truncate(n);
        let offspring = offspring
            .iter()
            .map(|c| {
                let m = boundary_random_mutation(c, space, params.mutation_rate, &mut rng);
                correct(&m, space, budget, &mut rng)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let offspring = eval.evaluate(offspring);
        archive.update(offspring.iter().cloned());
        snapshots.push(archive.objective_points());

        let mut pool = population;
        pool.extend(offspring);
        let points: Vec<[f64; 3]> = pool.iter().map(|i| i.objectives.as_array()).collect();
        let crowding = crowding_distances(&points);
        let winners = tournament_select(&pool, &crowding, n, params.tournament_size, &mut rng);
        population = winners.into_iter().map(|i| pool[i].clone()).collect();
    }

    let mut reference = [f64::NEG_INFINITY; 3];
    for ind in &eval.log {
        for (r, v) in reference.iter_mut().zip(ind.objectives.as_array()) {
            *r = r.max(v);
        }
    }
    let generations = snapshots
        .iter()
        .enumerate()
        .map(|(generation, pts)| GenerationRecord {
            generation,
            archive_size: pts.len(),
            hypervolume: hypervolume(pts, reference),
            best: best_of(pts),
        })
        .collect();
    Ok(TuneRun {
        archive,
        generations,
        evaluated: eval.log,
        reference_point: reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prune::prune;
    use crate::space::validate;

    fn pruned() -> ConfigurationSpace {
        prune(&ConfigurationSpace::listing3(), &SizeConstraint::default(), 13).unwrap()
    }

    #[test]
    fn zero_generations_filters_initial_population() {
        let space = pruned();
        let oracle = SyntheticOracle::for_space(&space);
        let params = TunerParams { generations: 0, seed: 4, ..Default::default() };
        let run = tune(&space, &oracle, &params).unwrap();
        assert_eq!(run.generations.len(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let budget = SizeConstraint::default();
        let init = adaptive_random_init_with(&space, 20, 10, Some(&budget), &mut rng).unwrap();
        let mut expect = ParetoArchive::new();
        expect.update(init.into_iter().map(|c| {
            let o = objectives(&c, &oracle);
            Individual { config: c, objectives: o }
        }));
        assert_eq!(run.archive, expect);
    }

    #[test]
    fn default_run_respects_budget_and_invariants() {
        let space = pruned();
        let oracle = SyntheticOracle::for_space(&space);
        let run = tune(&space, &oracle, &TunerParams { seed: 11, ..Default::default() }).unwrap();
        assert_eq!(run.generations.len(), 51);
        assert!(run.archive.is_mutually_non_dominated());
        let budget = SizeConstraint::default();
        for m in run.archive.members() {
            assert!(validate(&m.config, &space).is_valid());
            assert!(budget.admits_bytes(size_bytes(&m.config)));
        }
        for e in &run.evaluated {
            assert!(validate(&e.config, &space).is_valid());
            for m in run.archive.members() {
                assert!(!e.objectives.dominates(&m.objectives));
            }
        }
        for w in run.generations.windows(2) {
            assert!(w[1].hypervolume >= w[0].hypervolume);
        }
    }

    #[test]
    fn reruns_are_identical() {
        let space = pruned();
        let oracle = SyntheticOracle::for_space(&space);
        let params = TunerParams { generations: 10, seed: 99, ..Default::default() };
        let a = tune(&space, &oracle, &params).unwrap();
        let b = tune(&space, &oracle, &params).unwrap();
        assert_eq!(a.archive, b.archive);
        assert_eq!(a.generations, b.generations);
    }

    #[test]
    fn bad_params_rejected() {
        let space = pruned();
        let oracle = SyntheticOracle::for_space(&space);
        for p in [
            TunerParams { population_size: 0, ..Default::default() },
            TunerParams { crossover_rate: 1.5, ..Default::default() },
            TunerParams { mutation_rate: -0.1, ..Default::default() },
            TunerParams { size_budget_mb: Some(-1.0), ..Default::default() },
        ] {
            assert!(tune(&space, &oracle, &p).is_err());
        }
    }

    #[test]
    fn fitted_indicator_checks_checksum() {
        let space = pruned();
        let oracle = crate::oracle::EffectivenessOracle::Synthetic(SyntheticOracle::for_space(&space));
        let ind = crate::oracle::build_indicator(&space, &oracle, 20, 1).unwrap();
        assert!(FittedIndicator::new(ind.model.clone(), &space).is_ok());
        assert!(matches!(
            FittedIndicator::new(ind.model, &ConfigurationSpace::listing3()),
            Err(TunerError::ChecksumMismatch { .. })
        ));
    }
}
