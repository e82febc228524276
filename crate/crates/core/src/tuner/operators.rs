use rand::seq::index::sample as sample_indices;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::archive::{dominates, Individual};
use crate::cost::model_size;
use crate::prune::SizeConstraint;
use crate::space::{encode, validate, Configuration, ConfigurationSpace, Param, SpaceError, Value};

/// Resample attempts for the hidden size before the deterministic fallback.
const MAX_RESAMPLES: usize = 100;

/// Candidates drawn per slot by adaptive random initialization.
pub const ART_CANDIDATES: usize = 10;

fn fits(c: &Configuration, budget: Option<&SizeConstraint>) -> bool {
    match budget {
        None => true,
        Some(b) => b.admits(&c.shape().expect("architecture values in range")),
    }
}

fn in_range_divisors(hidden: i64, space: &ConfigurationSpace) -> Vec<i64> {
    let heads = space.domain(Param::NumAttentionHeads);
    heads
        .int_values_sorted()
        .expect("integer heads")
        .into_iter()
        .filter(|a| hidden % a == 0)
        .collect()
}

/// Repairs `c` into a valid configuration of `space`.
///
/// Out-of-domain values are redrawn. With a budget, size-relevant settings
/// are lowered at random until the model fits. If the head count does not
/// divide the hidden size it is redrawn among in-range divisors; when there
/// are none the hidden size is redrawn, and after 100 failed draws the
/// smallest workable hidden size is taken with its largest divisor.
/// Valid inputs come back unchanged.
pub fn correct<R: Rng + ?Sized>(
    c: &Configuration,
    space: &ConfigurationSpace,
    budget: Option<&SizeConstraint>,
    rng: &mut R,
) -> Result<Configuration, SpaceError> {
    let mut out = c.clone();
    for dim in space.dimensions() {
        if !dim.domain().contains(out.get(dim.param())) {
            out.set(dim.param(), dim.domain().sample(rng));
        }
    }

    if !fits(&out, budget) {
        loop {
            let reducible: Vec<(Param, i64)> = Param::SIZE_RELEVANT
                .iter()
                .filter_map(|&p| {
                    let cur = out.int(p)?;
                    let min = space.domain(p).int_min()?;
                    (min < cur).then_some((p, cur))
                })
                .collect();
            let Some(&(p, cur)) = reducible.choose(rng) else {
                return Err(SpaceError::Unsatisfiable(format!(
                    "smallest model exceeds {} MB",
                    budget.expect("budget present").budget_mb()
                )));
            };
            let lower = space
                .domain(p)
                .sample_int_below(cur, rng)
                .expect("a smaller value exists");
            out.set(p, Value::Int(lower));
            if fits(&out, budget) {
                break;
            }
        }
    }

    let hidden = out.int(Param::HiddenSize).expect("integer hidden size");
    let heads = out.int(Param::NumAttentionHeads).expect("integer head count");
    if hidden % heads == 0 {
        return Ok(out);
    }
    let divisors = in_range_divisors(hidden, space);
    if let Some(&a) = divisors.choose(rng) {
        out.set(Param::NumAttentionHeads, Value::Int(a));
        return Ok(out);
    }

    let hidden_domain = space.domain(Param::HiddenSize);
    for _ in 0..MAX_RESAMPLES {
        let Value::Int(h) = hidden_domain.sample(rng) else {
            unreachable!("hidden size is integer")
        };
        let divisors = in_range_divisors(h, space);
        let mut trial = out.clone();
        trial.set(Param::HiddenSize, Value::Int(h));
        if divisors.is_empty() || !fits(&trial, budget) {
            continue;
        }
        trial.set(Param::NumAttentionHeads, Value::Int(*divisors.choose(rng).expect("non-empty")));
        return Ok(trial);
    }

    for h in hidden_domain.int_values_sorted().expect("integer hidden size") {
        let mut trial = out.clone();
        trial.set(Param::HiddenSize, Value::Int(h));
        if let Some(&a) = in_range_divisors(h, space).last() {
            if fits(&trial, budget) {
                trial.set(Param::NumAttentionHeads, Value::Int(a));
                return Ok(trial);
            }
        }
    }
    Err(SpaceError::Unsatisfiable(
        "no hidden size in range is divisible by an in-range head count".into(),
    ))
}

/// Children `p1[..x1] + p2[x1..x2] + p1[x2..]` and the mirror image, over the
/// canonical dimension order. Requires `x1 < x2 <= 13`.
pub fn two_point_crossover_at(
    p1: &Configuration,
    p2: &Configuration,
    x1: usize,
    x2: usize,
) -> (Configuration, Configuration) {
    assert!(x1 < x2 && x2 <= Param::COUNT, "cut points {x1}, {x2}");
    let mut a = p1.clone();
    let mut b = p2.clone();
    for &p in &Param::ALL[x1..x2] {
        a.set(p, p2.get(p).clone());
        b.set(p, p1.get(p).clone());
    }
    (a, b)
}

/// Cut points drawn uniformly among all pairs `0 <= x1 < x2 <= 13`.
pub fn two_point_crossover<R: Rng + ?Sized>(
    p1: &Configuration,
    p2: &Configuration,
    rng: &mut R,
) -> (Configuration, Configuration) {
    let cuts = sample_indices(rng, Param::COUNT + 1, 2);
    let (x1, x2) = {
        let (u, v) = (cuts.index(0), cuts.index(1));
        (u.min(v), u.max(v))
    };
    two_point_crossover_at(p1, p2, x1, x2)
}

/// Redraws each dimension from its domain with probability `rate`.
pub fn boundary_random_mutation<R: Rng + ?Sized>(
    c: &Configuration,
    space: &ConfigurationSpace,
    rate: f64,
    rng: &mut R,
) -> Configuration {
    let mut out = c.clone();
    for dim in space.dimensions() {
        if rng.random::<f64>() < rate {
            out.set(dim.param(), dim.domain().sample(rng));
        }
    }
    out
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Spreads `n` corrected configurations over the space: after a uniform first
/// pick, each slot takes the best of `candidates` uniform draws by minimum
/// normalized distance to those already chosen.
pub fn adaptive_random_init_with<R: Rng + ?Sized>(
    space: &ConfigurationSpace,
    n: usize,
    candidates: usize,
    budget: Option<&SizeConstraint>,
    rng: &mut R,
) -> Result<Vec<Configuration>, SpaceError> {
    let mut chosen: Vec<Configuration> = Vec::with_capacity(n);
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n);
    for slot in 0..n {
        let pool = if slot == 0 { 1 } else { candidates.max(1) };
        let mut best: Option<(f64, Configuration, Vec<f64>)> = None;
        for _ in 0..pool {
            let c = correct(&space.sample_raw(rng), space, budget, rng)?;
            let x = encode(&c, space, true)?;
            let d = points
                .iter()
                .map(|p| distance(p, &x))
                .fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|(bd, _, _)| d > *bd) {
                best = Some((d, c, x));
            }
        }
        let (_, c, x) = best.expect("at least one candidate");
        chosen.push(c);
        points.push(x);
    }
    Ok(chosen)
}

/// Adaptive random initialization with ten candidates per slot and no size
/// budget.
pub fn adaptive_random_init(
    space: &ConfigurationSpace,
    n: usize,
    seed: u64,
) -> Result<Vec<Configuration>, SpaceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    adaptive_random_init_with(space, n, ART_CANDIDATES, None, &mut rng)
}

/// Smallest pairwise normalized distance within a population.
pub fn min_pairwise_distance(configs: &[Configuration], space: &ConfigurationSpace) -> f64 {
    let xs: Vec<Vec<f64>> = configs
        .iter()
        .map(|c| encode(c, space, true).expect("valid configuration"))
        .collect();
    let mut best = f64::INFINITY;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            best = best.min(distance(&xs[i], &xs[j]));
        }
    }
    best
}

/// Runs `count` tournaments of `size` distinct entrants drawn from `pool`
/// and returns the winners' indices. Winners are non-dominated within their
/// tournament; ties go to the larger `crowding` value, then to chance.
pub fn tournament_select<R: Rng + ?Sized>(
    pool: &[Individual],
    crowding: &[f64],
    count: usize,
    size: usize,
    rng: &mut R,
) -> Vec<usize> {
    assert!(!pool.is_empty(), "empty selection pool");
    assert_eq!(pool.len(), crowding.len());
    let size = size.clamp(1, pool.len());
    let objectives: Vec<[f64; 3]> = pool.iter().map(|i| i.objectives.as_array()).collect();
    (0..count)
        .map(|_| {
            let entrants = sample_indices(rng, pool.len(), size).into_vec();
            let front: Vec<usize> = entrants
                .iter()
                .copied()
                .filter(|&i| !entrants.iter().any(|&j| dominates(&objectives[j], &objectives[i])))
                .collect();
            let top = front
                .iter()
                .map(|&i| crowding[i])
                .fold(f64::NEG_INFINITY, f64::max);
            let tied: Vec<usize> = front.into_iter().filter(|&i| crowding[i] == top).collect();
            *tied.choose(rng).expect("a non-dominated entrant exists")
        })
        .collect()
}

/// Checks a whole population against the space.
pub fn all_valid(configs: &[Configuration], space: &ConfigurationSpace) -> bool {
    configs.iter().all(|c| validate(c, space).is_valid())
}

/// Size in bytes, for budget bookkeeping in tests and reports.
pub fn size_bytes(c: &Configuration) -> u128 {
    model_size(&c.shape().expect("valid configuration")).total_bytes()
}
