//! Size-budget pruning of a configuration space.
//!
//! The model size is strictly increasing in every size-relevant setting, so
//! the smallest model containing a given value is the one with every other
//! setting at its minimum. A value survives pruning iff that corner fits the
//! budget, and the survivors of each dimension form a prefix of its sorted
//! values. The space is split into independent subspaces which are solved in
//! parallel and merged per dimension; the merged result does not depend on
//! the number of subspaces.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cost::{model_size, BYTES_PER_MB};
use crate::space::{ConfigurationSpace, Domain, ModelShape, Param, SpaceError, Value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PruneError {
    #[error("no configuration fits within {budget_mb} MB")]
    Infeasible { budget_mb: f64 },
    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),
    #[error("value {value} is outside the domain of `{dim}`")]
    ValueOutOfDomain { dim: String, value: String },
    #[error("size budget must be a positive finite number of MB, got {0}")]
    InvalidBudget(f64),
    #[error("partition count must be at least 1")]
    ZeroPartitions,
    #[error("merged retained values of `{0}` are not contiguous")]
    NonContiguous(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Upper bound on serialized model size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeConstraint {
    budget_mb: f64,
}

impl SizeConstraint {
    pub const DEFAULT_BUDGET_MB: f64 = 3.0;

    pub fn new(budget_mb: f64) -> Result<Self, PruneError> {
        if budget_mb.is_finite() && budget_mb > 0.0 {
            Ok(Self { budget_mb })
        } else {
            Err(PruneError::InvalidBudget(budget_mb))
        }
    }

    pub fn budget_mb(&self) -> f64 {
        self.budget_mb
    }

    /// `bytes <= budget_mb * 2^20`, compared in bytes.
    pub fn admits_bytes(&self, bytes: u128) -> bool {
        bytes as f64 <= self.budget_mb * BYTES_PER_MB as f64
    }

    pub fn admits(&self, shape: &ModelShape) -> bool {
        self.admits_bytes(model_size(shape).total_bytes())
    }
}

impl Default for SizeConstraint {
    fn default() -> Self {
        Self {
            budget_mb: Self::DEFAULT_BUDGET_MB,
        }
    }
}

/// Shape with every architecture setting at its domain minimum.
pub fn min_corner(space: &ConfigurationSpace) -> ModelShape {
    let min = |p: Param| space.domain(p).int_min().expect("integer domain") as u64;
    ModelShape {
        vocab_size: min(Param::VocabSize),
        num_layers: min(Param::NumHiddenLayers),
        hidden_size: min(Param::HiddenSize),
        intermediate_size: min(Param::IntermediateSize),
        num_heads: min(Param::NumAttentionHeads),
        max_seq_len: min(Param::MaxSequenceLength),
    }
}

/// Whether some configuration with `dim = value` fits the budget.
pub fn is_feasible_value(
    space: &ConfigurationSpace,
    dim: &str,
    value: &Value,
    constraint: &SizeConstraint,
) -> Result<bool, PruneError> {
    let param = Param::from_name(dim).ok_or_else(|| PruneError::UnknownDimension(dim.into()))?;
    if !space.domain(param).contains(value) {
        return Err(PruneError::ValueOutOfDomain {
            dim: dim.into(),
            value: value.to_string(),
        });
    }
    let mut corner = min_corner(space);
    if param.is_size_relevant() {
        let x = value.as_int().expect("integer domain") as u64;
        corner.set(param, x);
    }
    Ok(constraint.admits(&corner))
}

/// One slice of a partitioned space.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub index: usize,
    pub split: Param,
    pub space: ConfigurationSpace,
}

/// The size-relevant dimension with the most values; ties go to the earlier
/// canonical dimension, so vocabulary size wins on the shipped space.
fn split_dimension(space: &ConfigurationSpace) -> Param {
    Param::SIZE_RELEVANT
        .into_iter()
        .fold(None::<(Param, u128)>, |best, p| {
            let n = space.domain(p).cardinality();
            match best {
                Some((_, m)) if m >= n => best,
                _ => Some((p, n)),
            }
        })
        .map(|(p, _)| p)
        .expect("five size dimensions")
}

/// Splits `space` into `n` disjoint contiguous slices along its largest
/// size-relevant dimension. Returns fewer slices when that dimension has
/// fewer than `n` values.
pub fn partition(space: &ConfigurationSpace, n: usize) -> Result<Vec<Subspace>, PruneError> {
    if n == 0 {
        return Err(PruneError::ZeroPartitions);
    }
    let split = split_dimension(space);
    let domain = space.domain(split);
    let card = domain.cardinality();
    let k = (n as u128).min(card) as usize;
    let base = card / k as u128;
    let extra = card % k as u128;

    let mut out = Vec::with_capacity(k);
    let mut start: u128 = 0;
    for index in 0..k {
        let len = base + u128::from((index as u128) < extra);
        let chunk = match domain {
            Domain::IntRange { min, .. } => Domain::IntRange {
                min: min + start as i64,
                max: min + (start + len - 1) as i64,
            },
            Domain::IntSet(v) => Domain::IntSet(v[start as usize..(start + len) as usize].to_vec()),
            _ => unreachable!("size dimensions are integer"),
        };
        out.push(Subspace {
            index,
            split,
            space: space.with_domain(split, chunk)?,
        });
        start += len;
    }
    Ok(out)
}

/// Largest value of `param` that still fits when all other size settings sit
/// at the subspace's minimum corner.
fn max_feasible(
    space: &ConfigurationSpace,
    corner: &ModelShape,
    param: Param,
    constraint: &SizeConstraint,
) -> Option<i64> {
    let values = space.domain(param).int_values_sorted().expect("integer domain");
    let fits = |x: i64| {
        let mut s = *corner;
        s.set(param, x as u64);
        constraint.admits(&s)
    };
    // feasible values form a prefix of the sorted list
    let cut = values.partition_point(|&x| fits(x));
    cut.checked_sub(1).map(|i| values[i])
}

type Retained = [Option<Domain>; 5];

fn solve_subspace(space: &ConfigurationSpace, constraint: &SizeConstraint) -> Option<Retained> {
    let corner = min_corner(space);
    if !constraint.admits(&corner) {
        return None;
    }
    Some(Param::SIZE_RELEVANT.map(|p| {
        let t = max_feasible(space, &corner, p, constraint).expect("corner is feasible");
        space.domain(p).restrict_int_at_most(t)
    }))
}

fn merge(param: Param, parent: &Domain, parts: &[&Domain]) -> Result<Domain, PruneError> {
    match parent {
        Domain::IntRange { .. } => {
            let mut spans: Vec<(i64, i64)> = parts
                .iter()
                .map(|d| match d {
                    Domain::IntRange { min, max } => (*min, *max),
                    _ => unreachable!("range parent yields range parts"),
                })
                .collect();
            spans.sort_unstable();
            let (lo, mut hi) = spans[0];
            for &(a, b) in &spans[1..] {
                if a > hi + 1 {
                    return Err(PruneError::NonContiguous(param.name().into()));
                }
                hi = hi.max(b);
            }
            Ok(Domain::IntRange { min: lo, max: hi })
        }
        Domain::IntSet(values) => Ok(Domain::IntSet(
            values
                .iter()
                .copied()
                .filter(|x| parts.iter().any(|d| d.contains(&Value::Int(*x))))
                .collect(),
        )),
        _ => unreachable!("size dimensions are integer"),
    }
}

/// Removes every size-relevant value that cannot appear in any configuration
/// within the budget. Other dimensions pass through unchanged.
pub fn prune(
    space: &ConfigurationSpace,
    constraint: &SizeConstraint,
    partitions: usize,
) -> Result<ConfigurationSpace, PruneError> {
    let subspaces = partition(space, partitions)?;
    let solved: Vec<Retained> = subspaces
        .par_iter()
        .filter_map(|sub| solve_subspace(&sub.space, constraint))
        .collect();
    if solved.is_empty() {
        return Err(PruneError::Infeasible {
            budget_mb: constraint.budget_mb(),
        });
    }
    let mut out = space.clone();
    for (k, param) in Param::SIZE_RELEVANT.into_iter().enumerate() {
        let parts: Vec<&Domain> = solved.iter().filter_map(|r| r[k].as_ref()).collect();
        let merged = merge(param, space.domain(param), &parts)?;
        out = out.with_domain(param, merged)?;
    }
    Ok(out)
}

/// Per-dimension summary of a pruning run.
#[derive(Debug, Clone, Serialize)]
pub struct PruneReport {
    pub budget_mb: f64,
    pub original_cardinality: u128,
    pub pruned_cardinality: u128,
    pub ratio: f64,
    pub dimensions: Vec<DimensionChange>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionChange {
    pub name: &'static str,
    pub original: serde_json::Value,
    pub retained: serde_json::Value,
    pub pruned: bool,
}

impl PruneReport {
    pub fn new(
        original: &ConfigurationSpace,
        pruned: &ConfigurationSpace,
        constraint: &SizeConstraint,
    ) -> Self {
        let orig_json = original.to_json_value();
        let pruned_json = pruned.to_json_value();
        let dimensions = Param::ALL
            .iter()
            .map(|p| {
                let a = orig_json[p.name()].clone();
                let b = pruned_json[p.name()].clone();
                DimensionChange {
                    name: p.name(),
                    pruned: a != b,
                    original: a,
                    retained: b,
                }
            })
            .collect();
        Self {
            budget_mb: constraint.budget_mb(),
            original_cardinality: original.cardinality(),
            pruned_cardinality: pruned.cardinality(),
            ratio: pruned.cardinality() as f64 / original.cardinality() as f64,
            dimensions,
        }
    }
}
