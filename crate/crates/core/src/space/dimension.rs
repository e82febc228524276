use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{SpaceError, Value};

/// The thirteen tunable settings, in canonical order.
///
/// The canonical order fixes the position of every setting in a
/// [`Configuration`](super::Configuration), in encoded vectors, and in the
/// crossover cut-point coordinate system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    Tokenizer,
    VocabSize,
    NumHiddenLayers,
    HiddenSize,
    HiddenAct,
    HiddenDropoutProb,
    IntermediateSize,
    NumAttentionHeads,
    AttentionProbsDropoutProb,
    MaxSequenceLength,
    PositionEmbeddingType,
    LearningRate,
    BatchSize,
}

impl Param {
    pub const COUNT: usize = 13;

    pub const ALL: [Param; Param::COUNT] = [
        Param::Tokenizer,
        Param::VocabSize,
        Param::NumHiddenLayers,
        Param::HiddenSize,
        Param::HiddenAct,
        Param::HiddenDropoutProb,
        Param::IntermediateSize,
        Param::NumAttentionHeads,
        Param::AttentionProbsDropoutProb,
        Param::MaxSequenceLength,
        Param::PositionEmbeddingType,
        Param::LearningRate,
        Param::BatchSize,
    ];

    /// Settings that enter the model-size formula.
    pub const SIZE_RELEVANT: [Param; 5] = [
        Param::VocabSize,
        Param::NumHiddenLayers,
        Param::HiddenSize,
        Param::IntermediateSize,
        Param::MaxSequenceLength,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Tokenizer => "tokenizer",
            Param::VocabSize => "vocab_size",
            Param::NumHiddenLayers => "num_hidden_layers",
            Param::HiddenSize => "hidden_size",
            Param::HiddenAct => "hidden_act",
            Param::HiddenDropoutProb => "hidden_dropout_prob",
            Param::IntermediateSize => "intermediate_size",
            Param::NumAttentionHeads => "num_attention_heads",
            Param::AttentionProbsDropoutProb => "attention_probs_dropout_prob",
            Param::MaxSequenceLength => "max_sequence_length",
            Param::PositionEmbeddingType => "position_embedding_type",
            Param::LearningRate => "learning_rate",
            Param::BatchSize => "batch_size",
        }
    }

    pub fn from_name(name: &str) -> Option<Param> {
        Param::ALL.iter().copied().find(|p| p.name() == name)
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// Architecture settings that must be positive integers
    /// (the five size-relevant ones plus the attention head count).
    pub fn is_architectural(self) -> bool {
        matches!(
            self,
            Param::VocabSize
                | Param::NumHiddenLayers
                | Param::HiddenSize
                | Param::IntermediateSize
                | Param::NumAttentionHeads
                | Param::MaxSequenceLength
        )
    }

    pub fn is_size_relevant(self) -> bool {
        self.is_architectural() && self != Param::NumAttentionHeads
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The set of values a single setting may take.
///
/// Order of `IntSet`, `RealSet` and `Options` entries is significant: it is
/// the index used when a categorical value is encoded.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Inclusive integer range.
    IntRange { min: i64, max: i64 },
    IntSet(Vec<i64>),
    RealSet(Vec<f64>),
    Options(Vec<String>),
}

impl Domain {
    pub fn cardinality(&self) -> u128 {
        match self {
            Domain::IntRange { min, max } => (*max as i128 - *min as i128 + 1) as u128,
            Domain::IntSet(v) => v.len() as u128,
            Domain::RealSet(v) => v.len() as u128,
            Domain::Options(v) => v.len() as u128,
        }
    }

    pub fn contains(&self, value: &Value) -> bool {
        match (self, value) {
            (Domain::IntRange { min, max }, Value::Int(x)) => min <= x && x <= max,
            (Domain::IntSet(v), Value::Int(x)) => v.contains(x),
            (Domain::RealSet(v), Value::Real(x)) => v.iter().any(|y| y.to_bits() == x.to_bits()),
            (Domain::Options(v), Value::Text(s)) => v.iter().any(|o| o == s),
            _ => false,
        }
    }

    /// Zero-based position of `value` within the domain's enumeration order.
    pub fn position(&self, value: &Value) -> Option<usize> {
        match (self, value) {
            (Domain::IntRange { min, max }, Value::Int(x)) if min <= x && x <= max => {
                Some((*x - *min) as usize)
            }
            (Domain::IntSet(v), Value::Int(x)) => v.iter().position(|y| y == x),
            (Domain::RealSet(v), Value::Real(x)) => {
                v.iter().position(|y| y.to_bits() == x.to_bits())
            }
            (Domain::Options(v), Value::Text(s)) => v.iter().position(|o| o == s),
            _ => None,
        }
    }

    /// Value at `index` in enumeration order.
    pub fn value_at(&self, index: usize) -> Option<Value> {
        match self {
            Domain::IntRange { min, max } => {
                let x = min.checked_add(i64::try_from(index).ok()?)?;
                (x <= *max).then_some(Value::Int(x))
            }
            Domain::IntSet(v) => v.get(index).map(|x| Value::Int(*x)),
            Domain::RealSet(v) => v.get(index).map(|x| Value::Real(*x)),
            Domain::Options(v) => v.get(index).map(|s| Value::Text(s.clone())),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match self {
            Domain::IntRange { min, max } => Value::Int(rng.random_range(*min..=*max)),
            Domain::IntSet(v) => Value::Int(*v.choose(rng).expect("non-empty domain")),
            Domain::RealSet(v) => Value::Real(*v.choose(rng).expect("non-empty domain")),
            Domain::Options(v) => Value::Text(v.choose(rng).expect("non-empty domain").clone()),
        }
    }

    /// Uniform draw among integer members strictly below `bound`.
    pub fn sample_int_below<R: Rng + ?Sized>(&self, bound: i64, rng: &mut R) -> Option<i64> {
        match self {
            Domain::IntRange { min, max } => {
                let hi = (*max).min(bound - 1);
                (*min <= hi).then(|| rng.random_range(*min..=hi))
            }
            Domain::IntSet(v) => {
                let below: Vec<i64> = v.iter().copied().filter(|x| *x < bound).collect();
                below.choose(rng).copied()
            }
            _ => None,
        }
    }

    /// Integer members in ascending order. `None` for non-integer domains.
    pub fn int_values_sorted(&self) -> Option<Vec<i64>> {
        match self {
            Domain::IntRange { min, max } => Some((*min..=*max).collect()),
            Domain::IntSet(v) => {
                let mut v = v.clone();
                v.sort_unstable();
                Some(v)
            }
            _ => None,
        }
    }

    pub fn int_min(&self) -> Option<i64> {
        match self {
            Domain::IntRange { min, .. } => Some(*min),
            Domain::IntSet(v) => v.iter().copied().min(),
            _ => None,
        }
    }

    pub fn int_max(&self) -> Option<i64> {
        match self {
            Domain::IntRange { max, .. } => Some(*max),
            Domain::IntSet(v) => v.iter().copied().max(),
            _ => None,
        }
    }

    pub fn is_subset_of(&self, other: &Domain) -> bool {
        match (self, other) {
            (Domain::IntRange { min: a, max: b }, Domain::IntRange { min: c, max: d }) => {
                c <= a && b <= d
            }
            (Domain::IntRange { min, max }, Domain::IntSet(v)) => {
                self.cardinality() <= v.len() as u128 && (*min..=*max).all(|x| v.contains(&x))
            }
            (Domain::IntSet(v), o) => v.iter().all(|x| o.contains(&Value::Int(*x))),
            (Domain::RealSet(v), o) => v.iter().all(|x| o.contains(&Value::Real(*x))),
            (Domain::Options(v), o) => v.iter().all(|s| o.contains(&Value::Text(s.clone()))),
            _ => false,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Domain::IntRange { .. } | Domain::IntSet(_))
    }

    /// Lower and upper bound of the numeric encoding of this domain.
    pub fn encoding_bounds(&self) -> (f64, f64) {
        match self {
            Domain::IntRange { min, max } => (*min as f64, *max as f64),
            Domain::IntSet(v) => {
                let lo = v.iter().copied().min().unwrap_or(0);
                let hi = v.iter().copied().max().unwrap_or(0);
                (lo as f64, hi as f64)
            }
            Domain::RealSet(v) => {
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
            Domain::Options(v) => (0.0, v.len().saturating_sub(1) as f64),
        }
    }

    /// Restrict an integer domain to members `<= threshold`, keeping order.
    pub(crate) fn restrict_int_at_most(&self, threshold: i64) -> Option<Domain> {
        match self {
            Domain::IntRange { min, max } => {
                let hi = (*max).min(threshold);
                (*min <= hi).then_some(Domain::IntRange { min: *min, max: hi })
            }
            Domain::IntSet(v) => {
                let kept: Vec<i64> = v.iter().copied().filter(|x| *x <= threshold).collect();
                (!kept.is_empty()).then_some(Domain::IntSet(kept))
            }
            _ => Some(self.clone()),
        }
    }

    pub(crate) fn check(&self, param: Param) -> Result<(), SpaceError> {
        let malformed = |reason: String| SpaceError::MalformedDomain {
            dim: param.name().to_string(),
            reason,
        };
        match self {
            Domain::IntRange { min, max } => {
                if min > max {
                    return Err(malformed(format!("min {min} exceeds max {max}")));
                }
            }
            Domain::IntSet(v) => {
                if v.is_empty() {
                    return Err(SpaceError::EmptyDomain(param.name().to_string()));
                }
                let mut sorted = v.clone();
                sorted.sort_unstable();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(malformed("duplicate values".into()));
                }
            }
            Domain::RealSet(v) => {
                if v.is_empty() {
                    return Err(SpaceError::EmptyDomain(param.name().to_string()));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(malformed("non-finite value".into()));
                }
                for (i, x) in v.iter().enumerate() {
                    if v[..i].iter().any(|y| y == x) {
                        return Err(malformed("duplicate values".into()));
                    }
                }
            }
            Domain::Options(v) => {
                if v.is_empty() {
                    return Err(SpaceError::EmptyDomain(param.name().to_string()));
                }
                for (i, x) in v.iter().enumerate() {
                    if v[..i].contains(x) {
                        return Err(malformed(format!("duplicate option {x:?}")));
                    }
                }
            }
        }
        if param.is_architectural() {
            match self.int_min() {
                None => return Err(malformed("expected integer range or integer set".into())),
                Some(lo) if lo < 1 => {
                    return Err(malformed(format!("values must be positive, found {lo}")))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// One named axis of the configuration space.
#[derive(Debug, Clone, PartialEq)]
pub struct Dimension {
    param: Param,
    domain: Domain,
}

impl Dimension {
    pub fn new(param: Param, domain: Domain) -> Result<Self, SpaceError> {
        domain.check(param)?;
        Ok(Self { param, domain })
    }

    pub fn param(&self) -> Param {
        self.param
    }

    pub fn name(&self) -> &'static str {
        self.param.name()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }
}
