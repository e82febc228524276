use std::fmt;
use std::hash::{Hash, Hasher};

use serde_json::{Map, Number};

use super::{ConfigurationSpace, Param, SpaceError};

/// A single setting value.
#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(x) => Some(*x),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Int(x) => serde_json::Value::Number((*x).into()),
            Value::Real(x) => Number::from_f64(*x)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Value::Text(s) => serde_json::Value::String(s.clone()),
        }
    }
}

// Reals compare by bit pattern so that configurations can key hash maps.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Real(a), Value::Real(b)) => a.to_bits() == b.to_bits(),
            (Value::Text(a), Value::Text(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Value::Int(x) => {
                0u8.hash(state);
                x.hash(state);
            }
            Value::Real(x) => {
                1u8.hash(state);
                x.to_bits().hash(state);
            }
            Value::Text(s) => {
                2u8.hash(state);
                s.hash(state);
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(x) => write!(f, "{x}"),
            Value::Real(x) => write!(f, "{x}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

/// The architecture-shaping integers of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelShape {
    pub vocab_size: u64,
    pub num_layers: u64,
    pub hidden_size: u64,
    pub intermediate_size: u64,
    pub num_heads: u64,
    pub max_seq_len: u64,
}

impl ModelShape {
    pub fn get(&self, param: Param) -> Option<u64> {
        Some(match param {
            Param::VocabSize => self.vocab_size,
            Param::NumHiddenLayers => self.num_layers,
            Param::HiddenSize => self.hidden_size,
            Param::IntermediateSize => self.intermediate_size,
            Param::NumAttentionHeads => self.num_heads,
            Param::MaxSequenceLength => self.max_seq_len,
            _ => return None,
        })
    }

    pub fn set(&mut self, param: Param, value: u64) {
        match param {
            Param::VocabSize => self.vocab_size = value,
            Param::NumHiddenLayers => self.num_layers = value,
            Param::HiddenSize => self.hidden_size = value,
            Param::IntermediateSize => self.intermediate_size = value,
            Param::NumAttentionHeads => self.num_heads = value,
            Param::MaxSequenceLength => self.max_seq_len = value,
            _ => {}
        }
    }
}

/// One concrete assignment of all thirteen settings, stored in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    values: [Value; Param::COUNT],
}

impl Configuration {
    pub fn from_values(values: [Value; Param::COUNT]) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[Value; Param::COUNT] {
        &self.values
    }

    pub fn get(&self, param: Param) -> &Value {
        &self.values[param.index()]
    }

    pub fn set(&mut self, param: Param, value: Value) {
        self.values[param.index()] = value;
    }

    pub fn int(&self, param: Param) -> Option<i64> {
        self.get(param).as_int()
    }

    /// Extracts the architecture integers. Fails when any of them is not a
    /// positive integer.
    pub fn shape(&self) -> Result<ModelShape, SpaceError> {
        let get = |p: Param| -> Result<u64, SpaceError> {
            match self.get(p) {
                Value::Int(x) if *x >= 1 => Ok(*x as u64),
                other => Err(SpaceError::NotAnInteger {
                    dim: p.name().to_string(),
                    value: other.to_string(),
                }),
            }
        };
        Ok(ModelShape {
            vocab_size: get(Param::VocabSize)?,
            num_layers: get(Param::NumHiddenLayers)?,
            hidden_size: get(Param::HiddenSize)?,
            intermediate_size: get(Param::IntermediateSize)?,
            num_heads: get(Param::NumAttentionHeads)?,
            max_seq_len: get(Param::MaxSequenceLength)?,
        })
    }

    pub fn with_shape(&self, shape: &ModelShape) -> Configuration {
        let mut c = self.clone();
        for p in Param::ALL.into_iter().filter(|p| p.is_architectural()) {
            c.set(p, Value::Int(shape.get(p).expect("architectural") as i64));
        }
        c
    }

    /// JSON object keyed by setting name, in canonical order.
    pub fn to_json(&self) -> Map<String, serde_json::Value> {
        Param::ALL
            .iter()
            .map(|p| (p.name().to_string(), self.get(*p).to_json()))
            .collect()
    }

    /// Reads a configuration object, typing each value by its dimension's domain.
    pub fn from_json(
        obj: &Map<String, serde_json::Value>,
        space: &ConfigurationSpace,
    ) -> Result<Self, SpaceError> {
        if let Some(unknown) = obj.keys().find(|k| Param::from_name(k).is_none()) {
            return Err(SpaceError::UnknownDimension(unknown.clone()));
        }
        let mut out = Vec::with_capacity(Param::COUNT);
        for dim in space.dimensions() {
            let raw = obj
                .get(dim.name())
                .ok_or_else(|| SpaceError::MissingDimension(dim.name().to_string()))?;
            let bad = || SpaceError::BadValue {
                dim: dim.name().to_string(),
                value: raw.to_string(),
            };
            let value = match dim.domain() {
                super::Domain::IntRange { .. } | super::Domain::IntSet(_) => {
                    Value::Int(raw.as_i64().ok_or_else(bad)?)
                }
                super::Domain::RealSet(_) => Value::Real(raw.as_f64().ok_or_else(bad)?),
                super::Domain::Options(_) => Value::Text(raw.as_str().ok_or_else(bad)?.to_string()),
            };
            out.push(value);
        }
        let values: [Value; Param::COUNT] = out.try_into().expect("13 dimensions");
        Ok(Self { values })
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let obj = serde_json::Value::Object(self.to_json());
        write!(f, "{obj}")
    }
}

/// A rule broken by a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    OutOfRange { param: Param, value: String },
    HeadsDoNotDivideHidden { hidden: i64, heads: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRange { param, value } => {
                write!(f, "{param}: value {value} out of range")
            }
            Violation::HeadsDoNotDivideHidden { hidden, heads } => {
                write!(f, "hidden_size {hidden} not divisible by num_attention_heads {heads}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every value against its domain and the head/hidden alignment rule.
pub fn validate(c: &Configuration, space: &ConfigurationSpace) -> Verdict {
    let mut violations = Vec::new();
    for dim in space.dimensions() {
        let v = c.get(dim.param());
        if !dim.domain().contains(v) {
            violations.push(Violation::OutOfRange {
                param: dim.param(),
                value: v.to_string(),
            });
        }
    }
    if let (Some(h), Some(a)) = (c.int(Param::HiddenSize), c.int(Param::NumAttentionHeads)) {
        if a == 0 || h % a != 0 {
            violations.push(Violation::HeadsDoNotDivideHidden { hidden: h, heads: a });
        }
    }
    Verdict { violations }
}
