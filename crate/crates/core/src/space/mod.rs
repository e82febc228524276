//! Declarative configuration space: dimensions, configurations, validation,
//! numeric encoding and seeded uniform sampling.

mod configuration;
mod dimension;
mod encoding;
mod io;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use configuration::{validate, Configuration, ModelShape, Value, Verdict, Violation};
pub use dimension::{Dimension, Domain, Param};
pub use encoding::{decode, encode, EncodedConfiguration};
pub use io::parse_space;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("invalid space document: {0}")]
    Syntax(String),
    #[error("missing dimension `{0}`")]
    MissingDimension(String),
    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),
    #[error("dimension `{dim}`: malformed domain: {reason}")]
    MalformedDomain { dim: String, reason: String },
    #[error("dimension `{0}`: empty option list")]
    EmptyDomain(String),
    #[error("space cardinality overflows 128 bits")]
    CardinalityOverflow,
    #[error("dimension `{dim}`: `{value}` is not a positive integer")]
    NotAnInteger { dim: String, value: String },
    #[error("dimension `{dim}`: bad value {value}")]
    BadValue { dim: String, value: String },
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("encoded vector has {found} components, expected {expected}")]
    EncodingLength { expected: usize, found: usize },
    #[error("no configuration in this space can satisfy: {0}")]
    Unsatisfiable(String),
}

/// A flat product of the thirteen canonical dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationSpace {
    dims: Vec<Dimension>,
    cardinality: u128,
}

const LISTING3: &str = include_str!("../../../../spaces/listing3.json");

impl ConfigurationSpace {
    /// Builds a space from dimensions given in canonical order.
    pub fn new(dims: Vec<Dimension>) -> Result<Self, SpaceError> {
        for (i, p) in Param::ALL.iter().enumerate() {
            match dims.get(i) {
                Some(d) if d.param() == *p => {}
                Some(d) if dims.iter().any(|e| e.param() == *p) => {
                    return Err(SpaceError::MalformedDomain {
                        dim: d.name().to_string(),
                        reason: "dimensions out of canonical order".into(),
                    })
                }
                _ => return Err(SpaceError::MissingDimension(p.name().to_string())),
            }
        }
        if dims.len() > Param::COUNT {
            return Err(SpaceError::MalformedDomain {
                dim: dims[Param::COUNT].name().to_string(),
                reason: "dimension listed twice".into(),
            });
        }
        let cardinality = dims.iter().try_fold(1u128, |acc, d| {
            acc.checked_mul(d.domain().cardinality())
                .ok_or(SpaceError::CardinalityOverflow)
        })?;
        Ok(Self { dims, cardinality })
    }

    /// The shipped thirteen-dimension space for small code models.
    pub fn listing3() -> Self {
        parse_space(LISTING3).expect("shipped space file is valid")
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn dimension(&self, param: Param) -> &Dimension {
        &self.dims[param.index()]
    }

    pub fn domain(&self, param: Param) -> &Domain {
        self.dims[param.index()].domain()
    }

    /// Exact number of distinct configurations (alignment rule not applied).
    pub fn cardinality(&self) -> u128 {
        self.cardinality
    }

    /// Copy of this space with one domain replaced.
    pub fn with_domain(&self, param: Param, domain: Domain) -> Result<Self, SpaceError> {
        let mut dims = self.dims.clone();
        dims[param.index()] = Dimension::new(param, domain)?;
        Self::new(dims)
    }

    /// Every dimension's domain is a subset of the matching domain in `parent`.
    pub fn is_subspace_of(&self, parent: &ConfigurationSpace) -> bool {
        self.dims
            .iter()
            .zip(parent.dims.iter())
            .all(|(d, p)| d.domain().is_subset_of(p.domain()))
    }

    /// Hex SHA-256 over the compact canonical document.
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.to_json_compact().as_bytes()))
    }

    /// Configuration made of each dimension's first value.
    pub fn first_configuration(&self) -> Configuration {
        let values: [Value; Param::COUNT] =
            std::array::from_fn(|i| self.dims[i].domain().value_at(0).expect("non-empty"));
        Configuration::from_values(values)
    }

    /// The `index`-th configuration in mixed-radix order, last dimension
    /// fastest. Includes configurations that break the alignment rule.
    pub fn configuration_at(&self, index: u128) -> Option<Configuration> {
        if index >= self.cardinality {
            return None;
        }
        let mut rest = index;
        let mut values: [Value; Param::COUNT] = std::array::from_fn(|_| Value::Int(0));
        for (i, dim) in self.dims.iter().enumerate().rev() {
            let k = dim.domain().cardinality();
            values[i] = dim.domain().value_at((rest % k) as usize)?;
            rest /= k;
        }
        Some(Configuration::from_values(values))
    }

    pub fn sample_raw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let values: [Value; Param::COUNT] =
            std::array::from_fn(|i| self.dims[i].domain().sample(rng));
        Configuration::from_values(values)
    }
}

/// Draws `n` configurations, each dimension independently uniform, then
/// repairs head/hidden alignment. Deterministic for a fixed seed.
pub fn sample_uniform(
    space: &ConfigurationSpace,
    n: usize,
    seed: u64,
) -> Result<Vec<Configuration>, SpaceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let raw = space.sample_raw(&mut rng);
            crate::tuner::correct(&raw, space, None, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc_with(overrides: &[(&str, &str)]) -> String {
        let base: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(LISTING3).unwrap();
        let mut m = base;
        for (k, v) in overrides {
            m.insert(k.to_string(), serde_json::from_str(v).unwrap());
        }
        serde_json::Value::Object(m).to_string()
    }

    fn single_value_space() -> ConfigurationSpace {
        parse_space(
            r#"{
            "tokenizer": ["WordPiece"], "vocab_size": {"min": 1000, "max": 1000},
            "num_hidden_layers": [2], "hidden_size": [64], "hidden_act": ["GELU"],
            "hidden_dropout_prob": [0.1], "intermediate_size": [128],
            "num_attention_heads": [4], "attention_probs_dropout_prob": [0.1],
            "max_sequence_length": [256], "position_embedding_type": ["absolute"],
            "learning_rate": [1e-4], "batch_size": [32]}"#,
        )
        .unwrap()
    }

    #[test]
    fn listing3_cardinality() {
        let space = ConfigurationSpace::listing3();
        let n = space.cardinality();
        assert_eq!(n, 45_327_011_734_820_390_400);
        assert!((4.0e19..=5.0e19).contains(&(n as f64)));
        // rounds to the advertised 4.5e19
        assert_eq!(format!("{:.1e}", n as f64), "4.5e19");
    }

    #[test]
    fn missing_dimension_is_named() {
        let mut m: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(LISTING3).unwrap();
        m.remove("tokenizer");
        let err = parse_space(&serde_json::Value::Object(m).to_string()).unwrap_err();
        assert_eq!(err, SpaceError::MissingDimension("tokenizer".into()));
        assert!(err.to_string().contains("tokenizer"));
    }

    #[test]
    fn parse_errors_name_the_dimension() {
        let err = parse_space(&doc_with(&[("hidden_act", "[]")])).unwrap_err();
        assert_eq!(err, SpaceError::EmptyDomain("hidden_act".into()));

        let err = parse_space(&doc_with(&[("vocab_size", r#"{"min": 5, "max": 1}"#)]))
            .unwrap_err();
        assert!(matches!(err, SpaceError::MalformedDomain { ref dim, .. } if dim == "vocab_size"));

        let err = parse_space(&doc_with(&[("hidden_size", r#"["big"]"#)])).unwrap_err();
        assert!(matches!(err, SpaceError::MalformedDomain { ref dim, .. } if dim == "hidden_size"));

        let err = parse_space(&doc_with(&[("flux", "[1]")])).unwrap_err();
        assert_eq!(err, SpaceError::UnknownDimension("flux".into()));

        assert!(matches!(parse_space("[1, 2]"), Err(SpaceError::Syntax(_))));
    }

    #[test]
    fn single_value_space_has_cardinality_one() {
        assert_eq!(single_value_space().cardinality(), 1);
    }

    #[test]
    fn small_product() {
        let s = single_value_space()
            .with_domain(Param::Tokenizer, Domain::Options(vec!["a".into(), "b".into()]))
            .unwrap()
            .with_domain(Param::BatchSize, Domain::IntSet(vec![8, 16, 32]))
            .unwrap()
            .with_domain(Param::LearningRate, Domain::RealSet(vec![0.1, 0.2, 0.3, 0.4]))
            .unwrap();
        assert_eq!(s.cardinality(), 24);
    }

    #[test]
    fn validate_alignment_and_ranges() {
        let space = ConfigurationSpace::listing3();
        let mut c = space.first_configuration();
        c.set(Param::HiddenSize, Value::Int(768));
        c.set(Param::NumAttentionHeads, Value::Int(12));
        assert!(validate(&c, &space).is_valid());

        c.set(Param::HiddenSize, Value::Int(100));
        let v = validate(&c, &space);
        assert_eq!(
            v.violations,
            vec![Violation::HeadsDoNotDivideHidden { hidden: 100, heads: 12 }]
        );

        c.set(Param::HiddenSize, Value::Int(768));
        c.set(Param::VocabSize, Value::Int(60000));
        let v = validate(&c, &space);
        assert_eq!(v.violations.len(), 1);
        assert!(matches!(v.violations[0], Violation::OutOfRange { param: Param::VocabSize, .. }));
        assert!(v.violations[0].to_string().contains("out of range"));
    }

    #[test]
    fn sampling_is_seeded_and_valid() {
        let space = ConfigurationSpace::listing3();
        let a = sample_uniform(&space, 20, 7).unwrap();
        let b = sample_uniform(&space, 20, 7).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(a, b);
        assert_ne!(a, sample_uniform(&space, 20, 8).unwrap());

        let many = sample_uniform(&space, 1000, 11).unwrap();
        assert!(many.iter().all(|c| validate(c, &space).is_valid()));
    }

    #[test]
    fn subspace_relation() {
        let space = ConfigurationSpace::listing3();
        let sub = space
            .with_domain(Param::VocabSize, Domain::IntRange { min: 1000, max: 2000 })
            .unwrap();
        assert!(sub.is_subspace_of(&space));
        assert!(!space.is_subspace_of(&sub));
        assert!(sub.cardinality() <= space.cardinality());
    }

    #[test]
    fn checksum_ignores_key_order() {
        let space = ConfigurationSpace::listing3();
        let m: serde_json::Map<String, serde_json::Value> = serde_json::from_str(LISTING3).unwrap();
        let reversed: serde_json::Map<String, serde_json::Value> =
            m.into_iter().rev().collect();
        let shuffled = parse_space(&serde_json::Value::Object(reversed).to_string()).unwrap();
        assert_eq!(shuffled, space);
        assert_eq!(shuffled.checksum(), space.checksum());
    }
}
