use super::{validate, Configuration, ConfigurationSpace, Domain, Param, SpaceError, Value};

/// Numeric view of a configuration: one component per canonical dimension.
pub type EncodedConfiguration = Vec<f64>;

/// Encodes a valid configuration.
///
/// Numeric values are used as they are; categorical values become their
/// option index. With `normalize`, each component is mapped affinely onto
/// `[0, 1]` using the dimension's bounds, and single-valued dimensions map to 0.
pub fn encode(
    c: &Configuration,
    space: &ConfigurationSpace,
    normalize: bool,
) -> Result<EncodedConfiguration, SpaceError> {
    let verdict = validate(c, space);
    if let Some(v) = verdict.violations.first() {
        return Err(SpaceError::InvalidConfiguration(v.to_string()));
    }
    Ok(space
        .dimensions()
        .iter()
        .map(|d| {
            let raw = raw_component(d.domain(), c.get(d.param()));
            if normalize {
                let (lo, hi) = d.domain().encoding_bounds();
                if hi > lo {
                    (raw - lo) / (hi - lo)
                } else {
                    0.0
                }
            } else {
                raw
            }
        })
        .collect())
}

fn raw_component(domain: &Domain, value: &Value) -> f64 {
    match value {
        Value::Int(x) => *x as f64,
        Value::Real(x) => *x,
        Value::Text(_) => domain.position(value).expect("validated") as f64,
    }
}

/// Inverse of [`encode`]. Components are snapped to the nearest domain member;
/// a component that lies farther than rounding noise from every member is an error.
pub fn decode(
    x: &[f64],
    space: &ConfigurationSpace,
    normalized: bool,
) -> Result<Configuration, SpaceError> {
    if x.len() != Param::COUNT {
        return Err(SpaceError::EncodingLength {
            expected: Param::COUNT,
            found: x.len(),
        });
    }
    let mut values = Vec::with_capacity(Param::COUNT);
    for (d, &component) in space.dimensions().iter().zip(x) {
        let raw = if normalized {
            let (lo, hi) = d.domain().encoding_bounds();
            lo + component * (hi - lo)
        } else {
            component
        };
        let bad = || SpaceError::BadValue {
            dim: d.name().to_string(),
            value: component.to_string(),
        };
        if !raw.is_finite() {
            return Err(bad());
        }
        let value = match d.domain() {
            Domain::IntRange { .. } | Domain::IntSet(_) => {
                let r = raw.round();
                if (r - raw).abs() > 1e-6 {
                    return Err(bad());
                }
                Value::Int(r as i64)
            }
            Domain::RealSet(v) => {
                let nearest = v
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - raw).abs().total_cmp(&(b - raw).abs()))
                    .expect("non-empty");
                if (nearest - raw).abs() > 1e-9 * nearest.abs().max(1e-12) {
                    return Err(bad());
                }
                Value::Real(nearest)
            }
            Domain::Options(opts) => {
                let r = raw.round();
                if (r - raw).abs() > 1e-6 || r < 0.0 || r as usize >= opts.len() {
                    return Err(bad());
                }
                Value::Text(opts[r as usize].clone())
            }
        };
        if !d.domain().contains(&value) {
            return Err(bad());
        }
        values.push(value);
    }
    let values: [Value; Param::COUNT] = values.try_into().expect("13 components");
    Ok(Configuration::from_values(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::sample_uniform;
    use proptest::prelude::*;

    fn base() -> Configuration {
        let space = ConfigurationSpace::listing3();
        let mut c = space.first_configuration();
        c.set(Param::HiddenSize, Value::Int(768));
        c.set(Param::NumAttentionHeads, Value::Int(12));
        c
    }

    #[test]
    fn tokenizer_encodes_as_option_index() {
        let space = ConfigurationSpace::listing3();
        let mut c = base();
        let e = encode(&c, &space, false).unwrap();
        assert_eq!(e[Param::Tokenizer.index()], 0.0);
        c.set(Param::Tokenizer, Value::Text("Word".into()));
        let e = encode(&c, &space, false).unwrap();
        assert_eq!(e[Param::Tokenizer.index()], 3.0);
    }

    #[test]
    fn lower_bound_normalizes_to_zero() {
        let space = ConfigurationSpace::listing3();
        let c = base();
        let e = encode(&c, &space, true).unwrap();
        assert_eq!(e[Param::VocabSize.index()], 0.0);
        assert_eq!(e[Param::HiddenSize.index()], 1.0);
        assert!(e.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn constant_dimension_normalizes_to_zero() {
        let space = ConfigurationSpace::listing3()
            .with_domain(Param::BatchSize, Domain::IntSet(vec![32]))
            .unwrap();
        let mut c = base();
        c.set(Param::BatchSize, Value::Int(32));
        let e = encode(&c, &space, true).unwrap();
        assert_eq!(e[Param::BatchSize.index()], 0.0);
    }

    #[test]
    fn invalid_configuration_is_rejected() {
        let space = ConfigurationSpace::listing3();
        let mut c = base();
        c.set(Param::HiddenSize, Value::Int(100));
        assert!(matches!(
            encode(&c, &space, false),
            Err(SpaceError::InvalidConfiguration(_))
        ));
    }

    #[test]
    fn decode_rejects_off_grid_values() {
        let space = ConfigurationSpace::listing3();
        let mut e = encode(&base(), &space, false).unwrap();
        e[Param::HiddenDropoutProb.index()] = 0.15;
        assert!(decode(&e, &space, false).is_err());
        assert!(decode(&e[..5], &space, false).is_err());
    }

    #[test]
    fn round_trip_thousand_samples() {
        let space = ConfigurationSpace::listing3();
        for c in sample_uniform(&space, 1000, 99).unwrap() {
            let raw = encode(&c, &space, false).unwrap();
            assert_eq!(decode(&raw, &space, false).unwrap(), c);
            let norm = encode(&c, &space, true).unwrap();
            assert!(norm.iter().all(|x| (0.0..=1.0).contains(x)));
            assert_eq!(decode(&norm, &space, true).unwrap(), c);
        }
    }

    proptest! {
        #[test]
        fn round_trip_any_seed(seed in any::<u64>()) {
            let space = ConfigurationSpace::listing3();
            let c = sample_uniform(&space, 1, seed).unwrap().pop().unwrap();
            let e = encode(&c, &space, true).unwrap();
            prop_assert_eq!(decode(&e, &space, true).unwrap(), c);
        }
    }
}
