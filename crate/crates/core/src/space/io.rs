use serde_json::{Map, Value as Json};

use super::{ConfigurationSpace, Dimension, Domain, Param, SpaceError};

/// Parses a space document.
///
/// Categorical dimensions are string arrays, integer ranges are
/// `{"min": .., "max": ..}` objects (both ends inclusive), discrete numeric
/// dimensions are number arrays. Key order is irrelevant; the canonical
/// dimension order governs the result.
pub fn parse_space(document: &str) -> Result<ConfigurationSpace, SpaceError> {
    let root: Json =
        serde_json::from_str(document).map_err(|e| SpaceError::Syntax(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| SpaceError::Syntax("top level must be an object".into()))?;
    if let Some(unknown) = obj.keys().find(|k| Param::from_name(k).is_none()) {
        return Err(SpaceError::UnknownDimension(unknown.clone()));
    }
    let mut dims = Vec::with_capacity(Param::COUNT);
    for param in Param::ALL {
        let raw = obj
            .get(param.name())
            .ok_or_else(|| SpaceError::MissingDimension(param.name().to_string()))?;
        dims.push(Dimension::new(param, parse_domain(param, raw)?)?);
    }
    ConfigurationSpace::new(dims)
}

fn parse_domain(param: Param, raw: &Json) -> Result<Domain, SpaceError> {
    let malformed = |reason: &str| SpaceError::MalformedDomain {
        dim: param.name().to_string(),
        reason: reason.to_string(),
    };
    match raw {
        Json::Object(m) => {
            let bound = |key: &str| {
                m.get(key)
                    .and_then(Json::as_i64)
                    .ok_or_else(|| malformed(&format!("`{key}` must be an integer")))
            };
            if m.len() != 2 {
                return Err(malformed("range object takes exactly `min` and `max`"));
            }
            Ok(Domain::IntRange {
                min: bound("min")?,
                max: bound("max")?,
            })
        }
        Json::Array(items) if items.is_empty() => {
            Err(SpaceError::EmptyDomain(param.name().to_string()))
        }
        Json::Array(items) if items.iter().all(Json::is_string) => Ok(Domain::Options(
            items
                .iter()
                .map(|s| s.as_str().unwrap().to_string())
                .collect(),
        )),
        Json::Array(items) if items.iter().all(|x| x.is_i64()) => Ok(Domain::IntSet(
            items.iter().map(|x| x.as_i64().unwrap()).collect(),
        )),
        Json::Array(items) if items.iter().all(Json::is_number) => Ok(Domain::RealSet(
            items.iter().map(|x| x.as_f64().unwrap()).collect(),
        )),
        Json::Array(_) => Err(malformed("array mixes strings and numbers")),
        _ => Err(malformed("expected an array or a {min, max} object")),
    }
}

fn domain_json(domain: &Domain) -> Json {
    match domain {
        Domain::IntRange { min, max } => {
            let mut m = Map::new();
            m.insert("min".into(), (*min).into());
            m.insert("max".into(), (*max).into());
            Json::Object(m)
        }
        Domain::IntSet(v) => Json::Array(v.iter().map(|x| (*x).into()).collect()),
        Domain::RealSet(v) => Json::Array(
            v.iter()
                .map(|x| serde_json::Number::from_f64(*x).map_or(Json::Null, Json::Number))
                .collect(),
        ),
        Domain::Options(v) => Json::Array(v.iter().map(|s| Json::String(s.clone())).collect()),
    }
}

impl ConfigurationSpace {
    pub fn to_json_value(&self) -> Json {
        Json::Object(
            self.dimensions()
                .iter()
                .map(|d| (d.name().to_string(), domain_json(d.domain())))
                .collect(),
        )
    }

    pub fn to_json_compact(&self) -> String {
        self.to_json_value().to_string()
    }

    /// One dimension per line, canonical order, trailing newline.
    pub fn to_json_pretty(&self) -> String {
        let mut out = String::from("{\n");
        let n = self.dimensions().len();
        for (i, d) in self.dimensions().iter().enumerate() {
            let sep = if i + 1 < n { "," } else { "" };
            out.push_str(&format!(
                "  {}: {}{}\n",
                Json::String(d.name().to_string()),
                domain_json(d.domain()),
                sep
            ));
        }
        out.push_str("}\n");
        out
    }
}
