//! Serialized form of a distribution: `{kind, params, support}`.

use super::{DistributionKind, Shape, ValuationDistribution};
use crate::error::{Error, Result};
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::fmt;

/// A support bound that serializes infinite values as `"inf"` / `"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound(pub f64);

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct BoundVisitor;
        impl Visitor<'_> for BoundVisitor {
            type Value = Bound;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number, \"inf\" or \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Bound, E> {
                Ok(Bound(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Bound, E> {
                Ok(Bound(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Bound, E> {
                Ok(Bound(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Bound, E> {
                match v {
                    "inf" | "+inf" | "infinity" => Ok(Bound(f64::INFINITY)),
                    "-inf" | "-infinity" => Ok(Bound(f64::NEG_INFINITY)),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(BoundVisitor)
    }
}

/// On-disk description of a [`ValuationDistribution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub kind: DistributionKind,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<[Bound; 2]>,
}

impl DistributionSpec {
    fn allow_only(&self, allowed: &[&str]) -> Result<()> {
        for key in self.params.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "unknown parameter `{key}` for {:?} distribution",
                    self.kind
                )));
            }
        }
        Ok(())
    }

    fn number(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::Config(format!("{:?} distribution needs numeric `{key}`", self.kind)))
    }

    fn required_support(&self) -> Result<(f64, f64)> {
        self.support
            .map(|[lo, hi]| (lo.0, hi.0))
            .ok_or_else(|| Error::Config(format!("{:?} distribution needs `support`", self.kind)))
    }
}

impl TryFrom<DistributionSpec> for ValuationDistribution {
    type Error = Error;

    fn try_from(spec: DistributionSpec) -> Result<Self> {
        match spec.kind {
            DistributionKind::Uniform => {
                spec.allow_only(&[])?;
                let (lo, hi) = spec.required_support()?;
                ValuationDistribution::uniform(lo, hi)
            }
            DistributionKind::Normal => {
                spec.allow_only(&["mean", "sd"])?;
                if let Some([lo, hi]) = spec.support {
                    if lo.0 != f64::NEG_INFINITY || hi.0 != f64::INFINITY {
                        return Err(Error::Config(
                            "a normal distribution has unbounded support; use truncated-normal".into(),
                        ));
                    }
                }
                ValuationDistribution::normal(spec.number("mean")?, spec.number("sd")?)
            }
            DistributionKind::TruncatedNormal => {
                spec.allow_only(&["mean", "sd"])?;
                let (lo, hi) = spec.required_support()?;
                ValuationDistribution::truncated_normal(spec.number("mean")?, spec.number("sd")?, lo, hi)
            }
            DistributionKind::Exponential => {
                spec.allow_only(&["rate"])?;
                let loc = match spec.support {
                    None => 0.0,
                    Some([lo, hi]) => {
                        if hi.0 != f64::INFINITY {
                            return Err(Error::Config("exponential support must end at \"inf\"".into()));
                        }
                        lo.0
                    }
                };
                ValuationDistribution::exponential(spec.number("rate")?, loc)
            }
            DistributionKind::Tabulated => {
                spec.allow_only(&["points"])?;
                let points = spec
                    .params
                    .get("points")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Config("tabulated distribution needs `points`".into()))?
                    .iter()
                    .map(|pt| match pt.as_array().map(|a| a.as_slice()) {
                        Some([x, p]) => match (x.as_f64(), p.as_f64()) {
                            (Some(x), Some(p)) => Ok((x, p)),
                            _ => Err(Error::Config("table points must be numeric [x, F(x)] pairs".into())),
                        },
                        _ => Err(Error::Config("table points must be [x, F(x)] pairs".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let dist = ValuationDistribution::tabulated(&points)?;
                if let Some([lo, hi]) = spec.support {
                    if (lo.0, hi.0) != dist.support() {
                        return Err(Error::Config("tabulated support must match the table ends".into()));
                    }
                }
                Ok(dist)
            }
        }
    }
}

impl From<ValuationDistribution> for DistributionSpec {
    fn from(d: ValuationDistribution) -> Self {
        let kind = d.kind();
        let support = Some([Bound(d.lo), Bound(d.hi)]);
        let (params, support) = match d.shape {
            Shape::Uniform => (Map::new(), support),
            Shape::Normal { mean, sd } => (object(json!({"mean": mean, "sd": sd})), None),
            Shape::TruncatedNormal { mean, sd, .. } => (object(json!({"mean": mean, "sd": sd})), support),
            Shape::Exponential { rate } => (object(json!({"rate": rate})), support),
            Shape::Tabulated { xs, ps } => {
                let points: Vec<[f64; 2]> = xs.into_iter().zip(ps).map(|(x, p)| [x, p]).collect();
                (object(json!({ "points": points })), None)
            }
        };
        DistributionSpec { kind, params, support }
    }
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("json! object literal"),
    }
}
