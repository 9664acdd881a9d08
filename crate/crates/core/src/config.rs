//! Run configuration files and the embedded presets.
//!
//! Configs are JSON; every object rejects unknown keys. Reserve prices may be
//! given as numbers or as `"optimal"`, meaning the optimal reserve of the
//! relevant type's distribution.

use crate::agents::{ItemType, MarketConfig, Strategy};
use crate::auction::ReserveRule;
use crate::distributions::{DistributionSpec, ValuationDistribution};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Tolerance used whenever a config asks for an optimal reserve.
pub const RESERVE_TOLERANCE: f64 = 1e-9;

const PRESETS: [(&str, &str); 3] = [
    ("example1", include_str!("../presets/example1.json")),
    ("transient", include_str!("../presets/transient.json")),
    (
        "proposition1-disjoint",
        include_str!("../presets/proposition1-disjoint.json"),
    ),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}

/// Participation probability: one value for everybody or one per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Common(f64),
    PerAgent(Vec<f64>),
}

impl AlphaSpec {
    fn expand(&self, n: usize) -> Vec<f64> {
        match self {
            AlphaSpec::Common(a) => vec![*a; n],
            AlphaSpec::PerAgent(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSpec {
    pub n: usize,
    #[serde(rename = "T")]
    pub rounds: usize,
    pub alpha: AlphaSpec,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub p_low: Option<f64>,
    pub p_high: f64,
    pub low: DistributionSpec,
    pub high: DistributionSpec,
}

impl MarketSpec {
    pub fn build(&self) -> Result<MarketConfig> {
        let config = MarketConfig {
            n: self.n,
            rounds: self.rounds,
            alphas: self.alpha.expand(self.n),
            beta: self.beta,
            p_low: self.p_low.unwrap_or(1.0 - self.p_high),
            p_high: self.p_high,
            low: ValuationDistribution::try_from(self.low.clone())?,
            high: ValuationDistribution::try_from(self.high.clone())?,
        };
        config.validate()?;
        Ok(config)
    }
}

/// A reserve price or the keyword `"optimal"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Price {
    Value(f64),
    Keyword(PriceKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriceKeyword {
    Optimal,
}

impl Price {
    fn resolve(&self, dist: &ValuationDistribution) -> Result<f64> {
        match self {
            Price::Value(x) => Ok(*x),
            Price::Keyword(PriceKeyword::Optimal) => Ok(dist.optimal_reserve(RESERVE_TOLERANCE)?.reserve),
        }
    }
}

/// Mechanism as written in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MechanismSpec {
    /// A static reserve; `"optimal"` uses the type-L optimal reserve when
    /// only one type is possible and is rejected otherwise.
    Static {
        reserve: Price,
    },
    Threshold {
        rho: f64,
        low: Price,
        high: Price,
    },
    Generalized {
        rho: f64,
        low: Price,
        high: Price,
        k: usize,
    },
}

impl MechanismSpec {
    pub fn resolve(&self, market: &MarketConfig) -> Result<ReserveRule> {
        let rule = match *self {
            MechanismSpec::Static { reserve } => {
                let dist = match (market.p_low > 0.0, market.p_high > 0.0) {
                    (true, false) => &market.low,
                    (false, true) => &market.high,
                    _ if market.low == market.high => &market.low,
                    _ => match reserve {
                        Price::Value(_) => &market.low,
                        Price::Keyword(_) => {
                            return Err(Error::Config(
                                "an optimal static reserve needs a single possible type; give a number".into(),
                            ))
                        }
                    },
                };
                ReserveRule::Static {
                    reserve: reserve.resolve(dist)?,
                }
            }
            MechanismSpec::Threshold { rho, low, high } => ReserveRule::Threshold {
                rho,
                low: low.resolve(&market.low)?,
                high: high.resolve(&market.high)?,
            },
            MechanismSpec::Generalized { rho, low, high, k } => ReserveRule::Generalized {
                rho,
                low: low.resolve(&market.low)?,
                high: high.resolve(&market.high)?,
                k,
            },
        };
        crate::auction::ReservePolicy::new(rule)?;
        Ok(rule)
    }

    /// Parses the command-line shorthand: `threshold`, `threshold:RHO,LOW,HIGH`,
    /// `generalized:K`, `generalized:RHO,LOW,HIGH,K`, `static:R` or
    /// `static:optimal`. Bare forms take `rho` from `default_rho` and optimal
    /// reserves for both types.
    pub fn parse(text: &str, default_rho: Option<f64>) -> Result<Self> {
        let (kind, args) = text.split_once(':').unwrap_or((text, ""));
        let parts: Vec<&str> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',').map(str::trim).collect()
        };
        let price = |s: &str| -> Result<Price> {
            if s == "optimal" {
                Ok(Price::Keyword(PriceKeyword::Optimal))
            } else {
                s.parse()
                    .map(Price::Value)
                    .map_err(|_| Error::Config(format!("bad price `{s}` in --mechanism")))
            }
        };
        let real = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Config(format!("bad number `{s}` in --mechanism")))
        };
        let need_rho =
            || default_rho.ok_or_else(|| Error::Config("no rho in config; spell it out as KIND:RHO,LOW,HIGH".into()));
        let optimal = Price::Keyword(PriceKeyword::Optimal);
        match (kind, parts.as_slice()) {
            ("static", [r]) => Ok(MechanismSpec::Static { reserve: price(r)? }),
            ("threshold", []) => Ok(MechanismSpec::Threshold {
                rho: need_rho()?,
                low: optimal,
                high: optimal,
            }),
            ("threshold", [rho, lo, hi]) => Ok(MechanismSpec::Threshold {
                rho: real(rho)?,
                low: price(lo)?,
                high: price(hi)?,
            }),
            ("generalized", [k]) => Ok(MechanismSpec::Generalized {
                rho: need_rho()?,
                low: optimal,
                high: optimal,
                k: k.parse()
                    .map_err(|_| Error::Config(format!("bad k `{k}` in --mechanism")))?,
            }),
            ("generalized", [rho, lo, hi, k]) => Ok(MechanismSpec::Generalized {
                rho: real(rho)?,
                low: price(lo)?,
                high: price(hi)?,
                k: k.parse()
                    .map_err(|_| Error::Config(format!("bad k `{k}` in --mechanism")))?,
            }),
            _ => Err(Error::Config(format!("unrecognized mechanism `{text}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyOverride {
    pub agent: usize,
    pub strategy: Strategy,
}

/// Everybody plays `default` except the listed agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyProfile {
    #[serde(default = "truthful")]
    pub default: Strategy,
    #[serde(default)]
    pub overrides: Vec<StrategyOverride>,
}

fn truthful() -> Strategy {
    Strategy::Truthful
}

impl Default for StrategyProfile {
    fn default() -> Self {
        StrategyProfile {
            default: Strategy::Truthful,
            overrides: Vec::new(),
        }
    }
}

impl StrategyProfile {
    pub fn build(&self, n: usize) -> Result<Vec<Strategy>> {
        let mut out = vec![self.default.clone(); n];
        for o in &self.overrides {
            let slot = out
                .get_mut(o.agent)
                .ok_or_else(|| Error::Config(format!("strategy override for agent {} but n = {n}", o.agent)))?;
            *slot = o.strategy.clone();
        }
        for s in &out {
            s.validate()?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditKind {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditOptions {
    #[serde(default = "static_kind")]
    pub kind: AuditKind,
    #[serde(default)]
    pub agent: usize,
    /// Valuation grid of the static audit.
    #[serde(default)]
    pub valuations: Vec<f64>,
    /// Explicit deviation family; defaults to capped deviations at both
    /// types' deciles below the trigger.
    #[serde(default)]
    pub family: Option<Vec<Strategy>>,
    /// Cap horizons of the default family; defaults to `[1, tau, T]`.
    #[serde(default)]
    pub horizons: Option<Vec<usize>>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_samples")]
    pub continuation_samples: usize,
    /// Per-valuation gains as CSV.
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

fn static_kind() -> AuditKind {
    AuditKind::Static
}

fn default_samples() -> usize {
    200
}

/// Oracle instance; market fields given here replace the run's market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleOptions {
    #[serde(default)]
    pub agent: usize,
    #[serde(default)]
    pub item_type: Option<ItemType>,
    #[serde(default)]
    pub valuations: Option<Vec<f64>>,
    #[serde(default = "default_points")]
    pub opponent_points: usize,
    #[serde(default = "default_points")]
    pub bid_points: usize,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(rename = "T", default)]
    pub rounds: Option<usize>,
    #[serde(default)]
    pub alpha: Option<AlphaSpec>,
}

fn default_points() -> usize {
    7
}

impl OracleOptions {
    /// `base` with the oracle's overrides of `n`, `T` and `alpha` applied.
    pub fn market(&self, base: &MarketConfig) -> Result<MarketConfig> {
        let mut market = base.clone();
        if let Some(n) = self.n {
            market.n = n;
            market.alphas.resize(n, base.alphas.last().copied().unwrap_or(1.0));
        }
        if let Some(t) = self.rounds {
            market.rounds = t;
        }
        if let Some(alpha) = &self.alpha {
            market.alphas = match alpha {
                AlphaSpec::Common(a) => vec![*a; market.n],
                AlphaSpec::PerAgent(v) => v.clone(),
            };
        }
        market.validate()?;
        Ok(market)
    }

    /// One oracle instance per item type, or for the configured type only.
    /// Without explicit valuations, five quantile midpoints of the type's
    /// distribution are solved for.
    pub fn instances(&self, base: &MarketConfig, mechanism: ReserveRule) -> Result<Vec<crate::audit::OracleConfig>> {
        let market = self.market(base)?;
        let types: Vec<ItemType> = match self.item_type {
            Some(s) => vec![s],
            None => [ItemType::L, ItemType::H]
                .into_iter()
                .filter(|&s| market.prior(s) > 0.0)
                .collect(),
        };
        Ok(types
            .into_iter()
            .map(|s| {
                let dist = market.distribution(s);
                let valuations = self
                    .valuations
                    .clone()
                    .unwrap_or_else(|| (0..5).map(|k| dist.quantile((k as f64 + 0.5) / 5.0)).collect());
                crate::audit::OracleConfig {
                    market: market.clone(),
                    mechanism,
                    agent: self.agent,
                    item_type: s,
                    valuations,
                    opponent_points: self.opponent_points,
                    bid_points: self.bid_points,
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReserveOptions {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
}

fn default_tolerance() -> f64 {
    RESERVE_TOLERANCE
}

fn default_grid() -> usize {
    1000
}

impl Default for ReserveOptions {
    fn default() -> Self {
        ReserveOptions {
            tolerance: RESERVE_TOLERANCE,
            grid_size: 1000,
        }
    }
}

/// A full run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub market: Option<MarketSpec>,
    /// Named distributions for the `reserve` command; defaults to the market's.
    #[serde(default)]
    pub distributions: Option<BTreeMap<String, DistributionSpec>>,
    #[serde(default)]
    pub mechanism: Option<MechanismSpec>,
    #[serde(default)]
    pub strategies: StrategyProfile,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub replications: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub reserve: ReserveOptions,
    #[serde(default)]
    pub audit: Option<AuditOptions>,
    #[serde(default)]
    pub oracle: Option<OracleOptions>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::Config(format!("unknown preset `{name}`; known: {}", preset_names().join(", "))))?;
        Self::from_json(text)
    }

    pub fn market(&self) -> Result<MarketConfig> {
        self.market
            .as_ref()
            .ok_or_else(|| Error::Config("config has no `market`".into()))?
            .build()
    }

    /// Trigger level: the config's `rho`, else the mechanism's.
    pub fn rho(&self) -> Option<f64> {
        self.rho.or(match self.mechanism {
            Some(MechanismSpec::Threshold { rho, .. } | MechanismSpec::Generalized { rho, .. }) => Some(rho),
            _ => None,
        })
    }

    pub fn strategies(&self, n: usize) -> Result<Vec<Strategy>> {
        self.strategies.build(n)
    }
}
