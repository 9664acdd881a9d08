use super::{paired_utilities, profiles, same_as_truthful, CAVEATS};
use crate::agents::{draw_world_conditioned, ItemType, MarketConfig, Strategy};
use crate::auction::ReservePolicy;
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{Estimate, RunningStats};
use rayon::prelude::*;
use serde::Serialize;

/// Deviation gain at one valuation and item type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainCell {
    pub valuation: f64,
    pub item_type: ItemType,
    pub truthful_utility: Estimate,
    /// `None` when no deviation beats truthful bidding on average.
    pub best_deviation: Option<Strategy>,
    /// Paired gain of the best deviation over truthful bidding.
    pub gain: Estimate,
    /// `gain / (T alpha_i)`.
    pub normalized_gain: Estimate,
}

/// Static incentive-compatibility audit of one agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticIcReport {
    pub agent: usize,
    pub replications: usize,
    pub seed: u64,
    /// `T alpha_i`.
    pub normalizer: f64,
    pub family: Vec<Strategy>,
    pub cells: Vec<GainCell>,
    /// Largest normalized gain over the grid.
    pub certified_epsilon: Estimate,
    pub caveats: Vec<String>,
}

impl StaticIcReport {
    /// Writes `valuation, item_type, gain, gain_ci, normalized_gain, normalized_ci`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "valuation",
            "item_type",
            "gain",
            "gain_ci",
            "normalized_gain",
            "normalized_ci",
        ])?;
        for c in &self.cells {
            w.write_record([
                c.valuation.to_string(),
                format!("{:?}", c.item_type),
                c.gain.mean.to_string(),
                c.gain.ci_halfwidth.to_string(),
                c.normalized_gain.mean.to_string(),
                c.normalized_gain.ci_halfwidth.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Measures how much `agent` gains, against truthful opponents, by playing
/// the best strategy of `family` instead of bidding truthfully.
///
/// For each grid valuation and each item type whose support contains it,
/// the agent's valuation is pinned and everything else is resampled per
/// replication; every deviation is played on the same worlds as truthful
/// bidding. Truthful bidding is always part of the family.
pub fn static_ic_gap(
    config: &MarketConfig,
    policy: &ReservePolicy,
    agent: usize,
    valuation_grid: &[f64],
    family: &[Strategy],
    replications: usize,
    seed: u64,
) -> Result<StaticIcReport> {
    config.validate()?;
    if family.is_empty() {
        return Err(Error::Domain("empty deviation family".into()));
    }
    if agent >= config.n {
        return Err(Error::Domain(format!(
            "agent {agent} out of range for n = {}",
            config.n
        )));
    }
    if replications < 2 {
        return Err(Error::Domain(
            "need at least 2 replications for a confidence interval".into(),
        ));
    }
    for s in family {
        s.validate()?;
    }
    let normalizer = config.rounds as f64 * config.alphas[agent];
    let all = profiles(config.n, agent, family);
    let mut cells = Vec::new();
    for (g, &v) in valuation_grid.iter().enumerate() {
        let types: Vec<ItemType> = [ItemType::L, ItemType::H]
            .into_iter()
            .filter(|&s| config.prior(s) > 0.0 && config.distribution(s).in_support(v))
            .collect();
        if types.is_empty() {
            return Err(Error::Domain(format!(
                "valuation {v} lies outside every possible type's support"
            )));
        }
        for s in types {
            let active: Vec<usize> = (1..all.len())
                .filter(|&k| !same_as_truthful(&family[k - 1], v, config.beta))
                .collect();
            let run: Vec<Vec<Strategy>> = std::iter::once(0)
                .chain(active.iter().copied())
                .map(|k| all[k].clone())
                .collect();
            let cell_seed = rng::split_seed(seed, ((g as u64) << 1) | u64::from(s == ItemType::H));
            let utilities: Vec<Vec<f64>> = (0..replications)
                .into_par_iter()
                .map(|r| {
                    let rs = rng::split_seed(cell_seed, r as u64);
                    let world = draw_world_conditioned(config, rs, Some(s), Some((agent, v)))?;
                    paired_utilities(&world, policy, &run, agent, rs)
                })
                .collect::<Result<_>>()?;
            cells.push(cell(v, s, &utilities, &run, normalizer));
        }
    }
    let certified_epsilon = cells.iter().map(|c| c.normalized_gain).fold(
        Estimate {
            mean: 0.0,
            ci_halfwidth: 0.0,
        },
        |best, e| if e.mean > best.mean { e } else { best },
    );
    Ok(StaticIcReport {
        agent,
        replications,
        seed,
        normalizer,
        family: family.to_vec(),
        cells,
        certified_epsilon,
        caveats: CAVEATS.iter().map(|c| c.to_string()).collect(),
    })
}

fn cell(v: f64, s: ItemType, utilities: &[Vec<f64>], run: &[Vec<Strategy>], normalizer: f64) -> GainCell {
    let mut truthful = RunningStats::default();
    for u in utilities {
        truthful.push(u[0]);
    }
    let mut best: Option<(usize, RunningStats)> = None;
    for k in 1..run.len() {
        let mut gain = RunningStats::default();
        for u in utilities {
            gain.push(u[k] - u[0]);
        }
        if gain.mean() > best.as_ref().map_or(0.0, |b| b.1.mean()) {
            best = Some((k, gain));
        }
    }
    let agent_strategy = |k: usize| run[k].iter().find(|s| !s.is_truthful()).cloned();
    let (best_deviation, gain) = match best {
        Some((k, g)) => (agent_strategy(k), g.estimate()),
        None => (
            None,
            Estimate {
                mean: 0.0,
                ci_halfwidth: 0.0,
            },
        ),
    };
    GainCell {
        valuation: v,
        item_type: s,
        truthful_utility: truthful.estimate(),
        best_deviation,
        gain,
        normalized_gain: Estimate {
            mean: gain.mean / normalizer,
            ci_halfwidth: gain.ci_halfwidth / normalizer,
        },
    }
}
