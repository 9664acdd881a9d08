//! Incentive-compatibility audits.
//!
//! Gains are always measured on paired runs: the truthful and the deviating
//! agent face the same world and the same tie-breaking stream, so the noise
//! that does not depend on the deviation cancels.

mod dynamic;
mod oracle;
mod static_gap;

pub use dynamic::{
    continuation_gain, dynamic_ic_audit, CandidateAudit, Condition, ContinuationGain, DynamicIcReport, RealizationAudit,
};
pub use oracle::{
    brute_force_best_response, OracleConfig, OracleReport, OracleValuation, PolicyEntry, STATE_SPACE_LIMIT,
};
pub use static_gap::{static_ic_gap, GainCell, StaticIcReport};

use crate::agents::{MarketConfig, Strategy, World};
use crate::auction::ReservePolicy;
use crate::distributions::ValuationDistribution;
use crate::engine::Session;
use crate::error::Result;

/// Caveats attached to every Monte Carlo report.
pub const CAVEATS: [&str; 2] = [
    "gains are Monte Carlo estimates; bounds hold up to the reported confidence intervals",
    "the best response is searched over the listed deviation family only, so the certified epsilon is a lower bound",
];

/// Capped deviations: caps at the deciles of `dist` that lie strictly below
/// `rho`, plus `rho - 1e-6`, each with every horizon in `horizons`.
pub fn capped_family(dist: &ValuationDistribution, rho: f64, horizons: &[usize]) -> Vec<Strategy> {
    let mut caps: Vec<f64> = (1..=9)
        .map(|k| dist.quantile(k as f64 / 10.0))
        .filter(|c| *c < rho && *c >= 0.0)
        .collect();
    caps.push(rho - 1e-6);
    caps.dedup();
    let mut horizons = horizons.to_vec();
    horizons.sort_unstable();
    horizons.dedup();
    caps.iter()
        .flat_map(|&cap| horizons.iter().map(move |&h| Strategy::capped(cap, Some(h))))
        .collect()
}

/// [`capped_family`] of both item types, without duplicates.
pub fn market_capped_family(market: &MarketConfig, rho: f64, horizons: &[usize]) -> Vec<Strategy> {
    let mut family = capped_family(&market.low, rho, horizons);
    for s in capped_family(&market.high, rho, horizons) {
        if !family.contains(&s) {
            family.push(s);
        }
    }
    family
}

/// True when `deviation` bids exactly as truthful for an agent whose
/// valuation stays `v`.
fn same_as_truthful(deviation: &Strategy, v: f64, beta: f64) -> bool {
    match deviation {
        Strategy::Truthful => true,
        Strategy::Capped { cap, .. } | Strategy::OneShotShade { cap, .. } => beta == 0.0 && *cap >= v,
        Strategy::Scripted { .. } => false,
    }
}

/// Profiles with `agent` playing each strategy of `family` and everyone
/// else truthful; profile 0 is all-truthful.
pub fn profiles(n: usize, agent: usize, family: &[Strategy]) -> Vec<Vec<Strategy>> {
    let mut out = vec![vec![Strategy::Truthful; n]];
    for s in family {
        let mut p = vec![Strategy::Truthful; n];
        p[agent] = s.clone();
        out.push(p);
    }
    out
}

/// Utility of `agent` under every profile, played in lockstep on one world.
/// Once every run faces a fixed reserve with truthful bidders, the remaining
/// rounds are identical across runs, so only the first is played out and its
/// increment credited to all.
pub fn paired_utilities(
    world: &World,
    policy: &ReservePolicy,
    profiles: &[Vec<Strategy>],
    agent: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut sessions = profiles
        .iter()
        .map(|p| Session::new(world, policy.clone(), p, seed))
        .collect::<Result<Vec<_>>>()?;
    while !sessions[0].is_done() && !sessions.iter().all(|s| s.is_settled()) {
        for s in sessions.iter_mut() {
            s.step()?;
        }
    }
    let before = sessions[0].utilities[agent];
    sessions[0].run_to_end()?;
    let tail = sessions[0].utilities[agent] - before;
    Ok(sessions
        .iter()
        .enumerate()
        .map(|(k, s)| {
            if k == 0 {
                s.utilities[agent]
            } else {
                s.utilities[agent] + tail
            }
        })
        .collect())
}
