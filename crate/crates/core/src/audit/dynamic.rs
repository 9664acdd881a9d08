use super::{paired_utilities, profiles, same_as_truthful, CAVEATS};
use crate::agents::{draw_world_conditioned, ItemType, MarketConfig, Strategy, World};
use crate::auction::ReservePolicy;
use crate::engine::Session;
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{Estimate, RunningStats, Z95, Z95_ONE_SIDED};
use rayon::prelude::*;
use serde::Serialize;

/// What the agent knows about the reserve when it first participates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// The reserve has not risen before the round.
    Untriggered,
    /// The reserve rose before the round.
    Triggered,
}

/// Gain from deviating at one round, estimated over worlds drawn from the
/// agent's posterior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationGain {
    pub accepted: usize,
    pub attempts: usize,
    pub truthful_utility: Estimate,
    pub best_deviation: Option<Strategy>,
    /// Paired gain of the best deviation; the half-width is one-sided.
    pub gain: Estimate,
}

/// Estimates the gain of `agent`, with valuation `valuation` and item type
/// `s`, from deviating instead of bidding truthfully, given that its first
/// participation is round `t` and the reserve history before `t` matches
/// `condition`. Others bid truthfully. Worlds are drawn from the prior and
/// kept only if they match the condition, up to `100 * samples` attempts.
#[allow(clippy::too_many_arguments)]
pub fn continuation_gain(
    config: &MarketConfig,
    policy: &ReservePolicy,
    agent: usize,
    valuation: f64,
    s: ItemType,
    t: usize,
    condition: Condition,
    family: &[Strategy],
    samples: usize,
    seed: u64,
) -> Result<ContinuationGain> {
    if t == 0 || t > config.rounds {
        return Err(Error::Domain(format!("round {t} outside 1..={}", config.rounds)));
    }
    let active: Vec<Strategy> = family
        .iter()
        .filter(|d| !same_as_truthful(d, valuation, config.beta))
        .cloned()
        .collect();
    let run = profiles(config.n, agent, &active);
    let truthful = &run[0];
    let max_attempts = samples.saturating_mul(100);
    let mut utilities = Vec::with_capacity(samples);
    let mut attempts = 0;
    while utilities.len() < samples && attempts < max_attempts {
        let rs = rng::split_seed(seed, attempts as u64);
        attempts += 1;
        let world = draw_world_conditioned(config, rs, Some(s), Some((agent, valuation)))?
            .with_first_participation(agent, t, valuation)?;
        if !matches_condition(&world, policy, truthful, t, condition, rs)? {
            continue;
        }
        utilities.push(paired_utilities(&world, policy, &run, agent, rs)?);
    }
    let mut truthful_utility = RunningStats::default();
    for u in &utilities {
        truthful_utility.push(u[0]);
    }
    let mut best: Option<(usize, RunningStats)> = None;
    for k in 1..run.len() {
        let mut g = RunningStats::default();
        for u in &utilities {
            g.push(u[k] - u[0]);
        }
        if g.mean() > best.as_ref().map_or(0.0, |b| b.1.mean()) {
            best = Some((k, g));
        }
    }
    let one_sided = |g: &RunningStats| {
        let ci = if g.count() < 2 {
            f64::INFINITY
        } else {
            Z95_ONE_SIDED * (g.variance() / g.count() as f64).sqrt()
        };
        Estimate {
            mean: g.mean(),
            ci_halfwidth: ci,
        }
    };
    let (best_deviation, gain) = match &best {
        Some((k, g)) => (Some(active[k - 1].clone()), one_sided(g)),
        None => {
            let ci = if utilities.len() < 2 { f64::INFINITY } else { 0.0 };
            (
                None,
                Estimate {
                    mean: 0.0,
                    ci_halfwidth: ci,
                },
            )
        }
    };
    Ok(ContinuationGain {
        accepted: utilities.len(),
        attempts,
        truthful_utility: truthful_utility.estimate(),
        best_deviation,
        gain,
    })
}

fn matches_condition(
    world: &World,
    policy: &ReservePolicy,
    truthful: &[Strategy],
    t: usize,
    condition: Condition,
    seed: u64,
) -> Result<bool> {
    let mut session = Session::new(world, policy.clone(), truthful, seed)?;
    while session.round() < t {
        session.step()?;
    }
    Ok(match condition {
        Condition::Untriggered => !session.policy().is_triggered(),
        Condition::Triggered => session.policy().is_triggered(),
    })
}

/// Audit of one agent's first participation in one realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateAudit {
    pub agent: usize,
    pub round: usize,
    pub valuation: f64,
    /// `epsilon * alpha_i * (T - t)`.
    pub allowance: f64,
    /// True when truthful bidding is exactly optimal without simulation: the
    /// valuation never exceeds the trigger level.
    pub by_dominance: bool,
    pub gain: Option<ContinuationGain>,
    pub good: bool,
    /// Good only thanks to the confidence interval.
    pub borderline: bool,
}

/// Audit of one realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationAudit {
    pub index: usize,
    pub s: ItemType,
    pub candidates: Vec<CandidateAudit>,
    pub good: bool,
    pub borderline: bool,
}

/// Frequency of realizations in which truthful bidding stays approximately
/// optimal from every round on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicIcReport {
    pub epsilon: f64,
    pub delta: f64,
    pub replications: usize,
    pub continuation_samples: usize,
    pub seed: u64,
    pub family: Vec<Strategy>,
    pub good: usize,
    pub borderline: usize,
    pub good_frequency: Estimate,
    /// `1 - delta`.
    pub target: f64,
    /// Largest `gain / (alpha_i (T - t))` over simulated candidates.
    pub max_normalized_gain: f64,
    pub realizations: Vec<RealizationAudit>,
    pub caveats: Vec<String>,
}

fn trigger_level(policy: &ReservePolicy) -> Option<f64> {
    use crate::auction::ReserveRule;
    match *policy.rule() {
        ReserveRule::Static { .. } => None,
        ReserveRule::Threshold { rho, .. } | ReserveRule::Generalized { rho, .. } => Some(rho),
    }
}

/// Draws `replications` realizations under truthful play and, for every
/// agent's first participation while the reserve has not yet risen,
/// estimates the gain from deviating from that round on. A realization is
/// good when every such gain is at most `epsilon * alpha_i * (T - t)` plus a
/// one-sided 95% confidence half-width.
#[allow(clippy::too_many_arguments)]
pub fn dynamic_ic_audit(
    config: &MarketConfig,
    policy: &ReservePolicy,
    epsilon: f64,
    delta: f64,
    family: &[Strategy],
    replications: usize,
    continuation_samples: usize,
    seed: u64,
) -> Result<DynamicIcReport> {
    config.validate()?;
    if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain("need epsilon > 0 and delta in (0, 1)".into()));
    }
    if replications < 2 || continuation_samples < 2 {
        return Err(Error::Domain(
            "need at least 2 replications and 2 continuation samples".into(),
        ));
    }
    for s in family {
        s.validate()?;
    }
    let truthful = vec![Strategy::Truthful; config.n];
    let rho = trigger_level(policy);
    let realizations: Vec<RealizationAudit> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let rs = rng::split_seed(seed, r as u64);
            let world = draw_world_conditioned(config, rs, None, None)?;
            let mut session = Session::new(&world, policy.clone(), &truthful, rs)?;
            let mut seen = vec![false; config.n];
            let mut candidates = Vec::new();
            while !session.is_done() {
                let t = session.round();
                if !session.policy().is_triggered() {
                    for p in world.participants(t) {
                        if seen[p.agent] {
                            continue;
                        }
                        let allowance = epsilon * config.alphas[p.agent] * (config.rounds - t) as f64;
                        let by_dominance = config.beta == 0.0 && rho.is_none_or(|rho| p.value <= rho);
                        candidates.push(CandidateAudit {
                            agent: p.agent,
                            round: t,
                            valuation: p.value,
                            allowance,
                            by_dominance,
                            gain: None,
                            good: by_dominance,
                            borderline: false,
                        });
                    }
                }
                for p in world.participants(t) {
                    seen[p.agent] = true;
                }
                session.step()?;
            }
            for (c, cand) in candidates.iter_mut().enumerate() {
                if cand.by_dominance {
                    continue;
                }
                let cs = rng::split_seed(rs ^ 0xA5A5_A5A5_A5A5_A5A5, c as u64);
                let g = continuation_gain(
                    config,
                    policy,
                    cand.agent,
                    cand.valuation,
                    world.s,
                    cand.round,
                    Condition::Untriggered,
                    family,
                    continuation_samples,
                    cs,
                )?;
                cand.good = g.gain.mean <= cand.allowance + g.gain.ci_halfwidth;
                cand.borderline = cand.good && g.gain.mean > cand.allowance;
                cand.gain = Some(g);
            }
            let good = candidates.iter().all(|c| c.good);
            let borderline = good && candidates.iter().any(|c| c.borderline);
            Ok(RealizationAudit {
                index: r,
                s: world.s,
                candidates,
                good,
                borderline,
            })
        })
        .collect::<Result<_>>()?;

    let good = realizations.iter().filter(|r| r.good).count();
    let borderline = realizations.iter().filter(|r| r.borderline).count();
    let f = good as f64 / replications as f64;
    let good_frequency = Estimate {
        mean: f,
        ci_halfwidth: Z95 * (f * (1.0 - f) / replications as f64).sqrt(),
    };
    let max_normalized_gain = realizations
        .iter()
        .flat_map(|r| &r.candidates)
        .filter_map(|c| {
            let g = c.gain.as_ref()?;
            let horizon = config.alphas[c.agent] * (config.rounds - c.round) as f64;
            (horizon > 0.0).then(|| g.gain.mean / horizon)
        })
        .fold(0.0, f64::max);
    Ok(DynamicIcReport {
        epsilon,
        delta,
        replications,
        continuation_samples,
        seed,
        family: family.to_vec(),
        good,
        borderline,
        good_frequency,
        target: 1.0 - delta,
        max_normalized_gain,
        realizations,
        caveats: CAVEATS.iter().map(|c| c.to_string()).collect(),
    })
}
