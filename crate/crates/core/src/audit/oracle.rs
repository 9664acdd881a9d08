use crate::agents::{ItemType, MarketConfig};
use crate::auction::{ReservePolicy, ReserveRule};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Largest state-space estimate the oracle accepts.
pub const STATE_SPACE_LIMIT: u128 = 1_000_000;

const MAX_ROUNDS: usize = 3;
const MAX_AGENTS: usize = 3;
const MAX_GRID: usize = 21;

/// A toy market solved exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub market: MarketConfig,
    pub mechanism: ReserveRule,
    pub agent: usize,
    pub item_type: ItemType,
    /// Own valuations to solve for.
    pub valuations: Vec<f64>,
    /// Opponents' valuations take this many equally likely values: the
    /// midpoints of equal-mass quantile bins.
    pub opponent_points: usize,
    /// Points of the uniform bid grid over both supports.
    pub bid_points: usize,
}

/// Optimal and truthful values at one decision node reached under optimal play.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyEntry {
    pub valuation: f64,
    pub round: usize,
    /// Reserve and own outcome of every earlier round.
    pub history: String,
    pub reserve: f64,
    pub best_bid: f64,
    /// Conditional expected utility from this round on.
    pub best_value: f64,
    /// Same, bidding truthfully now and optimally afterwards.
    pub truthful_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleValuation {
    pub valuation: f64,
    pub best_value: f64,
    pub truthful_value: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub item_type: ItemType,
    pub agent: usize,
    pub opponent_values: Vec<f64>,
    pub bid_grid: Vec<f64>,
    pub state_space: u128,
    pub valuations: Vec<OracleValuation>,
    pub policy: Vec<PolicyEntry>,
}

#[derive(Debug, Clone)]
struct Particle {
    weight: f64,
    profile: usize,
    policy: ReservePolicy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Absent,
    Lost,
    Won(f64),
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Optimal,
    Truthful,
}

struct Solver<'a> {
    n: usize,
    rounds: usize,
    agent: usize,
    alphas: &'a [f64],
    valuation: f64,
    /// `profiles[k][j]`: bid of opponent `j` in profile `k`; the agent's own slot is unused.
    profiles: Vec<Vec<f64>>,
    bids: Vec<f64>,
    table: Vec<PolicyEntry>,
}

fn policy_key(p: &ReservePolicy) -> (bool, Vec<usize>) {
    (p.is_triggered(), p.high_bidders().iter().copied().collect())
}

fn merge(particles: Vec<Particle>) -> Vec<Particle> {
    let mut index: HashMap<(usize, bool, Vec<usize>), usize> = HashMap::new();
    let mut out: Vec<Particle> = Vec::new();
    for p in particles {
        if p.weight == 0.0 {
            continue;
        }
        let (trig, set) = policy_key(&p.policy);
        match index.entry((p.profile, trig, set)) {
            std::collections::hash_map::Entry::Occupied(e) => out[*e.get()].weight += p.weight,
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(out.len());
                out.push(p);
            }
        }
    }
    out
}

fn describe(history: &[(usize, f64, Outcome)]) -> String {
    history
        .iter()
        .map(|(t, r, o)| match o {
            Outcome::Absent => format!("t{t} r={r:.4} absent"),
            Outcome::Lost => format!("t{t} r={r:.4} lost"),
            Outcome::Won(p) => format!("t{t} r={r:.4} won@{p:.4}"),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

impl Solver<'_> {
    /// Opponent participation patterns over a particle set: `(particle, present mask)`.
    fn expand(&self, particles: &[Particle]) -> Vec<(Particle, u32)> {
        let others: Vec<usize> = (0..self.n).filter(|&j| j != self.agent).collect();
        let mut out = Vec::with_capacity(particles.len() << others.len());
        for mask in 0u32..(1 << others.len()) {
            let mut prob = 1.0;
            for (b, &j) in others.iter().enumerate() {
                prob *= if mask >> b & 1 == 1 {
                    self.alphas[j]
                } else {
                    1.0 - self.alphas[j]
                };
            }
            if prob == 0.0 {
                continue;
            }
            let mut present = 0u32;
            for (b, &j) in others.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    present |= 1 << j;
                }
            }
            for p in particles {
                out.push((
                    Particle {
                        weight: p.weight * prob,
                        ..p.clone()
                    },
                    present,
                ));
            }
        }
        out
    }

    fn opponent_bids(&self, profile: usize, present: u32) -> Vec<Option<f64>> {
        (0..self.n)
            .map(|j| (present >> j & 1 == 1).then(|| self.profiles[profile][j]))
            .collect()
    }

    /// Unnormalized expected utility from round `t` on.
    fn value(
        &mut self,
        t: usize,
        particles: Vec<Particle>,
        history: &mut Vec<(usize, f64, Outcome)>,
        mode: Mode,
        record: bool,
    ) -> f64 {
        if t > self.rounds || particles.is_empty() {
            return 0.0;
        }
        let mut groups: BTreeMap<u64, Vec<Particle>> = BTreeMap::new();
        for p in particles {
            groups.entry(p.policy.next_reserve().to_bits()).or_default().push(p);
        }
        let alpha = self.alphas[self.agent];
        let mut total = 0.0;
        for (bits, group) in groups {
            let reserve = f64::from_bits(bits);
            let expanded = self.expand(&group);
            if alpha < 1.0 {
                let next: Vec<Particle> = expanded
                    .iter()
                    .map(|(p, present)| {
                        let mut policy = p.policy.clone();
                        policy.observe(&self.opponent_bids(p.profile, *present));
                        Particle {
                            weight: p.weight * (1.0 - alpha),
                            profile: p.profile,
                            policy,
                        }
                    })
                    .collect();
                history.push((t, reserve, Outcome::Absent));
                total += self.value(t + 1, merge(next), history, mode, record);
                history.pop();
            }
            let weight: f64 = expanded.iter().map(|(p, _)| p.weight).sum::<f64>() * alpha;
            let truthful_bid = self.valuation.max(0.0);
            match mode {
                Mode::Truthful => {
                    total += self.bid_value(t, reserve, &expanded, truthful_bid, history, Mode::Truthful, record)
                }
                Mode::Optimal => {
                    let mut best_bid = truthful_bid;
                    let mut best = self.bid_value(t, reserve, &expanded, truthful_bid, history, Mode::Optimal, false);
                    let truthful = best;
                    for k in 0..self.bids.len() {
                        let b = self.bids[k];
                        let v = self.bid_value(t, reserve, &expanded, b, history, Mode::Optimal, false);
                        if v > best + 1e-12 * weight.max(1e-300) {
                            best = v;
                            best_bid = b;
                        }
                    }
                    if record && weight > 0.0 {
                        self.table.push(PolicyEntry {
                            valuation: self.valuation,
                            round: t,
                            history: describe(history),
                            reserve,
                            best_bid,
                            best_value: best / weight,
                            truthful_value: truthful / weight,
                        });
                        self.bid_value(t, reserve, &expanded, best_bid, history, Mode::Optimal, true);
                    }
                    total += best;
                }
            }
        }
        total
    }

    /// Unnormalized value of bidding `bid` in round `t` (given presence),
    /// including the continuation.
    #[allow(clippy::too_many_arguments)]
    fn bid_value(
        &mut self,
        t: usize,
        reserve: f64,
        expanded: &[(Particle, u32)],
        bid: f64,
        history: &mut Vec<(usize, f64, Outcome)>,
        mode: Mode,
        record: bool,
    ) -> f64 {
        let alpha = self.alphas[self.agent];
        let mut immediate = 0.0;
        let mut branches: BTreeMap<(u8, u64), Vec<Particle>> = BTreeMap::new();
        for (p, present) in expanded {
            let mut bids = self.opponent_bids(p.profile, *present);
            let top = bids.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
            let ties = bids.iter().flatten().filter(|b| **b == top).count();
            bids[self.agent] = Some(bid);
            let mut policy = p.policy.clone();
            policy.observe(&bids);
            let w = p.weight * alpha;
            let win_prob = if bid < reserve || bid < top {
                0.0
            } else if bid > top {
                1.0
            } else {
                1.0 / (ties + 1) as f64
            };
            let price = top.max(reserve);
            if win_prob > 0.0 {
                immediate += w * win_prob * (self.valuation - price);
                branches.entry((1, price.to_bits())).or_default().push(Particle {
                    weight: w * win_prob,
                    profile: p.profile,
                    policy: policy.clone(),
                });
            }
            if win_prob < 1.0 {
                branches.entry((0, 0)).or_default().push(Particle {
                    weight: w * (1.0 - win_prob),
                    profile: p.profile,
                    policy,
                });
            }
        }
        let mut total = immediate;
        for ((won, bits), group) in branches {
            let outcome = if won == 1 {
                Outcome::Won(f64::from_bits(bits))
            } else {
                Outcome::Lost
            };
            history.push((t, reserve, outcome));
            total += self.value(t + 1, merge(group), history, mode, record);
            history.pop();
        }
        total
    }
}

/// Midpoints of `m` equal-mass quantile bins.
fn quantile_midpoints(dist: &crate::distributions::ValuationDistribution, m: usize) -> Vec<f64> {
    (0..m).map(|k| dist.quantile((k as f64 + 0.5) / m as f64)).collect()
}

/// Exact best response of one agent against truthful opponents in a market
/// with at most three agents and three rounds, by backward induction over the
/// agent's information: the announced reserve, its own presence, and its own
/// outcomes. Expectations over opponents' discretized valuations and
/// everyone's participation are taken by enumeration.
pub fn brute_force_best_response(config: &OracleConfig) -> Result<OracleReport> {
    let market = &config.market;
    market.validate()?;
    if market.n > MAX_AGENTS || market.rounds > MAX_ROUNDS {
        return Err(Error::Domain(format!(
            "oracle handles at most {MAX_AGENTS} agents and {MAX_ROUNDS} rounds, got {} and {}",
            market.n, market.rounds
        )));
    }
    if market.beta != 0.0 {
        return Err(Error::Domain("oracle needs persistent valuations (beta = 0)".into()));
    }
    if config.agent >= market.n {
        return Err(Error::Domain(format!(
            "agent {} out of range for n = {}",
            config.agent, market.n
        )));
    }
    if config.valuations.is_empty() {
        return Err(Error::Domain("no valuations to solve for".into()));
    }
    if !(1..=MAX_GRID).contains(&config.opponent_points) || !(2..=MAX_GRID).contains(&config.bid_points) {
        return Err(Error::Domain(format!(
            "grids need between 1 (2 for bids) and {MAX_GRID} points"
        )));
    }
    let policy = ReservePolicy::new(config.mechanism)?;
    let dist = market.distribution(config.item_type);
    let opponent_values = quantile_midpoints(dist, config.opponent_points);

    let (lo_l, hi_l) = market.low.effective_support(1e-3);
    let (lo_h, hi_h) = market.high.effective_support(1e-3);
    let lo = lo_l.min(lo_h).max(0.0);
    let hi = hi_l.max(hi_h);
    let step = (hi - lo) / (config.bid_points - 1) as f64;
    let mut grid: Vec<f64> = (0..config.bid_points).map(|k| lo + step * k as f64).collect();
    grid.push(0.0);
    match config.mechanism {
        ReserveRule::Static { reserve } => grid.push(reserve),
        ReserveRule::Threshold { rho, low, high } | ReserveRule::Generalized { rho, low, high, .. } => {
            grid.extend([low, high, rho - step, rho + step]);
        }
    }
    grid.retain(|b| b.is_finite() && *b >= 0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let others = market.n - 1;
    let profile_count = config.opponent_points.pow(others as u32);
    let state_space =
        profile_count as u128 * (1u128 << market.n) * ((grid.len() + 1) as u128).pow(market.rounds as u32 - 1);
    if state_space > STATE_SPACE_LIMIT {
        return Err(Error::StateSpaceOverflow {
            size: state_space,
            limit: STATE_SPACE_LIMIT,
        });
    }

    let mut profiles = Vec::with_capacity(profile_count);
    for mut code in 0..profile_count {
        let mut bids = vec![0.0; market.n];
        for (j, slot) in bids.iter_mut().enumerate() {
            if j == config.agent {
                continue;
            }
            *slot = opponent_values[code % config.opponent_points].max(0.0);
            code /= config.opponent_points;
        }
        profiles.push(bids);
    }
    let prior_weight = 1.0 / profile_count as f64;

    let mut valuations = Vec::with_capacity(config.valuations.len());
    let mut table = Vec::new();
    for &v in &config.valuations {
        if !v.is_finite() {
            return Err(Error::Domain(format!("valuation {v} is not finite")));
        }
        let mut bids = grid.clone();
        bids.push(v.max(0.0));
        bids.sort_by(f64::total_cmp);
        bids.dedup();
        let mut solver = Solver {
            n: market.n,
            rounds: market.rounds,
            agent: config.agent,
            alphas: &market.alphas,
            valuation: v,
            profiles: profiles.clone(),
            bids,
            table: Vec::new(),
        };
        let prior: Vec<Particle> = (0..profile_count)
            .map(|k| Particle {
                weight: prior_weight,
                profile: k,
                policy: policy.clone(),
            })
            .collect();
        let truthful_value = solver.value(1, prior.clone(), &mut Vec::new(), Mode::Truthful, false);
        let best_value = solver.value(1, prior, &mut Vec::new(), Mode::Optimal, true);
        valuations.push(OracleValuation {
            valuation: v,
            best_value,
            truthful_value,
            gain: best_value - truthful_value,
        });
        table.append(&mut solver.table);
    }
    Ok(OracleReport {
        item_type: config.item_type,
        agent: config.agent,
        opponent_values,
        bid_grid: grid,
        state_space,
        valuations,
        policy: table,
    })
}
