//! Market populations, world draws and bidding strategies.
//!
//! A [`World`] holds every random quantity of one replication that does not
//! depend on bids: the item type, each agent's valuation at every participation
//! and who shows up in which round. Strategies see only the agent's own
//! history and the announced reserve.

use crate::distributions::ValuationDistribution;
use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Type of the item sold in every round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ItemType {
    L,
    H,
}

/// Market primitives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub n: usize,
    /// Number of rounds `T`.
    pub rounds: usize,
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub beta: f64,
    pub p_low: f64,
    pub p_high: f64,
    pub low: ValuationDistribution,
    pub high: ValuationDistribution,
}

impl MarketConfig {
    /// Symmetric market with a common participation probability and no redraws.
    pub fn symmetric(
        n: usize,
        rounds: usize,
        alpha: f64,
        p_high: f64,
        low: ValuationDistribution,
        high: ValuationDistribution,
    ) -> Result<Self> {
        let config = MarketConfig {
            n,
            rounds,
            alphas: vec![alpha; n],
            beta: 0.0,
            p_low: 1.0 - p_high,
            p_high,
            low,
            high,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("need at least one agent".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Domain("need at least one round".into()));
        }
        if self.alphas.len() != self.n {
            return Err(Error::Domain(format!(
                "{} participation probabilities for {} agents",
                self.alphas.len(),
                self.n
            )));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return Err(Error::Domain(format!("participation probability {a} outside (0, 1]")));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Domain(format!(
                "redraw probability {} outside [0, 1]",
                self.beta
            )));
        }
        let probs_ok = self.p_low >= 0.0 && self.p_high >= 0.0 && (self.p_low + self.p_high - 1.0).abs() <= 1e-9;
        if !probs_ok {
            return Err(Error::Domain(format!(
                "type prior ({}, {}) is not a probability vector",
                self.p_low, self.p_high
            )));
        }
        Ok(())
    }

    pub fn distribution(&self, s: ItemType) -> &ValuationDistribution {
        match s {
            ItemType::L => &self.low,
            ItemType::H => &self.high,
        }
    }

    pub fn prior(&self, s: ItemType) -> f64 {
        match s {
            ItemType::L => self.p_low,
            ItemType::H => self.p_high,
        }
    }
}

/// One participation: who, at which valuation, and whether it was freshly redrawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Participation {
    pub agent: usize,
    pub value: f64,
    pub redrawn: bool,
}

/// The bid-independent randomness of one replication.
///
/// Participations are stored round-major; rounds are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub s: ItemType,
    pub initial_valuations: Vec<f64>,
    rounds: usize,
    offsets: Vec<usize>,
    entries: Vec<Participation>,
}

/// Rounds at which an agent with participation probability `alpha` shows up,
/// drawn by geometric skipping.
fn participation_rounds<R: Rng + ?Sized>(alpha: f64, rounds: usize, rng: &mut R) -> Vec<usize> {
    if alpha >= 1.0 {
        return (1..=rounds).collect();
    }
    let log_q = (-alpha).ln_1p();
    let mut out = Vec::with_capacity((alpha * rounds as f64 * 1.2) as usize + 4);
    let mut t = 0usize;
    loop {
        let u: f64 = rng.sample(rand::distr::Open01);
        let skip = (u.ln() / log_q).floor();
        if skip >= (rounds - t) as f64 {
            break;
        }
        t += skip as usize + 1;
        out.push(t);
    }
    out
}

/// Draws a world.
pub fn draw_world(config: &MarketConfig, seed: u64) -> Result<World> {
    draw_world_conditioned(config, seed, None, None)
}

/// Draws a world with the item type and one agent's initial valuation
/// optionally pinned. The RNG consumption is the same as for [`draw_world`],
/// so pinned and unpinned draws share all other randomness.
pub fn draw_world_conditioned(
    config: &MarketConfig,
    seed: u64,
    s: Option<ItemType>,
    pinned: Option<(usize, f64)>,
) -> Result<World> {
    config.validate()?;
    if let Some((agent, _)) = pinned {
        if agent >= config.n {
            return Err(Error::Domain(format!(
                "agent {agent} out of range for n = {}",
                config.n
            )));
        }
    }
    let mut rng = rng::stream(seed, rng::WORLD_STREAM);
    let u: f64 = rng.random();
    let drawn = if u < config.p_low { ItemType::L } else { ItemType::H };
    let s = s.unwrap_or(drawn);
    let dist = config.distribution(s);
    let mut initial: Vec<f64> = (0..config.n).map(|_| dist.sample(&mut rng)).collect();
    if let Some((agent, v)) = pinned {
        initial[agent] = v;
    }

    let mut per_agent = Vec::with_capacity(config.n);
    for &alpha in &config.alphas {
        per_agent.push(participation_rounds(alpha, config.rounds, &mut rng));
    }

    let mut counts = vec![0usize; config.rounds + 1];
    for ts in &per_agent {
        for &t in ts {
            counts[t] += 1;
        }
    }
    let mut offsets = vec![0usize; config.rounds + 2];
    for t in 1..=config.rounds {
        offsets[t + 1] = offsets[t] + counts[t];
    }
    let blank = Participation {
        agent: 0,
        value: 0.0,
        redrawn: false,
    };
    let mut entries = vec![blank; offsets[config.rounds + 1]];
    let mut cursor = offsets.clone();
    for (agent, ts) in per_agent.iter().enumerate() {
        let mut value = initial[agent];
        for &t in ts {
            let redrawn = config.beta > 0.0 && rng.random::<f64>() < config.beta;
            if redrawn {
                value = dist.sample(&mut rng);
            }
            entries[cursor[t]] = Participation { agent, value, redrawn };
            cursor[t] += 1;
        }
    }
    Ok(World {
        s,
        initial_valuations: initial,
        rounds: config.rounds,
        offsets,
        entries,
    })
}

impl World {
    /// Builds a world from explicit per-round participations (`rounds[t - 1]`
    /// lists round `t`). Agents must appear at most once per round.
    pub fn from_rounds(s: ItemType, initial_valuations: Vec<f64>, rounds: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = initial_valuations.len();
        let mut offsets = vec![0usize; rounds.len() + 2];
        let mut entries = Vec::new();
        let mut last = initial_valuations.clone();
        for (k, round) in rounds.iter().enumerate() {
            let mut seen = vec![false; n];
            for &(agent, value) in round {
                if agent >= n || seen[agent] {
                    return Err(Error::Domain(format!(
                        "bad participation of agent {agent} in round {}",
                        k + 1
                    )));
                }
                seen[agent] = true;
                let redrawn = value != last[agent];
                last[agent] = value;
                entries.push(Participation { agent, value, redrawn });
            }
            entries[offsets[k + 1]..].sort_by_key(|p| p.agent);
            offsets[k + 2] = entries.len();
        }
        Ok(World {
            s,
            initial_valuations,
            rounds: rounds.len(),
            offsets,
            entries,
        })
    }

    pub fn n(&self) -> usize {
        self.initial_valuations.len()
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Participants of round `t` (1-based), in agent order.
    pub fn participants(&self, t: usize) -> &[Participation] {
        &self.entries[self.offsets[t]..self.offsets[t + 1]]
    }

    /// Dense `n x T` participation matrix.
    pub fn participation_matrix(&self) -> Vec<Vec<bool>> {
        self.dense(|_| true)
    }

    /// Dense `n x T` matrix of redraw marks.
    pub fn redraw_matrix(&self) -> Vec<Vec<bool>> {
        self.dense(|p| p.redrawn)
    }

    fn dense(&self, f: impl Fn(&Participation) -> bool) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; self.rounds]; self.n()];
        for t in 1..=self.rounds {
            for p in self.participants(t) {
                m[p.agent][t - 1] = f(p);
            }
        }
        m
    }

    /// Valuation of agent `i` in force at round `t`: the value at its latest
    /// participation up to `t`, or the initial draw.
    pub fn valuation_at(&self, agent: usize, t: usize) -> f64 {
        let mut v = self.initial_valuations[agent];
        for k in 1..=t.min(self.rounds) {
            if let Some(p) = self.participants(k).iter().find(|p| p.agent == agent) {
                v = p.value;
            }
        }
        v
    }

    /// Per-round `(agent, value)` lists, the inverse of [`World::from_rounds`].
    pub fn to_rounds(&self) -> Vec<Vec<(usize, f64)>> {
        (1..=self.rounds)
            .map(|t| self.participants(t).iter().map(|p| (p.agent, p.value)).collect())
            .collect()
    }

    /// The same world with `agent` absent before round `t` and present at
    /// `t` with valuation `value`; later rounds are untouched.
    pub fn with_first_participation(&self, agent: usize, t: usize, value: f64) -> Result<World> {
        if agent >= self.n() || t == 0 || t > self.rounds {
            return Err(Error::Domain(format!("no round {t} for agent {agent}")));
        }
        let mut rounds = self.to_rounds();
        for (k, round) in rounds.iter_mut().enumerate().take(t) {
            round.retain(|(a, _)| *a != agent);
            if k + 1 == t {
                round.push((agent, value));
            }
        }
        let mut initial = self.initial_valuations.clone();
        initial[agent] = value;
        World::from_rounds(self.s, initial, rounds)
    }

    pub fn participation_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n()];
        for p in &self.entries {
            c[p.agent] += 1;
        }
        c
    }
}

/// What an agent has seen of its own past rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OwnRound {
    pub t: usize,
    pub reserve: f64,
    pub bid: f64,
    pub won: bool,
    pub payment: f64,
}

/// An agent's own history: the reserve announced for round 1 and its own
/// bids, allocations and payments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgentHistory {
    pub initial_reserve: f64,
    pub rounds: Vec<OwnRound>,
}

impl AgentHistory {
    pub fn new(initial_reserve: f64) -> Self {
        AgentHistory {
            initial_reserve,
            rounds: Vec::new(),
        }
    }

    pub fn participations(&self) -> usize {
        self.rounds.len()
    }
}

/// A bidding strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Strategy {
    Truthful,
    /// Bids `min(v, cap)` while the reserve is still the initial one and
    /// `t <= horizon`; truthful afterwards.
    Capped {
        cap: f64,
        horizon: Option<usize>,
    },
    /// Like `Capped`, but only at the agent's first participation.
    OneShotShade {
        cap: f64,
        horizon: Option<usize>,
    },
    /// `bids[k]` at the agent's `k`-th participation (0-based), truthful
    /// once the table runs out.
    Scripted {
        bids: Vec<f64>,
    },
}

impl Strategy {
    pub fn capped(cap: f64, horizon: Option<usize>) -> Self {
        Strategy::Capped { cap, horizon }
    }

    pub fn is_truthful(&self) -> bool {
        matches!(self, Strategy::Truthful)
    }

    /// True when, given the history so far, every future bid is truthful.
    pub fn truthful_from(&self, history: &AgentHistory, reserve: f64, t: usize) -> bool {
        match self {
            Strategy::Truthful => true,
            Strategy::Capped { horizon, .. } => reserve != history.initial_reserve || horizon.is_some_and(|h| t > h),
            Strategy::OneShotShade { horizon, .. } => {
                history.participations() > 0 || reserve != history.initial_reserve || horizon.is_some_and(|h| t > h)
            }
            Strategy::Scripted { bids } => history.participations() >= bids.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |x: f64| !(x.is_finite() && x >= 0.0);
        match self {
            Strategy::Truthful => Ok(()),
            Strategy::Capped { cap, .. } | Strategy::OneShotShade { cap, .. } if bad(*cap) => Err(Error::Domain(
                format!("cap must be a finite nonnegative bid, got {cap}"),
            )),
            Strategy::Scripted { bids } if bids.iter().any(|b| bad(*b)) => {
                Err(Error::Domain("scripted bids must be finite and nonnegative".into()))
            }
            _ => Ok(()),
        }
    }
}

/// The bid of an agent with valuation `v` at round `t` facing `reserve`.
/// Negative valuations bid zero.
pub fn decide_bid(strategy: &Strategy, v: f64, history: &AgentHistory, reserve: f64, t: usize) -> f64 {
    let still_low = reserve == history.initial_reserve;
    let in_horizon = |h: &Option<usize>| h.is_none_or(|h| t <= h);
    let bid = match strategy {
        Strategy::Truthful => v,
        Strategy::Capped { cap, horizon } => {
            if still_low && in_horizon(horizon) {
                v.min(*cap)
            } else {
                v
            }
        }
        Strategy::OneShotShade { cap, horizon } => {
            if still_low && in_horizon(horizon) && history.participations() == 0 {
                v.min(*cap)
            } else {
                v
            }
        }
        Strategy::Scripted { bids } => bids.get(history.participations()).copied().unwrap_or(v),
    };
    bid.max(0.0)
}
