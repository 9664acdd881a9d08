//! Trajectory simulation and replicated Monte Carlo estimation.
//!
//! Replication `r` of a run with seed `S` uses `split_seed(S, r)` for both its
//! world and its tie-breaking stream, and replications are reduced in index
//! order, so results do not depend on the thread count.

use crate::agents::{
    decide_bid, draw_world_conditioned, AgentHistory, ItemType, MarketConfig, OwnRound, Strategy, World,
};
use crate::auction::{ReservePolicy, RoundRecord};
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};
use crate::stats::{Estimate, RunningStats, Z95};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// A mechanism run over one world, advanced one round at a time.
#[derive(Debug, Clone)]
pub struct Session<'a> {
    world: &'a World,
    strategies: &'a [Strategy],
    policy: ReservePolicy,
    rng: SimRng,
    histories: Vec<AgentHistory>,
    bids: Vec<Option<f64>>,
    next_round: usize,
    pub revenue: f64,
    pub utilities: Vec<f64>,
    pub allocated_value: f64,
    pub participations: Vec<usize>,
    pub trigger_round: Option<usize>,
    records: Option<Vec<RoundRecord>>,
}

impl<'a> Session<'a> {
    pub fn new(world: &'a World, policy: ReservePolicy, strategies: &'a [Strategy], auction_seed: u64) -> Result<Self> {
        let n = world.n();
        if strategies.len() != n {
            return Err(Error::Domain(format!("{} strategies for {n} agents", strategies.len())));
        }
        for s in strategies {
            s.validate()?;
        }
        let initial = policy.next_reserve();
        Ok(Session {
            world,
            strategies,
            policy,
            rng: rng::stream(auction_seed, rng::AUCTION_STREAM),
            histories: vec![AgentHistory::new(initial); n],
            bids: vec![None; n],
            next_round: 1,
            revenue: 0.0,
            utilities: vec![0.0; n],
            allocated_value: 0.0,
            participations: vec![0; n],
            trigger_round: None,
            records: None,
        })
    }

    /// Keeps a [`RoundRecord`] for every round played from now on.
    pub fn recording(mut self) -> Self {
        self.records = Some(Vec::with_capacity(self.world.rounds()));
        self
    }

    pub fn policy(&self) -> &ReservePolicy {
        &self.policy
    }

    pub fn history(&self, agent: usize) -> &AgentHistory {
        &self.histories[agent]
    }

    /// The round to be played next (1-based).
    pub fn round(&self) -> usize {
        self.next_round
    }

    pub fn is_done(&self) -> bool {
        self.next_round > self.world.rounds()
    }

    /// True when every remaining round will be played by truthful bidders
    /// facing a fixed reserve.
    pub fn is_settled(&self) -> bool {
        self.policy.is_settled()
            && self
                .strategies
                .iter()
                .enumerate()
                .all(|(i, s)| s.truthful_from(&self.histories[i], self.policy.next_reserve(), self.next_round))
    }

    /// Plays the next round.
    pub fn step(&mut self) -> Result<()> {
        let t = self.next_round;
        let reserve = self.policy.next_reserve();
        let participants = self.world.participants(t);
        for p in participants {
            let bid = decide_bid(&self.strategies[p.agent], p.value, &self.histories[p.agent], reserve, t);
            self.bids[p.agent] = Some(bid);
        }
        let was_triggered = self.policy.is_triggered();
        let sale = self.policy.play(&self.bids, &mut self.rng)?;
        if !was_triggered && self.policy.is_triggered() {
            self.trigger_round = Some(t);
        }
        for p in participants {
            let won = sale.is_some_and(|s| s.winner == p.agent);
            let payment = if won { sale.map_or(0.0, |s| s.price) } else { 0.0 };
            if won {
                self.utilities[p.agent] += p.value - payment;
                self.allocated_value += p.value;
                self.revenue += payment;
            }
            self.participations[p.agent] += 1;
            let bid = self.bids[p.agent].unwrap_or(0.0);
            self.histories[p.agent].rounds.push(OwnRound {
                t,
                reserve,
                bid,
                won,
                payment,
            });
        }
        if let Some(records) = self.records.as_mut() {
            records.push(RoundRecord {
                t,
                reserve,
                bids: self.bids.clone(),
                winner: sale.map(|s| s.winner),
                price: sale.map_or(0.0, |s| s.price),
                triggered: self.policy.is_triggered(),
            });
        }
        for p in participants {
            self.bids[p.agent] = None;
        }
        self.next_round += 1;
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_records(self) -> Vec<RoundRecord> {
        self.records.unwrap_or_default()
    }
}

/// A full simulated history.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub s: ItemType,
    pub initial_valuations: Vec<f64>,
    /// `valuations[i][t - 1]`: valuation of agent `i` in force at round `t`.
    pub valuations: Vec<Vec<f64>>,
    pub rounds: Vec<RoundRecord>,
    pub revenue: f64,
    pub utilities: Vec<f64>,
    pub allocated_value: f64,
    pub participations: Vec<usize>,
    pub trigger_round: Option<usize>,
}

impl Trajectory {
    /// Buyer utility per round of participation.
    pub fn welfare_per_participation(&self) -> f64 {
        per_participation(self.utilities.iter().sum(), &self.participations)
    }

    /// Writes one CSV row per round: `t, reserve, winner, price, triggered`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "reserve", "winner", "price", "triggered"])?;
        for r in &self.rounds {
            let winner = r.winner.map(|i| i.to_string()).unwrap_or_default();
            w.write_record([
                r.t.to_string(),
                r.reserve.to_string(),
                winner,
                r.price.to_string(),
                r.triggered.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn per_participation(total: f64, participations: &[usize]) -> f64 {
    let count: usize = participations.iter().sum();
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

fn valuation_paths(world: &World) -> Vec<Vec<f64>> {
    let mut paths = vec![Vec::with_capacity(world.rounds()); world.n()];
    let mut current = world.initial_valuations.clone();
    for t in 1..=world.rounds() {
        for p in world.participants(t) {
            current[p.agent] = p.value;
        }
        for (i, path) in paths.iter_mut().enumerate() {
            path.push(current[i]);
        }
    }
    paths
}

/// Runs a mechanism over an explicit world and records every round.
pub fn simulate_world(
    world: &World,
    policy: &ReservePolicy,
    strategies: &[Strategy],
    auction_seed: u64,
) -> Result<Trajectory> {
    let mut session = Session::new(world, policy.clone(), strategies, auction_seed)?.recording();
    session.run_to_end()?;
    let revenue = session.revenue;
    let utilities = session.utilities.clone();
    let allocated_value = session.allocated_value;
    let participations = session.participations.clone();
    let trigger_round = session.trigger_round;
    Ok(Trajectory {
        s: world.s,
        initial_valuations: world.initial_valuations.clone(),
        valuations: valuation_paths(world),
        rounds: session.into_records(),
        revenue,
        utilities,
        allocated_value,
        participations,
        trigger_round,
    })
}

/// Draws a world from `seed` and simulates it.
pub fn simulate_trajectory(
    config: &MarketConfig,
    policy: &ReservePolicy,
    strategies: &[Strategy],
    seed: u64,
) -> Result<Trajectory> {
    if strategies.len() != config.n {
        return Err(Error::Domain(format!(
            "{} strategies for {} agents",
            strategies.len(),
            config.n
        )));
    }
    let world = draw_world_conditioned(config, seed, None, None)?;
    simulate_world(&world, policy, strategies, seed)
}

/// Per-type part of a [`SimulationSummary`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeSummary {
    pub replications: usize,
    pub revenue_per_round: Estimate,
    pub welfare_per_participation: Estimate,
}

/// Aggregate of replicated trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub replications: usize,
    pub seed: u64,
    /// Replications were allocated to item types in proportion to the prior.
    pub stratified: bool,
    pub revenue_per_round: Estimate,
    /// Buyer utility `v q - p` per round of participation.
    pub welfare_per_participation: Estimate,
    /// Winners' valuations per round of participation.
    pub allocated_value_per_participation: Estimate,
    pub by_type: BTreeMap<String, TypeSummary>,
    /// Round in which the reserve rose, with counts; untriggered runs are
    /// counted in `never_triggered`.
    pub trigger_rounds: BTreeMap<usize, usize>,
    pub never_triggered: usize,
}

#[derive(Debug, Clone, Copy)]
struct RunTotals {
    s: ItemType,
    revenue_per_round: f64,
    welfare: f64,
    allocated: f64,
    trigger_round: Option<usize>,
}

/// Item type of replication `r` when replications are split between types
/// in proportion to `p_low`: consecutive replications spread the low type
/// evenly.
pub fn stratum(r: usize, p_low: f64) -> ItemType {
    let hit = ((r + 1) as f64 * p_low).floor() > (r as f64 * p_low).floor();
    if hit {
        ItemType::L
    } else {
        ItemType::H
    }
}

fn strata_counts(replications: usize, p_low: f64) -> (usize, usize) {
    let low = (0..replications).filter(|&r| stratum(r, p_low) == ItemType::L).count();
    (low, replications - low)
}

/// True when every type with positive prior gets at least two replications.
fn can_stratify(config: &MarketConfig, replications: usize) -> bool {
    let (low, high) = strata_counts(replications, config.p_low);
    (config.p_low == 0.0 || low >= 2) && (config.p_high == 0.0 || high >= 2)
}

/// Estimates revenue and buyer welfare over `replications` independent
/// trajectories.
///
/// When the replication budget allows, item types are assigned by proportional
/// stratification and the type-conditional means are combined with the prior
/// weights; otherwise each replication draws its own type.
pub fn estimate(
    config: &MarketConfig,
    policy: &ReservePolicy,
    strategies: &[Strategy],
    replications: usize,
    seed: u64,
) -> Result<SimulationSummary> {
    config.validate()?;
    if replications < 2 {
        return Err(Error::Domain(
            "need at least 2 replications for a confidence interval".into(),
        ));
    }
    if strategies.len() != config.n {
        return Err(Error::Domain(format!(
            "{} strategies for {} agents",
            strategies.len(),
            config.n
        )));
    }
    let stratified = can_stratify(config, replications);
    let totals: Vec<RunTotals> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let rs = rng::split_seed(seed, r as u64);
            let s = stratified.then(|| stratum(r, config.p_low));
            let world = draw_world_conditioned(config, rs, s, None)?;
            let mut session = Session::new(&world, policy.clone(), strategies, rs)?;
            session.run_to_end()?;
            let participations = session.participations.clone();
            Ok(RunTotals {
                s: world.s,
                revenue_per_round: session.revenue / config.rounds as f64,
                welfare: per_participation(session.utilities.iter().sum(), &participations),
                allocated: per_participation(session.allocated_value, &participations),
                trigger_round: session.trigger_round,
            })
        })
        .collect::<Result<_>>()?;
    Ok(summarize(config, &totals, replications, seed, stratified))
}

fn summarize(
    config: &MarketConfig,
    totals: &[RunTotals],
    replications: usize,
    seed: u64,
    stratified: bool,
) -> SimulationSummary {
    let mut all = [RunningStats::default(); 3];
    let mut per_type: BTreeMap<&str, [RunningStats; 3]> = BTreeMap::new();
    let mut trigger_rounds = BTreeMap::new();
    let mut never_triggered = 0;
    for run in totals {
        let key = match run.s {
            ItemType::L => "L",
            ItemType::H => "H",
        };
        let slot = per_type.entry(key).or_default();
        for (k, x) in [run.revenue_per_round, run.welfare, run.allocated]
            .into_iter()
            .enumerate()
        {
            all[k].push(x);
            slot[k].push(x);
        }
        match run.trigger_round {
            Some(t) => *trigger_rounds.entry(t).or_insert(0) += 1,
            None => never_triggered += 1,
        }
    }
    let combine = |k: usize| -> Estimate {
        if !stratified {
            return all[k].estimate();
        }
        let mut mean = 0.0;
        let mut var = 0.0;
        for (key, stats) in &per_type {
            let p = if *key == "L" { config.p_low } else { config.p_high };
            mean += p * stats[k].mean();
            var += p * p * stats[k].variance() / stats[k].count() as f64;
        }
        Estimate {
            mean,
            ci_halfwidth: Z95 * var.sqrt(),
        }
    };
    let by_type = per_type
        .iter()
        .map(|(key, stats)| {
            let summary = TypeSummary {
                replications: stats[0].count() as usize,
                revenue_per_round: stats[0].estimate(),
                welfare_per_participation: stats[1].estimate(),
            };
            (key.to_string(), summary)
        })
        .collect();
    SimulationSummary {
        replications,
        seed,
        stratified,
        revenue_per_round: combine(0),
        welfare_per_participation: combine(1),
        allocated_value_per_participation: combine(2),
        by_type,
        trigger_rounds,
        never_triggered,
    }
}

/// Simulates the first `count` replications of a run with full records and
/// writes one CSV per trajectory into `dir`.
pub fn dump_trajectories(
    config: &MarketConfig,
    policy: &ReservePolicy,
    strategies: &[Strategy],
    count: usize,
    seed: u64,
    dir: &Path,
) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stratified = can_stratify(config, count);
    let mut paths = Vec::with_capacity(count);
    for r in 0..count {
        let rs = rng::split_seed(seed, r as u64);
        let s = stratified.then(|| stratum(r, config.p_low));
        let world = draw_world_conditioned(config, rs, s, None)?;
        let traj = simulate_world(&world, policy, strategies, rs)?;
        let path = dir.join(format!("trajectory_{r:05}.csv"));
        traj.write_csv(std::fs::File::create(&path)?)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Best constant reserve on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearch {
    pub best_reserve: f64,
    pub best_revenue: Estimate,
    /// `(reserve, revenue per round)` for every grid point.
    pub revenues: Vec<(f64, Estimate)>,
}

/// Evaluates every reserve of `grid` under truthful bidding, on the same
/// worlds for every grid point, and returns the best.
pub fn grid_search_static_reserve(
    config: &MarketConfig,
    grid: &[f64],
    replications: usize,
    seed: u64,
) -> Result<GridSearch> {
    config.validate()?;
    if grid.is_empty() {
        return Err(Error::Domain("empty reserve grid".into()));
    }
    if let Some(r) = grid.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(Error::Domain(format!("grid reserve {r} is not a nonnegative price")));
    }
    if replications < 2 {
        return Err(Error::Domain(
            "need at least 2 replications for a confidence interval".into(),
        ));
    }
    let stratified = can_stratify(config, replications);
    let per_rep: Vec<(ItemType, Vec<f64>)> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let rs = rng::split_seed(seed, r as u64);
            let s = stratified.then(|| stratum(r, config.p_low));
            let world = draw_world_conditioned(config, rs, s, None)?;
            let mut tops = Vec::with_capacity(world.rounds());
            for t in 1..=world.rounds() {
                let mut first = f64::NEG_INFINITY;
                let mut second = f64::NEG_INFINITY;
                for p in world.participants(t) {
                    let b = p.value.max(0.0);
                    if b >= first {
                        second = first;
                        first = b;
                    } else if b > second {
                        second = b;
                    }
                }
                if first > f64::NEG_INFINITY {
                    tops.push((first, second));
                }
            }
            let revenues = grid
                .iter()
                .map(|&reserve| {
                    let total: f64 = tops
                        .iter()
                        .filter(|(f, _)| *f >= reserve)
                        .map(|(_, s)| s.max(reserve))
                        .sum();
                    total / config.rounds as f64
                })
                .collect();
            Ok((world.s, revenues))
        })
        .collect::<Result<_>>()?;

    let mut revenues = Vec::with_capacity(grid.len());
    for (g, &reserve) in grid.iter().enumerate() {
        let totals: Vec<RunTotals> = per_rep
            .iter()
            .map(|(s, rev)| RunTotals {
                s: *s,
                revenue_per_round: rev[g],
                welfare: 0.0,
                allocated: 0.0,
                trigger_round: None,
            })
            .collect();
        let summary = summarize(config, &totals, replications, seed, stratified);
        revenues.push((reserve, summary.revenue_per_round));
    }
    let (best_reserve, best_revenue) = revenues
        .iter()
        .copied()
        .fold(None::<(f64, Estimate)>, |best, cur| match best {
            Some(b) if b.1.mean >= cur.1.mean => Some(b),
            _ => Some(cur),
        })
        .expect("nonempty grid");
    Ok(GridSearch {
        best_reserve,
        best_revenue,
        revenues,
    })
}

/// Runs `f` on a rayon pool with `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Domain("thread count must be positive".into())),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Domain(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
