//! The `dynreserve` command line.
//!
//! JSON results go to `--out` or stdout; a short human-readable digest goes
//! to stderr. Exit codes: 0 on success, 2 for validation or domain errors,
//! 3 when a solver fails.

use crate::agents::Strategy;
use crate::auction::{ReservePolicy, ReserveRule};
use crate::audit;
use crate::config::{AuditKind, MechanismSpec, RunConfig};
use crate::distributions::ValuationDistribution;
use crate::engine;
use crate::error::{Error, Result};
use crate::theory;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

const DEFAULT_REPLICATIONS: usize = 2000;

#[derive(Debug, Parser)]
#[command(
    name = "dynreserve",
    version,
    about = "Repeated second-price auctions with dynamic reserve prices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal reserve of each distribution in the config.
    Reserve(Common),
    /// Replicated simulation of a mechanism.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also estimate the known-type benchmark.
        #[arg(long)]
        benchmark: bool,
        /// Number of trajectories to dump (default: all replications).
        #[arg(long)]
        dump_count: Option<usize>,
    },
    /// Theorem parameters of the configured market.
    Params {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Incentive-compatibility audit.
    Audit(Common),
    /// Exact best response on a toy market.
    Oracle(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Embedded configuration: example1, transient or proposition1-disjoint.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory receiving one CSV per simulated trajectory.
    #[arg(long)]
    pub dump_trajectories: Option<PathBuf>,
    /// Mechanism override, e.g. `threshold`, `static:1.05`, `generalized:3`.
    #[arg(long)]
    pub mechanism: Option<String>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        match (&self.config, &self.preset) {
            (Some(_), Some(_)) => Err(Error::Config("give either --config or --preset, not both".into())),
            (Some(path), None) => RunConfig::from_file(path),
            (None, Some(name)) => RunConfig::preset(name),
            (None, None) => Err(Error::Config(
                "no configuration: pass --config FILE or --preset NAME".into(),
            )),
        }
    }

    fn seed(&self, config: &RunConfig) -> u64 {
        self.seed.or(config.seed).unwrap_or(0)
    }

    fn replications(&self, config: &RunConfig) -> usize {
        self.replications
            .or(config.replications)
            .unwrap_or(DEFAULT_REPLICATIONS)
    }

    fn mechanism(&self, config: &RunConfig, market: &crate::agents::MarketConfig) -> Result<ReserveRule> {
        let spec = match &self.mechanism {
            Some(text) => MechanismSpec::parse(text, config.rho())?,
            None => config
                .mechanism
                .ok_or_else(|| Error::Config("no mechanism in config or on the command line".into()))?,
        };
        spec.resolve(market)
    }

    fn emit<T: Serialize>(&self, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        match &self.out {
            Some(path) => std::fs::write(path, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

/// Four significant digits.
fn sig4(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = (3 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.digits$}")
}

fn regular_reserve(
    name: &str,
    dist: &ValuationDistribution,
    config: &RunConfig,
) -> Result<crate::distributions::ReserveSolution> {
    if !dist.check_regularity(config.reserve.grid_size)? {
        return Err(Error::Irregular(name.to_string()));
    }
    dist.optimal_reserve(config.reserve.tolerance)
}

fn cmd_reserve(common: &Common) -> Result<()> {
    let config = common.load()?;
    let mut dists: Vec<(String, ValuationDistribution)> = Vec::new();
    if let Some(map) = &config.distributions {
        for (name, spec) in map {
            dists.push((name.clone(), ValuationDistribution::try_from(spec.clone())?));
        }
    } else {
        let market = config.market()?;
        dists.push(("low".into(), market.low));
        dists.push(("high".into(), market.high));
    }
    let mut out = BTreeMap::new();
    for (name, dist) in &dists {
        let sol = regular_reserve(name, dist, &config)?;
        eprintln!(
            "{name:<12} reserve {}  residual {:.1e}  iterations {}",
            sig4(sol.reserve),
            sol.residual,
            sol.iterations
        );
        out.insert(name.clone(), sol);
    }
    common.emit(&out)
}

fn cmd_simulate(common: &Common, benchmark: bool, dump_count: Option<usize>) -> Result<()> {
    let config = common.load()?;
    let market = config.market()?;
    let rule = common.mechanism(&config, &market)?;
    let policy = ReservePolicy::new(rule)?;
    let strategies = config.strategies(market.n)?;
    let replications = common.replications(&config);
    let seed = common.seed(&config);
    let summary = engine::with_threads(common.threads, || {
        engine::estimate(&market, &policy, &strategies, replications, seed)
    })??;
    eprintln!(
        "revenue per round {} ± {}   buyer welfare per participation {} ± {}",
        sig4(summary.revenue_per_round.mean),
        sig4(summary.revenue_per_round.ci_halfwidth),
        sig4(summary.welfare_per_participation.mean),
        sig4(summary.welfare_per_participation.ci_halfwidth)
    );
    let bench = if benchmark {
        let rounds = replications.saturating_mul(market.rounds).max(2);
        let b = theory::benchmark_revenue(&market, rounds, seed)?;
        eprintln!(
            "known-type benchmark {} ± {}",
            sig4(b.blended.mean),
            sig4(b.blended.ci_halfwidth)
        );
        Some(b)
    } else {
        None
    };
    if let Some(dir) = &common.dump_trajectories {
        let count = dump_count.unwrap_or(replications);
        let paths = engine::dump_trajectories(&market, &policy, &strategies, count, seed, dir)?;
        eprintln!("wrote {} trajectories to {}", paths.len(), dir.display());
    }
    let mut out = json!({ "mechanism": rule, "strategies": strategies, "summary": summary });
    if let Some(b) = bench {
        out["benchmark"] = serde_json::to_value(b)?;
    }
    common.emit(&out)
}

fn cmd_params(common: &Common, epsilon: Option<f64>) -> Result<()> {
    let config = common.load()?;
    let market = config.market()?;
    let rho = config
        .rho()
        .ok_or_else(|| Error::Config("params needs `rho` (or a threshold mechanism)".into()))?;
    let epsilon = epsilon
        .or(config.epsilon)
        .ok_or_else(|| Error::Config("params needs `epsilon`".into()))?;
    let p = theory::theorem_params(&market, rho, epsilon)?;
    let rows: [(&str, f64); 22] = [
        ("epsilon", p.epsilon),
        ("delta", p.delta),
        ("rho", p.rho),
        ("r_L*", p.r_low_star),
        ("r_H*", p.r_high_star),
        ("tail_H", p.tail_high),
        ("lambda", p.lambda),
        ("n0", p.threshold_ic.n0),
        ("tau (n0)", p.threshold_ic.tau),
        ("T0", p.threshold_ic.t0),
        ("n1", p.dynamic_ic.n1),
        ("n2", p.dynamic_ic.n2),
        ("tau (n1)", p.dynamic_ic.tau),
        ("T1", p.dynamic_ic.t1),
        ("n3", p.generalized_ic.n3),
        ("n4", p.generalized_ic.n4),
        ("n_bar", p.generalized_ic.n_bar),
        ("k fixed", p.generalized_ic.k_fixed),
        ("k linear", p.generalized_ic.k_linear),
        ("k", p.generalized_ic.k as f64),
        ("T1 (k)", p.generalized_ic.t1),
        ("t_delta", p.t_delta as f64),
    ];
    for (name, value) in rows {
        eprintln!("{name:<10} {:>12}", sig4(value));
    }
    if !p.generalized_ic.hypothesis_holds {
        eprintln!("warning: lambda exceeds tail_H / 18; the generalized guarantee does not apply");
    }
    common.emit(&p)
}

fn default_family(market: &crate::agents::MarketConfig, rho: Option<f64>, horizons: &[usize]) -> Result<Vec<Strategy>> {
    let rho = rho.ok_or_else(|| {
        Error::Config("no trigger level for the default deviation family; give `audit.family`".into())
    })?;
    Ok(audit::market_capped_family(market, rho, horizons))
}

fn rule_rho(rule: &ReserveRule) -> Option<f64> {
    match *rule {
        ReserveRule::Static { .. } => None,
        ReserveRule::Threshold { rho, .. } | ReserveRule::Generalized { rho, .. } => Some(rho),
    }
}

fn cmd_audit(common: &Common) -> Result<()> {
    let config = common.load()?;
    let market = config.market()?;
    let rule = common.mechanism(&config, &market)?;
    let policy = ReservePolicy::new(rule)?;
    let options = config
        .audit
        .clone()
        .ok_or_else(|| Error::Config("config has no `audit` section".into()))?;
    let replications = common.replications(&config);
    let seed = common.seed(&config);
    let rho = rule_rho(&rule);
    let epsilon = options.epsilon.or(config.epsilon);
    let gap = match rule {
        ReserveRule::Threshold { low, high, .. } | ReserveRule::Generalized { low, high, .. } => high - low,
        ReserveRule::Static { .. } => f64::NAN,
    };
    let tau = match (epsilon, rho) {
        (Some(eps), Some(rho)) if eps > 0.0 && eps < gap => {
            let alpha = market.alphas.iter().copied().fold(f64::INFINITY, f64::min);
            theory::threshold_ic_params(
                eps,
                alpha,
                market.n,
                market.high.sf(rho),
                high_low(&rule).0,
                high_low(&rule).1,
            )
            .ok()
            .map(|p| p.tau)
            .filter(|t| t.is_finite())
        }
        _ => None,
    };
    let horizons = options.horizons.clone().unwrap_or_else(|| {
        let mut h = vec![1, market.rounds];
        if let Some(t) = tau {
            h.push((t as usize).clamp(1, market.rounds));
        }
        h
    });
    let family = match &options.family {
        Some(f) => f.clone(),
        None => default_family(&market, rho, &horizons)?,
    };
    match options.kind {
        AuditKind::Static => {
            if options.valuations.is_empty() {
                return Err(Error::Config("static audit needs `audit.valuations`".into()));
            }
            let report = engine::with_threads(common.threads, || {
                audit::static_ic_gap(
                    &market,
                    &policy,
                    options.agent,
                    &options.valuations,
                    &family,
                    replications,
                    seed,
                )
            })??;
            for c in &report.cells {
                eprintln!(
                    "v {:>8} ({:?})  gain {} ± {}  per T alpha {} ± {}",
                    sig4(c.valuation),
                    c.item_type,
                    sig4(c.gain.mean),
                    sig4(c.gain.ci_halfwidth),
                    sig4(c.normalized_gain.mean),
                    sig4(c.normalized_gain.ci_halfwidth)
                );
            }
            eprintln!(
                "certified epsilon {} ± {}",
                sig4(report.certified_epsilon.mean),
                sig4(report.certified_epsilon.ci_halfwidth)
            );
            if let Some(path) = &options.csv {
                report.write_csv(std::fs::File::create(path)?)?;
            }
            common.emit(&report)
        }
        AuditKind::Dynamic => {
            let epsilon = epsilon.ok_or_else(|| Error::Config("dynamic audit needs `epsilon`".into()))?;
            let delta = options.delta.unwrap_or(epsilon / gap);
            let report = engine::with_threads(common.threads, || {
                audit::dynamic_ic_audit(
                    &market,
                    &policy,
                    epsilon,
                    delta,
                    &family,
                    replications,
                    options.continuation_samples,
                    seed,
                )
            })??;
            eprintln!(
                "good realizations {}/{} (borderline {}), frequency {} ± {} vs target {}",
                report.good,
                report.replications,
                report.borderline,
                sig4(report.good_frequency.mean),
                sig4(report.good_frequency.ci_halfwidth),
                sig4(report.target)
            );
            common.emit(&report)
        }
    }
}

fn high_low(rule: &ReserveRule) -> (f64, f64) {
    match *rule {
        ReserveRule::Threshold { low, high, .. } | ReserveRule::Generalized { low, high, .. } => (low, high),
        ReserveRule::Static { reserve } => (reserve, reserve),
    }
}

fn cmd_oracle(common: &Common) -> Result<()> {
    let config = common.load()?;
    let market = config.market()?;
    let rule = common.mechanism(&config, &market)?;
    let options = config
        .oracle
        .clone()
        .ok_or_else(|| Error::Config("config has no `oracle` section".into()))?;
    let mut reports = Vec::new();
    for instance in options.instances(&market, rule)? {
        let report = audit::brute_force_best_response(&instance)?;
        for v in &report.valuations {
            eprintln!(
                "{:?} v {:>8}  best {}  truthful {}  gain {}",
                report.item_type,
                sig4(v.valuation),
                sig4(v.best_value),
                sig4(v.truthful_value),
                sig4(v.gain)
            );
        }
        reports.push(report);
    }
    common.emit(&reports)
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Reserve(c) => cmd_reserve(c),
        Command::Simulate {
            common,
            benchmark,
            dump_count,
        } => cmd_simulate(common, *benchmark, *dump_count),
        Command::Params { common, epsilon } => cmd_params(common, *epsilon),
        Command::Audit(c) => cmd_audit(c),
        Command::Oracle(c) => cmd_oracle(c),
    }
}

/// Parses the process arguments, runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
