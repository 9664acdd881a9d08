//! Acceptance suite: one PASS/FAIL line per criterion.

use dynamic_reserve::agents::{MarketConfig, Strategy};
use dynamic_reserve::auction::ReservePolicy;
use dynamic_reserve::audit::{brute_force_best_response, market_capped_family, static_ic_gap};
use dynamic_reserve::config::RunConfig;
use dynamic_reserve::distributions::ValuationDistribution;
use dynamic_reserve::engine::estimate;
use dynamic_reserve::theory::{benchmark_revenue, lemma_sweep, t_delta, threshold_ic_params, transient_counterexample};
use dynamic_reserve::Result;
use std::process::Command;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Result<Outcome>;

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn example1_market(p_high: f64) -> Result<MarketConfig> {
    MarketConfig::symmetric(
        20,
        6800,
        0.05,
        p_high,
        ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0)?,
        ValuationDistribution::normal(3.0, 0.8)?,
    )
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn c1_reserves() -> Result<Outcome> {
    let clock = Instant::now();
    let low = ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0)?
        .optimal_reserve(1e-9)?
        .reserve;
    let high = ValuationDistribution::normal(3.0, 0.8)?.optimal_reserve(1e-9)?.reserve;
    let uniform = ValuationDistribution::uniform(0.0, 1.0)?
        .optimal_reserve(1e-12)?
        .reserve;
    let elapsed = clock.elapsed();
    outcome(
        within(low, 0.796, 0.001)
            && within(high, 2.318, 0.001)
            && within(uniform, 0.5, 1e-9)
            && elapsed.as_secs_f64() < 1.0,
        format!("r_L* = {low:.5}, r_H* = {high:.5}, uniform {uniform:.10} in {elapsed:.1?}"),
    )
}

fn c2_example_revenue() -> Result<Outcome> {
    let clock = Instant::now();
    let market = example1_market(0.5)?;
    let truthful = vec![Strategy::Truthful; 20];
    let fixed = estimate(&market, &ReservePolicy::static_reserve(1.05)?, &truthful, 2000, 1)?;
    let dynamic = estimate(
        &market,
        &ReservePolicy::threshold(3.0, 0.796, 2.318)?,
        &truthful,
        2000,
        1,
    )?;
    let bench = benchmark_revenue(&market, 4_000_000, 1)?;
    let (a, b, c, w) = (
        fixed.revenue_per_round,
        dynamic.revenue_per_round,
        bench.blended,
        dynamic.welfare_per_participation,
    );
    let elapsed = clock.elapsed();
    outcome(
        within(a.mean, 0.755, 0.01)
            && within(b.mean, 0.935, 0.01)
            && within(c.mean, 0.938, 0.01)
            && within(w.mean, 0.335, 0.01)
            && elapsed.as_secs() < 300,
        format!(
            "static {:.4} ± {:.4}, threshold {:.4} ± {:.4}, known type {:.4} ± {:.4}, buyer welfare {:.4} ± {:.4} in {elapsed:.1?}",
            a.mean, a.ci_halfwidth, b.mean, b.ci_halfwidth, c.mean, c.ci_halfwidth, w.mean, w.ci_halfwidth
        ),
    )
}

fn c3_theorem_params() -> Result<Outcome> {
    let p = threshold_ic_params(0.009, 0.05, 20, 0.5, 0.796, 2.318)?;
    let rel = (p.t0 - 6800.0).abs() / 6800.0;
    outcome(
        within(p.n0, 19.52, 0.01) && within(p.t0, 6764.0, 1.0) && rel <= 0.01,
        format!("n0 = {:.4}, T0 = {:.2} ({:.2}% from 6800)", p.n0, p.t0, 100.0 * rel),
    )
}

fn c4_disjoint_supports() -> Result<Outcome> {
    let clock = Instant::now();
    let config = RunConfig::preset("proposition1-disjoint")?;
    let market = config.market()?;
    let rule = config.mechanism.expect("preset mechanism").resolve(&market)?;
    let rho = config.rho().expect("preset trigger level");
    let audit = config.audit.clone().expect("preset audit options");
    let horizons = audit.horizons.clone().unwrap_or(vec![1, market.rounds]);
    let family = market_capped_family(&market, rho, &horizons);
    let report = static_ic_gap(
        &market,
        &ReservePolicy::new(rule)?,
        audit.agent,
        &audit.valuations,
        &family,
        100_000,
        4,
    )?;
    let worst = report
        .cells
        .iter()
        .map(|c| c.gain.mean - c.gain.ci_halfwidth)
        .fold(f64::NEG_INFINITY, f64::max);
    let static_ok = report.cells.iter().all(|c| c.gain.mean <= c.gain.ci_halfwidth);

    let options = config.oracle.clone().expect("preset oracle options");
    let mut exact = true;
    let mut solved = 0;
    for instance in options.instances(&market, rule)? {
        let r = brute_force_best_response(&instance)?;
        solved += r.valuations.len();
        exact &= r.valuations.iter().all(|v| v.best_value == v.truthful_value);
    }
    outcome(
        static_ok && exact,
        format!(
            "{} valuations x {} deviations, max gain minus CI {worst:.2e}; oracle best = truthful at {solved} valuations: {exact} ({:.1?})",
            report.cells.len(),
            family.len(),
            clock.elapsed()
        ),
    )
}

fn c5_example_ic() -> Result<Outcome> {
    let clock = Instant::now();
    let config = RunConfig::preset("example1")?;
    let market = config.market()?;
    let rule = config.mechanism.expect("preset mechanism").resolve(&market)?;
    let rho = config.rho().expect("preset trigger level");
    let audit = config.audit.clone().expect("preset audit options");
    let tau = threshold_ic_params(0.009, 0.05, 20, market.high.sf(rho), 0.796, 2.318)?.tau as usize;
    let family = market_capped_family(&market, rho, &[1, tau, market.rounds]);
    let report = static_ic_gap(
        &market,
        &ReservePolicy::new(rule)?,
        audit.agent,
        &audit.valuations,
        &family,
        2000,
        1,
    )?;
    let eps = report.certified_epsilon;
    outcome(
        eps.mean <= 0.009 + eps.ci_halfwidth,
        format!(
            "certified epsilon {:.2e} ± {:.2e} over {} deviations at v = {:?} ({:.1?})",
            eps.mean,
            eps.ci_halfwidth,
            family.len(),
            audit.valuations,
            clock.elapsed()
        ),
    )
}

fn c6_single_type() -> Result<Outcome> {
    let clock = Instant::now();
    let market = example1_market(1.0)?;
    let r_star = market.high.optimal_reserve(1e-9)?.reserve;
    let truthful = vec![Strategy::Truthful; 20];
    let reps = 1000;
    let base = estimate(&market, &ReservePolicy::static_reserve(r_star)?, &truthful, reps, 6)?.revenue_per_round;
    let mut worst = f64::NEG_INFINITY;
    let mut pass = true;
    for (rho, lo, hi) in [
        (3.0, 0.796, 2.318),
        (2.5, 1.5, 2.318),
        (3.5, 2.318, 3.0),
        (2.0, 1.0, 2.0),
        (4.0, 2.0, 2.6),
    ] {
        let s = estimate(&market, &ReservePolicy::threshold(rho, lo, hi)?, &truthful, reps, 6)?.revenue_per_round;
        let joint = (s.ci_halfwidth.powi(2) + base.ci_halfwidth.powi(2)).sqrt();
        let excess = s.mean - base.mean;
        worst = worst.max(excess - joint);
        pass &= excess <= joint;
    }
    outcome(
        pass,
        format!(
            "static r* = {r_star:.4}: {:.4}; max (threshold - static - joint CI) {worst:+.4} ({:.1?})",
            base.mean,
            clock.elapsed()
        ),
    )
}

fn c7_lemma_bounds() -> Result<Outcome> {
    let points = lemma_sweep(100, 1)?;
    let violations = points.iter().filter(|p| p.violates_chernoff()).count();
    let mut late = 0;
    let mut checked = 0;
    for p in &points {
        let delta = p.budget.delta;
        let n1 = 1.0 + 3.18 * (2.0 / delta).ln() / p.tail_high;
        let n = p.n.max(n1.ceil() as usize);
        let tau = ((n1 - 1.0) / ((n - 1) as f64 * p.alpha)).ceil() as usize;
        let td = t_delta(n, &vec![p.alpha; n], p.tail_high, delta, 10 * tau + 10)?;
        checked += 1;
        if td > tau {
            late += 1;
        }
    }
    outcome(
        violations == 0 && late == 0,
        format!(
            "{} sweep points, {violations} bound violations; t_delta > tau at {late} of {checked}",
            points.len()
        ),
    )
}

fn c8_transient() -> Result<Outcome> {
    let mut exact = true;
    for t in [2, 3, 10, 100, 1000, 6800] {
        for eps in [0.0, 0.01, 0.5] {
            let (a, b) = transient_counterexample(t, eps)?;
            exact &= a == t as f64 / 4.0 && b == (t as f64 - 1.0) / 2.0 - eps;
        }
    }
    let u = ValuationDistribution::uniform(0.0, 1.0)?;
    let mut market = MarketConfig::symmetric(1, 1000, 1.0, 0.0, u.clone(), u)?;
    market.beta = 1.0;
    let s = estimate(
        &market,
        &ReservePolicy::static_reserve(0.5)?,
        &[Strategy::Truthful],
        400,
        8,
    )?
    .revenue_per_round;
    let total = 1000.0 * s.mean;
    let ci = 1000.0 * s.ci_halfwidth;
    outcome(
        exact && (total - 250.0).abs() <= ci,
        format!("closed forms exact: {exact}; simulated {total:.2} ± {ci:.2} against T/4 = 250"),
    )
}

fn c9_determinism() -> Result<Outcome> {
    let clock = Instant::now();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_dynreserve"))
            .args(["simulate", "--preset", "example1", "--seed", "7", "--threads", threads])
            .output()
            .expect("run dynreserve")
    };
    let a = run("1");
    let b = run("8");
    let c = run("1");
    let ok = a.status.success() && !a.stdout.is_empty() && a.stdout == b.stdout && a.stdout == c.stdout;
    outcome(
        ok,
        format!(
            "{} bytes of JSON, identical across --threads 1, 8 and a repeat ({:.1?})",
            a.stdout.len(),
            clock.elapsed()
        ),
    )
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("optimal reserves", c1_reserves),
        ("example revenue and welfare", c2_example_revenue),
        ("theorem parameters", c3_theorem_params),
        ("disjoint supports", c4_disjoint_supports),
        ("empirical static IC", c5_example_ic),
        ("single type, no dynamic gain", c6_single_type),
        ("lemma bounds", c7_lemma_bounds),
        ("transient example", c8_transient),
        ("determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {detail}",
            if pass { "PASS" } else { "FAIL" },
            k + 1
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
