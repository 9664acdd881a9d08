//! Per-round incentive audit: how often truthful bidding stays within
//! epsilon * alpha * (T - t) of the best capped deviation at every agent's
//! first participation before the reserve rises.

use dynamic_reserve::agents::MarketConfig;
use dynamic_reserve::auction::ReservePolicy;
use dynamic_reserve::audit::{capped_family, dynamic_ic_audit};
use dynamic_reserve::distributions::ValuationDistribution;
use dynamic_reserve::theory::dynamic_ic_params;
use std::time::Instant;

fn main() -> dynamic_reserve::Result<()> {
    let low = ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0)?;
    let high = ValuationDistribution::normal(3.0, 0.8)?;
    let (r_low, r_high) = (low.optimal_reserve(1e-9)?.reserve, high.optimal_reserve(1e-9)?.reserve);
    let rho = 3.0;
    let delta = 0.25;
    let epsilon = delta * (r_high - r_low);
    let (n, alpha) = (16, 1.0 / 16.0);
    let params = dynamic_ic_params(epsilon, alpha, n, high.sf(rho), low.sf(rho), r_low, r_high)?;
    println!(
        "n1 = {:.2}, n2 = {}, tau = {}, T1 = {}",
        params.n1, params.n2, params.tau, params.t1
    );

    let market = MarketConfig::symmetric(n, params.t1 as usize, alpha, 0.5, low, high.clone())?;
    let family = capped_family(&high, rho, &[1, params.tau as usize, market.rounds]);
    let policy = ReservePolicy::threshold(rho, r_low, r_high)?;
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);

    let clock = Instant::now();
    let report = dynamic_ic_audit(&market, &policy, epsilon, delta, &family, reps, 200, 17)?;
    let simulated = report
        .realizations
        .iter()
        .flat_map(|r| &r.candidates)
        .filter(|c| c.gain.is_some())
        .count();
    println!(
        "good {}/{} (borderline {}), frequency {:.3} ± {:.3} vs 1 - delta = {:.2}; {simulated} simulated candidates; max gain / (alpha (T - t)) {:.4} vs epsilon {:.4}; {:.1?}",
        report.good,
        report.replications,
        report.borderline,
        report.good_frequency.mean,
        report.good_frequency.ci_halfwidth,
        report.target,
        report.max_normalized_gain,
        epsilon,
        clock.elapsed()
    );
    Ok(())
}
