//! Revenue of the static, threshold and known-type mechanisms on the
//! overlapping-normals market, with truthful bidders.

use dynamic_reserve::agents::{MarketConfig, Strategy};
use dynamic_reserve::auction::ReservePolicy;
use dynamic_reserve::distributions::ValuationDistribution;
use dynamic_reserve::engine::estimate;
use std::time::Instant;

fn main() -> dynamic_reserve::Result<()> {
    let low = ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0)?;
    let high = ValuationDistribution::normal(3.0, 0.8)?;
    let r_low = low.optimal_reserve(1e-9)?.reserve;
    let r_high = high.optimal_reserve(1e-9)?.reserve;
    let market = MarketConfig::symmetric(20, 6800, 0.05, 0.5, low, high)?;
    let truthful = vec![Strategy::Truthful; market.n];
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);

    for (name, policy) in [
        ("static 1.05", ReservePolicy::static_reserve(1.05)?),
        ("threshold", ReservePolicy::threshold(3.0, r_low, r_high)?),
    ] {
        let clock = Instant::now();
        let s = estimate(&market, &policy, &truthful, reps, 1)?;
        println!(
            "{name:<12} revenue {:.4} ± {:.4}  welfare {:.4} ± {:.4}  allocated {:.4}  ({:.1?})",
            s.revenue_per_round.mean,
            s.revenue_per_round.ci_halfwidth,
            s.welfare_per_participation.mean,
            s.welfare_per_participation.ci_halfwidth,
            s.allocated_value_per_participation.mean,
            clock.elapsed()
        );
    }
    Ok(())
}
