//! With only the high type present, moving the reserve after a high bid
//! never beats the best constant reserve.

use dynamic_reserve::agents::{MarketConfig, Strategy};
use dynamic_reserve::auction::ReservePolicy;
use dynamic_reserve::distributions::ValuationDistribution;
use dynamic_reserve::engine::estimate;

fn main() -> dynamic_reserve::Result<()> {
    let high = ValuationDistribution::normal(3.0, 0.8)?;
    let low = ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0)?;
    let r_star = high.optimal_reserve(1e-9)?.reserve;
    let market = MarketConfig::symmetric(10, 500, 0.2, 1.0, low, high)?;
    let truthful = vec![Strategy::Truthful; market.n];
    let reps = 400;

    let base = estimate(&market, &ReservePolicy::static_reserve(r_star)?, &truthful, reps, 5)?;
    println!(
        "static r* = {r_star:.3}: {:.4} ± {:.4}",
        base.revenue_per_round.mean, base.revenue_per_round.ci_halfwidth
    );
    for (rho, lo, hi) in [
        (3.0, 0.8, 2.318),
        (2.5, 1.5, 2.318),
        (3.5, 2.318, 3.0),
        (2.0, 1.0, 2.0),
        (4.0, 2.0, 2.6),
    ] {
        let s = estimate(&market, &ReservePolicy::threshold(rho, lo, hi)?, &truthful, reps, 5)?;
        let diff = s.revenue_per_round.mean - base.revenue_per_round.mean;
        println!(
            "threshold({rho}, {lo}, {hi}): {:.4} ± {:.4}  minus static {diff:+.4}",
            s.revenue_per_round.mean, s.revenue_per_round.ci_halfwidth
        );
    }
    Ok(())
}
