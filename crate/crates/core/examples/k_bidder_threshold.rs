//! The k-bidder trigger against the one-bidder trigger when low-type buyers
//! can also bid above the trigger level.

use dynamic_reserve::agents::{MarketConfig, Strategy};
use dynamic_reserve::auction::ReservePolicy;
use dynamic_reserve::distributions::ValuationDistribution;
use dynamic_reserve::engine::estimate;

fn main() -> dynamic_reserve::Result<()> {
    let low = ValuationDistribution::exponential(1.0, 0.0)?;
    let high = ValuationDistribution::normal(4.0, 1.0)?;
    let r_low = low.optimal_reserve(1e-9)?.reserve;
    let r_high = high.optimal_reserve(1e-9)?.reserve;
    let rho = 3.5;
    println!("lambda = {:.4}, tail_H = {:.4}", low.sf(rho), high.sf(rho));
    let market = MarketConfig::symmetric(60, 400, 0.2, 0.5, low, high)?;
    let truthful = vec![Strategy::Truthful; market.n];
    for (name, policy) in [
        ("one bidder".to_string(), ReservePolicy::threshold(rho, r_low, r_high)?),
        ("k = 3".to_string(), ReservePolicy::generalized(rho, r_low, r_high, 3)?),
        ("k = 7".to_string(), ReservePolicy::generalized(rho, r_low, r_high, 7)?),
    ] {
        let s = estimate(&market, &policy, &truthful, 300, 2)?;
        let low_type = &s.by_type["L"];
        println!(
            "{name:<10} revenue {:.4} ± {:.4}  low-type revenue {:.4}  never triggered {}",
            s.revenue_per_round.mean,
            s.revenue_per_round.ci_halfwidth,
            low_type.revenue_per_round.mean,
            s.never_triggered
        );
    }
    Ok(())
}
