//! Exact best responses by backward induction on toy markets.

use dynamic_reserve::agents::{ItemType, MarketConfig};
use dynamic_reserve::auction::ReserveRule;
use dynamic_reserve::audit::{brute_force_best_response, OracleConfig};
use dynamic_reserve::distributions::ValuationDistribution;

fn show(title: &str, config: &OracleConfig) -> dynamic_reserve::Result<()> {
    let report = brute_force_best_response(config)?;
    println!("{title} (state space {})", report.state_space);
    for v in &report.valuations {
        println!(
            "  v = {:.3}  best {:.4}  truthful {:.4}  gain {:.4}",
            v.valuation, v.best_value, v.truthful_value, v.gain
        );
    }
    for e in report.policy.iter().filter(|e| e.round == 1) {
        println!("  round 1, v = {:.3}: bid {:.3}", e.valuation, e.best_bid);
    }
    Ok(())
}

fn main() -> dynamic_reserve::Result<()> {
    let u = ValuationDistribution::uniform(0.0, 1.0)?;
    let solo = MarketConfig::symmetric(1, 2, 1.0, 0.5, u.clone(), u)?;
    show(
        "one buyer, two rounds, threshold(0.8, 0.2, 0.5)",
        &OracleConfig {
            market: solo,
            mechanism: ReserveRule::Threshold {
                rho: 0.8,
                low: 0.2,
                high: 0.5,
            },
            agent: 0,
            item_type: ItemType::H,
            valuations: vec![0.5, 0.9],
            opponent_points: 3,
            bid_points: 11,
        },
    )?;

    let low = ValuationDistribution::uniform(0.0, 1.0)?;
    let high = ValuationDistribution::truncated_normal(3.0, 0.5, 2.0, f64::INFINITY)?;
    let r_low = low.optimal_reserve(1e-9)?.reserve;
    let r_high = high.optimal_reserve(1e-9)?.reserve;
    let pair = MarketConfig::symmetric(2, 3, 1.0, 0.5, low, high)?;
    show(
        "two buyers, disjoint supports, three rounds",
        &OracleConfig {
            market: pair,
            mechanism: ReserveRule::Threshold {
                rho: 1.5,
                low: r_low,
                high: r_high,
            },
            agent: 1,
            item_type: ItemType::H,
            valuations: vec![2.2, 3.0, 3.8],
            opponent_points: 5,
            bid_points: 11,
        },
    )
}
