//! A lone bidder facing a threshold mechanism for two rounds: shading the
//! first bid below the trigger keeps the low reserve for the second round.

use dynamic_reserve::agents::{ItemType, MarketConfig, Strategy};
use dynamic_reserve::auction::{ReservePolicy, ReserveRule};
use dynamic_reserve::audit::{brute_force_best_response, static_ic_gap, OracleConfig};
use dynamic_reserve::distributions::ValuationDistribution;

fn main() -> dynamic_reserve::Result<()> {
    let u = ValuationDistribution::uniform(0.0, 1.0)?;
    let market = MarketConfig::symmetric(1, 2, 1.0, 0.0, u.clone(), u)?;
    let rule = ReserveRule::Threshold {
        rho: 0.8,
        low: 0.2,
        high: 0.5,
    };

    let oracle = brute_force_best_response(&OracleConfig {
        market: market.clone(),
        mechanism: rule,
        agent: 0,
        item_type: ItemType::L,
        valuations: vec![0.9],
        opponent_points: 1,
        bid_points: 11,
    })?;
    let v = &oracle.valuations[0];
    println!(
        "oracle   best {:.4}  truthful {:.4}  gap {:.4}",
        v.best_value, v.truthful_value, v.gain
    );
    for e in &oracle.policy {
        println!(
            "  round {} [{}] bid {:.4} (value {:.4}, truthful {:.4})",
            e.round, e.history, e.best_bid, e.best_value, e.truthful_value
        );
    }

    let family = [Strategy::capped(0.8 - 1e-6, None)];
    let report = static_ic_gap(&market, &ReservePolicy::new(rule)?, 0, &[0.9], &family, 1000, 3)?;
    let cell = &report.cells[0];
    println!("simulated gain {:.4} ± {:.4}", cell.gain.mean, cell.gain.ci_halfwidth);
    Ok(())
}
