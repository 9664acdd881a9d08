//! One trajectory of the threshold mechanism, written as CSV.

use dynamic_reserve::agents::{MarketConfig, Strategy};
use dynamic_reserve::auction::ReservePolicy;
use dynamic_reserve::distributions::ValuationDistribution;
use dynamic_reserve::engine::{dump_trajectories, simulate_trajectory};

fn main() -> dynamic_reserve::Result<()> {
    let low = ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0)?;
    let high = ValuationDistribution::normal(3.0, 0.8)?;
    let market = MarketConfig::symmetric(20, 200, 0.05, 0.5, low, high)?;
    let policy = ReservePolicy::threshold(3.0, 0.796, 2.318)?;
    let truthful = vec![Strategy::Truthful; market.n];

    let tr = simulate_trajectory(&market, &policy, &truthful, 11)?;
    println!(
        "type {:?}, trigger round {:?}, revenue {:.3}, buyer utility {:.3}, allocated value {:.3}",
        tr.s,
        tr.trigger_round,
        tr.revenue,
        tr.utilities.iter().sum::<f64>(),
        tr.allocated_value
    );
    let mut head = Vec::new();
    tr.write_csv(&mut head)?;
    for line in String::from_utf8_lossy(&head).lines().take(6) {
        println!("{line}");
    }

    let dir = std::env::temp_dir().join("dynreserve-trajectories");
    let paths = dump_trajectories(&market, &policy, &truthful, 5, 11, &dir)?;
    println!("wrote {} files under {}", paths.len(), dir.display());
    Ok(())
}
