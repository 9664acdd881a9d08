//! Best constant reserve on a grid, evaluated on shared worlds.

use dynamic_reserve::agents::MarketConfig;
use dynamic_reserve::distributions::ValuationDistribution;
use dynamic_reserve::engine::grid_search_static_reserve;

fn main() -> dynamic_reserve::Result<()> {
    let low = ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0)?;
    let high = ValuationDistribution::normal(3.0, 0.8)?;
    let market = MarketConfig::symmetric(20, 6800, 0.05, 0.5, low, high)?;
    let grid: Vec<f64> = (0..=40).map(|i| 0.5 + 0.05 * i as f64).collect();
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let g = grid_search_static_reserve(&market, &grid, reps, 1)?;
    for (r, est) in g.revenues.iter().step_by(4) {
        println!("r = {r:.2}  {:.4} ± {:.4}", est.mean, est.ci_halfwidth);
    }
    println!(
        "best r = {:.2}  {:.4} ± {:.4}",
        g.best_reserve, g.best_revenue.mean, g.best_revenue.ci_halfwidth
    );
    Ok(())
}
