//! Deviation gains estimated on shared worlds against independent worlds.

use dynamic_reserve::agents::{draw_world_conditioned, ItemType, MarketConfig, Strategy};
use dynamic_reserve::auction::ReservePolicy;
use dynamic_reserve::audit::{paired_utilities, profiles};
use dynamic_reserve::distributions::ValuationDistribution;
use dynamic_reserve::engine::simulate_world;
use dynamic_reserve::rng::split_seed;
use dynamic_reserve::stats::RunningStats;

fn main() -> dynamic_reserve::Result<()> {
    let low = ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0)?;
    let high = ValuationDistribution::normal(3.0, 0.8)?;
    let market = MarketConfig::symmetric(8, 200, 0.2, 0.5, low, high)?;
    let policy = ReservePolicy::threshold(3.0, 0.796, 2.318)?;
    let family = profiles(market.n, 0, &[Strategy::capped(2.9, None)]);
    let reps = 2000;

    let mut paired = RunningStats::default();
    let mut independent = RunningStats::default();
    for r in 0..reps {
        let seed = split_seed(9, r);
        let world = draw_world_conditioned(&market, seed, Some(ItemType::H), Some((0, 3.4)))?;
        let u = paired_utilities(&world, &policy, &family, 0, seed)?;
        paired.push(u[1] - u[0]);

        let other = draw_world_conditioned(&market, split_seed(10, r), Some(ItemType::H), Some((0, 3.4)))?;
        let truthful = simulate_world(&world, &policy, &family[0], seed)?.utilities[0];
        let deviating = simulate_world(&other, &policy, &family[1], seed)?.utilities[0];
        independent.push(deviating - truthful);
    }
    let (p, i) = (paired.estimate(), independent.estimate());
    println!(
        "paired      gain {:.4} ± {:.4}  variance {:.4}",
        p.mean,
        p.ci_halfwidth,
        paired.variance()
    );
    println!(
        "independent gain {:.4} ± {:.4}  variance {:.4}",
        i.mean,
        i.ci_halfwidth,
        independent.variance()
    );
    Ok(())
}
