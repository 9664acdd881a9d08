//! Bidder counts and horizons behind the incentive guarantees, on the
//! overlapping-normals market and on the printed reserve values.

use dynamic_reserve::agents::MarketConfig;
use dynamic_reserve::distributions::ValuationDistribution;
use dynamic_reserve::theory::{generalized_ic_params, theorem_params, threshold_ic_params};

fn main() -> dynamic_reserve::Result<()> {
    let low = ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0)?;
    let high = ValuationDistribution::normal(3.0, 0.8)?;
    let market = MarketConfig::symmetric(20, 6800, 0.05, 0.5, low, high)?;
    let p = theorem_params(&market, 3.0, 0.009)?;
    println!(
        "solved reserves  r_L* = {:.5}, r_H* = {:.5}, delta = {:.5}",
        p.r_low_star, p.r_high_star, p.delta
    );
    println!(
        "threshold        n0 = {:.2}, tau = {}, T0 = {:.1}",
        p.threshold_ic.n0, p.threshold_ic.tau, p.threshold_ic.t0
    );
    println!(
        "dynamic          n1 = {:.2}, n2 = {}, tau = {}, T1 = {:.0}",
        p.dynamic_ic.n1, p.dynamic_ic.n2, p.dynamic_ic.tau, p.dynamic_ic.t1
    );
    println!("t_delta          {}", p.t_delta);

    let printed = threshold_ic_params(0.009, 0.05, 20, 0.5, 0.796, 2.318)?;
    println!("printed reserves n0 = {:.2}, T0 = {:.1}", printed.n0, printed.t0);

    let g = generalized_ic_params(0.1, 0.1, 60, 0.5, 0.01, 0.0, 1.0)?;
    println!(
        "k bidders        n3 = {:.2}, n4 = {:.2}, n_bar = {:.1}, regime {:?}, k = {} (hypothesis {})",
        g.n3, g.n4, g.n_bar, g.regime, g.k, g.hypothesis_holds
    );
    Ok(())
}
