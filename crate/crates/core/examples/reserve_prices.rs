//! Optimal reserve prices from the virtual-value root, for a few families.

use dynamic_reserve::distributions::ValuationDistribution;
use std::time::Instant;

fn main() -> dynamic_reserve::Result<()> {
    let clock = Instant::now();
    let cases = [
        (
            "truncated normal(1, 0.4) on [0, 3]",
            ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0)?,
        ),
        ("normal(3, 0.8)", ValuationDistribution::normal(3.0, 0.8)?),
        ("uniform[0, 1]", ValuationDistribution::uniform(0.0, 1.0)?),
        (
            "exponential(2) shifted by 1",
            ValuationDistribution::exponential(2.0, 1.0)?,
        ),
    ];
    for (name, dist) in &cases {
        let sol = dist.optimal_reserve(1e-12)?;
        println!(
            "{name:<36} r* = {:.6}  phi(r*) = {:+.1e}  regular {}",
            sol.reserve,
            dist.virtual_value(sol.reserve)?,
            dist.check_regularity(512)?
        );
    }

    // A bimodal table: the virtual value dips between the modes.
    let bimodal = ValuationDistribution::tabulated(&[(0.0, 0.0), (1.0, 0.45), (1.1, 0.5), (3.0, 0.55), (3.1, 1.0)])?;
    println!("bimodal table regular: {}", bimodal.check_regularity(512)?);
    println!("{:.1?}", clock.elapsed());
    Ok(())
}
