//! With disjoint type supports and the trigger between them, no capped
//! deviation pays: the measured gain is zero up to noise at every valuation.

use dynamic_reserve::auction::ReservePolicy;
use dynamic_reserve::audit::{market_capped_family, static_ic_gap};
use dynamic_reserve::config::RunConfig;
use std::time::Instant;

fn main() -> dynamic_reserve::Result<()> {
    let config = RunConfig::preset("proposition1-disjoint")?;
    let market = config.market()?;
    let rho = config.rho().expect("preset has rho");
    let rule = config.mechanism.expect("preset has a mechanism").resolve(&market)?;
    let audit = config.audit.expect("preset has audit options");
    let horizons = audit.horizons.unwrap_or(vec![1, market.rounds]);
    let family = market_capped_family(&market, rho, &horizons);
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);

    let clock = Instant::now();
    let report = static_ic_gap(
        &market,
        &ReservePolicy::new(rule)?,
        audit.agent,
        &audit.valuations,
        &family,
        reps,
        5,
    )?;
    for c in &report.cells {
        println!(
            "v = {:.1} ({:?})  gain {:+.5} ± {:.5}  truthful utility {:.4}",
            c.valuation, c.item_type, c.gain.mean, c.gain.ci_halfwidth, c.truthful_utility.mean
        );
    }
    println!(
        "{} deviations, {reps} paired replications, {:.1?}",
        family.len(),
        clock.elapsed()
    );
    Ok(())
}
