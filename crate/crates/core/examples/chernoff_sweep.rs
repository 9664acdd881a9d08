//! Exact failure probability of the high-bidder event against its Chernoff
//! bounds, over random parameter points.

use dynamic_reserve::theory::{high_bidder_probability, lemma_sweep, ChernoffBudget};

fn main() -> dynamic_reserve::Result<()> {
    let draws = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let points = lemma_sweep(draws, 1)?;
    let single = points.iter().filter(|p| p.k == 1).count();
    let multi = points.len() - single;
    let bad = |k1: bool, f: &dyn Fn(&&dynamic_reserve::theory::SweepPoint) -> bool| {
        points.iter().filter(|p| (p.k == 1) == k1).filter(f).count()
    };
    println!("{draws} draws: {single} points with k = 1, {multi} with k >= 2");
    println!(
        "k = 1   violations of (delta/2)^(C/1.59): {}",
        bad(true, &|p| p.violates_chernoff())
    );
    println!(
        "k >= 2  violations of (delta/2)^(C/4.24): {}",
        bad(false, &|p| p.violates_chernoff())
    );
    println!(
        "k >= 2  violations of (delta/2)^(C/12.72): {}",
        bad(false, &|p| p.violates_conservative())
    );

    let budget = ChernoffBudget { c: 8.48, delta: 0.083 };
    let q = high_bidder_probability(167, 0.0175, 53, 0.178, 8, true, budget)?;
    println!(
        "n = 167, alpha = 0.0175, tau = 53, tail 0.178, k = 8: failure {:.6}, C/4.24 bound {:.6}, C/12.72 bound {:.6}",
        q.failure(),
        q.chernoff_bound,
        q.conservative_bound
    );
    Ok(())
}
