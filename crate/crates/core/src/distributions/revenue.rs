//! Monte Carlo revenue of one second-price round with a reserve.

use super::ValuationDistribution;
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{Estimate, RunningStats};
use rand::Rng;

/// Expected revenue of a single second-price auction with `reserve`, where
/// each of `n` bidders shows up independently with probability `alpha` and
/// bids its valuation.
pub fn single_round_revenue(
    dist: &ValuationDistribution,
    n: usize,
    alpha: f64,
    reserve: f64,
    replications: usize,
    seed: u64,
) -> Result<Estimate> {
    if n == 0 {
        return Err(Error::Domain("need at least one bidder".into()));
    }
    single_round_revenue_with_alphas(dist, &vec![alpha; n], reserve, replications, seed)
}

/// As [`single_round_revenue`] with a participation probability per bidder.
pub fn single_round_revenue_with_alphas(
    dist: &ValuationDistribution,
    alphas: &[f64],
    reserve: f64,
    replications: usize,
    seed: u64,
) -> Result<Estimate> {
    if alphas.is_empty() {
        return Err(Error::Domain("need at least one bidder".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(Error::Domain(format!("participation probability {a} outside (0, 1]")));
    }
    if replications == 0 {
        return Err(Error::Domain("need at least one replication".into()));
    }
    let mut rng = rng::stream(seed, rng::WORLD_STREAM);
    let mut acc = RunningStats::default();
    for _ in 0..replications {
        let mut first = f64::NEG_INFINITY;
        let mut second = f64::NEG_INFINITY;
        for &alpha in alphas {
            let shows = alpha >= 1.0 || rng.random::<f64>() < alpha;
            if !shows {
                continue;
            }
            let v = dist.sample(&mut rng);
            if v > first {
                second = first;
                first = v;
            } else if v > second {
                second = v;
            }
        }
        let revenue = if first >= reserve { second.max(reserve) } else { 0.0 };
        acc.push(revenue);
    }
    Ok(acc.estimate())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserve_above_support_never_sells() {
        let u = ValuationDistribution::uniform(0.0, 1.0).unwrap();
        let est = single_round_revenue(&u, 3, 1.0, 1.5, 1000, 1).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.ci_halfwidth, 0.0);
    }

    #[test]
    fn validates_arguments() {
        let u = ValuationDistribution::uniform(0.0, 1.0).unwrap();
        assert!(single_round_revenue(&u, 0, 1.0, 0.5, 10, 1).is_err());
        assert!(single_round_revenue(&u, 1, 0.0, 0.5, 10, 1).is_err());
        assert!(single_round_revenue(&u, 1, 1.0, 0.5, 0, 1).is_err());
    }
}
