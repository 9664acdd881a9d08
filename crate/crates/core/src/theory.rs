//! Parameter calculators for the threshold mechanisms and exact probabilities
//! of the high-bidder events they rely on.
//!
//! Logarithms are natural. Ceilings are taken exactly where the formulas
//! place them.

use crate::agents::MarketConfig;
use crate::distributions::single_round_revenue_with_alphas;
use crate::error::{Error, Result};
use crate::rng;
use crate::ser;
use crate::stats::Estimate;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

const TOLERANCE: f64 = 1e-9;

fn check_gap(epsilon: f64, r_low: f64, r_high: f64) -> Result<f64> {
    let gap = r_high - r_low;
    if !(gap > 0.0) {
        return Err(Error::Domain(format!("need r_H > r_L, got {r_low} and {r_high}")));
    }
    if !(epsilon > 0.0 && epsilon < gap) {
        return Err(Error::Domain(format!("epsilon {epsilon} must lie in (0, {gap})")));
    }
    Ok(epsilon / gap)
}

fn check_common(alpha: f64, n: usize, tail_high: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} outside (0, 1]")));
    }
    if n == 0 {
        return Err(Error::Domain("need at least one agent".into()));
    }
    if !(tail_high > 0.0 && tail_high <= 1.0) {
        return Err(Error::Domain(format!("high-type tail mass {tail_high} outside (0, 1]")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!("low-type tail mass {lambda} outside [0, 1]")));
    }
    Ok(())
}

/// `ceil((n_ref - 1) / ((n - 1) alpha))`; infinite for a single agent.
pub fn rounds_to_trigger(n_ref: f64, n: f64, alpha: f64) -> f64 {
    if n <= 1.0 {
        return f64::INFINITY;
    }
    ((n_ref - 1.0) / ((n - 1.0) * alpha)).ceil()
}

/// Bidder and round thresholds for approximate incentive compatibility of
/// the threshold mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdIcParams {
    pub delta: f64,
    pub n0: f64,
    #[serde(serialize_with = "ser::real")]
    pub tau: f64,
    #[serde(rename = "T0", serialize_with = "ser::real")]
    pub t0: f64,
}

pub fn threshold_ic_params(
    epsilon: f64,
    alpha: f64,
    n: usize,
    tail_high: f64,
    r_low: f64,
    r_high: f64,
) -> Result<ThresholdIcParams> {
    check_common(alpha, n, tail_high)?;
    let delta = check_gap(epsilon, r_low, r_high)?;
    let n0 = 1.0 + 1.59 * (2.0 / delta).ln() / tail_high;
    let tau = rounds_to_trigger(n0, n as f64, alpha);
    Ok(ThresholdIcParams {
        delta,
        n0,
        tau,
        t0: 2.0 / delta * tau,
    })
}

/// Thresholds for dynamic incentive compatibility of the threshold mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicIcParams {
    pub delta: f64,
    pub n1: f64,
    /// Upper limit on `n`; infinite when the low type never exceeds the trigger.
    #[serde(serialize_with = "ser::real")]
    pub n2: f64,
    #[serde(serialize_with = "ser::real")]
    pub tau: f64,
    #[serde(rename = "T1", serialize_with = "ser::real")]
    pub t1: f64,
}

pub fn dynamic_ic_params(
    epsilon: f64,
    alpha: f64,
    n: usize,
    tail_high: f64,
    lambda: f64,
    r_low: f64,
    r_high: f64,
) -> Result<DynamicIcParams> {
    check_common(alpha, n, tail_high)?;
    check_lambda(lambda)?;
    let delta = check_gap(epsilon, r_low, r_high)?;
    let n1 = 1.0 + 3.18 * (2.0 / delta).ln() / tail_high;
    let n2 = if lambda == 0.0 { f64::INFINITY } else { delta / lambda };
    let tau = rounds_to_trigger(n1, n as f64, alpha);
    Ok(DynamicIcParams {
        delta,
        n1,
        n2,
        tau,
        t1: 4.0 / delta * tau,
    })
}

/// Which choice of `k` the generalized mechanism uses at a given `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `n` below the bidder threshold: no guarantee.
    NoGuarantee,
    FixedK,
    LinearK,
}

/// Thresholds for the generalized threshold mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralizedIcParams {
    pub delta: f64,
    pub n3: f64,
    #[serde(serialize_with = "ser::real")]
    pub n4: f64,
    #[serde(serialize_with = "ser::real")]
    pub n_bar: f64,
    pub k_fixed: f64,
    pub k_linear: f64,
    pub regime: Regime,
    /// Integer trigger count for the selected regime (the ceiling of the
    /// real-valued `k`); zero without a guarantee.
    pub k: usize,
    #[serde(rename = "T1", serialize_with = "ser::real")]
    pub t1: f64,
    /// False when the low-type tail exceeds 1/18 of the high-type tail.
    pub hypothesis_holds: bool,
}

pub fn generalized_ic_params(
    epsilon: f64,
    alpha: f64,
    n: usize,
    tail_high: f64,
    lambda: f64,
    r_low: f64,
    r_high: f64,
) -> Result<GeneralizedIcParams> {
    check_common(alpha, n, tail_high)?;
    check_lambda(lambda)?;
    let delta = check_gap(epsilon, r_low, r_high)?;
    let log_term = (2.0 / delta).ln();
    let n3 = 1.0 + 8.48 * log_term / tail_high;
    let n4 = if lambda == 0.0 {
        f64::INFINITY
    } else {
        0.56 * log_term / lambda
    };
    let n_bar = n3.max(n4);
    let k_fixed = 2.26 * log_term;
    let nf = n as f64;
    let k_linear = 4.0 * lambda * nf;
    let regime = if nf < n3 {
        Regime::NoGuarantee
    } else if nf <= n4 {
        Regime::FixedK
    } else {
        Regime::LinearK
    };
    let k = match regime {
        Regime::NoGuarantee => 0,
        Regime::FixedK => k_fixed.ceil().max(1.0) as usize,
        Regime::LinearK => k_linear.ceil().max(1.0) as usize,
    };
    let t1 = 4.0 / delta * rounds_to_trigger(n3, nf.min(n_bar), alpha);
    Ok(GeneralizedIcParams {
        delta,
        n3,
        n4,
        n_bar,
        k_fixed,
        k_linear,
        regime,
        k,
        t1,
        hypothesis_holds: lambda <= tail_high / 18.0,
    })
}

/// `ln C(m, j)`.
fn ln_choose(m: u64, j: u64) -> f64 {
    ln_gamma(m as f64 + 1.0) - ln_gamma(j as f64 + 1.0) - ln_gamma((m - j) as f64 + 1.0)
}

/// `P(Binomial(m, p) < k)`, summed term by term in log space.
pub fn binomial_lower_tail(m: u64, p: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if k > m {
        return 1.0;
    }
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let total: f64 = (0..k)
        .map(|j| (ln_choose(m, j) + j as f64 * lp + (m - j) as f64 * lq).exp())
        .sum();
    total.min(1.0)
}

/// Budget `(C, delta)` behind a Chernoff estimate: the bidder threshold
/// `1 + C log(2/delta) / tail` that the event's `tau` was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernoffBudget {
    pub c: f64,
    pub delta: f64,
}

impl ChernoffBudget {
    /// Largest `k` the bounds allow: `C log(2/delta) / 3.18`.
    pub fn max_k(&self) -> f64 {
        self.c * (2.0 / self.delta).ln() / 3.18
    }

    pub fn n_threshold(&self, tail_high: f64) -> f64 {
        1.0 + self.c * (2.0 / self.delta).ln() / tail_high
    }
}

/// Probability that at least `k` agents with valuation above the trigger
/// bid within `tau` rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HighBidderProbability {
    /// Probability of a single other agent both showing up within `tau`
    /// rounds and exceeding the trigger.
    pub per_agent: f64,
    pub exact: f64,
    /// `(delta/2)^(C/1.59)` for `k = 1`, `(delta/2)^(C/4.24)` above.
    pub chernoff_bound: f64,
    /// `(delta/2)^(C/1.59)` for `k = 1`, `(delta/2)^(C/12.72)` above: the
    /// multiplicative Chernoff bound at half the mean, `exp(-mu/8)`.
    pub conservative_bound: f64,
}

impl HighBidderProbability {
    pub fn failure(&self) -> f64 {
        1.0 - self.exact
    }
}

pub fn high_bidder_probability(
    n: usize,
    alpha: f64,
    tau: usize,
    tail_high: f64,
    k: usize,
    exclude_one: bool,
    budget: ChernoffBudget,
) -> Result<HighBidderProbability> {
    if k == 0 || tau == 0 {
        return Err(Error::Domain("need k >= 1 and tau >= 1".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) || !(0.0..=1.0).contains(&tail_high) {
        return Err(Error::Domain(
            "alpha must lie in (0, 1] and the tail mass in [0, 1]".into(),
        ));
    }
    if !(budget.c > 0.0 && budget.delta > 0.0 && budget.delta < 1.0) {
        return Err(Error::Domain("budget needs C > 0 and delta in (0, 1)".into()));
    }
    let m = if exclude_one { n.saturating_sub(1) } else { n };
    let per_agent = -(-alpha).ln_1p().mul_add(tau as f64, 0.0).exp_m1() * tail_high;
    let exact = 1.0 - binomial_lower_tail(m as u64, per_agent, k as u64);
    let base = budget.delta / 2.0;
    let first = base.powf(budget.c / 1.59);
    let (chernoff_bound, conservative_bound) = if k == 1 {
        (first, first)
    } else {
        (base.powf(budget.c / 4.24), base.powf(budget.c / 12.72))
    };
    Ok(HighBidderProbability {
        per_agent,
        exact,
        chernoff_bound,
        conservative_bound,
    })
}

/// Earliest round by which, with probability at least `1 - delta`, some agent
/// other than one fixed agent has bid above the trigger; `t_cap` if never.
pub fn t_delta(n: usize, alphas: &[f64], tail_high: f64, delta: f64, t_cap: usize) -> Result<usize> {
    if alphas.len() != n {
        return Err(Error::Domain(format!(
            "{} participation probabilities for {n} agents",
            alphas.len()
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta {delta} outside (0, 1)")));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(Error::Domain(format!("participation probability {a} outside (0, 1]")));
    }
    let mut prefix = vec![1.0; n + 1];
    let mut suffix = vec![1.0; n + 1];
    for t in 1..=t_cap {
        let miss: Vec<f64> = alphas
            .iter()
            .map(|&a| 1.0 + tail_high * ((-a).ln_1p() * t as f64).exp_m1())
            .collect();
        for i in 0..n {
            prefix[i + 1] = prefix[i] * miss[i];
            suffix[n - 1 - i] = suffix[n - i] * miss[n - 1 - i];
        }
        if (0..n).any(|i| 1.0 - prefix[i] * suffix[i + 1] >= 1.0 - delta) {
            return Ok(t);
        }
    }
    Ok(t_cap)
}

/// Per-round revenue of the optimal mechanism for one known type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypeBenchmark {
    pub reserve: f64,
    pub revenue_per_round: Estimate,
}

/// Revenue benchmark of a seller who knows the item type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Benchmark {
    pub low: TypeBenchmark,
    pub high: TypeBenchmark,
    pub blended: Estimate,
}

/// Per-round revenue of a second-price auction at each type's optimal
/// reserve, and its prior-weighted blend. `replications` single rounds are
/// simulated per type.
pub fn benchmark_revenue(config: &MarketConfig, replications: usize, seed: u64) -> Result<Benchmark> {
    config.validate()?;
    let mut parts = [None, None];
    for (k, dist) in [&config.low, &config.high].into_iter().enumerate() {
        let reserve = dist.optimal_reserve(TOLERANCE)?.reserve;
        let revenue = single_round_revenue_with_alphas(
            dist,
            &config.alphas,
            reserve,
            replications,
            rng::split_seed(seed, k as u64),
        )?;
        parts[k] = Some(TypeBenchmark {
            reserve,
            revenue_per_round: revenue,
        });
    }
    let [Some(low), Some(high)] = parts else { unreachable!() };
    let (pl, ph) = (config.p_low, config.p_high);
    let mean = pl * low.revenue_per_round.mean + ph * high.revenue_per_round.mean;
    let ci =
        ((pl * low.revenue_per_round.ci_halfwidth).powi(2) + (ph * high.revenue_per_round.ci_halfwidth).powi(2)).sqrt();
    Ok(Benchmark {
        low,
        high,
        blended: Estimate { mean, ci_halfwidth: ci },
    })
}

/// Single agent, uniform values on `[0, 1]` redrawn every round: revenue of
/// the best constant reserve against charging `(T - 1)/2 - epsilon` up front.
pub fn transient_counterexample(rounds: usize, epsilon_price: f64) -> Result<(f64, f64)> {
    if rounds < 2 {
        return Err(Error::Domain("need at least two rounds".into()));
    }
    if !(epsilon_price >= 0.0) {
        return Err(Error::Domain(format!(
            "price discount {epsilon_price} must be nonnegative"
        )));
    }
    let t = rounds as f64;
    Ok((t / 4.0, (t - 1.0) / 2.0 - epsilon_price))
}

/// One random parameter point of the high-bidder lemmas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub budget: ChernoffBudget,
    pub n: usize,
    pub alpha: f64,
    pub tail_high: f64,
    pub tau: usize,
    pub k: usize,
    pub probability: HighBidderProbability,
}

impl SweepPoint {
    pub fn violates_chernoff(&self) -> bool {
        self.probability.failure() > self.probability.chernoff_bound
    }

    pub fn violates_conservative(&self) -> bool {
        self.probability.failure() > self.probability.conservative_bound
    }
}

/// Random points satisfying the lemmas' preconditions: `C` is one of the
/// three budgets, `n` at least the budget's threshold, `tau` computed from
/// that threshold, and `k` either 1 or in `[2, C log(2/delta) / 3.18]`.
/// Each draw yields the `k = 1` point and, when the budget allows it, one
/// `k >= 2` point.
pub fn lemma_sweep(draws: usize, seed: u64) -> Result<Vec<SweepPoint>> {
    use rand::Rng;
    let mut rng = rng::stream(seed, rng::WORLD_STREAM);
    let mut points = Vec::with_capacity(2 * draws);
    for _ in 0..draws {
        let delta = rng.random_range(0.001..0.5);
        let c = [1.59, 3.18, 8.48][rng.random_range(0..3)];
        let tail_high = rng.random_range(0.05..1.0);
        let alpha = rng.random_range(0.01..1.0);
        let budget = ChernoffBudget { c, delta };
        let n_ref = budget.n_threshold(tail_high);
        let n = n_ref.ceil() as usize + rng.random_range(0..=3 * n_ref.ceil() as usize);
        let tau = rounds_to_trigger(n_ref, n as f64, alpha) as usize;
        let mut ks = vec![1];
        let k_max = budget.max_k().floor() as usize;
        if k_max >= 2 {
            ks.push(rng.random_range(2..=k_max));
        }
        for k in ks {
            let probability = high_bidder_probability(n, alpha, tau, tail_high, k, true, budget)?;
            points.push(SweepPoint {
                budget,
                n,
                alpha,
                tail_high,
                tau,
                k,
                probability,
            });
        }
    }
    Ok(points)
}

/// Every calculator evaluated on one market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremParams {
    pub epsilon: f64,
    pub delta: f64,
    pub rho: f64,
    pub r_low_star: f64,
    pub r_high_star: f64,
    pub tail_high: f64,
    pub lambda: f64,
    pub n: usize,
    pub alpha: f64,
    pub threshold_ic: ThresholdIcParams,
    pub dynamic_ic: DynamicIcParams,
    pub generalized_ic: GeneralizedIcParams,
    pub t_delta: usize,
}

/// Solves both optimal reserves, reads the trigger tails off the market's
/// distributions and runs every calculator. The smallest participation
/// probability stands in for `alpha`; `t_delta` is capped at `T`.
pub fn theorem_params(config: &MarketConfig, rho: f64, epsilon: f64) -> Result<TheoremParams> {
    config.validate()?;
    let r_low_star = config.low.optimal_reserve(TOLERANCE)?.reserve;
    let r_high_star = config.high.optimal_reserve(TOLERANCE)?.reserve;
    let tail_high = config.high.sf(rho);
    let lambda = config.low.sf(rho);
    let alpha = config.alphas.iter().copied().fold(f64::INFINITY, f64::min);
    let n = config.n;
    let threshold_ic = threshold_ic_params(epsilon, alpha, n, tail_high, r_low_star, r_high_star)?;
    let dynamic_ic = dynamic_ic_params(epsilon, alpha, n, tail_high, lambda, r_low_star, r_high_star)?;
    let generalized_ic = generalized_ic_params(epsilon, alpha, n, tail_high, lambda, r_low_star, r_high_star)?;
    let t_delta = t_delta(n, &config.alphas, tail_high, threshold_ic.delta, config.rounds)?;
    Ok(TheoremParams {
        epsilon,
        delta: threshold_ic.delta,
        rho,
        r_low_star,
        r_high_star,
        tail_high,
        lambda,
        n,
        alpha,
        threshold_ic,
        dynamic_ic,
        generalized_ic,
        t_delta,
    })
}
