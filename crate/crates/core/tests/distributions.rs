use dynamic_reserve::distributions::{single_round_revenue, ValuationDistribution};
use dynamic_reserve::rng;
use proptest::prelude::*;

fn shipped() -> Vec<(&'static str, ValuationDistribution)> {
    vec![
        ("uniform", ValuationDistribution::uniform(0.0, 1.0).unwrap()),
        ("normal", ValuationDistribution::normal(3.0, 0.8).unwrap()),
        (
            "trunc-normal",
            ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0).unwrap(),
        ),
        (
            "trunc-normal-upper",
            ValuationDistribution::truncated_normal(3.0, 0.5, 2.0, f64::INFINITY).unwrap(),
        ),
        ("exponential", ValuationDistribution::exponential(1.0, 0.0).unwrap()),
        (
            "tabulated",
            ValuationDistribution::tabulated(&[(0.0, 0.0), (1.0, 0.2), (2.0, 0.5), (3.0, 1.0)]).unwrap(),
        ),
    ]
}

/// Kolmogorov-Smirnov statistic of `xs` against `cdf`.
fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at the 0.001 level.
const KS_CRIT_001: f64 = 1.949;

#[test]
fn samples_pass_kolmogorov_smirnov() {
    let n = 100_000;
    for (name, d) in shipped() {
        let mut r = rng::stream(42, rng::WORLD_STREAM);
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut r)).collect();
        let stat = ks_statistic(xs, |x| d.cdf(x));
        assert!(stat * (n as f64).sqrt() < KS_CRIT_001, "{name}: D = {stat}");
    }
}

#[test]
fn quantile_cdf_round_trip_on_interior_grid() {
    for (name, d) in shipped() {
        let lo = d.quantile(1e-3);
        let hi = d.quantile(1.0 - 1e-3);
        for i in 0..1000 {
            let v = lo + (hi - lo) * (i as f64 + 0.5) / 1000.0;
            let back = d.quantile(d.cdf(v));
            assert!((back - v).abs() <= 1e-9, "{name}: v={v} back={back}");
        }
    }
}

#[test]
fn cdf_is_monotone_and_pdf_nonnegative() {
    for (name, d) in shipped() {
        let (lo, hi) = d.effective_support(1e-6);
        let mut prev = 0.0;
        for i in 0..=2000 {
            let v = lo + (hi - lo) * i as f64 / 2000.0;
            let f = d.cdf(v);
            assert!(f >= prev, "{name} at {v}");
            assert!(d.pdf(v) >= 0.0, "{name} at {v}");
            prev = f;
        }
    }
}

#[test]
fn optimal_reserves_match_reference_values() {
    let tol = 1e-9;
    let uniform = ValuationDistribution::uniform(0.0, 1.0)
        .unwrap()
        .optimal_reserve(tol)
        .unwrap();
    assert!((uniform.reserve - 0.5).abs() <= 1e-9);

    let low = ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0).unwrap();
    let low_sol = low.optimal_reserve(tol).unwrap();
    assert!((low_sol.reserve - 0.796).abs() <= 1e-3, "{low_sol:?}");

    let high = ValuationDistribution::normal(3.0, 0.8).unwrap();
    let high_sol = high.optimal_reserve(tol).unwrap();
    assert!((high_sol.reserve - 2.318).abs() <= 1e-3, "{high_sol:?}");
}

#[test]
fn root_residual_within_tolerance_for_shipped_distributions() {
    for (name, d) in shipped() {
        let sol = d.optimal_reserve(1e-9).unwrap();
        assert!(sol.residual.abs() <= 1e-9, "{name}: {sol:?}");
        assert!((d.virtual_value(sol.reserve).unwrap() - sol.residual).abs() < 1e-15);
    }
}

#[test]
fn single_bidder_uniform_revenue_is_one_quarter() {
    let u = ValuationDistribution::uniform(0.0, 1.0).unwrap();
    let est = single_round_revenue(&u, 1, 1.0, 0.5, 200_000, 3).unwrap();
    assert!(est.contains(0.25), "{est:?}");
}

/// Midpoint-rule expectation of the second-price-with-reserve revenue for two
/// always-present uniform bidders.
fn two_uniform_bidders_oracle(reserve: f64, cells: usize) -> f64 {
    let h = 1.0 / cells as f64;
    let mut total = 0.0;
    for i in 0..cells {
        let a = (i as f64 + 0.5) * h;
        for j in 0..cells {
            let b = (j as f64 + 0.5) * h;
            let (hi, lo) = if a > b { (a, b) } else { (b, a) };
            if hi >= reserve {
                total += lo.max(reserve);
            }
        }
    }
    total * h * h
}

#[test]
fn two_uniform_bidders_match_quadrature() {
    let exact = two_uniform_bidders_oracle(0.5, 2000);
    assert!((exact - 5.0 / 12.0).abs() < 1e-5);
    let u = ValuationDistribution::uniform(0.0, 1.0).unwrap();
    let est = single_round_revenue(&u, 2, 1.0, 0.5, 200_000, 11).unwrap();
    assert!(est.contains(exact), "{est:?} vs {exact}");
}

#[test]
fn myerson_reserve_beats_other_grid_reserves() {
    // common seed across reserves: same valuation draws
    let d = ValuationDistribution::normal(3.0, 0.8).unwrap();
    let best = d.optimal_reserve(1e-9).unwrap().reserve;
    let at_best = single_round_revenue(&d, 3, 0.5, best, 100_000, 5).unwrap();
    for k in 0..=10 {
        let r = 1.0 + 0.3 * k as f64;
        let other = single_round_revenue(&d, 3, 0.5, r, 100_000, 5).unwrap();
        assert!(
            at_best.mean + at_best.ci_halfwidth >= other.mean - other.ci_halfwidth,
            "reserve {r}: {other:?} beats {at_best:?}"
        );
    }
}

proptest! {
    #[test]
    fn truncated_normal_round_trips(mean in -2.0f64..4.0, sd in 0.1f64..2.0, width in 0.5f64..6.0, u in 0.01f64..0.99) {
        let lo = mean - 1.0;
        let d = ValuationDistribution::truncated_normal(mean, sd, lo, lo + width).unwrap();
        let v = d.quantile(u);
        prop_assert!((d.cdf(v) - u).abs() < 1e-9);
    }

    #[test]
    fn reserve_root_is_a_zero_of_the_virtual_value(mean in 0.5f64..5.0, sd in 0.1f64..2.0) {
        let d = ValuationDistribution::normal(mean, sd).unwrap();
        let sol = d.optimal_reserve(1e-9).unwrap();
        prop_assert!(sol.residual.abs() <= 1e-9);
    }
}
