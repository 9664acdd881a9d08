use dynamic_reserve::agents::{draw_world_conditioned, ItemType, MarketConfig, Strategy, World};
use dynamic_reserve::auction::{ReservePolicy, ReserveRule};
use dynamic_reserve::audit::{
    brute_force_best_response, capped_family, continuation_gain, dynamic_ic_audit, paired_utilities, profiles,
    static_ic_gap, Condition, OracleConfig,
};
use dynamic_reserve::distributions::ValuationDistribution;
use dynamic_reserve::engine::simulate_world;
use dynamic_reserve::rng::split_seed;
use dynamic_reserve::stats::RunningStats;
use dynamic_reserve::Error;
use rand::{Rng, SeedableRng};

fn uniform_market(n: usize, rounds: usize, alpha: f64) -> MarketConfig {
    MarketConfig::symmetric(
        n,
        rounds,
        alpha,
        0.5,
        ValuationDistribution::uniform(0.0, 1.0).unwrap(),
        ValuationDistribution::uniform(0.0, 1.0).unwrap(),
    )
    .unwrap()
}

fn disjoint_market(n: usize, rounds: usize, alpha: f64) -> MarketConfig {
    MarketConfig::symmetric(
        n,
        rounds,
        alpha,
        0.5,
        ValuationDistribution::uniform(0.0, 1.0).unwrap(),
        ValuationDistribution::truncated_normal(3.0, 0.5, 2.0, f64::INFINITY).unwrap(),
    )
    .unwrap()
}

fn example1(n: usize, rounds: usize, alpha: f64) -> MarketConfig {
    MarketConfig::symmetric(
        n,
        rounds,
        alpha,
        0.5,
        ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0).unwrap(),
        ValuationDistribution::normal(3.0, 0.8).unwrap(),
    )
    .unwrap()
}

#[test]
fn lone_buyer_gains_the_reserve_gap_by_shading() {
    let market = uniform_market(1, 2, 1.0);
    let policy = ReservePolicy::threshold(0.8, 0.2, 0.5).unwrap();
    let family = vec![Strategy::capped(0.79, Some(1))];
    let report = static_ic_gap(&market, &policy, 0, &[0.9], &family, 50, 1).unwrap();
    for cell in &report.cells {
        assert!((cell.gain.mean - 0.3).abs() < 1e-12);
        assert!((cell.normalized_gain.mean - 0.15).abs() < 1e-12);
    }

    let oracle = brute_force_best_response(&OracleConfig {
        market,
        mechanism: ReserveRule::Threshold {
            rho: 0.8,
            low: 0.2,
            high: 0.5,
        },
        agent: 0,
        item_type: ItemType::H,
        valuations: vec![0.9],
        opponent_points: 1,
        bid_points: 11,
    })
    .unwrap();
    assert!((oracle.valuations[0].gain - 0.3).abs() < 1e-12);
    let first = oracle.policy.iter().find(|e| e.round == 1).unwrap();
    assert!(first.best_bid < 0.8);
}

#[test]
fn truthful_is_optimal_in_the_last_round() {
    for (market, rule) in [
        (
            uniform_market(2, 2, 0.6),
            ReserveRule::Threshold {
                rho: 0.7,
                low: 0.3,
                high: 0.5,
            },
        ),
        (
            example1(3, 2, 1.0),
            ReserveRule::Threshold {
                rho: 3.0,
                low: 0.796,
                high: 2.318,
            },
        ),
        (
            example1(2, 2, 0.5),
            ReserveRule::Generalized {
                rho: 3.0,
                low: 0.796,
                high: 2.318,
                k: 1,
            },
        ),
    ] {
        for s in [ItemType::L, ItemType::H] {
            let report = brute_force_best_response(&OracleConfig {
                market: market.clone(),
                mechanism: rule,
                agent: 0,
                item_type: s,
                valuations: vec![0.2, 0.9, 2.5, 3.4],
                opponent_points: 5,
                bid_points: 13,
            })
            .unwrap();
            let last: Vec<_> = report.policy.iter().filter(|e| e.round == 2).collect();
            assert!(!last.is_empty());
            for e in last {
                assert!((e.best_value - e.truthful_value).abs() < 1e-12, "{e:?}");
            }
        }
    }
}

#[test]
fn disjoint_supports_leave_nothing_to_gain() {
    let market = disjoint_market(2, 3, 1.0);
    let r_low = market.low.optimal_reserve(1e-9).unwrap().reserve;
    let r_high = market.high.optimal_reserve(1e-9).unwrap().reserve;
    for (s, valuations) in [(ItemType::L, vec![0.1, 0.5, 0.9]), (ItemType::H, vec![2.1, 2.7, 3.5])] {
        let report = brute_force_best_response(&OracleConfig {
            market: market.clone(),
            mechanism: ReserveRule::Threshold {
                rho: 1.5,
                low: r_low,
                high: r_high,
            },
            agent: 0,
            item_type: s,
            valuations,
            opponent_points: 7,
            bid_points: 15,
        })
        .unwrap();
        for v in &report.valuations {
            assert_eq!(v.best_value, v.truthful_value, "{s:?} {v:?}");
        }
    }
}

#[test]
fn simulated_truthful_utility_matches_the_oracle() {
    let market = example1(2, 3, 0.7);
    let rule = ReserveRule::Threshold {
        rho: 3.0,
        low: 0.796,
        high: 2.318,
    };
    let own = 3.4;
    let report = brute_force_best_response(&OracleConfig {
        market: market.clone(),
        mechanism: rule,
        agent: 0,
        item_type: ItemType::H,
        valuations: vec![own],
        opponent_points: 5,
        bid_points: 9,
    })
    .unwrap();
    let exact = report.valuations[0].truthful_value;
    let policy = ReservePolicy::new(rule).unwrap();
    let truthful = vec![Strategy::Truthful; 2];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    let mut stats = RunningStats::default();
    for r in 0..100_000u64 {
        let other = report.opponent_values[rng.random_range(0..report.opponent_values.len())];
        let rounds: Vec<Vec<(usize, f64)>> = (0..3)
            .map(|_| {
                let mut present = Vec::new();
                if rng.random::<f64>() < 0.7 {
                    present.push((0, own));
                }
                if rng.random::<f64>() < 0.7 {
                    present.push((1, other));
                }
                present
            })
            .collect();
        let world = World::from_rounds(ItemType::H, vec![own, other], rounds).unwrap();
        stats.push(simulate_world(&world, &policy, &truthful, r).unwrap().utilities[0]);
    }
    let est = stats.estimate();
    assert!(est.contains(exact), "{est:?} vs {exact}");
}

#[test]
fn oracle_refuses_large_state_spaces() {
    let err = brute_force_best_response(&OracleConfig {
        market: example1(3, 3, 0.5),
        mechanism: ReserveRule::Threshold {
            rho: 3.0,
            low: 0.796,
            high: 2.318,
        },
        agent: 0,
        item_type: ItemType::H,
        valuations: vec![3.4],
        opponent_points: 21,
        bid_points: 21,
    })
    .unwrap_err();
    assert!(matches!(err, Error::StateSpaceOverflow { .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn gains_are_never_negative_before_noise() {
    let market = example1(6, 60, 0.3);
    let policy = ReservePolicy::threshold(3.0, 0.796, 2.318).unwrap();
    let family = capped_family(&market.high, 3.0, &[1, 10, 60]);
    let report = static_ic_gap(&market, &policy, 1, &[0.5, 2.5, 3.3, 4.0], &family, 40, 2).unwrap();
    assert!(report.cells.iter().all(|c| c.gain.mean >= 0.0));
    assert!(report.certified_epsilon.mean >= 0.0);
    assert_eq!(report.caveats.len(), 2);
}

#[test]
fn empty_family_is_rejected() {
    let market = example1(3, 10, 0.5);
    let policy = ReservePolicy::threshold(3.0, 0.796, 2.318).unwrap();
    assert!(static_ic_gap(&market, &policy, 0, &[3.4], &[], 10, 0).is_err());
}

#[test]
fn gain_table_writes_csv() {
    let market = example1(3, 10, 0.5);
    let policy = ReservePolicy::threshold(3.0, 0.796, 2.318).unwrap();
    let report = static_ic_gap(&market, &policy, 0, &[3.4], &[Strategy::capped(2.9, None)], 10, 0).unwrap();
    let mut out = Vec::new();
    report.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.lines().count() >= 2);
}

#[test]
fn no_gain_after_the_reserve_rises() {
    let market = example1(8, 40, 0.3);
    let policy = ReservePolicy::threshold(3.0, 0.796, 2.318).unwrap();
    let family = capped_family(&market.high, 3.0, &[1, 10, 40]);
    for (t, v) in [(5, 3.4), (12, 2.8), (25, 4.1)] {
        let g = continuation_gain(
            &market,
            &policy,
            0,
            v,
            ItemType::H,
            t,
            Condition::Triggered,
            &family,
            200,
            3,
        )
        .unwrap();
        assert!(g.accepted >= 2);
        assert!(g.gain.mean <= g.gain.ci_halfwidth, "{g:?}");
    }
}

#[test]
fn low_realizations_below_the_trigger_are_good() {
    let mut market = example1(5, 30, 0.4);
    market.low = ValuationDistribution::uniform(0.0, 1.0).unwrap();
    market.p_low = 1.0;
    market.p_high = 0.0;
    let policy = ReservePolicy::threshold(3.0, 0.5, 2.318).unwrap();
    let family = capped_family(&market.low, 3.0, &[1, 30]);
    let report = dynamic_ic_audit(&market, &policy, 0.1, 0.1, &family, 20, 10, 4).unwrap();
    assert_eq!(report.good, 20);
    for r in &report.realizations {
        for c in &r.candidates {
            assert!(c.by_dominance);
            assert!(c.gain.is_none());
        }
    }
}

#[test]
fn pairing_reduces_gain_variance() {
    let market = example1(8, 200, 0.2);
    let policy = ReservePolicy::threshold(3.0, 0.796, 2.318).unwrap();
    let run = profiles(8, 0, &[Strategy::capped(2.9, None)]);
    let mut paired = RunningStats::default();
    let mut independent = RunningStats::default();
    for r in 0..400 {
        let a = split_seed(9, r);
        let b = split_seed(10, r);
        let wa = draw_world_conditioned(&market, a, Some(ItemType::H), Some((0, 3.4))).unwrap();
        let wb = draw_world_conditioned(&market, b, Some(ItemType::H), Some((0, 3.4))).unwrap();
        let u = paired_utilities(&wa, &policy, &run, 0, a).unwrap();
        paired.push(u[1] - u[0]);
        let truthful = simulate_world(&wa, &policy, &run[0], a).unwrap().utilities[0];
        let deviating = simulate_world(&wb, &policy, &run[1], b).unwrap().utilities[0];
        independent.push(deviating - truthful);
    }
    assert!(
        paired.variance() < independent.variance() / 4.0,
        "{} vs {}",
        paired.variance(),
        independent.variance()
    );
}

#[test]
fn paired_utilities_match_full_simulation() {
    let market = example1(6, 80, 0.3);
    let policy = ReservePolicy::threshold(3.0, 0.796, 2.318).unwrap();
    let family = capped_family(&market.high, 3.0, &[1, 20, 80]);
    let run = profiles(6, 2, &family);
    for r in 0..30 {
        let seed = split_seed(1, r);
        let world = draw_world_conditioned(&market, seed, None, Some((2, 3.3))).unwrap();
        let fast = paired_utilities(&world, &policy, &run, 2, seed).unwrap();
        for (k, profile) in run.iter().enumerate() {
            let full = simulate_world(&world, &policy, profile, seed).unwrap().utilities[2];
            assert!((fast[k] - full).abs() < 1e-9, "profile {k}: {} vs {full}", fast[k]);
        }
    }
}
