use dynamic_reserve::agents::{draw_world, draw_world_conditioned, ItemType, MarketConfig, Strategy};
use dynamic_reserve::auction::ReservePolicy;
use dynamic_reserve::distributions::ValuationDistribution;
use dynamic_reserve::engine::{
    dump_trajectories, estimate, grid_search_static_reserve, simulate_trajectory, simulate_world, with_threads,
};
use dynamic_reserve::theory::benchmark_revenue;

fn market(n: usize, rounds: usize, alpha: f64, p_high: f64) -> MarketConfig {
    MarketConfig::symmetric(
        n,
        rounds,
        alpha,
        p_high,
        ValuationDistribution::truncated_normal(1.0, 0.4, 0.0, 3.0).unwrap(),
        ValuationDistribution::normal(3.0, 0.8).unwrap(),
    )
    .unwrap()
}

fn truthful(n: usize) -> Vec<Strategy> {
    vec![Strategy::Truthful; n]
}

#[test]
fn single_uniform_buyer_pays_a_quarter_per_round() {
    let u = ValuationDistribution::uniform(0.0, 1.0).unwrap();
    let mut config = MarketConfig::symmetric(1, 1000, 1.0, 0.0, u.clone(), u).unwrap();
    config.beta = 1.0;
    let s = estimate(
        &config,
        &ReservePolicy::static_reserve(0.5).unwrap(),
        &truthful(1),
        200,
        4,
    )
    .unwrap();
    assert!(s.revenue_per_round.contains(0.25), "{:?}", s.revenue_per_round);
}

#[test]
fn static_reserve_on_disjoint_supports() {
    let config = MarketConfig::symmetric(
        3,
        100,
        1.0,
        0.5,
        ValuationDistribution::uniform(0.0, 1.0).unwrap(),
        ValuationDistribution::uniform(2.0, 3.0).unwrap(),
    )
    .unwrap();
    for seed in 0..20 {
        let tr = simulate_trajectory(
            &config,
            &ReservePolicy::static_reserve(0.5).unwrap(),
            &truthful(3),
            seed,
        )
        .unwrap();
        assert!(tr.rounds.iter().all(|r| r.reserve == 0.5));
        assert!(tr.rounds.iter().filter(|r| r.winner.is_some()).all(|r| r.price >= 0.5));
    }
}

#[test]
fn high_bid_in_round_one_triggers_immediately() {
    let config = market(5, 10, 1.0, 1.0);
    let policy = ReservePolicy::threshold(3.0, 0.796, 2.318).unwrap();
    for seed in 0..50 {
        let world = draw_world(&config, seed).unwrap();
        let tr = simulate_world(&world, &policy, &truthful(5), seed).unwrap();
        let high = world.initial_valuations.iter().any(|&v| v > 3.0);
        assert_eq!(tr.trigger_round == Some(1), high);
    }
}

#[test]
fn value_is_conserved_on_every_trajectory() {
    let mut config = market(6, 300, 0.3, 0.5);
    config.beta = 0.2;
    let policy = ReservePolicy::threshold(3.0, 0.796, 2.318).unwrap();
    let mut strategies = truthful(6);
    strategies[0] = Strategy::capped(2.5, None);
    for seed in 0..40 {
        let tr = simulate_trajectory(&config, &policy, &strategies, seed).unwrap();
        let total: f64 = tr.utilities.iter().sum();
        assert!((tr.revenue + total - tr.allocated_value).abs() < 1e-9);
        let paid: f64 = tr.rounds.iter().map(|r| r.price).sum();
        assert!((paid - tr.revenue).abs() < 1e-9);
        for i in 0..6 {
            let u: f64 = tr
                .rounds
                .iter()
                .filter(|r| r.winner == Some(i))
                .map(|r| tr.valuations[i][r.t - 1] - r.price)
                .sum();
            assert!((u - tr.utilities[i]).abs() < 1e-9);
        }
        assert_eq!(tr.rounds.len(), 300);
    }
}

#[test]
fn estimates_do_not_depend_on_the_thread_count() {
    let config = market(10, 400, 0.1, 0.5);
    let policy = ReservePolicy::threshold(3.0, 0.796, 2.318).unwrap();
    let one = with_threads(Some(1), || estimate(&config, &policy, &truthful(10), 64, 7))
        .unwrap()
        .unwrap();
    let four = with_threads(Some(4), || estimate(&config, &policy, &truthful(10), 64, 7))
        .unwrap()
        .unwrap();
    assert_eq!(one, four);
    assert_eq!(
        serde_json::to_string(&one).unwrap(),
        serde_json::to_string(&four).unwrap()
    );
}

#[test]
fn conditional_means_blend_to_the_overall_mean() {
    let config = market(10, 300, 0.1, 0.5);
    let s = estimate(
        &config,
        &ReservePolicy::threshold(3.0, 0.796, 2.318).unwrap(),
        &truthful(10),
        100,
        2,
    )
    .unwrap();
    assert!(s.stratified);
    let blend = 0.5 * s.by_type["L"].revenue_per_round.mean + 0.5 * s.by_type["H"].revenue_per_round.mean;
    assert!((blend - s.revenue_per_round.mean).abs() < 1e-12);
    assert_eq!(s.by_type["L"].replications + s.by_type["H"].replications, 100);
    assert_eq!(s.trigger_rounds.values().sum::<usize>() + s.never_triggered, 100);
}

#[test]
fn unstratified_when_a_type_is_too_rare() {
    let mut config = market(4, 50, 0.5, 0.5);
    config.p_low = 0.99;
    config.p_high = 0.01;
    let s = estimate(
        &config,
        &ReservePolicy::static_reserve(1.0).unwrap(),
        &truthful(4),
        20,
        0,
    )
    .unwrap();
    assert!(!s.stratified);
}

#[test]
fn one_replication_is_rejected() {
    let config = market(4, 50, 0.5, 0.5);
    assert!(estimate(
        &config,
        &ReservePolicy::static_reserve(1.0).unwrap(),
        &truthful(4),
        1,
        0
    )
    .is_err());
}

#[test]
fn arity_mismatch_is_rejected() {
    let config = market(4, 50, 0.5, 0.5);
    assert!(simulate_trajectory(&config, &ReservePolicy::static_reserve(1.0).unwrap(), &truthful(3), 0).is_err());
}

#[test]
fn grid_search_finds_the_overlapping_normals_reserve() {
    let config = market(20, 6800, 0.05, 0.5);
    let grid: Vec<f64> = (0..=40).map(|i| 0.5 + 0.05 * i as f64).collect();
    let g = grid_search_static_reserve(&config, &grid, 2000, 1).unwrap();
    assert!((g.best_reserve - 1.05).abs() < 0.051, "{}", g.best_reserve);
    assert!((g.best_revenue.mean - 0.755).abs() < 0.01);
}

#[test]
fn grid_search_agrees_with_simulation() {
    let config = market(8, 200, 0.3, 0.5);
    let g = grid_search_static_reserve(&config, &[0.9, 1.4], 50, 3).unwrap();
    for (r, est) in &g.revenues {
        let s = estimate(
            &config,
            &ReservePolicy::static_reserve(*r).unwrap(),
            &truthful(8),
            50,
            3,
        )
        .unwrap();
        assert!((s.revenue_per_round.mean - est.mean).abs() < 1e-12);
    }
}

#[test]
fn grid_search_on_a_known_type_lands_on_its_reserve() {
    let config = market(5, 400, 0.5, 1.0);
    let r_star = config.high.optimal_reserve(1e-9).unwrap().reserve;
    let grid: Vec<f64> = (0..=12).map(|i| 1.5 + 0.1 * i as f64).collect();
    let g = grid_search_static_reserve(&config, &grid, 400, 8).unwrap();
    assert!(
        (g.best_reserve - r_star).abs() <= 0.2 + 1e-9,
        "{} vs {r_star}",
        g.best_reserve
    );
}

#[test]
fn single_point_grid() {
    let config = market(4, 50, 0.5, 0.5);
    let g = grid_search_static_reserve(&config, &[1.3], 10, 0).unwrap();
    assert_eq!(g.best_reserve, 1.3);
    assert!(grid_search_static_reserve(&config, &[], 10, 0).is_err());
}

#[test]
fn threshold_revenue_sits_between_static_and_known_type() {
    let config = market(20, 6800, 0.05, 0.5);
    let r_low = config.low.optimal_reserve(1e-9).unwrap().reserve;
    let r_high = config.high.optimal_reserve(1e-9).unwrap().reserve;
    let fixed = estimate(
        &config,
        &ReservePolicy::static_reserve(1.05).unwrap(),
        &truthful(20),
        2000,
        1,
    )
    .unwrap();
    let dynamic = estimate(
        &config,
        &ReservePolicy::threshold(3.0, r_low, r_high).unwrap(),
        &truthful(20),
        2000,
        1,
    )
    .unwrap();
    let bench = benchmark_revenue(&config, 4_000_000, 1).unwrap();
    let (a, b, c) = (fixed.revenue_per_round, dynamic.revenue_per_round, bench.blended);
    assert!(b.mean - a.mean > (a.ci_halfwidth.powi(2) + b.ci_halfwidth.powi(2)).sqrt());
    assert!(b.mean <= c.mean + (b.ci_halfwidth.powi(2) + c.ci_halfwidth.powi(2)).sqrt());
}

#[test]
fn trajectory_dump_writes_one_file_per_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let config = market(4, 30, 0.5, 0.5);
    let policy = ReservePolicy::threshold(3.0, 0.8, 2.3).unwrap();
    let paths = dump_trajectories(&config, &policy, &truthful(4), 3, 5, dir.path()).unwrap();
    assert_eq!(paths.len(), 3);
    let text = std::fs::read_to_string(&paths[0]).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,reserve,winner,price,triggered");
    assert_eq!(text.lines().count(), 31);
}

#[test]
fn pinned_world_changes_only_the_pinned_value() {
    let config = market(5, 100, 0.2, 0.5);
    let a = draw_world_conditioned(&config, 4, Some(ItemType::H), None).unwrap();
    let b = draw_world_conditioned(&config, 4, Some(ItemType::H), Some((2, 3.3))).unwrap();
    assert_eq!(a.participation_matrix(), b.participation_matrix());
    for i in [0, 1, 3, 4] {
        assert_eq!(a.initial_valuations[i], b.initial_valuations[i]);
    }
    assert_eq!(b.initial_valuations[2], 3.3);
}
