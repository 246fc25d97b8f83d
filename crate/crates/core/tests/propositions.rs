use pgsearch_core::eval::{count_action_sequences, ENUMERATION_BUDGET};
use pgsearch_core::rng::rng_from_seed;
use pgsearch_core::*;
use rand::Rng;

fn grid(w: usize, h: usize) -> GridSpec {
    GridSpec::sized(w, h).unwrap()
}

fn random_map(spec: GridSpec, seed: u64) -> ProbabilityMap {
    let mut rng = rng_from_seed(seed);
    let mut map = ProbabilityMap::from_fn(spec, |_| rng.gen::<f64>()).unwrap();
    map.normalize().unwrap();
    map
}

fn random_policy(seed: u64, scale: f64) -> Policy {
    let design = FeatureDesign::multires();
    let mut rng = rng_from_seed(seed);
    let theta = (0..4 * design.k).map(|_| scale * (rng.gen::<f64>() * 2.0 - 1.0)).collect();
    Policy::from_parts(design, theta).unwrap()
}

fn fixed(x: usize, y: usize, horizon: usize) -> EnvConfig {
    EnvConfig::new(0.9, horizon, StartCell::Fixed(Cell::new(x, y))).unwrap()
}

#[test]
fn prop1_zero_map_is_zero_on_both_sides() {
    let spec = grid(3, 3);
    let map = ProbabilityMap::zeros(spec).unwrap();
    let policy = Policy::zeros(FeatureDesign::multires());
    let r = check_proposition1(&map, &policy, &fixed(1, 1, 4), CheckMode::Enumerate).unwrap();
    assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    assert!(r.passed && r.exact);
}

#[test]
fn prop1_single_forced_branch() {
    let spec = grid(2, 1);
    let p = 0.37;
    let map = ProbabilityMap::new(spec, vec![0.0, p]).unwrap();
    let policy = Policy::zeros(FeatureDesign::multires());
    let r = check_proposition1(&map, &policy, &fixed(0, 0, 1), CheckMode::Enumerate).unwrap();
    assert!((r.lhs - 0.9 * p).abs() < 1e-15);
    assert!((r.rhs - 0.9 * p).abs() < 1e-15);
    assert!(r.passed);
}

#[test]
fn prop1_exact_on_random_small_instances() {
    let mut worst: f64 = 0.0;
    for i in 0..24u64 {
        let (w, h) = [(3, 3), (2, 3), (3, 2), (2, 2)][i as usize % 4];
        let spec = grid(w, h);
        let map = random_map(spec, 100 + i);
        let policy = if i % 2 == 0 {
            Policy::zeros(FeatureDesign::multires())
        } else {
            random_policy(200 + i, 50.0)
        };
        let horizon = 3 + (i as usize % 3);
        let config = if i % 3 == 0 {
            EnvConfig::new(0.9, horizon, StartCell::Random).unwrap()
        } else {
            fixed(i as usize % w, 0, horizon)
        };
        let r = check_proposition1(&map, &policy, &config, CheckMode::Enumerate).unwrap();
        assert!(r.passed, "{r:?}");
        worst = worst.max((r.lhs - r.rhs).abs());
    }
    assert!(worst <= 1e-12);
}

#[test]
fn prop1_monte_carlo_agrees() {
    let spec = grid(5, 5);
    let map = random_map(spec, 9);
    let policy = Policy::zeros(FeatureDesign::multires());
    let config = EnvConfig::new(0.9, 10, StartCell::Random).unwrap();
    let r = check_proposition1(&map, &policy, &config, CheckMode::MonteCarlo { samples: 4000, seed: 3 }).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.lhs_se.unwrap() > 0.0 && !r.exact);
}

#[test]
fn prop1_detects_a_corrupted_reward() {
    let spec = grid(3, 3);
    let map = random_map(spec, 1);
    let policy = Policy::zeros(FeatureDesign::multires());
    let hook = |t: usize, r: f64| if t > 0 { 1.1 * r } else { r };
    let r = check_proposition1_with_hook(&map, &policy, &fixed(0, 0, 4), CheckMode::Enumerate, &hook).unwrap();
    assert!(!r.passed);
}

#[test]
fn enumeration_refuses_large_trees() {
    let spec = grid(10, 10);
    let map = random_map(spec, 2);
    let policy = Policy::zeros(FeatureDesign::multires());
    let err = check_proposition1(&map, &policy, &fixed(5, 5, 12), CheckMode::Enumerate).unwrap_err();
    assert!(matches!(err, Error::EnumerationBudget { budget, .. } if budget == ENUMERATION_BUDGET));
}

#[test]
fn sequence_count_matches_enumerated_leaves() {
    let spec = grid(3, 2);
    let map = random_map(spec, 4);
    let policy = Policy::zeros(FeatureDesign::multires());
    for config in [fixed(0, 0, 4), EnvConfig::new(0.9, 3, StartCell::Random).unwrap()] {
        let mut leaves = 0u128;
        let mut mass = 0.0;
        let counted = enumerate_trajectories(&map, &policy, &config, |p, cells, _| {
            leaves += 1;
            mass += p;
            assert_eq!(cells.len(), config.horizon + 1);
        })
        .unwrap();
        assert_eq!(counted, leaves);
        assert_eq!(count_action_sequences(spec, config.start, config.horizon), leaves);
        assert!((mass - 1.0).abs() < 1e-12);
    }
}

#[test]
fn sampled_returns_match_the_trajectory_tree() {
    let spec = grid(4, 4);
    let map = random_map(spec, 5);
    let policy = Policy::zeros(FeatureDesign::multires());
    let config = EnvConfig::new(0.9, 6, StartCell::Random).unwrap();
    let exact = exact_expected_return(&map, &policy, &config).unwrap();
    let n = 10_000;
    let samples: Vec<f64> = (0..n)
        .map(|s| rollout(&map, &policy, &config, RolloutMode::Sample, s).unwrap().discounted_return(0.9))
        .collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let se = (var / n as f64).sqrt();
    assert!((mean - exact).abs() <= 3.0 * se, "mean {mean} exact {exact} se {se}");
}

#[test]
fn prop2_needs_enough_batches() {
    let spec = grid(3, 3);
    let map = random_map(spec, 1);
    let policy = Policy::zeros(FeatureDesign::multires());
    let err = check_proposition2(&map, &policy, &fixed(0, 0, 3), 29, 5, 0).unwrap_err();
    assert_eq!(err, Error::InsufficientBatches { required: 30, found: 29 });
}

#[test]
fn prop2_single_path_world_has_zero_variance() {
    let spec = grid(2, 1);
    let map = ProbabilityMap::new(spec, vec![0.3, 0.7]).unwrap();
    let policy = Policy::zeros(FeatureDesign::multires());
    let r = check_proposition2(&map, &policy, &fixed(0, 0, 3), 30, 4, 1).unwrap();
    let v = r.variance.as_ref().unwrap();
    assert_eq!((v.var_proxy, v.var_indicator), (0.0, 0.0));
    assert!(r.passed);
}

#[test]
fn prop2_never_visited_mass_gives_zero_estimates() {
    // 3x1 strip, all mass east of the middle cell, East made impossible
    let spec = grid(3, 1);
    let map = ProbabilityMap::new(spec, vec![0.0, 0.0, 1.0]).unwrap();
    let design = FeatureDesign::multires();
    let mut theta = vec![0.0; 4 * design.k];
    // East block, ring-1 East sector
    theta[design.k + 2] = -1.0e4;
    let policy = Policy::from_parts(design, theta).unwrap();
    let r = check_proposition2(&map, &policy, &fixed(0, 0, 6), 30, 5, 2).unwrap();
    let v = r.variance.as_ref().unwrap();
    assert_eq!((v.var_proxy, v.var_indicator, v.var_integrated), (0.0, 0.0, 0.0));
    assert!(r.passed);
}

#[test]
fn prop2_integrated_estimator_equals_proxy_on_a_full_map() {
    let spec = grid(3, 3);
    let map = random_map(spec, 8);
    let policy = Policy::zeros(FeatureDesign::multires());
    let r = check_proposition2(&map, &policy, &fixed(1, 1, 4), 30, 5, 4).unwrap();
    let v = r.variance.unwrap();
    assert!((v.var_proxy - v.var_integrated).abs() <= 1e-12 * v.var_proxy.max(1e-300));
}
