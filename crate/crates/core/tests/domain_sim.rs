use patternlab::domain_sim::{allocation_histogram, simulate, simulate_curve, DomainSimConfig};
use patternlab::random::{random_scenario, random_time};
use patternlab::{test_accuracy_exact, train_accuracy, Axis, Pattern, Scenario, Source};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(estimate: f64, stderr: f64, exact: f64) -> bool {
    (estimate - exact).abs() <= (3.0 * stderr).max(0.005)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn converges_to_exact_accuracies(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scenario(&mut rng, n);
        let t = random_time(&mut rng);
        let r = simulate(&DomainSimConfig::new(s.clone(), t, 100_000, 10, seed).unwrap()).unwrap();
        prop_assert!(close(r.test_acc, r.stderr_test, test_accuracy_exact(&s, t).unwrap()));
        prop_assert!(close(r.train_acc, r.stderr_train, train_accuracy(&s, t)));
    }
}

#[test]
fn identical_config_is_bitwise_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_scenario(&mut rng, 5);
    let config = DomainSimConfig::new(s, 9.0, 5_000, 7, 123).unwrap();
    assert_eq!(simulate(&config).unwrap(), simulate(&config).unwrap());
    assert_eq!(allocation_histogram(&config).unwrap(), allocation_histogram(&config).unwrap());
}

#[test]
fn single_pattern_coverage_frequency() {
    // gamma = 0.3 and saturated at t = 1e4, so coverage is Bernoulli(0.3)
    let s = Scenario::new(vec![Pattern::new(0.3, 1.0, 0.0, 1.0).unwrap()], None, 0.0).unwrap();
    let h = allocation_histogram(&DomainSimConfig::new(s, 1e4, 200_000, 5, 1).unwrap()).unwrap();
    let se = h.stderr()[0];
    assert!((h.frequencies[0] - 0.3).abs() <= (3.0 * se).max(1e-3));
    assert!((h.uncovered - 0.7).abs() <= (3.0 * se).max(1e-3));
}

#[test]
fn certain_preferred_pattern_takes_every_point() {
    let patterns = vec![
        Pattern::new(0.8, 1.0, 0.0, 0.2).unwrap(),
        Pattern::new(1.0, 1.0, 0.0, 0.9).unwrap(),
        Pattern::new(0.5, 1.0, 0.0, 0.4).unwrap(),
    ];
    let s = Scenario::new(patterns, Some(1), 0.0).unwrap();
    let h = allocation_histogram(&DomainSimConfig::new(s, 1e4, 50_000, 4, 5).unwrap()).unwrap();
    assert_eq!(h.frequencies, vec![0.0, 1.0, 0.0]);
    assert_eq!(h.uncovered, 0.0);
}

#[test]
fn invalid_configs_are_rejected() {
    let s = Scenario::new(vec![Pattern::new(0.5, 1.0, 1.0, 0.5).unwrap()], None, 0.0).unwrap();
    assert!(DomainSimConfig::new(s.clone(), 1.0, 0, 1, 0).is_err());
    assert!(DomainSimConfig::new(s.clone(), 1.0, 1, 0, 0).is_err());
    assert!(DomainSimConfig::new(s, -1.0, 1, 1, 0).is_err());
}

#[test]
fn curve_is_tagged_as_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = random_scenario(&mut rng, 3);
    let grid = "lin:0:20:5".parse().unwrap();
    let c = simulate_curve(&s, &grid, Axis::Time, 20_000, 5, 2).unwrap();
    assert_eq!(c.source, Source::DomainSim);
    assert_eq!(c.len(), 5);
    for (i, &t) in c.grid.iter().enumerate() {
        assert!((c.test[i] - test_accuracy_exact(&s, t).unwrap()).abs() <= 0.02);
    }
}
