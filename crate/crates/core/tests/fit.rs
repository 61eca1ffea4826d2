use std::io::Write;

use patternlab::fit::{fit, objective, FitBounds, FitConfig, Interval, ObservedCurve};
use patternlab::{curve, Axis, Error, Grid, Pattern, Scenario};

fn observe(scenario: &Scenario, grid: &Grid) -> ObservedCurve {
    let c = curve(scenario, grid, Axis::Time, None).unwrap();
    ObservedCurve::new(c.grid, c.train, c.test, None).unwrap()
}

fn known_scenario() -> Scenario {
    let patterns = vec![
        Pattern::new(0.4, 2.0, 3.0, 0.9).unwrap(),
        Pattern::new(1.0, 0.2, 40.0, 0.1).unwrap(),
        Pattern::new(0.9, 0.01, 800.0, 1.0).unwrap(),
    ];
    Scenario::new(patterns, Some(2), 0.0).unwrap()
}

#[test]
fn recovers_a_known_three_pattern_curve() {
    let grid: Grid = "log:0.1:1e4:64".parse().unwrap();
    let observed = observe(&known_scenario(), &grid);
    let mut config = FitConfig::new(3, 5);
    config.preferred = Some(2);
    let result = fit(&observed, &config).unwrap();
    assert!(result.loss <= 1e-4, "loss {}", result.loss);
    let fitted = curve(&result.scenario, &grid, Axis::Time, None).unwrap();
    for i in 0..grid.len() {
        assert!((fitted.train[i] - observed.train[i]).abs() <= 0.02);
        assert!((fitted.test[i] - observed.test[i]).abs() <= 0.02);
    }
}

#[test]
fn more_restarts_never_hurt() {
    let grid: Grid = "log:0.5:500:24".parse().unwrap();
    let observed = observe(&known_scenario(), &grid);
    let mut previous = f64::INFINITY;
    for restarts in [1, 2, 4, 8] {
        let mut config = FitConfig::new(2, 17);
        config.restarts = restarts;
        config.max_evals = 600;
        let loss = fit(&observed, &config).unwrap().loss;
        assert!(loss <= previous, "{restarts} restarts: {loss} > {previous}");
        previous = loss;
    }
}

#[test]
fn explicit_bounds_are_respected() {
    let grid: Grid = "log:1:1000:20".parse().unwrap();
    let observed = observe(&known_scenario(), &grid);
    let bounds = FitBounds {
        gamma: Interval::new(0.2, 0.6),
        alpha: Interval::new(0.0, 0.5),
        b: Interval::new(10.0, 100.0),
        g: Interval::new(0.3, 0.7),
    };
    let mut config = FitConfig::new(2, 1);
    config.restarts = 4;
    config.max_evals = 2000;
    config.bounds = Some(bounds);
    let result = fit(&observed, &config).unwrap();
    for p in result.scenario.patterns() {
        assert!(bounds.gamma.contains(p.gamma()));
        assert!(bounds.alpha.contains(p.alpha()));
        assert!(bounds.b.contains(p.b()));
        assert!(bounds.g.contains(p.g()));
    }
    let b: Vec<f64> = result.scenario.patterns().iter().map(|p| p.b()).collect();
    assert!(b.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(result.loss, objective(&observed, &result.scenario).unwrap());
}

#[test]
fn malformed_bounds_are_rejected() {
    let grid: Grid = "lin:0:10:5".parse().unwrap();
    let observed = observe(&known_scenario(), &grid);
    let mut config = FitConfig::new(1, 0);
    config.bounds = Some(FitBounds {
        gamma: Interval::new(0.8, 0.2),
        ..FitBounds::from_grid(&observed.grid)
    });
    assert!(matches!(fit(&observed, &config), Err(Error::Bounds { .. })));
    config.bounds = None;
    config.n_patterns = 6;
    assert!(fit(&observed, &config).is_err());
}

#[test]
fn reads_observations_from_a_file() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "t,train_acc,test_acc\n1,0.1,0.05\n2,0.5,0.2\n4,0.9,0.4").unwrap();
    let observed = ObservedCurve::read_csv(std::fs::File::open(file.path()).unwrap()).unwrap();
    assert_eq!(observed.grid, vec![1.0, 2.0, 4.0]);
    assert_eq!(observed.test, vec![0.05, 0.2, 0.4]);

    let empty = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(empty.path(), "t,train_acc,test_acc\n").unwrap();
    let err = ObservedCurve::read_csv(std::fs::File::open(empty.path()).unwrap()).unwrap_err();
    assert!(matches!(err, Error::EmptyObservation(_)));
}
