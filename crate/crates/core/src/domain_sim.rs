//! Monte Carlo simulation of patterns as input domains.
//!
//! Each synthetic point falls into the domain of pattern `i` independently
//! with probability `p_i(t)`. A training point is classified correctly iff
//! some domain covers it. A test point is allocated uniformly at random to one
//! covering pattern (always to the preferred pattern when it covers the point,
//! so no other domain can claim it) and is then correct with probability `g`
//! of that pattern, or with probability `baseline` when uncovered.
//!
//! The estimates converge to [`train_accuracy`](crate::model::train_accuracy)
//! and [`test_accuracy_exact`](crate::model::test_accuracy_exact), which makes
//! this module an independent check on the subset enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{Curve, Source};
use crate::error::{Error, Result};
use crate::grid::{Axis, Grid};
use crate::model::{Moments, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSimConfig {
    pub scenario: Scenario,
    pub t: f64,
    /// Synthetic points per trial.
    pub points: u64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSimResult {
    pub train_acc: f64,
    pub test_acc: f64,
    pub stderr_train: f64,
    pub stderr_test: f64,
}

/// Fraction of all simulated points allocated to each pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationHistogram {
    pub frequencies: Vec<f64>,
    /// Fraction of points no domain covers.
    pub uncovered: f64,
    pub total_points: u64,
}

impl AllocationHistogram {
    /// Binomial standard error of each frequency.
    pub fn stderr(&self) -> Vec<f64> {
        let n = self.total_points as f64;
        self.frequencies
            .iter()
            .map(|f| (f * (1.0 - f) / n).sqrt())
            .collect()
    }
}

impl DomainSimConfig {
    pub fn new(scenario: Scenario, t: f64, points: u64, trials: u64, seed: u64) -> Result<Self> {
        let config = Self {
            scenario,
            t,
            points,
            trials,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t.is_finite() || self.t < 0.0 {
            return Err(Error::invalid("t", "must be finite and >= 0"));
        }
        if self.points == 0 {
            return Err(Error::invalid("points", "must be >= 1"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be >= 1"));
        }
        Ok(())
    }
}

struct TrialTally {
    train: Moments,
    test: Moments,
    allocations: Vec<u64>,
}

/// Generator for one trial: the seed picks the key, the trial index the stream.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn run_trial(config: &DomainSimConfig, probs: &[f64], trial: u64) -> TrialTally {
    let scenario = &config.scenario;
    let patterns = scenario.patterns();
    let preferred = scenario.preferred();
    let mut rng = trial_rng(config.seed, trial);
    let mut covered = Vec::with_capacity(probs.len());
    let mut tally = TrialTally {
        train: Moments::default(),
        test: Moments::default(),
        allocations: vec![0; probs.len()],
    };
    for _ in 0..config.points {
        covered.clear();
        let mut preferred_covers = false;
        for (i, &p) in probs.iter().enumerate() {
            if rng.gen::<f64>() < p {
                covered.push(i);
                preferred_covers |= preferred == Some(i);
            }
        }
        let allocated = if preferred_covers {
            preferred
        } else if covered.is_empty() {
            None
        } else {
            Some(covered[rng.gen_range(0..covered.len())])
        };
        let success = match allocated {
            Some(i) => {
                tally.allocations[i] += 1;
                patterns[i].g()
            }
            None => scenario.baseline(),
        };
        let correct = rng.gen::<f64>() < success;
        tally.train.push(if covered.is_empty() { 0.0 } else { 1.0 });
        tally.test.push(if correct { 1.0 } else { 0.0 });
    }
    tally
}

fn run(config: &DomainSimConfig) -> Result<TrialTally> {
    config.validate()?;
    let probs: Vec<f64> = config
        .scenario
        .patterns()
        .iter()
        .map(|p| p.predictiveness(config.t))
        .collect();
    let tallies: Vec<TrialTally> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, &probs, trial))
        .collect();
    // fold in trial order so the floating-point result never depends on scheduling
    let total = tallies
        .into_iter()
        .reduce(|mut acc, next| {
            acc.train = acc.train.merge(next.train);
            acc.test = acc.test.merge(next.test);
            acc.allocations
                .iter_mut()
                .zip(next.allocations)
                .for_each(|(a, b)| *a += b);
            acc
        })
        .expect("at least one trial");
    Ok(total)
}

/// Empirical train and test accuracy, pooled over `points * trials` draws.
pub fn simulate(config: &DomainSimConfig) -> Result<DomainSimResult> {
    let total = run(config)?;
    Ok(DomainSimResult {
        train_acc: total.train.mean().clamp(0.0, 1.0),
        test_acc: total.test.mean().clamp(0.0, 1.0),
        stderr_train: total.train.stderr(),
        stderr_test: total.test.stderr(),
    })
}

/// Per-pattern allocation frequencies over all simulated test points.
pub fn allocation_histogram(config: &DomainSimConfig) -> Result<AllocationHistogram> {
    let total = run(config)?;
    let n = config.points * config.trials;
    let frequencies: Vec<f64> = total
        .allocations
        .iter()
        .map(|&c| c as f64 / n as f64)
        .collect();
    let allocated: u64 = total.allocations.iter().sum();
    Ok(AllocationHistogram {
        frequencies,
        uncovered: (n - allocated) as f64 / n as f64,
        total_points: n,
    })
}

/// Simulated curve over a grid, tagged with [`Source::DomainSim`]. Every grid
/// point uses the same seed.
pub fn simulate_curve(
    scenario: &Scenario,
    grid: &Grid,
    axis: Axis,
    points: u64,
    trials: u64,
    seed: u64,
) -> Result<Curve> {
    let mut train = Vec::with_capacity(grid.len());
    let mut test = Vec::with_capacity(grid.len());
    for &t in grid.points() {
        let r = simulate(&DomainSimConfig::new(scenario.clone(), t, points, trials, seed)?)?;
        train.push(r.train_acc);
        test.push(r.test_acc);
    }
    let mut curve = Curve::new(grid.points().to_vec(), train, test, axis)?;
    curve.source = Source::DomainSim;
    Ok(curve)
}
