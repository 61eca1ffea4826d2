//! Recovers pattern parameters from observed train/test curves.
//!
//! The objective is the weighted mean squared error between the observed
//! series and the model's train and test accuracy. Each restart runs a
//! bounded Nelder-Mead search from its own seeded starting point; the best
//! restart wins, ties going to the lowest restart index. Restart `r` depends
//! only on `(seed, r)`, so adding restarts never makes the result worse.

use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{test_accuracy_exact, train_accuracy, Pattern, Scenario, EXACT_CAP};
use crate::simplex::{self, SimplexOptions};

pub const MAX_FIT_PATTERNS: usize = 5;
const PARAMS_PER_PATTERN: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedCurve {
    #[serde(rename = "t")]
    pub grid: Vec<f64>,
    #[serde(rename = "train_acc")]
    pub train: Vec<f64>,
    #[serde(rename = "test_acc")]
    pub test: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl ObservedCurve {
    pub fn new(grid: Vec<f64>, train: Vec<f64>, test: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        let observed = Self {
            grid,
            train,
            test,
            weights,
        };
        observed.validate()?;
        Ok(observed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::EmptyObservation("no rows".into()));
        }
        if self.grid.len() < 2 {
            return Err(Error::invalid("t", "at least two observations are required"));
        }
        let n = self.grid.len();
        if self.train.len() != n
            || self.test.len() != n
            || self.weights.as_ref().is_some_and(|w| w.len() != n)
        {
            return Err(Error::invalid("observed", "series lengths differ"));
        }
        Grid::new(self.grid.clone()).map_err(|e| e.within("observed"))?;
        for (name, series) in [("train_acc", &self.train), ("test_acc", &self.test)] {
            if let Some(v) = series.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::invalid(name, format!("{v} is outside [0, 1]")));
            }
        }
        if let Some(w) = &self.weights {
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid("weight", "weights must be finite and >= 0"));
            }
            if w.iter().sum::<f64>() <= 0.0 {
                return Err(Error::invalid("weight", "weights sum to zero"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    /// Reads `t,train_acc,test_acc[,weight]`.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        let weighted = match header.iter().map(String::as_str).collect::<Vec<_>>()[..] {
            ["t", "train_acc", "test_acc"] => false,
            ["t", "train_acc", "test_acc", "weight"] => true,
            _ => {
                return Err(Error::Parse(format!(
                    "expected header t,train_acc,test_acc[,weight], got {}",
                    header.join(",")
                )))
            }
        };
        let (mut grid, mut train, mut test, mut weights) = (vec![], vec![], vec![], vec![]);
        for record in r.records() {
            let record = record?;
            let field = |i: usize| -> Result<f64> {
                record[i]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number {:?}", &record[i])))
            };
            grid.push(field(0)?);
            train.push(field(1)?);
            test.push(field(2)?);
            if weighted {
                weights.push(field(3)?);
            }
        }
        Self::new(grid, train, test, weighted.then_some(weights))
    }
}

/// Closed interval for one parameter kind, shared by all patterns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub gamma: Interval,
    pub alpha: Interval,
    pub b: Interval,
    pub g: Interval,
}

impl FitBounds {
    /// `alpha` up to 50 over the finest grid spacing (a step between
    /// neighbouring points); `b` up to twice the last grid time.
    pub fn from_grid(grid: &[f64]) -> Self {
        let last = *grid.last().expect("nonempty grid");
        let min_step = grid
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let min_step = if min_step.is_finite() { min_step } else { last.max(1.0) };
        Self {
            gamma: Interval::new(0.0, 1.0),
            alpha: Interval::new(0.0, 50.0 / min_step),
            b: Interval::new(0.0, 2.0 * last.max(min_step)),
            g: Interval::new(0.0, 1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let named = [
            ("gamma", self.gamma, Some(1.0)),
            ("alpha", self.alpha, None),
            ("b", self.b, None),
            ("g", self.g, Some(1.0)),
        ];
        for (field, iv, max) in named {
            let ok = iv.lo.is_finite()
                && iv.hi.is_finite()
                && iv.lo >= 0.0
                && iv.lo <= iv.hi
                && max.is_none_or(|m| iv.hi <= m);
            if !ok {
                return Err(Error::Bounds {
                    field: field.into(),
                    lo: iv.lo,
                    hi: iv.hi,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub n_patterns: usize,
    pub preferred: Option<usize>,
    pub baseline: f64,
    pub restarts: usize,
    /// Objective evaluations allowed per restart.
    pub max_evals: usize,
    pub tol: f64,
    pub seed: u64,
    /// Derived from the observed grid when `None`.
    pub bounds: Option<FitBounds>,
}

impl FitConfig {
    pub fn new(n_patterns: usize, seed: u64) -> Self {
        Self {
            n_patterns,
            preferred: None,
            baseline: 0.0,
            restarts: 16,
            max_evals: 20_000,
            tol: 1e-8,
            seed,
            bounds: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_patterns == 0 || self.n_patterns > MAX_FIT_PATTERNS.min(EXACT_CAP) {
            return Err(Error::invalid(
                "n_patterns",
                format!("must be in 1..={MAX_FIT_PATTERNS}"),
            ));
        }
        if self.preferred.is_some_and(|k| k >= self.n_patterns) {
            return Err(Error::invalid("preferred", "index out of range"));
        }
        if !(0.0..=1.0).contains(&self.baseline) {
            return Err(Error::invalid("baseline", "must be in [0, 1]"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts", "must be >= 1"));
        }
        if self.max_evals == 0 {
            return Err(Error::invalid("max_evals", "must be >= 1"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::invalid("tol", "must be > 0"));
        }
        if let Some(b) = &self.bounds {
            b.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Patterns sorted by inflection point, ascending.
    pub scenario: Scenario,
    pub loss: f64,
    /// Objective evaluations summed over all restarts.
    pub evals: usize,
    /// Whether the winning restart met the tolerance before its budget ran out.
    pub converged: bool,
    pub best_restart: usize,
}

/// Weighted mean squared error over the concatenated train and test series.
pub fn objective(observed: &ObservedCurve, scenario: &Scenario) -> Result<f64> {
    let mut sse = 0.0;
    let mut total_weight = 0.0;
    for (i, &t) in observed.grid.iter().enumerate() {
        let w = observed.weight(i);
        let train = train_accuracy(scenario, t) - observed.train[i];
        let test = test_accuracy_exact(scenario, t)? - observed.test[i];
        sse += w * (train * train + test * test);
        total_weight += 2.0 * w;
    }
    Ok(sse / total_weight)
}

/// Maps unit coordinates onto `[lo, hi]`, geometrically above `scale`.
#[derive(Debug, Clone, Copy)]
struct Warp {
    lo: f64,
    hi: f64,
    scale: f64,
}

impl Warp {
    fn linear(iv: Interval) -> Self {
        Self {
            lo: iv.lo,
            hi: iv.hi,
            scale: f64::INFINITY,
        }
    }

    fn geometric(iv: Interval, scale: f64) -> Self {
        Self {
            lo: iv.lo,
            hi: iv.hi,
            scale,
        }
    }

    fn span_ratio(&self) -> f64 {
        1.0 + (self.hi - self.lo) / self.scale
    }

    fn apply(&self, u: f64) -> f64 {
        let x = if self.scale.is_infinite() {
            self.lo + u * (self.hi - self.lo)
        } else {
            self.lo + self.scale * (self.span_ratio().powf(u) - 1.0)
        };
        x.clamp(self.lo, self.hi)
    }

    fn invert(&self, x: f64) -> f64 {
        if self.hi <= self.lo {
            return 0.0;
        }
        let u = if self.scale.is_infinite() {
            (x - self.lo) / (self.hi - self.lo)
        } else {
            (1.0 + (x - self.lo) / self.scale).ln() / self.span_ratio().ln()
        };
        u.clamp(0.0, 1.0)
    }
}

/// Search-space layout: four unit coordinates per pattern.
struct Layout {
    warps: [Warp; PARAMS_PER_PATTERN],
    preferred: Option<usize>,
    baseline: f64,
}

impl Layout {
    fn new(grid: &[f64], bounds: &FitBounds, config: &FitConfig) -> Self {
        let first_positive = grid.iter().copied().find(|&t| t > 0.0).unwrap_or(1.0);
        let last = grid.last().copied().unwrap_or(1.0).max(first_positive);
        Self {
            warps: [
                Warp::linear(bounds.gamma),
                Warp::geometric(bounds.alpha, 1.0 / last),
                Warp::geometric(bounds.b, first_positive),
                Warp::linear(bounds.g),
            ],
            preferred: config.preferred,
            baseline: config.baseline,
        }
    }

    fn scenario(&self, u: &[f64]) -> Scenario {
        let patterns = u
            .chunks(PARAMS_PER_PATTERN)
            .map(|c| {
                let [gamma, alpha, b, g] = [0, 1, 2, 3].map(|k| self.warps[k].apply(c[k]));
                Pattern::new(gamma, alpha, b, g).expect("parameters inside bounds")
            })
            .collect();
        Scenario::new(patterns, self.preferred, self.baseline).expect("valid layout")
    }

    fn unit(&self, params: &[[f64; PARAMS_PER_PATTERN]]) -> Vec<f64> {
        params
            .iter()
            .flat_map(|p| (0..PARAMS_PER_PATTERN).map(move |k| self.warps[k].invert(p[k])))
            .collect()
    }
}

/// Linear interpolation of the grid at fractional index position `q * (len - 1)`.
fn grid_quantile(grid: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (grid.len() - 1) as f64;
    let i = (pos.floor() as usize).min(grid.len() - 1);
    let j = (i + 1).min(grid.len() - 1);
    grid[i] + (pos - i as f64) * (grid[j] - grid[i])
}

/// Starting point for restart `r`: inflection points at grid quantiles (evenly
/// spaced for restart 0, random otherwise), speeds scaled to the inflection
/// point, ceilings and generalization uniform within bounds.
fn initial_params(grid: &[f64], bounds: &FitBounds, config: &FitConfig, restart: usize) -> Vec<[f64; 4]> {
    let n = config.n_patterns;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(restart as u64);
    let mut quantiles: Vec<f64> = if restart == 0 {
        (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect()
    } else {
        (0..n).map(|_| rng.gen::<f64>()).collect()
    };
    quantiles.sort_by(f64::total_cmp);
    let first_positive = grid.iter().copied().find(|&t| t > 0.0).unwrap_or(1.0);
    let uniform = |rng: &mut ChaCha8Rng, iv: Interval| iv.lo + rng.gen::<f64>() * (iv.hi - iv.lo);
    quantiles
        .into_iter()
        .map(|q| {
            let b = grid_quantile(grid, q).clamp(bounds.b.lo, bounds.b.hi);
            let sharpness = (rng.gen::<f64>() * 10f64.ln()).exp() * 2.0;
            let alpha = (sharpness / b.max(first_positive)).clamp(bounds.alpha.lo, bounds.alpha.hi);
            let gamma = uniform(&mut rng, bounds.gamma);
            let g = uniform(&mut rng, bounds.g);
            [gamma, alpha, b, g]
        })
        .collect()
}

struct RestartOutcome {
    scenario: Scenario,
    loss: f64,
    evals: usize,
    converged: bool,
}

fn run_restart(
    observed: &ObservedCurve,
    bounds: &FitBounds,
    layout: &Layout,
    config: &FitConfig,
    restart: usize,
) -> RestartOutcome {
    let start = layout.unit(&initial_params(&observed.grid, bounds, config, restart));
    let options = SimplexOptions {
        max_evals: config.max_evals,
        tol: config.tol,
        initial_step: 0.1,
    };
    let result = simplex::minimize(
        |u| objective(observed, &layout.scenario(u)).unwrap_or(f64::INFINITY),
        &start,
        &options,
    );
    RestartOutcome {
        scenario: layout.scenario(&result.x),
        loss: result.value,
        evals: result.evals,
        converged: result.converged,
    }
}

/// Patterns sorted by `b` ascending (stable), preferred index remapped.
pub fn canonical(scenario: &Scenario) -> Scenario {
    let mut order: Vec<usize> = (0..scenario.len()).collect();
    order.sort_by(|&i, &j| scenario.patterns()[i].b().total_cmp(&scenario.patterns()[j].b()));
    scenario.permuted(&order).expect("sorting yields a permutation")
}

pub fn fit(observed: &ObservedCurve, config: &FitConfig) -> Result<FitResult> {
    observed.validate()?;
    config.validate()?;
    let bounds = config
        .bounds
        .unwrap_or_else(|| FitBounds::from_grid(&observed.grid));
    bounds.validate()?;
    let layout = Layout::new(&observed.grid, &bounds, config);

    let outcomes: Vec<RestartOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_restart(observed, &bounds, &layout, config, r))
        .collect();
    let evals = outcomes.iter().map(|o| o.evals).sum();
    let (best_restart, best) = outcomes
        .into_iter()
        .enumerate()
        .reduce(|acc, next| if next.1.loss < acc.1.loss { next } else { acc })
        .expect("at least one restart");

    let scenario = canonical(&best.scenario);
    let loss = objective(observed, &scenario)?;
    Ok(FitResult {
        scenario,
        loss,
        evals,
        converged: best.converged,
        best_restart,
    })
}
