//! Closed-form pattern-learning model.
//!
//! A network is a set of patterns. Pattern `i` classifies a training point
//! correctly at time `t` with probability `p_i(t)`, a sigmoid with ceiling
//! `gamma`, speed `alpha` and inflection point `b`. Train accuracy is the
//! probability that at least one pattern succeeds; test accuracy averages the
//! generalization parameters of the patterns that succeed, weighted by the
//! probability of each success set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest pattern count evaluated by exact subset enumeration.
pub const EXACT_CAP: usize = 20;

/// Exponent clamp for the sigmoid; `exp(700)` is still finite.
const EXP_CLAMP: f64 = 700.0;

/// One learnable mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PatternSpec")]
pub struct Pattern {
    gamma: f64,
    alpha: f64,
    b: f64,
    g: f64,
}

/// Unvalidated pattern fields, as they appear on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub gamma: f64,
    pub alpha: f64,
    pub b: f64,
    pub g: f64,
}

fn check_unit(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{value} is outside [0, 1]")))
    }
}

fn check_nonneg(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("{value} must be finite and >= 0"),
        ))
    }
}

impl Pattern {
    /// `gamma` is the maximum predictiveness, `alpha` the learning speed, `b`
    /// the inflection point and `g` the generalization parameter.
    pub fn new(gamma: f64, alpha: f64, b: f64, g: f64) -> Result<Self> {
        check_unit("gamma", gamma)?;
        check_nonneg("alpha", alpha)?;
        check_nonneg("b", b)?;
        check_unit("g", g)?;
        Ok(Self { gamma, alpha, b, g })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// Copy with a different maximum predictiveness.
    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(gamma, self.alpha, self.b, self.g)
    }

    /// Probability that this pattern classifies a training point correctly
    /// at time `t`.
    pub fn predictiveness(&self, t: f64) -> f64 {
        debug_assert!(t.is_finite() && t >= 0.0, "time must be finite and >= 0");
        let exponent = (-self.alpha * (t - self.b)).clamp(-EXP_CLAMP, EXP_CLAMP);
        self.gamma / (1.0 + exponent.exp())
    }

    pub fn spec(&self) -> PatternSpec {
        PatternSpec {
            gamma: self.gamma,
            alpha: self.alpha,
            b: self.b,
            g: self.g,
        }
    }
}

impl TryFrom<PatternSpec> for Pattern {
    type Error = Error;

    fn try_from(spec: PatternSpec) -> Result<Self> {
        Pattern::new(spec.gamma, spec.alpha, spec.b, spec.g)
    }
}

/// Free-function form of [`Pattern::predictiveness`].
pub fn predictiveness(pattern: &Pattern, t: f64) -> f64 {
    pattern.predictiveness(t)
}

/// An ordered set of patterns, an optional preferred pattern and the accuracy
/// assigned to inputs that no pattern covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioSpec")]
pub struct Scenario {
    patterns: Vec<Pattern>,
    preferred: Option<usize>,
    baseline: f64,
}

/// Unvalidated scenario, as it appears on the wire. `baseline` defaults to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub patterns: Vec<PatternSpec>,
    #[serde(default)]
    pub preferred: Option<usize>,
    #[serde(default)]
    pub baseline: f64,
}

impl Scenario {
    pub fn new(patterns: Vec<Pattern>, preferred: Option<usize>, baseline: f64) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::invalid("patterns", "at least one pattern is required"));
        }
        if let Some(k) = preferred {
            if k >= patterns.len() {
                return Err(Error::invalid(
                    "preferred",
                    format!("index {k} out of range for {} patterns", patterns.len()),
                ));
            }
        }
        check_unit("baseline", baseline)?;
        Ok(Self {
            patterns,
            preferred,
            baseline,
        })
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn preferred(&self) -> Option<usize> {
        self.preferred
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            patterns: self.patterns.iter().map(Pattern::spec).collect(),
            preferred: self.preferred,
            baseline: self.baseline,
        }
    }

    /// Reorders patterns so that new position `j` holds old pattern
    /// `order[j]`, remapping the preferred index.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::invalid("order", "not a permutation of the pattern indices"));
        }
        let patterns = order.iter().map(|&i| self.patterns[i]).collect();
        let preferred = self
            .preferred
            .map(|k| order.iter().position(|&i| i == k).expect("permutation"));
        Scenario::new(patterns, preferred, self.baseline)
    }

    fn probabilities(&self, t: f64) -> Vec<f64> {
        self.patterns.iter().map(|p| p.predictiveness(t)).collect()
    }

    /// `G(A)` from the size of `A`, the sum of its `g` values and whether it
    /// holds the preferred pattern.
    pub(crate) fn set_generalization(&self, count: usize, g_sum: f64, has_preferred: bool) -> f64 {
        if has_preferred {
            self.patterns[self.preferred.expect("preferred pattern")].g
        } else if count == 0 {
            self.baseline
        } else {
            g_sum / count as f64
        }
    }
}

impl TryFrom<ScenarioSpec> for Scenario {
    type Error = Error;

    fn try_from(spec: ScenarioSpec) -> Result<Self> {
        let patterns = spec
            .patterns
            .into_iter()
            .enumerate()
            .map(|(i, p)| Pattern::try_from(p).map_err(|e| e.within(&format!("patterns[{i}]"))))
            .collect::<Result<Vec<_>>>()?;
        Scenario::new(patterns, spec.preferred, spec.baseline)
    }
}

/// Probability that at least one pattern classifies a training point.
pub fn train_accuracy(scenario: &Scenario, t: f64) -> f64 {
    let miss: f64 = scenario
        .patterns
        .iter()
        .map(|p| 1.0 - p.predictiveness(t))
        .product();
    1.0 - miss
}

/// Sums of an exact subset enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetSums {
    /// `sum_A P_A(t) G(A)`.
    pub accuracy: f64,
    /// `sum_A P_A(t)`; one up to rounding.
    pub mass: f64,
}

/// Enumerates all `2^n` success sets at time `t`.
pub fn enumerate_subsets(scenario: &Scenario, t: f64) -> Result<SubsetSums> {
    let n = scenario.len();
    if n > EXACT_CAP {
        return Err(Error::CapExceeded { n, cap: EXACT_CAP });
    }
    let probs = scenario.probabilities(t);
    let mut walk = SubsetWalk {
        scenario,
        probs: &probs,
        sums: SubsetSums {
            accuracy: 0.0,
            mass: 0.0,
        },
    };
    walk.visit(0, 1.0, 0, 0.0, false);
    Ok(walk.sums)
}

struct SubsetWalk<'a> {
    scenario: &'a Scenario,
    probs: &'a [f64],
    sums: SubsetSums,
}

impl SubsetWalk<'_> {
    fn visit(&mut self, i: usize, weight: f64, count: usize, g_sum: f64, has_preferred: bool) {
        if i == self.probs.len() {
            let g = self.scenario.set_generalization(count, g_sum, has_preferred);
            self.sums.mass += weight;
            self.sums.accuracy += weight * g;
            return;
        }
        let p = self.probs[i];
        let pattern = &self.scenario.patterns[i];
        let is_preferred = self.scenario.preferred == Some(i);
        self.visit(
            i + 1,
            weight * p,
            count + 1,
            g_sum + pattern.g,
            has_preferred || is_preferred,
        );
        self.visit(i + 1, weight * (1.0 - p), count, g_sum, has_preferred);
    }
}

/// Test accuracy by exact enumeration over success sets.
pub fn test_accuracy_exact(scenario: &Scenario, t: f64) -> Result<f64> {
    let sums = enumerate_subsets(scenario, t)?;
    debug_assert!(
        (sums.mass - 1.0).abs() <= 1e-12,
        "subset probabilities sum to {}",
        sums.mass
    );
    Ok(sums.accuracy.clamp(0.0, 1.0))
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Running mean and variance (Welford).
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub(crate) fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub(crate) fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        Moments { count, mean, m2 }
    }

    pub(crate) fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation over `sqrt(count)`; zero for a single draw.
    pub(crate) fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let var = (self.m2 / (self.count - 1) as f64).max(0.0);
        (var / self.count as f64).sqrt()
    }
}

/// Unbiased estimate of test accuracy: each pattern succeeds independently
/// with probability `p_i(t)` and the success set contributes `G(A)`.
pub fn test_accuracy_mc(scenario: &Scenario, t: f64, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::invalid("samples", "must be >= 1"));
    }
    let probs = scenario.probabilities(t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut moments = Moments::default();
    for _ in 0..samples {
        let mut count = 0;
        let mut g_sum = 0.0;
        let mut has_preferred = false;
        for (i, (&p, pattern)) in probs.iter().zip(&scenario.patterns).enumerate() {
            if rng.gen::<f64>() < p {
                count += 1;
                g_sum += pattern.g;
                has_preferred |= scenario.preferred == Some(i);
            }
        }
        moments.push(scenario.set_generalization(count, g_sum, has_preferred));
    }
    Ok(McEstimate {
        estimate: moments.mean().clamp(0.0, 1.0),
        stderr: moments.stderr(),
    })
}
