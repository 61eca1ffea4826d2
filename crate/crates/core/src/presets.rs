//! Three-pattern presets and the interpolation between them.
//!
//! Both presets share one heuristic pattern (fast, generalizes well), one
//! overfitting pattern (medium speed, reaches full predictiveness, generalizes
//! poorly) and one slow, well-generalizing pattern that is preferred. They
//! differ only in the maximum predictiveness of the heuristic and the slow
//! pattern. The constants are versioned with [`PRESET_VERSION`].

use crate::error::{Error, Result};
use crate::model::{Pattern, Scenario};

/// Bumped whenever a preset constant changes.
pub const PRESET_VERSION: &str = "presets-v1";

pub const HEURISTIC: usize = 0;
pub const OVERFITTING: usize = 1;
pub const SLOW_GENERALIZING: usize = 2;

/// (alpha, b, g) shared by both presets, in pattern order.
const SHARED: [(f64, f64, f64); 3] = [(3.0, 2.0, 1.0), (0.5, 40.0, 0.0), (0.01, 1500.0, 1.0)];
const OVERFITTING_GAMMA: f64 = 1.0;

const GROKKING_GAMMA: (f64, f64) = (0.1, 1.0);
const DOUBLE_DESCENT_GAMMA: (f64, f64) = (0.7, 0.8);

/// Named presets served by the CLI and the HTTP API.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Grokking,
    DoubleDescent,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Grokking, Preset::DoubleDescent];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Grokking => "grokking",
            Preset::DoubleDescent => "double-descent",
        }
    }

    pub fn scenario(self) -> Scenario {
        match self {
            Preset::Grokking => grokking_preset(),
            Preset::DoubleDescent => double_descent_preset(),
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid("preset", format!("unknown preset {s:?}")))
    }
}

fn three_pattern(heuristic_gamma: f64, slow_gamma: f64) -> Scenario {
    let gammas = [heuristic_gamma, OVERFITTING_GAMMA, slow_gamma];
    let patterns = gammas
        .iter()
        .zip(SHARED)
        .map(|(&gamma, (alpha, b, g))| Pattern::new(gamma, alpha, b, g).expect("valid preset"))
        .collect();
    Scenario::new(patterns, Some(SLOW_GENERALIZING), 0.0).expect("valid preset")
}

/// Weak heuristic, fully predictive slow pattern: near-perfect training
/// accuracy long before test accuracy rises.
pub fn grokking_preset() -> Scenario {
    three_pattern(GROKKING_GAMMA.0, GROKKING_GAMMA.1)
}

/// Strong but partial heuristic, partially predictive slow pattern: test
/// accuracy rises, dips while the overfitting pattern takes over, then
/// recovers above its first peak.
pub fn double_descent_preset() -> Scenario {
    three_pattern(DOUBLE_DESCENT_GAMMA.0, DOUBLE_DESCENT_GAMMA.1)
}

/// Moves from the double-descent preset (`lambda = 0`) to the grokking preset
/// (`lambda = 1`) by changing only the heuristic and slow-pattern ceilings.
pub fn interpolate(lambda: f64) -> Result<Scenario> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid("lambda", format!("{lambda} is outside [0, 1]")));
    }
    let lerp = |dd: f64, grok: f64| (1.0 - lambda) * dd + lambda * grok;
    Ok(three_pattern(
        lerp(DOUBLE_DESCENT_GAMMA.0, GROKKING_GAMMA.0),
        lerp(DOUBLE_DESCENT_GAMMA.1, GROKKING_GAMMA.1),
    ))
}
