//! Seeded random scenarios for cross-checks and sweeps.

use rand::Rng;

use crate::model::{Pattern, Scenario};

/// Largest inflection point drawn; evaluation times should cover `[0, B_MAX]`.
pub const B_MAX: f64 = 20.0;

/// `n` patterns with `gamma`, `g` uniform in `[0, 1]`, `b` uniform in
/// `[0, B_MAX]` and `alpha` uniform in `[0.1, 3]`; a preferred pattern half
/// of the time and a uniform baseline.
pub fn random_scenario<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Scenario {
    let patterns = (0..n)
        .map(|_| {
            Pattern::new(
                rng.gen(),
                rng.gen_range(0.1..3.0),
                rng.gen_range(0.0..B_MAX),
                rng.gen(),
            )
            .expect("parameters drawn inside bounds")
        })
        .collect();
    let preferred = rng.gen_bool(0.5).then(|| rng.gen_range(0..n));
    Scenario::new(patterns, preferred, rng.gen()).expect("valid scenario")
}

/// Evaluation time spanning every drawn transition.
pub fn random_time<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen_range(0.0..B_MAX + 5.0)
}
