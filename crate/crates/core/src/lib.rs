//! Pattern-learning model of training dynamics.
//!
//! Grokking and epoch-wise double descent come out of one closed-form model
//! in which patterns with different learning speeds, ceilings and
//! generalization compete. The crate evaluates the model exactly
//! ([`model`]), checks it against a domain-allocation simulation
//! ([`domain_sim`]), fits it to observed curves ([`fit`]) and generates the
//! modular-division dataset used in grokking experiments ([`moddiv`]).

pub mod curve;
pub mod domain_sim;
pub mod error;
pub mod fit;
pub mod grid;
pub mod moddiv;
pub mod model;
pub mod presets;
pub mod random;
pub mod simplex;

pub use curve::{curve, Curve, CurveMeta, McSettings, Source};
pub use error::{Error, Result};
pub use grid::{Axis, Grid, GridSpec};
pub use model::{
    predictiveness, test_accuracy_exact, test_accuracy_mc, train_accuracy, McEstimate, Pattern,
    PatternSpec, Scenario, ScenarioSpec, EXACT_CAP,
};
pub use presets::{double_descent_preset, grokking_preset, interpolate, Preset};

/// Reported by the CLI and the HTTP API alongside results.
pub const MODEL_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+", "presets-v1");
