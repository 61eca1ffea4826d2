//! Train/test curves over a grid, plus their CSV and JSON forms.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid};
use crate::model::{test_accuracy_exact, test_accuracy_mc, train_accuracy, Scenario, EXACT_CAP};

/// Column header of the curve CSV format.
pub const CSV_HEADER: [&str; 3] = ["t", "train_acc", "test_acc"];

/// Which engine produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    #[default]
    PatternCore,
    DomainSim,
}

/// Monte Carlo settings used when a scenario is too large for exact
/// enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSettings {
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    #[serde(rename = "t")]
    pub grid: Vec<f64>,
    #[serde(rename = "train_acc")]
    pub train: Vec<f64>,
    #[serde(rename = "test_acc")]
    pub test: Vec<f64>,
    #[serde(default)]
    pub axis: Axis,
    #[serde(default)]
    pub source: Source,
    /// Set when test accuracy was estimated by sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSettings>,
}

/// Everything in a curve except the series; written next to CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub axis: Axis,
    pub source: Source,
    pub rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSettings>,
}

impl Curve {
    pub fn new(grid: Vec<f64>, train: Vec<f64>, test: Vec<f64>, axis: Axis) -> Result<Self> {
        let curve = Curve {
            grid,
            train,
            test,
            axis,
            source: Source::PatternCore,
            mc: None,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if self.train.len() != self.grid.len() || self.test.len() != self.grid.len() {
            return Err(Error::invalid(
                "curve",
                format!(
                    "series lengths differ: t={}, train_acc={}, test_acc={}",
                    self.grid.len(),
                    self.train.len(),
                    self.test.len()
                ),
            ));
        }
        Grid::new(self.grid.clone())?;
        for (name, series) in [("train_acc", &self.train), ("test_acc", &self.test)] {
            if let Some(v) = series.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::invalid(name, format!("{v} is outside [0, 1]")));
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

    pub fn meta(&self) -> CurveMeta {
        CurveMeta {
            axis: self.axis,
            source: self.source,
            rows: self.len(),
            mc: self.mc,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for i in 0..self.len() {
            w.write_record([
                self.grid[i].to_string(),
                self.train[i].to_string(),
                self.test[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV series; metadata comes from `meta` when available.
    pub fn read_csv<R: Read>(input: R, meta: Option<&CurveMeta>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        if r.headers()?.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(Error::Parse(format!(
                "expected header {}",
                CSV_HEADER.join(",")
            )));
        }
        let (mut grid, mut train, mut test) = (Vec::new(), Vec::new(), Vec::new());
        for row in r.deserialize() {
            let (t, tr, te): (f64, f64, f64) = row?;
            grid.push(t);
            train.push(tr);
            test.push(te);
        }
        let curve = Curve {
            grid,
            train,
            test,
            axis: meta.map(|m| m.axis).unwrap_or_default(),
            source: meta.map(|m| m.source).unwrap_or_default(),
            mc: meta.and_then(|m| m.mc),
        };
        curve.validate()?;
        Ok(curve)
    }
}

/// Evaluates train and test accuracy at every grid point.
///
/// Scenarios beyond [`EXACT_CAP`] use the Monte Carlo estimator when `mc` is
/// given; every grid point reuses the same seed, so the estimated curve is
/// smooth in `t`. Without `mc` they fail with [`Error::CapExceeded`].
pub fn curve(scenario: &Scenario, grid: &Grid, axis: Axis, mc: Option<McSettings>) -> Result<Curve> {
    let use_mc = scenario.len() > EXACT_CAP;
    if use_mc && mc.is_none() {
        return Err(Error::CapExceeded {
            n: scenario.len(),
            cap: EXACT_CAP,
        });
    }
    let points = grid.points();
    let rows = points
        .par_iter()
        .map(|&t| {
            let test = match mc {
                Some(m) if use_mc => test_accuracy_mc(scenario, t, m.samples, m.seed)?.estimate,
                _ => test_accuracy_exact(scenario, t)?,
            };
            Ok((train_accuracy(scenario, t), test))
        })
        .collect::<Result<Vec<_>>>()?;
    let (train, test) = rows.into_iter().unzip();
    Ok(Curve {
        grid: points.to_vec(),
        train,
        test,
        axis,
        source: Source::PatternCore,
        mc: if use_mc { mc } else { None },
    })
}
