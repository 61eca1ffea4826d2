use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid used when none is given.
pub const DEFAULT_GRID: &str = "log:0.1:1e4:200";

/// Meaning of the horizontal axis. The model is the same either way; only the
/// label changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[default]
    Time,
    Capacity,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Time => "time",
            Axis::Capacity => "capacity",
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time" => Ok(Axis::Time),
            "capacity" => Ok(Axis::Capacity),
            _ => Err(Error::invalid("axis", format!("expected time or capacity, got {s:?}"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Lin,
}

/// `log:start:end:count` or `lin:start:end:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub spacing: Spacing,
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        DEFAULT_GRID.parse().expect("default grid")
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::invalid("grid", format!("{msg} in {s:?}"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let [kind, start, end, count] = parts[..] else {
            return Err(bad("expected kind:start:end:count"));
        };
        let spacing = match kind {
            "log" => Spacing::Log,
            "lin" => Spacing::Lin,
            _ => return Err(bad("kind must be log or lin")),
        };
        let start: f64 = start.parse().map_err(|_| bad("bad start"))?;
        let end: f64 = end.parse().map_err(|_| bad("bad end"))?;
        let count: usize = count.parse().map_err(|_| bad("bad count"))?;
        let spec = GridSpec {
            spacing,
            start,
            end,
            count,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.spacing {
            Spacing::Log => "log",
            Spacing::Lin => "lin",
        };
        write!(f, "{kind}:{}:{}:{}", self.start, self.end, self.count)
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::invalid("grid", msg));
        if self.count == 0 {
            return err("count must be >= 1".into());
        }
        if !self.start.is_finite() || !self.end.is_finite() || self.start < 0.0 {
            return err("bounds must be finite and >= 0".into());
        }
        if self.spacing == Spacing::Log && self.start <= 0.0 {
            return err("log grids need start > 0".into());
        }
        if self.count > 1 && self.end <= self.start {
            return err(format!("end {} must exceed start {}", self.end, self.start));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Grid> {
        self.validate()?;
        let n = self.count;
        if n == 1 {
            return Grid::new(vec![self.start]);
        }
        let last = (n - 1) as f64;
        let points = (0..n)
            .map(|i| {
                if i == 0 {
                    return self.start;
                }
                if i == n - 1 {
                    return self.end;
                }
                let frac = i as f64 / last;
                match self.spacing {
                    Spacing::Lin => self.start + frac * (self.end - self.start),
                    Spacing::Log => (self.start.ln() + frac * (self.end / self.start).ln()).exp(),
                }
            })
            .collect();
        Grid::new(points)
    }
}

/// Strictly increasing, nonempty sequence of finite times `t >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("grid", "must be nonempty"));
        }
        if let Some(t) = points.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::invalid("grid", format!("{t} is not a finite time >= 0")));
        }
        if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "grid",
                format!("not strictly increasing at {} -> {}", w[0], w[1]),
            ));
        }
        Ok(Grid(points))
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<GridSpec>()?.build()
    }
}
