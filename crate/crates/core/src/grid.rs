//! Grids of penalty values.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// An increasing sequence of `k` values.
///
/// Grids parsed from `start:stop:step` contain `start + i·step` for every
/// `i` with `start + i·step ≤ stop` (up to a 1e-9 step fraction).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KGrid {
    spec: String,
    values: Vec<f64>,
}

impl KGrid {
    pub fn range(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if start < 0.0 {
            return Err(Error::InvalidGrid(format!("start {start} is negative")));
        }
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step {step} must be positive")));
        }
        if stop < start {
            return Err(Error::InvalidGrid(format!("stop {stop} is below start {start}")));
        }
        let intervals = ((stop - start) / step + 1e-9).floor();
        if intervals > 1e7 {
            return Err(Error::InvalidGrid("more than 10^7 points".into()));
        }
        let values = (0..=intervals as usize)
            .map(|i| start + i as f64 * step)
            .collect();
        Ok(Self {
            spec: format!("{start}:{stop}:{step}"),
            values,
        })
    }

    /// Arbitrary strictly increasing, non-negative values.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidGrid("values must be finite and non-negative".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("values must be strictly increasing".into()));
        }
        let spec = values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        Ok(Self { spec, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spec(&self) -> &str {
        &self.spec
    }

    /// Checks the shape required by grid minimization: starts at 0, ≥ 3 points.
    pub fn require_scan_shape(&self) -> Result<()> {
        if self.values[0] != 0.0 {
            return Err(Error::InvalidGrid("grid must start at 0".into()));
        }
        if self.values.len() < 3 {
            return Err(Error::InvalidGrid("grid needs at least 3 points".into()));
        }
        Ok(())
    }
}

impl FromStr for KGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidGrid(format!("expected start:stop:step, got {s:?}")));
        }
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidGrid(format!("{t:?} is not a number")))
        };
        Self::range(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

impl fmt::Display for KGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec)
    }
}
