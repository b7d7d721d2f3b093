//! Quantile levels and the forecast matrix they index.

use ndarray::Array2;

use crate::error::{Error, Result};

/// The nominal proportions τ₁ < … < τ_M being estimated, all in (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileGrid {
    taus: Vec<f64>,
}

impl QuantileGrid {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::invalid("quantile grid must be non-empty"));
        }
        for (i, &t) in taus.iter().enumerate() {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::invalid(format!(
                    "quantile level {t} at position {i} is outside (0, 1)"
                )));
            }
            if i > 0 && taus[i - 1] >= t {
                return Err(Error::invalid(format!(
                    "quantile levels must be strictly increasing; \
                     levels {} and {t} at positions {} and {i}",
                    taus[i - 1],
                    i - 1
                )));
            }
        }
        Ok(QuantileGrid { taus })
    }

    /// 100 equally spaced levels from 0.01 to 0.99 inclusive.
    pub fn default_grid() -> Self {
        Self::equally_spaced(100, 0.01, 0.99).expect("default grid is valid")
    }

    /// `m` equally spaced levels from `lo` to `hi` inclusive.
    pub fn equally_spaced(m: usize, lo: f64, hi: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid("equally spaced grid needs at least 2 levels"));
        }
        let step = (hi - lo) / (m - 1) as f64;
        Self::new((0..m).map(|i| lo + i as f64 * step).collect())
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// Index of the level closest to `target`.
    pub fn nearest(&self, target: f64) -> usize {
        let mut best = 0;
        for (i, &t) in self.taus.iter().enumerate() {
            if (t - target).abs() < (self.taus[best] - target).abs() {
                best = i;
            }
        }
        best
    }
}

/// An N×M matrix of quantile estimates over `times`, column m holding the
/// τ_m-level curve.
#[derive(Debug, Clone)]
pub struct QuantileForecast {
    pub times: Vec<f64>,
    pub grid: QuantileGrid,
    pub values: Array2<f64>,
}

impl QuantileForecast {
    pub fn new(times: Vec<f64>, grid: QuantileGrid, values: Array2<f64>) -> Result<Self> {
        if values.nrows() != times.len() || values.ncols() != grid.len() {
            return Err(Error::invalid(format!(
                "forecast shape {}x{} does not match {} times x {} levels",
                values.nrows(),
                values.ncols(),
                times.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("forecast contains non-finite values"));
        }
        Ok(QuantileForecast { times, grid, values })
    }

    /// Number of horizon steps.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}
