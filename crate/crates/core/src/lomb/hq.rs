//! The `(H, q)`-derivative `D_q^H f(x) = (f(x) - f(qx)) / ((1 - q) x)^H` of
//! the log-price seen as a function of `x = tc - t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{analyze, FrequencyGrid, LogTimeSignal, LombPeak, MIN_LOMB_SAMPLES};
use crate::error::{LpplError, Result};
use crate::series::PriceSeries;
use crate::window::WindowSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HqSettings {
    pub h: f64,
    pub q: f64,
    pub tc: f64,
}

impl HqSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(LpplError::InvalidParameter(format!("q must lie in (0, 1), got {}", self.q)));
        }
        if !(-1.0..=1.0).contains(&self.h) {
            return Err(LpplError::InvalidParameter(format!("H must lie in [-1, 1], got {}", self.h)));
        }
        Ok(())
    }
}

/// `(x, D_q^H f(x))` for each sample whose `qx` falls inside the sampled range.
/// `f(qx)` is linearly interpolated in `x` between the bracketing samples.
pub fn hq_derivative_values(xs: &[f64], fs: &[f64], h: f64, q: f64) -> Result<Vec<(f64, f64)>> {
    if xs.len() != fs.len() {
        return Err(LpplError::InvalidParameter("length mismatch".into()));
    }
    if xs.iter().any(|&x| !(x > 0.0)) {
        return Err(LpplError::InvalidParameter("x must be positive".into()));
    }
    let mut sorted: Vec<(f64, f64)> = xs.iter().copied().zip(fs.iter().copied()).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (x_min, x_max) = (sorted[0].0, sorted[sorted.len() - 1].0);
    let interp = |x: f64| -> Option<f64> {
        if x < x_min || x > x_max {
            return None;
        }
        let k = sorted.partition_point(|p| p.0 < x);
        if k < sorted.len() && sorted[k].0 == x {
            return Some(sorted[k].1);
        }
        let (x0, f0) = sorted[k - 1];
        let (x1, f1) = sorted[k];
        Some(f0 + (f1 - f0) * (x - x0) / (x1 - x0))
    };
    Ok(xs
        .iter()
        .zip(fs)
        .filter_map(|(&x, &f)| {
            interp(q * x).map(|fq| (x, (f - fq) / ((1.0 - q) * x).powf(h)))
        })
        .collect())
}

/// `(H, q)`-derivative of `ln close` over `window`, sampled at `u = ln(tc - t)`.
pub fn hq_derivative(series: &PriceSeries, window: &WindowSpec, s: &HqSettings) -> Result<LogTimeSignal> {
    s.validate()?;
    window.validate(series.len())?;
    if !(s.tc > window.t2 as f64) {
        return Err(LpplError::Domain {
            t: window.t2 as f64,
            tc: s.tc,
        });
    }
    let xs: Vec<f64> = window.ordinals().map(|i| s.tc - i as f64).collect();
    let fs: Vec<f64> = window.ordinals().map(|i| series.log_close(i)).collect();
    let d = hq_derivative_values(&xs, &fs, s.h, s.q)?;
    if d.len() < MIN_LOMB_SAMPLES {
        return Err(LpplError::TooFewSamples {
            needed: MIN_LOMB_SAMPLES,
            got: d.len(),
        });
    }
    let (u, values) = d.into_iter().map(|(x, v)| (x.ln(), v)).unzip();
    LogTimeSignal::new(u, values, Some(s.tc))
}

/// Rectangular `(H, q)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HqGrid {
    pub h_values: Vec<f64>,
    pub q_values: Vec<f64>,
}

impl Default for HqGrid {
    /// `H` in `-1, -0.9, ..., 1` and `q` in `0.1, ..., 0.9`: 21 x 9 cells.
    fn default() -> Self {
        HqGrid {
            h_values: (-10..=10).map(|k| k as f64 / 10.0).collect(),
            q_values: (1..=9).map(|k| k as f64 / 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HqCell {
    pub h: f64,
    pub q: f64,
    pub peak: Option<LombPeak>,
    /// Why the cell has no peak (degenerate derivative signal).
    pub skipped: Option<String>,
}

/// Lomb peak of the `(H, q)`-derivative for every grid cell, in `(H, q)` order.
pub fn hq_grid_scan(
    series: &PriceSeries,
    window: &WindowSpec,
    tc: f64,
    grid: &HqGrid,
    freqs: &FrequencyGrid,
) -> Vec<HqCell> {
    let cells: Vec<(f64, f64)> = grid
        .h_values
        .iter()
        .flat_map(|&h| grid.q_values.iter().map(move |&q| (h, q)))
        .collect();
    cells
        .par_iter()
        .map(|&(h, q)| {
            let result = hq_derivative(series, window, &HqSettings { h, q, tc })
                .and_then(|sig| analyze(&sig, freqs));
            match result {
                Ok((_, peak)) => HqCell { h, q, peak: Some(peak), skipped: None },
                Err(e) => HqCell { h, q, peak: None, skipped: Some(e.to_string()) },
            }
        })
        .collect()
}
