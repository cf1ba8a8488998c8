//! Ensemble calibration over window families and probabilistic `tc` forecasts.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{fit_window, FitConfig, LpplFit, SearchBounds};
use crate::error::{LpplError, Result};
use crate::seed::derive_seed;
use crate::series::PriceSeries;
use crate::window::WindowSpec;

pub const DEFAULT_QUANTILE_LEVELS: [f64; 4] = [0.05, 0.2, 0.8, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub bounds: SearchBounds,
    pub fit: FitConfig,
    pub quantile_levels: Vec<f64>,
    /// Global seed; each window derives its own from its endpoints.
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            bounds: SearchBounds::default(),
            fit: FitConfig::default(),
            quantile_levels: DEFAULT_QUANTILE_LEVELS.to_vec(),
            seed: 0,
        }
    }
}

/// Seed used for `window` under a global seed. Depends on the window itself,
/// not on its position in the list.
pub fn window_seed(global: u64, window: &WindowSpec) -> u64 {
    derive_seed(global, "scan-window", ((window.t1 as u64) << 32) | window.t2 as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowFailure {
    pub window: WindowSpec,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcQuantile {
    pub level: f64,
    pub tc: f64,
    pub date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub windows: Vec<WindowSpec>,
    /// Best fit of every window that produced one, in window order.
    pub fits: Vec<LpplFit>,
    pub failures: Vec<WindowFailure>,
    /// Converged fits passing the LPPL condition.
    pub survivors: Vec<LpplFit>,
    pub n_converged: usize,
    /// `|survivors| / n_converged`, zero when nothing converged.
    pub p_lppl: f64,
    /// `None` when no fit survived.
    pub tc_quantiles: Option<Vec<TcQuantile>>,
}

impl ScanResult {
    fn assemble(series: &PriceSeries, windows: Vec<WindowSpec>, outcomes: Vec<Result<LpplFit>>, levels: &[f64]) -> Result<Self> {
        let mut fits = Vec::new();
        let mut failures = Vec::new();
        for (w, o) in windows.iter().zip(outcomes) {
            match o {
                Ok(f) => fits.push(f),
                Err(e) => failures.push(WindowFailure {
                    window: *w,
                    reason: e.to_string(),
                }),
            }
        }
        let survivors: Vec<LpplFit> = fits.iter().filter(|f| f.converged && f.passes_filter).copied().collect();
        let n_converged = fits.iter().filter(|f| f.converged).count();
        let p_lppl = if n_converged == 0 {
            0.0
        } else {
            survivors.len() as f64 / n_converged as f64
        };
        let tc_quantiles = match tc_quantiles(series, &survivors, levels) {
            Ok(q) => Some(q),
            Err(LpplError::NoForecast) => None,
            Err(e) => return Err(e),
        };
        Ok(ScanResult {
            windows,
            fits,
            failures,
            survivors,
            n_converged,
            p_lppl,
            tc_quantiles,
        })
    }
}

/// Calibrates every window (in parallel) and summarizes the survivors.
/// Per-window failures are recorded, not propagated.
pub fn scan(series: &PriceSeries, windows: &[WindowSpec], cfg: &ScanConfig) -> Result<ScanResult> {
    if windows.is_empty() {
        return Err(LpplError::InvalidParameter("no windows to scan".into()));
    }
    let outcomes: Vec<Result<LpplFit>> = windows
        .par_iter()
        .map(|w| {
            let mut fit_cfg = cfg.fit;
            fit_cfg.taboo.seed = window_seed(cfg.seed, w);
            fit_window(series, w, &cfg.bounds, &fit_cfg)
        })
        .collect();
    ScanResult::assemble(series, windows.to_vec(), outcomes, &cfg.quantile_levels)
}

/// Empirical quantile by linear interpolation between order statistics
/// (position `(n - 1) p` in the sorted sample).
pub fn quantile_linear(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * level.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quantiles of the survivors' `tc`, with calendar dates (fractional days round up).
pub fn tc_quantiles(series: &PriceSeries, survivors: &[LpplFit], levels: &[f64]) -> Result<Vec<TcQuantile>> {
    if survivors.is_empty() {
        return Err(LpplError::NoForecast);
    }
    let mut tcs: Vec<f64> = survivors.iter().map(|f| f.params.tc).collect();
    tcs.sort_by(f64::total_cmp);
    let mut levels = levels.to_vec();
    levels.sort_by(f64::total_cmp);
    levels
        .into_iter()
        .map(|level| {
            if !(0.0..=1.0).contains(&level) {
                return Err(LpplError::InvalidParameter(format!("quantile level {level} outside [0, 1]")));
            }
            let tc = quantile_linear(&tcs, level);
            let date = series
                .date_at(tc)
                .ok_or_else(|| LpplError::InvalidParameter(format!("tc {tc} has no calendar date")))?;
            Ok(TcQuantile { level, tc, date })
        })
        .collect()
}
