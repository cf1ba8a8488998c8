//! Per-range summary of unit-root decisions on LPPL fit residuals.
//!
//! Marginal rejection percentages are over all converged fits. The conditional
//! column `P(stationary | LPPL)` is over converged fits that pass the LPPL
//! condition, counting a window as stationary when both tests reject.

use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::LpplFit;
use crate::error::{LpplError, Result};
use crate::model::residuals;
use crate::scan::ScanResult;
use crate::series::PriceSeries;
use crate::window::WindowSpec;

use super::unit_root::{dickey_fuller, phillips_perron, UnitRootResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDecision {
    pub window: WindowSpec,
    pub converged: bool,
    pub passes_filter: bool,
    pub dickey_fuller: Option<UnitRootResult>,
    pub phillips_perron: Option<UnitRootResult>,
    /// Why the tests could not run (e.g. degenerate residuals).
    pub error: Option<String>,
}

impl WindowDecision {
    /// Runs both tests on `resid`. Failures are recorded, not propagated,
    /// except for unsupported levels.
    pub fn from_residuals(
        window: WindowSpec,
        converged: bool,
        passes_filter: bool,
        resid: &[f64],
        alphas: &[f64],
    ) -> Result<Self> {
        let mut d = WindowDecision {
            window,
            converged,
            passes_filter,
            dickey_fuller: None,
            phillips_perron: None,
            error: None,
        };
        match dickey_fuller(resid, alphas).and_then(|df| Ok((df, phillips_perron(resid, alphas)?))) {
            Ok((df, pp)) => {
                d.dickey_fuller = Some(df);
                d.phillips_perron = Some(pp);
            }
            Err(e @ LpplError::UnsupportedAlpha(_)) => return Err(e),
            Err(e) => d.error = Some(e.to_string()),
        }
        Ok(d)
    }

    pub fn df_rejects(&self, alpha: f64) -> bool {
        self.dickey_fuller.as_ref().and_then(|r| r.rejects_at(alpha)).unwrap_or(false)
    }

    pub fn pp_rejects(&self, alpha: f64) -> bool {
        self.phillips_perron.as_ref().and_then(|r| r.rejects_at(alpha)).unwrap_or(false)
    }

    /// Both tests reject the unit root at `alpha`.
    pub fn stationary_at(&self, alpha: f64) -> bool {
        self.df_rejects(alpha) && self.pp_rejects(alpha)
    }
}

/// Tests the residuals of every fit.
pub fn window_decisions(series: &PriceSeries, fits: &[LpplFit], alphas: &[f64]) -> Result<Vec<WindowDecision>> {
    fits.par_iter()
        .map(|f| {
            let resid: Vec<f64> = residuals(series, &f.params, &f.window)?.into_iter().map(|(_, r)| r).collect();
            WindowDecision::from_residuals(f.window, f.converged, f.passes_filter, &resid, alphas)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub alpha: f64,
    pub pp_reject_pct: f64,
    pub df_reject_pct: f64,
    /// `None` when no window survived the filter.
    pub p_stationary_given_lppl_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityRow {
    pub index: String,
    pub range_start: NaiveDate,
    pub range_end: NaiveDate,
    pub n_windows: usize,
    pub n_converged: usize,
    pub n_survivors: usize,
    pub p_lppl_pct: f64,
    pub levels: Vec<LevelSummary>,
    pub decisions: Vec<WindowDecision>,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl StationarityRow {
    pub fn from_decisions(
        index: impl Into<String>,
        range: (NaiveDate, NaiveDate),
        n_windows: usize,
        decisions: Vec<WindowDecision>,
        alphas: &[f64],
    ) -> Self {
        let converged: Vec<&WindowDecision> = decisions.iter().filter(|d| d.converged).collect();
        let survivors: Vec<&WindowDecision> = converged.iter().copied().filter(|d| d.passes_filter).collect();
        let mut alphas = alphas.to_vec();
        alphas.sort_by(|a, b| b.total_cmp(a));
        alphas.dedup();
        let levels = alphas
            .iter()
            .map(|&alpha| LevelSummary {
                alpha,
                pp_reject_pct: pct(converged.iter().filter(|d| d.pp_rejects(alpha)).count(), converged.len()),
                df_reject_pct: pct(converged.iter().filter(|d| d.df_rejects(alpha)).count(), converged.len()),
                p_stationary_given_lppl_pct: (!survivors.is_empty())
                    .then(|| pct(survivors.iter().filter(|d| d.stationary_at(alpha)).count(), survivors.len())),
            })
            .collect();
        StationarityRow {
            index: index.into(),
            range_start: range.0,
            range_end: range.1,
            n_windows,
            n_converged: converged.len(),
            n_survivors: survivors.len(),
            p_lppl_pct: pct(survivors.len(), converged.len()),
            levels,
            decisions,
        }
    }
}

/// Row for one index and calibrating range from a finished scan. The range
/// spans the earliest window start to the latest window end.
pub fn stationarity_row(index: &str, series: &PriceSeries, scan: &ScanResult, alphas: &[f64]) -> Result<StationarityRow> {
    let t1 = scan.windows.iter().map(|w| w.t1).min();
    let t2 = scan.windows.iter().map(|w| w.t2).max();
    let (Some(t1), Some(t2)) = (t1, t2) else {
        return Err(LpplError::InvalidParameter("scan has no windows".into()));
    };
    if t2 >= series.len() {
        return Err(LpplError::InvalidWindow { t1, t2, len: series.len() });
    }
    let decisions = window_decisions(series, &scan.fits, alphas)?;
    Ok(StationarityRow::from_decisions(
        index,
        (series.date(t1), series.date(t2)),
        scan.windows.len(),
        decisions,
        alphas,
    ))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StationarityTable {
    pub rows: Vec<StationarityRow>,
}

impl StationarityTable {
    /// One line per (row, level), columns as in the printed summary.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "index,range_start,range_end,n_windows,p_lppl_pct,alpha,pp_reject_pct,df_reject_pct,p_stationary_given_lppl_pct"
        )?;
        for r in &self.rows {
            for l in &r.levels {
                let cond = l.p_stationary_given_lppl_pct.map_or(String::new(), |v| format!("{v:.1}"));
                writeln!(
                    w,
                    "{},{},{},{},{:.1},{},{:.1},{:.1},{}",
                    r.index, r.range_start, r.range_end, r.n_windows, r.p_lppl_pct, l.alpha, l.pp_reject_pct, l.df_reject_pct, cond
                )?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
