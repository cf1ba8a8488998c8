//! Close-open regime statistic: the trailing fraction of days closing below
//! their open.

use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{LpplError, Result};
use crate::series::PriceSeries;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegimeConfig {
    pub window_lengths: Vec<usize>,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        RegimeConfig {
            window_lengths: vec![10, 20, 30],
        }
    }
}

impl RegimeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_lengths.contains(&0) {
            return Err(LpplError::InvalidParameter("regime window length must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimePoint {
    pub date: NaiveDate,
    pub fraction: f64,
}

/// For every day `t >= T - 1`, the fraction of the `T` days ending at `t`
/// with `close < open`. Days with `close == open` do not count. A series
/// shorter than `T` (or `T == 0`) gives an empty result and a warning.
pub fn close_open_fraction(series: &PriceSeries, t_len: usize) -> Vec<RegimePoint> {
    let bars = series.bars();
    if t_len == 0 || bars.len() < t_len {
        log::warn!("series of {} days is shorter than regime window T = {t_len}", bars.len());
        return Vec::new();
    }
    let down: Vec<usize> = bars.iter().map(|b| usize::from(b.close < b.open)).collect();
    let mut count: usize = down[..t_len - 1].iter().sum();
    (t_len - 1..bars.len())
        .map(|t| {
            count += down[t];
            let p = RegimePoint {
                date: bars[t].date,
                fraction: count as f64 / t_len as f64,
            };
            count -= down[t + 1 - t_len];
            p
        })
        .collect()
}

pub fn write_regime_csv<W: Write>(points: &[RegimePoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "date,fraction")?;
    for p in points {
        writeln!(w, "{},{}", p.date, p.fraction)?;
    }
    Ok(())
}
