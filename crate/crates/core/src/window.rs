//! Fit windows and the shrinking / expanding window families.

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{LpplError, Result};
use crate::series::PriceSeries;

/// Inclusive interval `[t1, t2]` of trading-day ordinals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WindowSpec {
    pub t1: usize,
    pub t2: usize,
}

impl WindowSpec {
    pub fn new(t1: usize, t2: usize) -> Self {
        WindowSpec { t1, t2 }
    }

    pub fn len(&self) -> usize {
        self.t2 + 1 - self.t1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.t1 >= self.t2 || self.t2 >= series_len {
            return Err(LpplError::InvalidWindow {
                t1: self.t1,
                t2: self.t2,
                len: series_len,
            });
        }
        Ok(())
    }

    pub fn ordinals(&self) -> impl Iterator<Item = usize> {
        self.t1..=self.t2
    }
}

/// Windows `[t1, t2_fixed]` for `t1 = t1_first, t1_first + step, ...` while `t1 <= t1_last`.
pub fn gen_shrinking_windows(
    t1_first: usize,
    t1_last: usize,
    t2_fixed: usize,
    step: usize,
) -> Vec<WindowSpec> {
    if step == 0 || t1_first > t1_last || t1_last >= t2_fixed {
        return Vec::new();
    }
    (t1_first..=t1_last)
        .step_by(step)
        .map(|t1| WindowSpec::new(t1, t2_fixed))
        .collect()
}

/// Windows `[t1_fixed, t2]` for `t2 = t2_first, t2_first + step, ...` while `t2 <= t2_last`.
pub fn gen_expanding_windows(
    t1_fixed: usize,
    t2_first: usize,
    t2_last: usize,
    step: usize,
) -> Vec<WindowSpec> {
    if step == 0 || t2_first > t2_last || t1_fixed >= t2_first {
        return Vec::new();
    }
    (t2_first..=t2_last)
        .step_by(step)
        .map(|t2| WindowSpec::new(t1_fixed, t2))
        .collect()
}

/// Unit in which a window family's `step` is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepUnit {
    #[default]
    TradingDays,
    /// Steps of calendar days, each snapped forward to the next trading day;
    /// duplicate ordinals produced by weekends and holidays are merged.
    CalendarDays,
}

/// A window family expressed in calendar dates, resolved against a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum WindowFamily {
    Shrinking {
        t2: NaiveDate,
        t1_first: NaiveDate,
        t1_last: NaiveDate,
        step: usize,
        #[serde(default)]
        step_unit: StepUnit,
    },
    Expanding {
        t1: NaiveDate,
        t2_first: NaiveDate,
        t2_last: NaiveDate,
        step: usize,
        #[serde(default)]
        step_unit: StepUnit,
    },
}

impl WindowFamily {
    /// Resolves dates to ordinals. Fixed and last endpoints snap to the last
    /// trading day on or before the date; first endpoints snap to the first
    /// trading day on or after it.
    pub fn resolve(&self, series: &PriceSeries) -> Result<Vec<WindowSpec>> {
        let before = |d: NaiveDate| {
            series
                .ordinal_on_or_before(d)
                .ok_or_else(|| LpplError::InvalidParameter(format!("{d} precedes the series")))
        };
        let after = |d: NaiveDate| {
            series
                .ordinal_on_or_after(d)
                .ok_or_else(|| LpplError::InvalidParameter(format!("{d} follows the series")))
        };
        match *self {
            WindowFamily::Shrinking {
                t2,
                t1_first,
                t1_last,
                step,
                step_unit,
            } => {
                let t2 = before(t2)?;
                match step_unit {
                    StepUnit::TradingDays => Ok(gen_shrinking_windows(
                        after(t1_first)?,
                        before(t1_last)?,
                        t2,
                        step,
                    )),
                    StepUnit::CalendarDays => Ok(calendar_ordinals(series, t1_first, t1_last, step)
                        .into_iter()
                        .filter(|&t1| t1 < t2)
                        .map(|t1| WindowSpec::new(t1, t2))
                        .collect()),
                }
            }
            WindowFamily::Expanding {
                t1,
                t2_first,
                t2_last,
                step,
                step_unit,
            } => {
                let t1 = after(t1)?;
                match step_unit {
                    StepUnit::TradingDays => Ok(gen_expanding_windows(
                        t1,
                        after(t2_first)?,
                        before(t2_last)?,
                        step,
                    )),
                    StepUnit::CalendarDays => Ok(calendar_ordinals(series, t2_first, t2_last, step)
                        .into_iter()
                        .filter(|&t2| t2 > t1)
                        .map(|t2| WindowSpec::new(t1, t2))
                        .collect()),
                }
            }
        }
    }
}

fn calendar_ordinals(series: &PriceSeries, first: NaiveDate, last: NaiveDate, step: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    if step == 0 {
        return out;
    }
    let mut d = first;
    while d <= last {
        if let Some(o) = series.ordinal_on_or_after(d) {
            if series.date(o) <= last && out.last() != Some(&o) {
                out.push(o);
            }
        }
        d = d + Days::new(step as u64);
    }
    out
}
