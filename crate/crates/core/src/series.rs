//! Daily OHLC price series on a trading calendar.
//!
//! The analysis time axis is the trading-day ordinal of each bar (0, 1, 2, ...),
//! never the calendar distance between dates.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{LpplError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl Bar {
    fn validate(&self) -> std::result::Result<(), String> {
        for (name, v) in [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} price must be finite and > 0, got {v}"));
            }
        }
        Ok(())
    }
}

/// Validated, strictly date-ordered sequence of bars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Bar>", into = "Vec<Bar>")]
pub struct PriceSeries {
    bars: Vec<Bar>,
}

impl TryFrom<Vec<Bar>> for PriceSeries {
    type Error = LpplError;

    fn try_from(bars: Vec<Bar>) -> Result<Self> {
        PriceSeries::new(bars)
    }
}

impl From<PriceSeries> for Vec<Bar> {
    fn from(s: PriceSeries) -> Self {
        s.bars
    }
}

impl PriceSeries {
    pub fn new(bars: Vec<Bar>) -> Result<Self> {
        for (i, bar) in bars.iter().enumerate() {
            bar.validate()
                .map_err(|e| LpplError::InvalidSeries(format!("bar {i} ({}): {e}", bar.date)))?;
            if i > 0 && bars[i - 1].date >= bar.date {
                return Err(LpplError::InvalidSeries(format!(
                    "dates must be strictly increasing: {} then {}",
                    bars[i - 1].date, bar.date
                )));
            }
        }
        Ok(PriceSeries { bars })
    }

    /// Builds a series from close prices only, on consecutive weekdays from `start`.
    /// Open, high and low are set equal to the close.
    pub fn from_closes(start: NaiveDate, closes: &[f64]) -> Result<Self> {
        let dates = weekdays_from(start, closes.len());
        let bars = dates
            .into_iter()
            .zip(closes)
            .map(|(date, &c)| Bar {
                date,
                open: c,
                high: c,
                low: c,
                close: c,
            })
            .collect();
        PriceSeries::new(bars)
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn date(&self, ordinal: usize) -> NaiveDate {
        self.bars[ordinal].date
    }

    pub fn log_close(&self, ordinal: usize) -> f64 {
        self.bars[ordinal].close.ln()
    }

    pub fn log_closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close.ln()).collect()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.bars.first().map(|b| b.date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.bars.last().map(|b| b.date)
    }

    /// Ordinal of the last trading day on or before `date`.
    pub fn ordinal_on_or_before(&self, date: NaiveDate) -> Option<usize> {
        let idx = self.bars.partition_point(|b| b.date <= date);
        idx.checked_sub(1)
    }

    /// Ordinal of the first trading day on or after `date`.
    pub fn ordinal_on_or_after(&self, date: NaiveDate) -> Option<usize> {
        let idx = self.bars.partition_point(|b| b.date < date);
        (idx < self.bars.len()).then_some(idx)
    }

    /// Calendar date for a real-valued ordinal. Fractional ordinals round up;
    /// ordinals past the last bar are extended on a Monday-Friday calendar.
    pub fn date_at(&self, ordinal: f64) -> Option<NaiveDate> {
        if self.bars.is_empty() || !ordinal.is_finite() {
            return None;
        }
        let idx = ordinal.ceil().max(0.0);
        let last = (self.bars.len() - 1) as f64;
        if idx <= last {
            return Some(self.bars[idx as usize].date);
        }
        let extra = (idx - last) as usize;
        let last_date = self.bars[self.bars.len() - 1].date;
        weekdays_after(last_date, extra).last().copied()
    }

    /// Inverse of [`PriceSeries::date_at`] for whole days: the ordinal of the
    /// first trading day on or after `date`, counting weekdays past the end.
    pub fn extended_ordinal(&self, date: NaiveDate) -> Option<usize> {
        if let Some(i) = self.ordinal_on_or_after(date) {
            return Some(i);
        }
        let last = self.bars.last()?.date;
        let mut n = self.bars.len() - 1;
        let mut d = last;
        while d < date {
            d = d + Days::new(1);
            if is_weekday(d) {
                n += 1;
            }
        }
        if !is_weekday(date) {
            n += 1;
        }
        Some(n)
    }
}

fn is_weekday(d: NaiveDate) -> bool {
    !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

/// `n` consecutive weekdays starting at `start` (or the next weekday if `start` falls on a weekend).
pub fn weekdays_from(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if is_weekday(d) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

fn weekdays_after(date: NaiveDate, n: usize) -> Vec<NaiveDate> {
    weekdays_from(date + Days::new(1), n)
}

/// Parses `YYYY-MM-DD`, clamping an out-of-range day to the last day of the
/// month, so that "2009-04-31" becomes 2009-04-30.
pub fn parse_date_lenient(s: &str) -> Result<NaiveDate> {
    let bad = || LpplError::InvalidParameter(format!("malformed date {s:?}, expected YYYY-MM-DD"));
    let mut parts = s.trim().splitn(3, '-');
    let y: i32 = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
    let m: u32 = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
    let d: u32 = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
    if !(1..=12).contains(&m) || d == 0 || d > 31 {
        return Err(bad());
    }
    (1..=d)
        .rev()
        .find_map(|day| NaiveDate::from_ymd_opt(y, m, day))
        .ok_or_else(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extended_ordinal_inverts_date_at() {
        let s = PriceSeries::from_closes(NaiveDate::from_ymd_opt(2009, 7, 1).unwrap(), &[1.0; 20]).unwrap();
        for k in 0..60 {
            assert_eq!(s.extended_ordinal(s.date_at(k as f64).unwrap()), Some(k));
        }
        // a Saturday past the end maps to the following Monday
        let sat = NaiveDate::from_ymd_opt(2009, 8, 1).unwrap();
        assert_eq!(s.date_at(s.extended_ordinal(sat).unwrap() as f64), NaiveDate::from_ymd_opt(2009, 8, 3));
    }

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn rejects_duplicate_and_nonpositive() {
        let bar = |date, c| Bar {
            date,
            open: c,
            high: c,
            low: c,
            close: c,
        };
        assert!(PriceSeries::new(vec![bar(d(2020, 1, 2), 1.0), bar(d(2020, 1, 2), 1.0)]).is_err());
        assert!(PriceSeries::new(vec![bar(d(2020, 1, 2), 0.0)]).is_err());
        assert!(PriceSeries::new(vec![bar(d(2020, 1, 3), 1.0), bar(d(2020, 1, 2), 1.0)]).is_err());
    }

    #[test]
    fn calendar_lookup_and_extension() {
        // 2020-01-02 is a Thursday.
        let s = PriceSeries::from_closes(d(2020, 1, 2), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.date(2), d(2020, 1, 6));
        assert_eq!(s.ordinal_on_or_before(d(2020, 1, 5)), Some(1));
        assert_eq!(s.ordinal_on_or_after(d(2020, 1, 4)), Some(2));
        assert_eq!(s.ordinal_on_or_before(d(2019, 12, 31)), None);
        assert_eq!(s.date_at(1.2), Some(d(2020, 1, 6)));
        assert_eq!(s.date_at(3.0), Some(d(2020, 1, 7)));
        assert_eq!(s.date_at(6.5), Some(d(2020, 1, 13)));
    }

    #[test]
    fn lenient_dates() {
        assert_eq!(parse_date_lenient("2009-04-31").unwrap(), d(2009, 4, 30));
        assert_eq!(parse_date_lenient("2008-02-30").unwrap(), d(2008, 2, 29));
        assert_eq!(parse_date_lenient("2007-10-10").unwrap(), d(2007, 10, 10));
        assert!(parse_date_lenient("2007-13-01").is_err());
        assert!(parse_date_lenient("10/10/2007").is_err());
    }
}
