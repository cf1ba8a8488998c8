//! Synthetic LPPL price paths with mean-reverting residuals.
//!
//! `ln close(t) = LPPL(t) + r(t)` where `r` is zero, white noise, or a
//! stationary AR(1) (the daily-step discretization of an Ornstein-Uhlenbeck
//! process). Opens are the previous close times a small independent
//! log-normal factor, so the close-open statistic has something to measure.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{LpplError, Result};
use crate::model::{lppl_log_price, LpplParams};
use crate::series::{weekdays_from, Bar, PriceSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResidualModel {
    None,
    White { sigma: f64 },
    Ar1 { a: f64, sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub params: LpplParams,
    pub n_days: usize,
    pub residual: ResidualModel,
    pub seed: u64,
    pub start: NaiveDate,
    /// Standard deviation of the log open/previous-close gap.
    pub open_noise: f64,
}

impl SynthSpec {
    pub fn new(params: LpplParams, n_days: usize, residual: ResidualModel, seed: u64) -> Self {
        SynthSpec {
            params,
            n_days,
            residual,
            seed,
            start: NaiveDate::from_ymd_opt(2005, 1, 3).expect("valid date"),
            open_noise: 0.005,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_days < 10 {
            return Err(LpplError::InvalidParameter(format!("n_days must be >= 10, got {}", self.n_days)));
        }
        if !(self.params.tc > self.n_days as f64) {
            return Err(LpplError::Domain {
                t: self.n_days as f64,
                tc: self.params.tc,
            });
        }
        if !self.params.is_finite() || !(self.open_noise >= 0.0) {
            return Err(LpplError::InvalidParameter("non-finite parameters".into()));
        }
        match self.residual {
            ResidualModel::None => {}
            ResidualModel::White { sigma } => check_sigma(sigma)?,
            ResidualModel::Ar1 { a, sigma } => {
                check_sigma(sigma)?;
                if !(a.abs() < 1.0) {
                    return Err(LpplError::InvalidParameter(format!("AR(1) coefficient must satisfy |a| < 1, got {a}")));
                }
            }
        }
        Ok(())
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(LpplError::InvalidParameter(format!("sigma must be >= 0, got {sigma}")))
    }
}

/// Residual path of length `n` drawn from `model`. An AR(1) path starts
/// from its stationary distribution.
pub fn residual_path(model: &ResidualModel, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    match *model {
        ResidualModel::None => vec![0.0; n],
        ResidualModel::White { sigma } => (0..n).map(|_| sigma * std_normal.sample(rng)).collect(),
        ResidualModel::Ar1 { a, sigma } => {
            let mut out = Vec::with_capacity(n);
            let mut r = sigma / (1.0 - a * a).sqrt() * std_normal.sample(rng);
            for _ in 0..n {
                out.push(r);
                r = a * r + sigma * std_normal.sample(rng);
            }
            out
        }
    }
}

/// Generates the series; identical specs produce identical series.
pub fn generate(spec: &SynthSpec) -> Result<PriceSeries> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let resid = residual_path(&spec.residual, spec.n_days, &mut rng);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let dates = weekdays_from(spec.start, spec.n_days);
    let mut bars = Vec::with_capacity(spec.n_days);
    let mut prev_close: Option<f64> = None;
    for (t, (date, r)) in dates.into_iter().zip(resid).enumerate() {
        let log_close = lppl_log_price(&spec.params, t as f64)? + r;
        let close = log_close.exp();
        let anchor = prev_close.unwrap_or(close);
        let open = anchor * (spec.open_noise * std_normal.sample(&mut rng)).exp();
        let wick = (spec.open_noise * std_normal.sample(&mut rng)).abs();
        bars.push(Bar {
            date,
            open,
            high: open.max(close) * wick.exp(),
            low: open.min(close) * (-wick).exp(),
            close,
        });
        prev_close = Some(close);
    }
    PriceSeries::new(bars)
}
