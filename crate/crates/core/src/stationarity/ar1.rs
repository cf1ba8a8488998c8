use serde::{Deserialize, Serialize};

use crate::error::{LpplError, Result};

pub const MIN_UNIT_ROOT_SAMPLES: usize = 20;

/// Least-squares estimate of `r[t+1] = a r[t] + e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Fit {
    pub a: f64,
    /// Innovation standard deviation.
    pub sigma: f64,
    pub n: usize,
}

impl Ar1Fit {
    /// `|a| < 1`: the discrete-time signature of an Ornstein-Uhlenbeck process.
    pub fn is_mean_reverting(&self) -> bool {
        self.a.abs() < 1.0
    }
}

pub(crate) fn check_input(r: &[f64]) -> Result<()> {
    if r.len() < MIN_UNIT_ROOT_SAMPLES {
        return Err(LpplError::TooFewSamples {
            needed: MIN_UNIT_ROOT_SAMPLES,
            got: r.len(),
        });
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(LpplError::InvalidSeries("non-finite residual".into()));
    }
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let spread = r.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    let level = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(spread > 1e-12 * level.max(1e-300)) {
        return Err(LpplError::ZeroVariance);
    }
    Ok(())
}

pub fn fit_ar1(r: &[f64]) -> Result<Ar1Fit> {
    check_input(r)?;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for w in r.windows(2) {
        sxy += w[0] * w[1];
        sxx += w[0] * w[0];
    }
    if !(sxx > 0.0) {
        return Err(LpplError::ZeroVariance);
    }
    let a = sxy / sxx;
    let ssr: f64 = r.windows(2).map(|w| (w[1] - a * w[0]).powi(2)).sum();
    let dof = (r.len() - 2) as f64;
    Ok(Ar1Fit {
        a,
        sigma: (ssr / dof).sqrt(),
        n: r.len(),
    })
}
