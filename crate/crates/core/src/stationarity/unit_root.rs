//! Dickey-Fuller and Phillips-Perron unit-root tests, constant only, no lags.
//!
//! Both regress `r[t] - r[t-1] = c + gamma r[t-1] + e`. The null hypothesis is
//! a unit root (`gamma = 0`); a statistic below the critical value rejects it,
//! i.e. indicates a stationary series.

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::ar1::check_input;
use super::critical::critical_value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitRootTest {
    DickeyFuller,
    PhillipsPerron,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionSpec {
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub alpha: f64,
    pub critical_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootResult {
    pub test: UnitRootTest,
    pub statistic: f64,
    /// One decision per requested level, most permissive level first.
    pub reject_at: Vec<Decision>,
    /// Number of input points.
    pub n: usize,
    pub spec: RegressionSpec,
    /// Lagged differences (DF, always 0) or Newey-West bandwidth (PP).
    pub lag_or_bandwidth: usize,
}

impl UnitRootResult {
    pub fn rejects_at(&self, alpha: f64) -> Option<bool> {
        self.reject_at.iter().find(|d| (d.alpha - alpha).abs() < 1e-12).map(|d| d.reject)
    }
}

/// OLS pieces of the DF regression on a levels series.
#[derive(Debug, Clone)]
pub(crate) struct DfRegression {
    pub se_gamma: f64,
    pub t_ratio: f64,
    /// Regression residuals.
    pub resid: Vec<f64>,
    /// Residual variance with `T - 2` degrees of freedom.
    pub s2: f64,
}

pub(crate) fn df_regression(r: &[f64]) -> DfRegression {
    let t_obs = r.len() - 1;
    let n = t_obs as f64;
    let x = &r[..t_obs];
    let (mut mx, mut my) = (0.0, 0.0);
    for i in 0..t_obs {
        mx += x[i];
        my += r[i + 1] - r[i];
    }
    mx /= n;
    my /= n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..t_obs {
        let dx = x[i] - mx;
        let dy = r[i + 1] - r[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let gamma = sxy / sxx;
    let c = my - gamma * mx;
    let resid: Vec<f64> = (0..t_obs).map(|i| r[i + 1] - r[i] - c - gamma * x[i]).collect();
    let ssr: f64 = resid.iter().map(|u| u * u).sum();
    // a perfect fit would give an infinite t-ratio; keep it finite
    let s2 = (ssr / (n - 2.0)).max(f64::EPSILON * f64::EPSILON * syy / n);
    let se_gamma = (s2 / sxx).sqrt();
    DfRegression {
        se_gamma,
        t_ratio: gamma / se_gamma,
        resid,
        s2,
    }
}

fn decisions(statistic: f64, alphas: &[f64], n_obs: usize) -> Result<Vec<Decision>> {
    let mut levels = alphas.to_vec();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    levels
        .into_iter()
        .map(|alpha| {
            let cv = critical_value(alpha, n_obs)?;
            Ok(Decision {
                alpha,
                critical_value: cv,
                reject: statistic < cv,
            })
        })
        .collect()
}

/// Newey-West bandwidth `floor(4 (T/100)^(2/9))`.
pub fn newey_west_bandwidth(n_obs: usize) -> usize {
    (4.0 * (n_obs as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

pub fn dickey_fuller(r: &[f64], alphas: &[f64]) -> Result<UnitRootResult> {
    check_input(r)?;
    let reg = df_regression(r);
    let n_obs = r.len() - 1;
    Ok(UnitRootResult {
        test: UnitRootTest::DickeyFuller,
        statistic: reg.t_ratio,
        reject_at: decisions(reg.t_ratio, alphas, n_obs)?,
        n: r.len(),
        spec: RegressionSpec::Constant,
        lag_or_bandwidth: 0,
    })
}

/// Phillips-Perron `Z_tau`: the DF t-ratio corrected for serial correlation
/// and heteroskedasticity with a Bartlett-kernel long-run variance.
pub fn phillips_perron(r: &[f64], alphas: &[f64]) -> Result<UnitRootResult> {
    check_input(r)?;
    let reg = df_regression(r);
    let n_obs = r.len() - 1;
    let n = n_obs as f64;
    let lags = newey_west_bandwidth(n_obs).min(n_obs - 1);
    let u = &reg.resid;
    let gamma0 = u.iter().map(|v| v * v).sum::<f64>() / n;
    let mut lam2 = gamma0;
    for j in 1..=lags {
        let w = 1.0 - j as f64 / (lags as f64 + 1.0);
        let gj: f64 = u[j..].iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / n;
        lam2 += 2.0 * w * gj;
    }
    let gamma0 = gamma0.max(f64::MIN_POSITIVE);
    let lam2 = lam2.max(gamma0 * 1e-12);
    let lam = lam2.sqrt();
    let s = reg.s2.sqrt();
    let statistic = (gamma0 / lam2).sqrt() * reg.t_ratio - 0.5 * (lam2 - gamma0) / lam * (n * reg.se_gamma / s);
    Ok(UnitRootResult {
        test: UnitRootTest::PhillipsPerron,
        statistic,
        reject_at: decisions(statistic, alphas, n_obs)?,
        n: r.len(),
        spec: RegressionSpec::Constant,
        lag_or_bandwidth: lags,
    })
}

pub fn run_test(test: UnitRootTest, r: &[f64], alphas: &[f64]) -> Result<UnitRootResult> {
    match test {
        UnitRootTest::DickeyFuller => dickey_fuller(r, alphas),
        UnitRootTest::PhillipsPerron => phillips_perron(r, alphas),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::LpplError;
    use crate::stationarity::critical::SUPPORTED_ALPHAS;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn alternating_series_rejects_everywhere() {
        let r: Vec<f64> = (0..60).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        for test in [UnitRootTest::DickeyFuller, UnitRootTest::PhillipsPerron] {
            let res = run_test(test, &r, &SUPPORTED_ALPHAS).unwrap();
            assert!(res.statistic.is_finite());
            assert!(res.reject_at.iter().all(|d| d.reject), "{res:?}");
        }
    }

    #[test]
    fn degenerate_inputs_error() {
        assert!(matches!(dickey_fuller(&[1.0; 30], &[0.01]), Err(LpplError::ZeroVariance)));
        assert!(matches!(phillips_perron(&[1.0; 10], &[0.01]), Err(LpplError::TooFewSamples { .. })));
        assert!(matches!(dickey_fuller(&noise(30, 1), &[0.2]), Err(LpplError::UnsupportedAlpha(_))));
    }

    #[test]
    fn bandwidth_rule() {
        assert_eq!(newey_west_bandwidth(100), 4);
        assert_eq!(newey_west_bandwidth(499), 5);
        assert_eq!(newey_west_bandwidth(20), 2);
    }

    #[test]
    fn pp_matches_df_on_iid_noise() {
        for seed in 0..20 {
            let r = noise(500, seed);
            let df = dickey_fuller(&r, &[0.01]).unwrap().statistic;
            let pp = phillips_perron(&r, &[0.01]).unwrap().statistic;
            assert!((pp / df - 1.0).abs() < 0.1, "seed {seed}: df {df} pp {pp}");
        }
    }

    proptest! {
        #[test]
        fn scale_invariant_and_monotone(seed in 0u64..10_000, k in 1e-3f64..1e3, walk in any::<bool>()) {
            let mut r = noise(80, seed);
            if walk {
                for i in 1..r.len() {
                    r[i] += 0.9 * r[i - 1];
                }
            }
            let scaled: Vec<f64> = r.iter().map(|v| k * v).collect();
            for test in [UnitRootTest::DickeyFuller, UnitRootTest::PhillipsPerron] {
                let a = run_test(test, &r, &SUPPORTED_ALPHAS).unwrap();
                let b = run_test(test, &scaled, &SUPPORTED_ALPHAS).unwrap();
                prop_assert!((a.statistic - b.statistic).abs() <= 1e-8 * a.statistic.abs().max(1.0));
                // levels are ordered loosest first: a rejection implies all earlier ones
                for w in a.reject_at.windows(2) {
                    prop_assert!(w[0].alpha > w[1].alpha);
                    prop_assert!(!w[1].reject || w[0].reject);
                }
            }
        }
    }
}
