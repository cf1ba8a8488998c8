//! The log-periodic power law and its least-squares objective.
//!
//! `ln p(t) = A + B x^m + C x^m cos(omega ln x + phi)` with `x = tc - t`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{LpplError, Result};
use crate::series::PriceSeries;
use crate::window::WindowSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpplParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub m: f64,
    pub omega: f64,
    /// Phase in `[0, 2pi)`.
    pub phi: f64,
    /// Critical time as a real-valued trading-day ordinal.
    pub tc: f64,
}

impl LpplParams {
    /// Builds a parameter set, folding a negative `omega` into the phase and
    /// normalizing `phi` into `[0, 2pi)`.
    pub fn new(a: f64, b: f64, c: f64, m: f64, omega: f64, phi: f64, tc: f64) -> Self {
        let (omega, phi) = if omega < 0.0 { (-omega, -phi) } else { (omega, phi) };
        LpplParams {
            a,
            b,
            c,
            m,
            omega,
            phi: normalize_phase(phi),
            tc,
        }
    }

    pub fn nonlinear(&self) -> NonlinearParams {
        NonlinearParams {
            tc: self.tc,
            m: self.m,
            omega: self.omega,
            phi: self.phi,
        }
    }

    pub fn with_linear(nl: NonlinearParams, lin: LinearParams) -> Self {
        LpplParams::new(lin.a, lin.b, lin.c, nl.m, nl.omega, nl.phi, nl.tc)
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.b, self.c, self.m, self.omega, self.phi, self.tc]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// The four parameters that enter the model nonlinearly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearParams {
    pub tc: f64,
    pub m: f64,
    pub omega: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub fn normalize_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Power-law and oscillation basis `(x^m, x^m cos(omega ln x + phi))`, no domain check.
#[inline]
pub(crate) fn basis(nl: &NonlinearParams, t: f64) -> (f64, f64) {
    let x = nl.tc - t;
    let lx = x.ln();
    let xm = (nl.m * lx).exp();
    (xm, xm * (nl.omega * lx + nl.phi).cos())
}

/// Model log-price at trading-day ordinal `t`.
pub fn lppl_log_price(params: &LpplParams, t: f64) -> Result<f64> {
    let x = params.tc - t;
    if !(x > 0.0) {
        return Err(LpplError::Domain { t, tc: params.tc });
    }
    let (f, g) = basis(&params.nonlinear(), t);
    Ok(params.a + params.b * f + params.c * g)
}

fn check_window(series: &PriceSeries, params: &LpplParams, window: &WindowSpec) -> Result<()> {
    window.validate(series.len())?;
    if !(params.tc > window.t2 as f64) {
        return Err(LpplError::Domain {
            t: window.t2 as f64,
            tc: params.tc,
        });
    }
    Ok(())
}

/// `(t, ln p(t) - model(t))` for every trading day in the window.
pub fn residuals(
    series: &PriceSeries,
    params: &LpplParams,
    window: &WindowSpec,
) -> Result<Vec<(f64, f64)>> {
    check_window(series, params, window)?;
    window
        .ordinals()
        .map(|i| {
            let t = i as f64;
            Ok((t, series.log_close(i) - lppl_log_price(params, t)?))
        })
        .collect()
}

pub fn sse(series: &PriceSeries, params: &LpplParams, window: &WindowSpec) -> Result<f64> {
    Ok(residuals(series, params, window)?
        .iter()
        .map(|(_, r)| r * r)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn params(a: f64, b: f64, c: f64, m: f64, omega: f64, phi: f64, tc: f64) -> LpplParams {
        LpplParams::new(a, b, c, m, omega, phi, tc)
    }

    fn series_from(p: &LpplParams, n: usize) -> PriceSeries {
        let closes: Vec<f64> = (0..n)
            .map(|i| lppl_log_price(p, i as f64).unwrap().exp())
            .collect();
        PriceSeries::from_closes(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), &closes).unwrap()
    }

    #[test]
    fn log_price_examples() {
        assert_eq!(lppl_log_price(&params(3.0, 0.0, 0.0, 0.7, 6.0, 1.0, 40.0), 5.0).unwrap(), 3.0);
        assert_eq!(lppl_log_price(&params(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 10.0), 9.0).unwrap(), -1.0);
        // 40-digit reference value of 2 - 0.5*2 + 0.1*2*cos(8 ln 4 + 1)
        let v = lppl_log_price(&params(2.0, -0.5, 0.1, 0.5, 8.0, 1.0, 100.0), 96.0).unwrap();
        assert!((v - 1.177_765_546_537_013).abs() < 1e-13, "{v}");
    }

    #[test]
    fn domain_error_at_or_after_tc() {
        let p = params(1.0, -1.0, 0.1, 0.5, 8.0, 0.0, 10.0);
        assert!(matches!(lppl_log_price(&p, 10.0), Err(LpplError::Domain { .. })));
        assert!(lppl_log_price(&p, 11.0).is_err());
        let s = series_from(&params(1.0, -1.0, 0.1, 0.5, 8.0, 0.0, 100.0), 20);
        assert!(residuals(&s, &p, &WindowSpec::new(0, 10)).is_err());
        assert!(residuals(&s, &p, &WindowSpec::new(0, 9)).is_ok());
    }

    #[test]
    fn exact_model_residuals_vanish() {
        let p = params(5.0, -0.3, 0.02, 0.45, 7.5, 2.0, 130.0);
        let s = series_from(&p, 100);
        let w = WindowSpec::new(10, 99);
        let r = residuals(&s, &p, &w).unwrap();
        assert_eq!(r.len(), 90);
        assert!(r.iter().all(|(_, e)| e.abs() < 1e-9));
        assert!(sse(&s, &p, &w).unwrap() <= 1e-15 * 90.0 + 1e-20);

        let shifted = LpplParams { a: p.a + 0.25, ..p };
        let r = residuals(&s, &shifted, &w).unwrap();
        assert!(r.iter().all(|(_, e)| (e + 0.25).abs() < 1e-9));
    }

    #[test]
    fn sse_of_constant_residuals() {
        // Data sits exactly 2 above a constant model: five residuals of 2.
        let s = PriceSeries::from_closes(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), &[3f64.exp(); 5]).unwrap();
        let p = params(1.0, 0.0, 0.0, 0.5, 8.0, 0.0, 10.0);
        let v = sse(&s, &p, &WindowSpec::new(0, 4)).unwrap();
        assert!((v - 20.0).abs() < 1e-12);
    }

    #[test]
    fn phase_normalization() {
        let p = params(0.0, 0.0, 0.0, 0.5, -3.0, 1.0, 1.0);
        assert_eq!(p.omega, 3.0);
        assert!((p.phi - (TAU - 1.0)).abs() < 1e-15);
        assert!((0.0..TAU).contains(&normalize_phase(-1e-300)));
    }

    proptest! {
        #[test]
        fn residuals_match_direct_recomputation(
            seed_prices in proptest::collection::vec(0.5f64..50.0, 12..40),
            a in -2.0f64..2.0, b in -2.0f64..2.0, c in -0.5f64..0.5,
            m in 0.05f64..1.1, omega in 0.0f64..20.0, phi in 0.0f64..6.28, extra in 0.5f64..60.0,
        ) {
            let n = seed_prices.len();
            let s = PriceSeries::from_closes(NaiveDate::from_ymd_opt(2021, 3, 1).unwrap(), &seed_prices).unwrap();
            let p = params(a, b, c, m, omega, phi, (n - 1) as f64 + extra);
            let w = WindowSpec::new(0, n - 1);
            let r = residuals(&s, &p, &w).unwrap();
            let mut total = 0.0;
            for (i, &(t, e)) in r.iter().enumerate() {
                let x: f64 = p.tc - i as f64;
                let model = a + b * x.powf(m) + c * x.powf(m) * (omega * x.ln() + phi).cos();
                let direct = seed_prices[i].ln() - model;
                prop_assert_eq!(t, i as f64);
                prop_assert!((e - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
                total += e * e;
            }
            let v = sse(&s, &p, &w).unwrap();
            prop_assert!((v - total).abs() <= 1e-12 * total.max(1e-300));
        }

        #[test]
        fn phase_shift_invariance(phi in 0.0f64..6.28, t in 0.0f64..99.0) {
            let p = params(1.0, -0.4, 0.05, 0.6, 9.0, phi, 100.5);
            let q = params(1.0, -0.4, 0.05, 0.6, 9.0, phi + TAU, 100.5);
            let d = lppl_log_price(&p, t).unwrap() - lppl_log_price(&q, t).unwrap();
            prop_assert!(d.abs() < 1e-12);
        }

        #[test]
        fn super_exponential_when_b_negative(b in -3.0f64..-0.01, m in 0.05f64..0.95, tc in 60.0f64..200.0) {
            let p = params(0.0, b, 0.0, m, 7.0, 0.0, tc);
            let grid: Vec<f64> = (0..50).map(|t| lppl_log_price(&p, t as f64).unwrap()).collect();
            for w in grid.windows(3) {
                let (d1, d2) = (w[1] - w[0], w[2] - w[1]);
                prop_assert!(d1 > 0.0 && d2 > 0.0);
                prop_assert!(d2 > d1);
            }
        }
    }
}
