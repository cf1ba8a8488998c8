use super::LogTimeSignal;
use crate::calibration::LpplFit;
use crate::error::{LpplError, Result};
use crate::series::PriceSeries;

/// `r(t) = x^-m (ln p(t) - A - B x^m)` over the fit window, sampled at `u = ln x`.
///
/// For data that follows the fitted model exactly this is `C cos(omega u + phi)`.
pub fn detrended_residuals(series: &PriceSeries, fit: &LpplFit) -> Result<LogTimeSignal> {
    fit.window.validate(series.len())?;
    let p = &fit.params;
    let mut u = Vec::with_capacity(fit.window.len());
    let mut values = Vec::with_capacity(fit.window.len());
    for i in fit.window.ordinals() {
        let t = i as f64;
        let x = p.tc - t;
        if !(x > 0.0) {
            return Err(LpplError::Domain { t, tc: p.tc });
        }
        let xm = x.powf(p.m);
        u.push(x.ln());
        values.push((series.log_close(i) - p.a - p.b * xm) / xm);
    }
    LogTimeSignal::new(u, values, Some(p.tc))
}
