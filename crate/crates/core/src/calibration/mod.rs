//! Two-step LPPL calibration of a single window.
//!
//! 1. Taboo search over the nonlinear parameters `(tc, m, omega, phi)` with
//!    `(A, B, C)` solved analytically at every visited point.
//! 2. Levenberg-Marquardt refinement from each taboo candidate.
//!
//! [`fit_window`] repeats both steps with independent seeds and keeps the
//! lowest sum of squares.

mod linear;
mod refine;
mod taboo;

use serde::{Deserialize, Serialize};

pub use linear::solve_linear_params;
pub use refine::RefineConfig;
pub use taboo::{taboo_candidates, Candidate, SearchBounds, SearchSpace, TabooConfig};

use crate::error::{LpplError, Result};
use crate::model::{LpplParams, NonlinearParams};
use crate::seed::derive_seed;
use crate::series::PriceSeries;
use crate::window::WindowSpec;

/// Minimum number of points for a window to be calibrated.
pub const MIN_WINDOW_POINTS: usize = 4;

/// Log-closes of one window, cached for repeated objective evaluation.
#[derive(Debug, Clone)]
pub(crate) struct FitData {
    pub window: WindowSpec,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub y_mean: f64,
    pub y_centered: Vec<f64>,
}

impl FitData {
    pub fn new(series: &PriceSeries, window: &WindowSpec) -> Result<Self> {
        window.validate(series.len())?;
        if window.len() < MIN_WINDOW_POINTS {
            return Err(LpplError::TooFewSamples {
                needed: MIN_WINDOW_POINTS,
                got: window.len(),
            });
        }
        let t: Vec<f64> = window.ordinals().map(|i| i as f64).collect();
        let y: Vec<f64> = window.ordinals().map(|i| series.log_close(i)).collect();
        let y_mean = y.iter().sum::<f64>() / y.len() as f64;
        let y_centered = y.iter().map(|v| v - y_mean).collect();
        Ok(FitData {
            window: *window,
            t,
            y,
            y_mean,
            y_centered,
        })
    }

    pub fn check_tc(&self, tc: f64) -> Result<()> {
        if tc > self.window.t2 as f64 && tc.is_finite() {
            Ok(())
        } else {
            Err(LpplError::Domain {
                t: self.window.t2 as f64,
                tc,
            })
        }
    }
}

/// One calibrated parameter set for one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpplFit {
    pub params: LpplParams,
    pub window: WindowSpec,
    pub sse: f64,
    pub n_points: usize,
    pub rng_seed: u64,
    pub passes_filter: bool,
    pub converged: bool,
    pub iterations: usize,
}

impl LpplFit {
    fn new(params: LpplParams, window: WindowSpec, sse: f64, rng_seed: u64, converged: bool, iterations: usize) -> Self {
        LpplFit {
            params,
            window,
            sse,
            n_points: window.len(),
            rng_seed,
            passes_filter: lppl_condition(&params, &window),
            converged,
            iterations,
        }
    }
}

/// `tc > t2`, `B < 0` and `0 < m < 1`, all strict.
pub fn lppl_condition(params: &LpplParams, window: &WindowSpec) -> bool {
    params.tc > window.t2 as f64 && params.b < 0.0 && params.m > 0.0 && params.m < 1.0
}

pub fn passes_lppl_filter(fit: &LpplFit) -> bool {
    lppl_condition(&fit.params, &fit.window)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub taboo: TabooConfig,
    pub refine: RefineConfig,
    pub n_repeats: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            taboo: TabooConfig::default(),
            refine: RefineConfig::default(),
            n_repeats: 3,
        }
    }
}

/// Local refinement from one nonlinear starting point.
pub fn refine(
    series: &PriceSeries,
    window: &WindowSpec,
    candidate: &NonlinearParams,
    cfg: &RefineConfig,
) -> Result<LpplFit> {
    let data = FitData::new(series, window)?;
    let r = refine::refine_on(&data, candidate, cfg)?;
    Ok(LpplFit::new(r.params, *window, r.sse, 0, r.converged, r.iterations))
}

/// One taboo + refine pass with the given seed.
fn single_pass(data: &FitData, space: &SearchSpace, cfg: &FitConfig, seed: u64) -> Result<LpplFit> {
    let taboo_cfg = TabooConfig { seed, ..cfg.taboo };
    let candidates = taboo::taboo_on(data, space, &taboo_cfg)?;
    let mut best: Option<LpplFit> = None;
    let mut last_err = None;
    for c in &candidates {
        match refine::refine_on(data, &c.params, &cfg.refine) {
            Ok(r) => {
                if best.map_or(true, |b| r.sse < b.sse) {
                    best = Some(LpplFit::new(r.params, data.window, r.sse, seed, r.converged, r.iterations));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| LpplError::Unfittable {
        t1: data.window.t1,
        t2: data.window.t2,
        reason: last_err.map_or_else(|| "no candidate refined".into(), |e| e.to_string()),
    })
}

/// Seed of repeat `r` for a base taboo seed.
pub fn repeat_seed(base: u64, r: usize) -> u64 {
    derive_seed(base, "fit-repeat", r as u64)
}

/// Full two-step calibration repeated `cfg.n_repeats` times; the lowest sum of
/// squares wins, ties going to the smaller seed.
pub fn fit_window(
    series: &PriceSeries,
    window: &WindowSpec,
    bounds: &SearchBounds,
    cfg: &FitConfig,
) -> Result<LpplFit> {
    if cfg.n_repeats == 0 {
        return Err(LpplError::InvalidParameter("n_repeats must be >= 1".into()));
    }
    let data = FitData::new(series, window)?;
    let space = SearchSpace::for_window(window, bounds);
    let mut best: Option<LpplFit> = None;
    let mut last_err = None;
    for r in 0..cfg.n_repeats {
        let seed = repeat_seed(cfg.taboo.seed, r);
        match single_pass(&data, &space, cfg, seed) {
            Ok(fit) => {
                let better = match best {
                    None => true,
                    Some(b) => fit.sse < b.sse || (fit.sse == b.sse && fit.rng_seed < b.rng_seed),
                };
                if better {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| LpplError::Unfittable {
        t1: window.t1,
        t2: window.t2,
        reason: last_err.map_or_else(|| "all repeats failed".into(), |e| e.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::lppl_log_price;
    use chrono::NaiveDate;

    fn fit_with(params: LpplParams, window: WindowSpec) -> LpplFit {
        LpplFit::new(params, window, 0.0, 0, true, 0)
    }

    #[test]
    fn filter_examples() {
        let w = WindowSpec::new(0, 100);
        let ok = LpplParams::new(1.0, -0.5, 0.1, 0.5, 8.0, 0.0, 110.0);
        assert!(passes_lppl_filter(&fit_with(ok, w)));
        assert!(!passes_lppl_filter(&fit_with(LpplParams { b: 0.5, ..ok }, w)));
        assert!(!passes_lppl_filter(&fit_with(LpplParams { m: 1.0, ..ok }, w)));
        assert!(!passes_lppl_filter(&fit_with(LpplParams { m: 0.0, ..ok }, w)));
        assert!(!passes_lppl_filter(&fit_with(LpplParams { tc: 100.0, ..ok }, w)));
        let f = fit_with(ok, w);
        assert_eq!(f.passes_filter, passes_lppl_filter(&f));
    }

    fn exact(p: &LpplParams, n: usize) -> PriceSeries {
        let closes: Vec<f64> = (0..n).map(|t| lppl_log_price(p, t as f64).unwrap().exp()).collect();
        PriceSeries::from_closes(NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(), &closes).unwrap()
    }

    #[test]
    fn refine_from_truth_is_a_fixed_point() {
        let p = LpplParams::new(7.0, -0.1, 0.01, 0.5, 8.0, 1.0, 330.0);
        let s = exact(&p, 300);
        let w = WindowSpec::new(0, 299);
        let fit = refine(&s, &w, &p.nonlinear(), &RefineConfig::default()).unwrap();
        assert!(fit.sse < 1e-18, "{}", fit.sse);
        assert!((fit.params.tc - p.tc).abs() < 1e-6);
    }

    #[test]
    fn refine_recovers_from_perturbed_start() {
        let p = LpplParams::new(7.0, -0.1, 0.01, 0.5, 8.0, 1.0, 330.0);
        let s = exact(&p, 300);
        let w = WindowSpec::new(0, 299);
        let start = NonlinearParams { tc: 333.0, m: 0.53, omega: 8.2, phi: 0.8 };
        let fit = refine(&s, &w, &start, &RefineConfig::default()).unwrap();
        assert!((fit.params.m / p.m - 1.0).abs() < 1e-3, "{:?}", fit.params);
        assert!((fit.params.omega / p.omega - 1.0).abs() < 1e-3, "{:?}", fit.params);
        assert!((fit.params.tc - p.tc).abs() < 0.5, "{:?}", fit.params);
    }

    #[test]
    fn refine_rejects_tc_inside_window() {
        let p = LpplParams::new(7.0, -0.1, 0.01, 0.5, 8.0, 1.0, 330.0);
        let s = exact(&p, 300);
        let start = NonlinearParams { tc: 250.0, ..p.nonlinear() };
        assert!(refine(&s, &WindowSpec::new(0, 299), &start, &RefineConfig::default()).is_err());
    }

    #[test]
    fn single_repeat_equals_one_pass() {
        let p = LpplParams::new(7.0, -0.1, 0.01, 0.5, 8.0, 1.0, 250.0);
        let s = exact(&p, 220);
        let w = WindowSpec::new(20, 219);
        let cfg = FitConfig {
            taboo: TabooConfig { n_iterations: 200, seed: 3, ..Default::default() },
            n_repeats: 1,
            ..Default::default()
        };
        let fit = fit_window(&s, &w, &SearchBounds::default(), &cfg).unwrap();
        let data = FitData::new(&s, &w).unwrap();
        let space = SearchSpace::for_window(&w, &SearchBounds::default());
        let pass = single_pass(&data, &space, &cfg, repeat_seed(3, 0)).unwrap();
        assert_eq!(fit, pass);
    }

    #[test]
    fn best_repeat_is_selected() {
        let p = LpplParams::new(7.0, -0.1, 0.01, 0.5, 8.0, 1.0, 250.0);
        let s = exact(&p, 220);
        let w = WindowSpec::new(20, 219);
        let cfg = FitConfig {
            taboo: TabooConfig { n_iterations: 100, seed: 11, ..Default::default() },
            n_repeats: 3,
            ..Default::default()
        };
        let fit = fit_window(&s, &w, &SearchBounds::default(), &cfg).unwrap();
        let data = FitData::new(&s, &w).unwrap();
        let space = SearchSpace::for_window(&w, &SearchBounds::default());
        let sses: Vec<f64> = (0..3)
            .map(|r| single_pass(&data, &space, &cfg, repeat_seed(11, r)).unwrap().sse)
            .collect();
        assert_eq!(fit.sse, sses.iter().cloned().fold(f64::INFINITY, f64::min));
        assert_eq!(fit, fit_window(&s, &w, &SearchBounds::default(), &cfg).unwrap());
    }
}
