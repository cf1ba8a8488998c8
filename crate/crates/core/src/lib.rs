//! Diagnostics for financial bubbles based on the log-periodic power law.
//!
//! The crate calibrates the LPPL model over ensembles of windows, turns the
//! surviving fits into probabilistic forecasts of the critical time, and
//! checks the diagnosis with Lomb periodograms of detrended residuals and of
//! `(H, q)`-derivatives, unit-root tests of fit residuals and a close-open
//! regime statistic.

pub mod analysis;
pub mod calibration;
pub mod error;
pub mod io;
pub mod lomb;
pub mod model;
pub mod regime;
pub mod scan;
pub mod seed;
pub mod series;
pub mod stationarity;
pub mod synth;
pub mod window;

pub use analysis::{analyze_series, run, AnalysisConfig, DiagnosisStatus, Report};
pub use calibration::{fit_window, passes_lppl_filter, FitConfig, LpplFit, SearchBounds, SearchSpace, TabooConfig};
pub use error::{LpplError, Result};
pub use model::{lppl_log_price, residuals, sse, LinearParams, LpplParams, NonlinearParams};
pub use scan::{scan, tc_quantiles, ScanConfig, ScanResult, TcQuantile};
pub use series::{Bar, PriceSeries};
pub use window::{gen_expanding_windows, gen_shrinking_windows, WindowSpec};
