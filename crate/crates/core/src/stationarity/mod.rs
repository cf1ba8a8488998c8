//! Stationarity of LPPL fit residuals: AR(1) estimation, Dickey-Fuller and
//! Phillips-Perron unit-root tests, and range-level summaries.

mod ar1;
mod critical;
mod table;
mod unit_root;

pub use ar1::{fit_ar1, Ar1Fit, MIN_UNIT_ROOT_SAMPLES};
pub use critical::{
    critical_value, simulate_critical_values, CriticalValueFit, ALPHA_0001_SURFACE, SIM_REPLICATIONS, SIM_QUANTILES_0001, SIM_SEED,
    SIM_SIZES,
    SUPPORTED_ALPHAS,
};
pub use table::{stationarity_row, window_decisions, LevelSummary, StationarityRow, StationarityTable, WindowDecision};
pub use unit_root::{
    dickey_fuller, newey_west_bandwidth, phillips_perron, run_test, Decision, RegressionSpec, UnitRootResult, UnitRootTest,
};

/// Levels reported in the summary table by default.
pub const DEFAULT_ALPHAS: [f64; 2] = [0.01, 0.001];
