use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const OUTPUT_DIR_ENV: &str = "LPPL_OUTPUT_DIR";

const DEFAULTS_HELP: &str = "\
Defaults (flags override values from --config):
  LPPL filter            tc > t2, B < 0, 0 < m < 1 (all strict)
  search space           m in [0.01, 1.2], omega in [2, 25], phi in [0, 2pi),
                         tc in (t2, t2 + 0.5 * window length]
  taboo search           2000 iterations, 2 Gaussian neighbours per iteration
                         (step 5% of each range), taboo list of 50 cells on a
                         20^4 grid, restart after 250 stale iterations,
                         10 candidates refined by Levenberg-Marquardt
  repeats                3 independent seeds per window, lowest SSE kept
  p_lppl                 survivors / converged fits; diagnosis at p_lppl >= 0.5
  tc quantiles           0.05, 0.2, 0.8, 0.95 (linear interpolation)
  Lomb grid              omega in [0.2, 40], oversampling 4
  (H, q) grid            H = -1.0..1.0 step 0.1, q = 0.1..0.9 step 0.1
  harmonic tolerance     15% relative
  unit-root tests        DF and PP, constant only, no lags;
                         PP bandwidth floor(4 (n/100)^(2/9)); alpha 0.01, 0.001
  regime windows         T = 10, 20, 30 trading days; close == open is not negative
  output directory       --output-dir, else $LPPL_OUTPUT_DIR, else config, else ./lppl-out
  seed                   mandatory for every stochastic command";

#[derive(Debug, Parser)]
#[command(name = "lppl", version, about = "LPPL bubble diagnostics", after_help = DEFAULTS_HELP)]
pub struct Cli {
    /// TOML analysis config; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory [env: LPPL_OUTPUT_DIR] [default: lppl-out].
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate one window.
    Fit(FitArgs),
    /// Calibrate a window family; writes fits.csv and scan.json.
    Scan(ScanArgs),
    /// Lomb periodogram of a fitted window's detrended residuals.
    Lomb(FitArgs),
    /// (H, q)-derivative Lomb analysis of a window for a given tc.
    Hq(HqArgs),
    /// Unit-root tests of a fitted window's residuals.
    Unitroot(UnitRootArgs),
    /// Close-open regime statistic; one CSV per T.
    Regime(RegimeArgs),
    /// Generate a synthetic LPPL price file.
    Synth(SynthArgs),
    /// Full analysis from a config file.
    Report(ReportArgs),
    /// Validate a user-supplied index file and store it under the data directory.
    ImportData(ImportDataArgs),
    /// Regenerate simulated Dickey-Fuller critical values.
    #[command(hide = true)]
    CriticalValues(CriticalValuesArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Input CSV with header date,open,high,low,close.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Global seed (mandatory unless set in --config).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct FitFlags {
    /// Taboo iterations per run [default: 2000].
    #[arg(long)]
    pub n_iterations: Option<usize>,
    /// Gaussian neighbours per taboo iteration [default: 2].
    #[arg(long)]
    pub n_neighbors: Option<usize>,
    /// Taboo candidates refined by Levenberg-Marquardt [default: 10].
    #[arg(long)]
    pub n_candidates: Option<usize>,
    /// Independent repeats per window [default: 3].
    #[arg(long)]
    pub n_repeats: Option<usize>,
    /// Lower bound of m [default: 0.01].
    #[arg(long)]
    pub m_min: Option<f64>,
    /// Upper bound of m [default: 1.2].
    #[arg(long)]
    pub m_max: Option<f64>,
    /// Lower bound of omega [default: 2].
    #[arg(long)]
    pub omega_min: Option<f64>,
    /// Upper bound of omega [default: 25].
    #[arg(long)]
    pub omega_max: Option<f64>,
    /// tc search horizon past t2, as a fraction of the window length [default: 0.5].
    #[arg(long)]
    pub tc_horizon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub fit: FitFlags,
    /// First day of the window (snaps forward to a trading day).
    #[arg(long)]
    pub t1: NaiveDate,
    /// Last day of the window (snaps back to a trading day).
    #[arg(long)]
    pub t2: NaiveDate,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Shrinking,
    Expanding,
}

#[derive(Debug, Clone, Copy, ValueEnum, Default)]
pub enum Unit {
    #[default]
    Trading,
    Calendar,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub fit: FitFlags,
    /// Window family; required unless --config provides windows.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Shrinking: fixed end. Expanding: unused.
    #[arg(long)]
    pub t2: Option<NaiveDate>,
    /// Shrinking: earliest start.
    #[arg(long)]
    pub t1_first: Option<NaiveDate>,
    /// Shrinking: latest start.
    #[arg(long)]
    pub t1_last: Option<NaiveDate>,
    /// Expanding: fixed start.
    #[arg(long)]
    pub t1: Option<NaiveDate>,
    /// Expanding: earliest end.
    #[arg(long)]
    pub t2_first: Option<NaiveDate>,
    /// Expanding: latest end.
    #[arg(long)]
    pub t2_last: Option<NaiveDate>,
    /// Step between consecutive windows [default: 5].
    #[arg(long, default_value_t = 5)]
    pub step: usize,
    /// Unit of --step.
    #[arg(long, value_enum, default_value_t = Unit::Trading)]
    pub step_unit: Unit,
    /// Quantile levels of tc [default: 0.05,0.2,0.8,0.95].
    #[arg(long, value_delimiter = ',')]
    pub quantiles: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct HqArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub t1: NaiveDate,
    #[arg(long)]
    pub t2: NaiveDate,
    /// Critical date; past dates beyond the data extend on weekdays.
    #[arg(long)]
    pub tc: NaiveDate,
    /// Single H value; with --q, skips the grid scan.
    #[arg(long, requires = "q")]
    pub h: Option<f64>,
    #[arg(long, requires = "h")]
    pub q: Option<f64>,
}

#[derive(Debug, Args)]
pub struct UnitRootArgs {
    #[command(flatten)]
    pub fit_args: FitArgs,
    /// Significance levels among 0.1, 0.05, 0.01, 0.001 [default: 0.01,0.001].
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct RegimeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Trailing window lengths in trading days [default: 10,20,30].
    #[arg(long = "T", value_delimiter = ',')]
    pub t: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Residual {
    None,
    White,
    Ar1,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Random seed.
    #[arg(long)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 400)]
    pub n_days: usize,
    #[arg(long, default_value_t = 7.0, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = -0.1, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    pub c: f64,
    #[arg(long, default_value_t = 0.5)]
    pub m: f64,
    #[arg(long, default_value_t = 8.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub phi: f64,
    /// Critical time as a trading-day ordinal; must exceed --n-days [default: n_days + 30].
    #[arg(long)]
    pub tc: Option<f64>,
    #[arg(long, value_enum, default_value_t = Residual::Ar1)]
    pub residual: Residual,
    /// AR(1) coefficient.
    #[arg(long, default_value_t = 0.9, allow_hyphen_values = true)]
    pub ar: f64,
    /// Innovation standard deviation.
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    /// First date (weekdays follow).
    #[arg(long, default_value = "2005-01-03")]
    pub start: NaiveDate,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CriticalValuesArgs {
    #[arg(long, default_value_t = 0.001)]
    pub alpha: f64,
    #[arg(long, default_value_t = lppl_core::stationarity::SIM_REPLICATIONS)]
    pub replications: usize,
    #[arg(long, default_value_t = lppl_core::stationarity::SIM_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ImportDataArgs {
    /// Index name, used as the file stem (e.g. SSEC, SZSC).
    #[arg(long)]
    pub index: String,
    /// CSV obtained from a data vendor, header date,open,high,low,close.
    #[arg(long)]
    pub from: PathBuf,
    #[arg(long, default_value = "data")]
    pub data_dir: PathBuf,
}
