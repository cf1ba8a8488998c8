//! End-to-end analysis of one price file: window scan, `tc` quantiles, Lomb
//! analysis of residuals and `(H, q)`-derivatives, unit-root summary and the
//! close-open regime statistic, collected into a versioned [`Report`].

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calibration::{FitConfig, LpplFit, RefineConfig, SearchBounds, TabooConfig};
use crate::error::{LpplError, Result};
use crate::io::load_csv;
use crate::lomb::{
    analyze, classify_harmonics, detrended_residuals, hq_derivative, hq_grid_scan, FrequencyGrid, HarmonicLabel,
    HarmonicPair, HqCell, HqGrid, HqSettings, LombPeak, Periodogram,
};
use crate::regime::{close_open_fraction, write_regime_csv, RegimeConfig, RegimePoint};
use crate::scan::{quantile_linear, scan, ScanConfig, ScanResult, TcQuantile, WindowFailure, DEFAULT_QUANTILE_LEVELS};
use crate::series::PriceSeries;
use crate::stationarity::{stationarity_row, StationarityTable, DEFAULT_ALPHAS};
use crate::window::{WindowFamily, WindowSpec};

pub const SCHEMA_VERSION: &str = "1";
pub const DEFAULT_DIAGNOSIS_THRESHOLD: f64 = 0.5;
pub const HQ_INTERPOLATION: &str = "linear-in-x";

/// Critical time used for the `(H, q)` analysis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum TcSource {
    /// `tc` of the reference fit: the survivor whose `tc` is closest to the
    /// survivors' median.
    #[default]
    MedianSurvivor,
    /// A trading-day ordinal, possibly beyond the end of the series.
    Fixed { tc: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LombConfig {
    pub grid: FrequencyGrid,
    pub tc_source: TcSource,
    /// Relative tolerance for placing `(omega_fit, omega_lomb)` on y = x or y = 2x.
    pub harmonic_tolerance: f64,
}

impl Default for LombConfig {
    fn default() -> Self {
        LombConfig {
            grid: FrequencyGrid::default(),
            tc_source: TcSource::default(),
            harmonic_tolerance: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HqConfig {
    pub enabled: bool,
    pub grid: HqGrid,
}

impl Default for HqConfig {
    fn default() -> Self {
        HqConfig {
            enabled: true,
            grid: HqGrid::default(),
        }
    }
}

fn default_index() -> String {
    "series".into()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("lppl-out")
}

fn default_n_repeats() -> usize {
    FitConfig::default().n_repeats
}

fn default_quantile_levels() -> Vec<f64> {
    DEFAULT_QUANTILE_LEVELS.to_vec()
}

fn default_alphas() -> Vec<f64> {
    DEFAULT_ALPHAS.to_vec()
}

fn default_threshold() -> f64 {
    DEFAULT_DIAGNOSIS_THRESHOLD
}

/// Everything a run depends on besides the input file. `seed` is mandatory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub input: PathBuf,
    #[serde(default = "default_index")]
    pub index: String,
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Window families; their union is scanned.
    pub windows: Vec<WindowFamily>,
    #[serde(default)]
    pub search: SearchBounds,
    #[serde(default)]
    pub taboo: TabooConfig,
    #[serde(default)]
    pub refine: RefineConfig,
    #[serde(default = "default_n_repeats")]
    pub n_repeats: usize,
    #[serde(default = "default_quantile_levels")]
    pub quantile_levels: Vec<f64>,
    #[serde(default)]
    pub lomb: LombConfig,
    #[serde(default)]
    pub hq: HqConfig,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub regime: RegimeConfig,
    /// Minimum `p_lppl` for an LPPL diagnosis.
    #[serde(default = "default_threshold")]
    pub diagnosis_threshold: f64,
}

impl AnalysisConfig {
    pub fn new(input: impl Into<PathBuf>, windows: Vec<WindowFamily>, seed: u64) -> Self {
        AnalysisConfig {
            input: input.into(),
            index: default_index(),
            seed,
            output_dir: default_output_dir(),
            windows,
            search: SearchBounds::default(),
            taboo: TabooConfig::default(),
            refine: RefineConfig::default(),
            n_repeats: default_n_repeats(),
            quantile_levels: default_quantile_levels(),
            lomb: LombConfig::default(),
            hq: HqConfig::default(),
            alphas: default_alphas(),
            regime: RegimeConfig::default(),
            diagnosis_threshold: default_threshold(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LpplError::InvalidParameter(format!("config: {e}")))
    }

    pub fn scan_config(&self) -> ScanConfig {
        ScanConfig {
            bounds: self.search,
            fit: FitConfig {
                taboo: self.taboo,
                refine: self.refine,
                n_repeats: self.n_repeats,
            },
            quantile_levels: self.quantile_levels.clone(),
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.windows.is_empty() {
            return Err(LpplError::InvalidParameter("at least one window family is required".into()));
        }
        if !(0.0..=1.0).contains(&self.diagnosis_threshold) {
            return Err(LpplError::InvalidParameter("diagnosis_threshold must lie in [0, 1]".into()));
        }
        if self.quantile_levels.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(LpplError::InvalidParameter("quantile levels must lie in [0, 1]".into()));
        }
        self.regime.validate()
    }

    /// Union of all window families, sorted and deduplicated.
    pub fn resolve_windows(&self, series: &PriceSeries) -> Result<Vec<WindowSpec>> {
        let mut set = BTreeSet::new();
        for fam in &self.windows {
            for w in fam.resolve(series)? {
                w.validate(series.len())?;
                set.insert((w.t1, w.t2));
            }
        }
        Ok(set.into_iter().map(|(t1, t2)| WindowSpec::new(t1, t2)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosisStatus {
    /// `p_lppl` at or above the threshold.
    Lppl,
    NoLppl,
    /// No window could be fitted.
    Unfittable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesInfo {
    pub index: String,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub n_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub t1: usize,
    pub t2: usize,
    pub t1_date: NaiveDate,
    pub t2_date: NaiveDate,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub m: f64,
    pub omega: f64,
    pub phi: f64,
    pub tc: f64,
    pub tc_date: NaiveDate,
    pub sse: f64,
    pub n_points: usize,
    pub converged: bool,
    pub passes_filter: bool,
    pub iterations: usize,
    pub rng_seed: u64,
}

impl FitRecord {
    pub fn new(series: &PriceSeries, f: &LpplFit) -> Result<Self> {
        let p = &f.params;
        Ok(FitRecord {
            t1: f.window.t1,
            t2: f.window.t2,
            t1_date: series.date(f.window.t1),
            t2_date: series.date(f.window.t2),
            a: p.a,
            b: p.b,
            c: p.c,
            m: p.m,
            omega: p.omega,
            phi: p.phi,
            tc: p.tc,
            tc_date: series
                .date_at(p.tc)
                .ok_or_else(|| LpplError::InvalidParameter(format!("tc {} has no date", p.tc)))?,
            sse: f.sse,
            n_points: f.n_points,
            converged: f.converged,
            passes_filter: f.passes_filter,
            iterations: f.iterations,
            rng_seed: f.rng_seed,
        })
    }

    const CSV_HEADER: &'static str =
        "t1,t2,t1_date,t2_date,a,b,c,m,omega,phi,tc,tc_date,sse,n_points,converged,passes_filter,iterations,rng_seed";

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.t1,
            self.t2,
            self.t1_date,
            self.t2_date,
            self.a,
            self.b,
            self.c,
            self.m,
            self.omega,
            self.phi,
            self.tc,
            self.tc_date,
            self.sse,
            self.n_points,
            self.converged,
            self.passes_filter,
            self.iterations,
            self.rng_seed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub n_windows: usize,
    pub n_fitted: usize,
    pub n_converged: usize,
    pub n_survivors: usize,
    pub p_lppl: f64,
    pub failures: Vec<WindowFailure>,
}

/// Lomb peak of one survivor's detrended residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualPeak {
    /// Index into [`Report::fits`].
    pub fit: usize,
    pub omega_fit: f64,
    pub log_span: f64,
    pub peak: LombPeak,
    pub label: HarmonicLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LombSection {
    /// Index into [`Report::fits`] of the reference fit.
    pub reference_fit: Option<usize>,
    pub residual_peaks: Vec<ResidualPeak>,
    /// Residual peaks that could not be computed, with reasons.
    pub residual_skipped: Vec<(usize, String)>,
    pub hq_tc: Option<f64>,
    pub hq_window: Option<WindowSpec>,
    /// How `f(qx)` is evaluated between samples.
    pub hq_interpolation: String,
    pub hq_cells: Vec<HqCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSeries {
    pub window_length: usize,
    pub points: Vec<RegimePoint>,
}

/// Complete, deterministic result of a run: the same input, config and seed
/// produce the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub software_version: String,
    pub seed: u64,
    pub config: AnalysisConfig,
    pub series: SeriesInfo,
    pub status: DiagnosisStatus,
    pub diagnosis_threshold: f64,
    pub scan: ScanSummary,
    pub fits: Vec<FitRecord>,
    /// Indices into `fits` of converged fits passing the LPPL condition.
    pub survivors: Vec<usize>,
    /// Empty when nothing survived.
    pub tc_quantiles: Vec<TcQuantile>,
    pub lomb: LombSection,
    pub unit_root: StationarityTable,
    pub regime: Vec<RegimeSeries>,
}

impl Report {
    /// Process exit code: 0 unless the dataset was unfittable.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            DiagnosisStatus::Unfittable => 3,
            _ => 0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Side files accompanying a report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub residual_periodogram: Option<Periodogram>,
    pub hq_periodogram: Option<Periodogram>,
}

fn reference_fit(survivors: &[(usize, &LpplFit)]) -> Option<usize> {
    if survivors.is_empty() {
        return None;
    }
    let mut tcs: Vec<f64> = survivors.iter().map(|(_, f)| f.params.tc).collect();
    tcs.sort_by(f64::total_cmp);
    let median = quantile_linear(&tcs, 0.5);
    survivors
        .iter()
        .min_by(|(ia, a), (ib, b)| {
            (a.params.tc - median)
                .abs()
                .total_cmp(&(b.params.tc - median).abs())
                .then(a.sse.total_cmp(&b.sse))
                .then(ia.cmp(ib))
        })
        .map(|(i, _)| *i)
}

fn lomb_section(
    series: &PriceSeries,
    cfg: &AnalysisConfig,
    result: &ScanResult,
    survivor_idx: &[usize],
) -> Result<(LombSection, Artifacts)> {
    let mut artifacts = Artifacts::default();
    let survivors: Vec<(usize, &LpplFit)> = survivor_idx.iter().map(|&i| (i, &result.fits[i])).collect();
    let reference = reference_fit(&survivors);

    let mut peaks = Vec::new();
    let mut skipped = Vec::new();
    for &(i, f) in &survivors {
        match detrended_residuals(series, f).and_then(|sig| {
            let span = sig.span();
            analyze(&sig, &cfg.lomb.grid).map(|(pg, peak)| (pg, peak, span))
        }) {
            Ok((pg, peak, span)) => {
                if Some(i) == reference {
                    artifacts.residual_periodogram = Some(pg);
                }
                peaks.push((i, f.params.omega, span, peak));
            }
            Err(e) => skipped.push((i, e.to_string())),
        }
    }
    let pairs: Vec<HarmonicPair> = peaks
        .iter()
        .map(|&(_, omega_fit, log_span, peak)| HarmonicPair {
            omega_fit,
            omega_lomb: peak.omega_lomb,
            log_span,
        })
        .collect();
    let labels = classify_harmonics(&pairs, cfg.lomb.harmonic_tolerance)?;
    let residual_peaks = peaks
        .into_iter()
        .zip(labels)
        .map(|((fit, omega_fit, log_span, peak), label)| ResidualPeak {
            fit,
            omega_fit,
            log_span,
            peak,
            label,
        })
        .collect();

    let hq_target = match cfg.lomb.tc_source {
        TcSource::MedianSurvivor => reference.map(|i| (result.fits[i].params.tc, result.fits[i].window)),
        TcSource::Fixed { tc } => reference
            .map(|i| result.fits[i].window)
            .filter(|w| (w.t2 as f64) < tc)
            .or_else(|| {
                result
                    .windows
                    .iter()
                    .filter(|w| (w.t2 as f64) < tc)
                    .max_by_key(|w| (w.len(), std::cmp::Reverse(w.t1)))
                    .copied()
            })
            .map(|w| (tc, w)),
    };
    let mut section = LombSection {
        reference_fit: reference,
        residual_peaks,
        residual_skipped: skipped,
        hq_tc: None,
        hq_window: None,
        hq_interpolation: HQ_INTERPOLATION.into(),
        hq_cells: Vec::new(),
    };
    if let (true, Some((tc, window))) = (cfg.hq.enabled, hq_target) {
        let cells = hq_grid_scan(series, &window, tc, &cfg.hq.grid, &cfg.lomb.grid);
        let best = cells
            .iter()
            .filter_map(|c| c.peak.map(|p| (c.h, c.q, p.power)))
            .fold(None, |acc: Option<(f64, f64, f64)>, x| match acc {
                Some(a) if a.2 >= x.2 => Some(a),
                _ => Some(x),
            });
        if let Some((h, q, _)) = best {
            let sig = hq_derivative(series, &window, &HqSettings { h, q, tc })?;
            artifacts.hq_periodogram = Some(analyze(&sig, &cfg.lomb.grid)?.0);
        }
        section.hq_tc = Some(tc);
        section.hq_window = Some(window);
        section.hq_cells = cells;
    }
    Ok((section, artifacts))
}

/// Runs the analysis on an already loaded series. Nothing is written.
pub fn analyze_series(series: &PriceSeries, cfg: &AnalysisConfig) -> Result<(Report, Artifacts)> {
    cfg.validate()?;
    let windows = cfg.resolve_windows(series)?;
    if windows.is_empty() {
        return Err(LpplError::InvalidParameter("window families resolve to no windows".into()));
    }
    let result = scan(series, &windows, &cfg.scan_config())?;
    let fits = result
        .fits
        .iter()
        .map(|f| FitRecord::new(series, f))
        .collect::<Result<Vec<_>>>()?;
    let survivors: Vec<usize> = result
        .fits
        .iter()
        .enumerate()
        .filter(|(_, f)| f.converged && f.passes_filter)
        .map(|(i, _)| i)
        .collect();
    let (lomb, artifacts) = lomb_section(series, cfg, &result, &survivors)?;
    let unit_root = StationarityTable {
        rows: vec![stationarity_row(&cfg.index, series, &result, &cfg.alphas)?],
    };
    let mut lengths = cfg.regime.window_lengths.clone();
    lengths.sort_unstable();
    lengths.dedup();
    let regime = lengths
        .into_iter()
        .map(|t| RegimeSeries {
            window_length: t,
            points: close_open_fraction(series, t),
        })
        .collect();
    let status = if result.fits.is_empty() {
        DiagnosisStatus::Unfittable
    } else if result.p_lppl >= cfg.diagnosis_threshold {
        DiagnosisStatus::Lppl
    } else {
        DiagnosisStatus::NoLppl
    };
    let report = Report {
        schema_version: SCHEMA_VERSION.into(),
        software_version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        config: cfg.clone(),
        series: SeriesInfo {
            index: cfg.index.clone(),
            first_date: series.first_date().ok_or_else(|| LpplError::InvalidSeries("empty series".into()))?,
            last_date: series.last_date().ok_or_else(|| LpplError::InvalidSeries("empty series".into()))?,
            n_days: series.len(),
        },
        status,
        diagnosis_threshold: cfg.diagnosis_threshold,
        scan: ScanSummary {
            n_windows: result.windows.len(),
            n_fitted: result.fits.len(),
            n_converged: result.n_converged,
            n_survivors: result.survivors.len(),
            p_lppl: result.p_lppl,
            failures: result.failures.clone(),
        },
        fits,
        survivors,
        tc_quantiles: result.tc_quantiles.clone().unwrap_or_default(),
        lomb,
        unit_root,
        regime,
    };
    Ok((report, artifacts))
}

fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| LpplError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| LpplError::io(path, e))
}

pub fn write_fits_csv<W: Write + ?Sized>(fits: &[FitRecord], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{}", FitRecord::CSV_HEADER)?;
    for f in fits {
        writeln!(w, "{}", f.csv_line())?;
    }
    Ok(())
}

/// Writes `report.json`, `fits.csv`, `unit_root.csv`, `periodogram_*.csv` and
/// `regime_T*.csv` into `dir`. Returns the paths written.
pub fn write_outputs(dir: &Path, report: &Report, artifacts: &Artifacts) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| LpplError::io(dir, e))?;
    let json = report.to_json()?;
    let mut written = Vec::new();
    let mut emit = |name: String, f: &mut dyn FnMut(&mut dyn Write) -> std::io::Result<()>| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, |w| f(w))?;
        written.push(path);
        Ok(())
    };
    emit("report.json".into(), &mut |w| w.write_all(json.as_bytes()))?;
    emit("fits.csv".into(), &mut |w| write_fits_csv(&report.fits, w))?;
    emit("unit_root.csv".into(), &mut |w| report.unit_root.write_csv(w))?;
    if let Some(pg) = &artifacts.residual_periodogram {
        emit("periodogram_residual.csv".into(), &mut |w| pg.write_csv(w))?;
    }
    if let Some(pg) = &artifacts.hq_periodogram {
        emit("periodogram_hq.csv".into(), &mut |w| pg.write_csv(w))?;
    }
    for r in &report.regime {
        emit(format!("regime_T{}.csv", r.window_length), &mut |w| write_regime_csv(&r.points, w))?;
    }
    Ok(written)
}

/// Loads the input, analyzes it and writes every output into `output_dir`
/// (the configured one unless overridden). Outputs are written only after all
/// computation has finished. An unfittable dataset still yields a report;
/// check [`Report::exit_code`].
pub fn run(cfg: &AnalysisConfig, output_dir: Option<&Path>) -> Result<Report> {
    let series = load_csv(&cfg.input)?;
    let (report, artifacts) = analyze_series(&series, cfg)?;
    write_outputs(output_dir.unwrap_or(&cfg.output_dir), &report, &artifacts)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::StepUnit;

    #[test]
    fn toml_requires_seed_and_rejects_unknown_keys() {
        let base = r#"
input = "x.csv"
[[windows]]
mode = "shrinking"
t2 = "2007-10-10"
t1_first = "2005-10-03"
t1_last = "2007-05-31"
step = 5
"#;
        assert!(AnalysisConfig::from_toml(base).is_err());
        let cfg = AnalysisConfig::from_toml(&format!("seed = 7\n{base}")).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.n_repeats, 3);
        assert_eq!(cfg.alphas, vec![0.01, 0.001]);
        assert!(matches!(cfg.windows[0], WindowFamily::Shrinking { step: 5, step_unit: StepUnit::TradingDays, .. }));
        assert!(AnalysisConfig::from_toml(&format!("seed = 7\nbogus = 1\n{base}")).is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let d = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
        let cfg = AnalysisConfig::new(
            "in.csv",
            vec![WindowFamily::Expanding {
                t1: d("2008-10-15"),
                t2_first: d("2009-05-01"),
                t2_last: d("2009-07-31"),
                step: 5,
                step_unit: StepUnit::CalendarDays,
            }],
            3,
        );
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(AnalysisConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn reference_fit_is_nearest_median() {
        use crate::model::LpplParams;
        let mk = |tc: f64, sse: f64| LpplFit {
            params: LpplParams::new(1.0, -1.0, 0.1, 0.5, 8.0, 0.0, tc),
            window: WindowSpec::new(0, 10),
            sse,
            n_points: 11,
            rng_seed: 0,
            passes_filter: true,
            converged: true,
            iterations: 1,
        };
        let fits = [mk(20.0, 1.0), mk(30.0, 2.0), mk(31.0, 0.5), mk(50.0, 1.0)];
        let surv: Vec<(usize, &LpplFit)> = fits.iter().enumerate().collect();
        // median 30.5: fits 1 and 2 tie on distance, the lower sse wins
        assert_eq!(reference_fit(&surv), Some(2));
        assert_eq!(reference_fit(&[]), None);
    }
}
