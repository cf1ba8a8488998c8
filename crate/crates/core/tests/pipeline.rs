use std::fs;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tempfile::TempDir;

use lppl_core::analysis::{AnalysisConfig, DiagnosisStatus, Report};
use lppl_core::io::save_csv;
use lppl_core::synth::{generate, ResidualModel, SynthSpec};
use lppl_core::window::{StepUnit, WindowFamily};
use lppl_core::{analyze_series, run, LpplParams, PriceSeries};

const TRUE_TC: f64 = 430.0;

fn bubble(seed: u64) -> PriceSeries {
    let params = LpplParams::new(7.0, -0.1, 0.01, 0.5, 8.0, 1.0, TRUE_TC);
    let spec = SynthSpec::new(params, 400, ResidualModel::Ar1 { a: 0.9, sigma: 0.01 }, seed);
    generate(&spec).unwrap()
}

/// Geometric Brownian motion: no acceleration, no oscillation.
fn gbm(seed: u64, n: usize) -> PriceSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = Normal::new(0.001, 0.015).unwrap();
    let mut lp = 7.0f64;
    let closes: Vec<f64> = (0..n)
        .map(|_| {
            lp += step.sample(&mut rng);
            lp.exp()
        })
        .collect();
    PriceSeries::from_closes(bubble(0).date(0), &closes).unwrap()
}

/// Shrinking family ending on the last day: starts every 17 days up to
/// 77 days before the end (20 windows on 400 days).
fn shrinking_config(series: &PriceSeries, seed: u64) -> AnalysisConfig {
    let last = series.len() - 1;
    let family = WindowFamily::Shrinking {
        t2: series.date(last),
        t1_first: series.date(0),
        t1_last: series.date(last - 76),
        step: 17,
        step_unit: StepUnit::TradingDays,
    };
    AnalysisConfig::new("fixture.csv", vec![family], seed)
}

fn quick(mut cfg: AnalysisConfig) -> AnalysisConfig {
    cfg.taboo.n_iterations = 300;
    cfg.n_repeats = 1;
    cfg.hq.grid.h_values = vec![-0.5, 0.0, 0.5];
    cfg.hq.grid.q_values = vec![0.3, 0.7];
    cfg
}

fn schema() -> jsonschema::Validator {
    let text = include_str!("../schema/report.schema.v1.json");
    jsonschema::validator_for(&serde_json::from_str(text).unwrap()).unwrap()
}

fn assert_valid(report: &Report) {
    let value: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    let errors: Vec<String> = schema().iter_errors(&value).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

#[test]
fn synthetic_bubble_is_diagnosed() {
    let series = bubble(2024);
    let cfg = shrinking_config(&series, 2024);
    let (report, _) = analyze_series(&series, &cfg).unwrap();
    assert_eq!(report.scan.n_windows, 20);
    assert!(report.scan.p_lppl >= 0.9, "p_lppl {}", report.scan.p_lppl);
    assert_eq!(report.status, DiagnosisStatus::Lppl);
    let q = &report.tc_quantiles;
    assert_eq!(q.len(), 4);
    assert!(q[0].tc <= TRUE_TC && TRUE_TC <= q[3].tc, "5-95% interval [{}, {}]", q[0].tc, q[3].tc);
    assert!(report.lomb.reference_fit.is_some());
    assert!(!report.lomb.residual_peaks.is_empty());
    assert_eq!(report.lomb.hq_cells.len(), 21 * 9);
    assert_eq!(report.regime.len(), 3);
    assert_valid(&report);
}

/// `(p_lppl, status)` of the default analysis on eight growth-without-bubble paths.
fn gbm_ensemble() -> &'static [(f64, DiagnosisStatus)] {
    static CELL: OnceLock<Vec<(f64, DiagnosisStatus)>> = OnceLock::new();
    CELL.get_or_init(|| {
        (0..8u64)
            .map(|seed| {
                let series = gbm(seed, 400);
                let (report, _) = analyze_series(&series, &shrinking_config(&series, seed)).unwrap();
                (report.scan.p_lppl, report.status)
            })
            .collect()
    })
}

#[test]
fn random_walk_growth_mean_p_lppl_below_threshold() {
    let runs = gbm_ensemble();
    let mean = runs.iter().map(|r| r.0).sum::<f64>() / runs.len() as f64;
    assert!(mean < 0.5, "mean p_lppl {mean} ({runs:?})");
}

#[test]
fn random_walk_growth_mostly_flagged_no_lppl() {
    let runs = gbm_ensemble();
    let no_lppl = runs.iter().filter(|r| r.1 == DiagnosisStatus::NoLppl).count();
    assert!(no_lppl * 2 > runs.len(), "only {no_lppl} of {} flagged no-lppl ({runs:?})", runs.len());
}

#[test]
fn rerun_writes_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let series = bubble(5);
    let input = tmp.path().join("bubble.csv");
    save_csv(&series, &input).unwrap();
    let mut cfg = quick(shrinking_config(&series, 77));
    cfg.input = input;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let ra = run(&cfg, Some(&a)).unwrap();
    let rb = run(&cfg, Some(&b)).unwrap();
    assert_eq!(ra, rb);
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for f in [
        "report.json",
        "fits.csv",
        "unit_root.csv",
        "periodogram_residual.csv",
        "periodogram_hq.csv",
        "regime_T10.csv",
    ] {
        assert!(names.iter().any(|n| n == f), "{f} missing from {names:?}");
    }
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?} differs");
    }
    let mut other = cfg.clone();
    other.seed = 78;
    let rc = analyze_series(&series, &other).unwrap().0;
    assert_ne!(rc.fits, ra.fits);
}

#[test]
fn unfittable_dataset_still_reports() {
    let tmp = TempDir::new().unwrap();
    let series = bubble(1);
    let input = tmp.path().join("s.csv");
    save_csv(&series, &input).unwrap();
    let family = WindowFamily::Shrinking {
        t2: series.date(10),
        t1_first: series.date(8),
        t1_last: series.date(9),
        step: 1,
        step_unit: StepUnit::TradingDays,
    };
    let mut cfg = AnalysisConfig::new(&input, vec![family], 3);
    cfg.output_dir = tmp.path().join("out");
    let report = run(&cfg, None).unwrap();
    assert_eq!(report.status, DiagnosisStatus::Unfittable);
    assert_ne!(report.exit_code(), 0);
    assert_eq!(report.scan.n_windows, 2);
    assert_eq!(report.scan.failures.len(), 2);
    assert!(report.tc_quantiles.is_empty());
    assert!(report.lomb.reference_fit.is_none());
    assert!(tmp.path().join("out/report.json").exists());
    assert_valid(&report);
}

#[test]
fn every_numeric_field_is_finite() {
    let series = bubble(9);
    let (report, _) = analyze_series(&series, &quick(shrinking_config(&series, 9))).unwrap();
    fn walk(v: &serde_json::Value, path: &str) {
        match v {
            serde_json::Value::Number(n) => assert!(n.as_f64().is_some_and(f64::is_finite), "{path}"),
            serde_json::Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| walk(x, &format!("{path}/{i}"))),
            serde_json::Value::Object(o) => o.iter().for_each(|(k, x)| walk(x, &format!("{path}/{k}"))),
            _ => {}
        }
    }
    let json = report.to_json().unwrap();
    assert!(!json.contains("NaN") && !json.contains("inf"));
    walk(&serde_json::from_str(&json).unwrap(), "");
    assert_valid(&report);
}
