mod args;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;

use lppl_core::analysis::{self, write_fits_csv, AnalysisConfig, FitRecord};
use lppl_core::calibration::{fit_window, FitConfig, LpplFit, SearchBounds};
use lppl_core::io::{load_csv, save_csv};
use lppl_core::lomb::{
    analyze, classify_harmonics, detrended_residuals, hq_derivative, hq_grid_scan, HarmonicPair, HqSettings,
};
use lppl_core::model::{residuals, LpplParams};
use lppl_core::regime::{close_open_fraction, write_regime_csv};
use lppl_core::scan::{scan, window_seed};
use lppl_core::series::PriceSeries;
use lppl_core::stationarity::{dickey_fuller, fit_ar1, phillips_perron, simulate_critical_values, SIM_SIZES};
use lppl_core::synth::{generate, ResidualModel, SynthSpec};
use lppl_core::window::{StepUnit, WindowFamily, WindowSpec};

use args::{Cli, Command, Common, FitArgs, FitFlags, Mode, Residual, Unit, OUTPUT_DIR_ENV};

struct Ctx {
    base: Option<AnalysisConfig>,
    output_dir: Option<PathBuf>,
}

impl Ctx {
    fn input(&self, common: &Common) -> Result<PathBuf> {
        common
            .input
            .clone()
            .or_else(|| self.base.as_ref().map(|c| c.input.clone()))
            .ok_or_else(|| anyhow!("--input is required (or set `input` in --config)"))
    }

    fn seed(&self, common: &Common) -> Result<u64> {
        common
            .seed
            .or_else(|| self.base.as_ref().map(|c| c.seed))
            .ok_or_else(|| anyhow!("--seed is mandatory (or set `seed` in --config)"))
    }

    fn series(&self, common: &Common) -> Result<PriceSeries> {
        let path = self.input(common)?;
        load_csv(&path).with_context(|| format!("loading {}", path.display()))
    }

    /// Flag, then environment, then config file, then the built-in default.
    fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .or_else(|| self.base.as_ref().map(|c| c.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from("lppl-out"))
    }

    fn prepare_output_dir(&self) -> Result<PathBuf> {
        let dir = self.output_dir();
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    fn fit_settings(&self, flags: &FitFlags) -> (SearchBounds, FitConfig) {
        let (mut bounds, mut cfg) = match &self.base {
            Some(b) => {
                let sc = b.scan_config();
                (sc.bounds, sc.fit)
            }
            None => (SearchBounds::default(), FitConfig::default()),
        };
        if let Some(v) = flags.n_iterations {
            cfg.taboo.n_iterations = v;
        }
        if let Some(v) = flags.n_neighbors {
            cfg.taboo.n_neighbors = v;
        }
        if let Some(v) = flags.n_candidates {
            cfg.taboo.n_candidates = v;
        }
        if let Some(v) = flags.n_repeats {
            cfg.n_repeats = v;
        }
        if let Some(v) = flags.m_min {
            bounds.m.0 = v;
        }
        if let Some(v) = flags.m_max {
            bounds.m.1 = v;
        }
        if let Some(v) = flags.omega_min {
            bounds.omega.0 = v;
        }
        if let Some(v) = flags.omega_max {
            bounds.omega.1 = v;
        }
        if let Some(v) = flags.tc_horizon {
            bounds.tc_horizon_fraction = v;
        }
        (bounds, cfg)
    }
}

fn resolve_window(series: &PriceSeries, t1: chrono::NaiveDate, t2: chrono::NaiveDate) -> Result<WindowSpec> {
    let a = series
        .ordinal_on_or_after(t1)
        .ok_or_else(|| anyhow!("{t1} is after the last date of the series"))?;
    let b = series
        .ordinal_on_or_before(t2)
        .ok_or_else(|| anyhow!("{t2} is before the first date of the series"))?;
    let w = WindowSpec::new(a, b);
    w.validate(series.len())?;
    Ok(w)
}

fn fit_one(ctx: &Ctx, a: &FitArgs) -> Result<(PriceSeries, LpplFit)> {
    let series = ctx.series(&a.common)?;
    let seed = ctx.seed(&a.common)?;
    let window = resolve_window(&series, a.t1, a.t2)?;
    let (bounds, mut cfg) = ctx.fit_settings(&a.fit);
    cfg.taboo.seed = window_seed(seed, &window);
    let fit = fit_window(&series, &window, &bounds, &cfg)?;
    Ok((series, fit))
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn write_text(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

fn cmd_fit(ctx: &Ctx, a: &FitArgs) -> Result<()> {
    let (series, fit) = fit_one(ctx, a)?;
    print_json(&FitRecord::new(&series, &fit)?)
}

fn cmd_scan(ctx: &Ctx, a: &args::ScanArgs) -> Result<()> {
    let series = ctx.series(&a.common)?;
    let seed = ctx.seed(&a.common)?;
    let step_unit = match a.step_unit {
        Unit::Trading => StepUnit::TradingDays,
        Unit::Calendar => StepUnit::CalendarDays,
    };
    let missing = |name: &str| anyhow!("--{name} is required for this mode");
    let families = match a.mode {
        Some(Mode::Shrinking) => vec![WindowFamily::Shrinking {
            t2: a.t2.ok_or_else(|| missing("t2"))?,
            t1_first: a.t1_first.ok_or_else(|| missing("t1-first"))?,
            t1_last: a.t1_last.ok_or_else(|| missing("t1-last"))?,
            step: a.step,
            step_unit,
        }],
        Some(Mode::Expanding) => vec![WindowFamily::Expanding {
            t1: a.t1.ok_or_else(|| missing("t1"))?,
            t2_first: a.t2_first.ok_or_else(|| missing("t2-first"))?,
            t2_last: a.t2_last.ok_or_else(|| missing("t2-last"))?,
            step: a.step,
            step_unit,
        }],
        None => match &ctx.base {
            Some(b) if !b.windows.is_empty() => b.windows.clone(),
            _ => bail!("--mode is required (or set `windows` in --config)"),
        },
    };
    let mut cfg = match &ctx.base {
        Some(b) => b.clone(),
        None => AnalysisConfig::new(ctx.input(&a.common)?, families.clone(), seed),
    };
    cfg.windows = families;
    cfg.seed = seed;
    let windows = cfg.resolve_windows(&series)?;
    if windows.is_empty() {
        bail!("the window family resolves to no windows");
    }
    let (bounds, fit) = ctx.fit_settings(&a.fit);
    let mut scan_cfg = cfg.scan_config();
    scan_cfg.bounds = bounds;
    scan_cfg.fit = fit;
    if let Some(q) = &a.quantiles {
        scan_cfg.quantile_levels = q.clone();
    }
    let result = scan(&series, &windows, &scan_cfg)?;
    let records = result
        .fits
        .iter()
        .map(|f| FitRecord::new(&series, f))
        .collect::<lppl_core::Result<Vec<_>>>()?;
    let dir = ctx.prepare_output_dir()?;
    write_text(&dir.join("fits.csv"), |w| write_fits_csv(&records, w))?;
    fs::write(dir.join("scan.json"), serde_json::to_string_pretty(&result)? + "\n")?;
    println!(
        "windows {}  fitted {}  converged {}  survivors {}  p_lppl {:.3}",
        result.windows.len(),
        result.fits.len(),
        result.n_converged,
        result.survivors.len(),
        result.p_lppl
    );
    match &result.tc_quantiles {
        Some(q) => {
            for x in q {
                println!("tc q{:.2}: {} (ordinal {:.1})", x.level, x.date, x.tc);
            }
        }
        None => println!("no surviving fits: no tc forecast"),
    }
    Ok(())
}

fn cmd_lomb(ctx: &Ctx, a: &FitArgs) -> Result<()> {
    let (series, fit) = fit_one(ctx, a)?;
    let lomb_cfg = ctx.base.as_ref().map(|b| b.lomb.clone()).unwrap_or_default();
    let sig = detrended_residuals(&series, &fit)?;
    let (pg, peak) = analyze(&sig, &lomb_cfg.grid)?;
    let label = classify_harmonics(
        &[HarmonicPair {
            omega_fit: fit.params.omega,
            omega_lomb: peak.omega_lomb,
            log_span: sig.span(),
        }],
        lomb_cfg.harmonic_tolerance,
    )?[0];
    let dir = ctx.prepare_output_dir()?;
    write_text(&dir.join("periodogram_residual.csv"), |w| pg.write_csv(w))?;
    print_json(&serde_json::json!({
        "fit": FitRecord::new(&series, &fit)?,
        "peak": peak,
        "label": label,
    }))
}

fn cmd_hq(ctx: &Ctx, a: &args::HqArgs) -> Result<()> {
    let series = ctx.series(&a.common)?;
    let window = resolve_window(&series, a.t1, a.t2)?;
    let tc = series
        .extended_ordinal(a.tc)
        .ok_or_else(|| anyhow!("cannot place {} on the trading calendar", a.tc))? as f64;
    let base = ctx.base.clone();
    let grid = base.as_ref().map(|b| b.lomb.grid).unwrap_or_default();
    let dir = ctx.prepare_output_dir()?;
    let (h, q) = match (a.h, a.q) {
        (Some(h), Some(q)) => (h, q),
        _ => {
            let hq_grid = base.map(|b| b.hq.grid).unwrap_or_default();
            let cells = hq_grid_scan(&series, &window, tc, &hq_grid, &grid);
            fs::write(dir.join("hq_grid.json"), serde_json::to_string_pretty(&cells)? + "\n")?;
            let best = cells
                .iter()
                .filter_map(|c| c.peak.map(|p| (c.h, c.q, p.power)))
                .fold(None, |acc: Option<(f64, f64, f64)>, x| match acc {
                    Some(b) if b.2 >= x.2 => Some(b),
                    _ => Some(x),
                })
                .ok_or_else(|| anyhow!("no (H, q) cell produced a periodogram"))?;
            (best.0, best.1)
        }
    };
    let sig = hq_derivative(&series, &window, &HqSettings { h, q, tc })?;
    let (pg, peak) = analyze(&sig, &grid)?;
    write_text(&dir.join("periodogram_hq.csv"), |w| pg.write_csv(w))?;
    print_json(&serde_json::json!({ "h": h, "q": q, "tc": tc, "peak": peak }))
}

fn cmd_unitroot(ctx: &Ctx, a: &args::UnitRootArgs) -> Result<()> {
    let (series, fit) = fit_one(ctx, &a.fit_args)?;
    let alphas = a
        .alpha
        .clone()
        .or_else(|| ctx.base.as_ref().map(|b| b.alphas.clone()))
        .unwrap_or_else(|| lppl_core::stationarity::DEFAULT_ALPHAS.to_vec());
    let r: Vec<f64> = residuals(&series, &fit.params, &fit.window)?.into_iter().map(|(_, v)| v).collect();
    print_json(&serde_json::json!({
        "fit": FitRecord::new(&series, &fit)?,
        "ar1": fit_ar1(&r)?,
        "dickey_fuller": dickey_fuller(&r, &alphas)?,
        "phillips_perron": phillips_perron(&r, &alphas)?,
    }))
}

fn cmd_regime(ctx: &Ctx, a: &args::RegimeArgs) -> Result<()> {
    let series = ctx.series(&a.common)?;
    let mut lengths = a
        .t
        .clone()
        .or_else(|| ctx.base.as_ref().map(|b| b.regime.window_lengths.clone()))
        .unwrap_or_else(|| vec![10, 20, 30]);
    lengths.sort_unstable();
    lengths.dedup();
    if lengths.contains(&0) {
        bail!("--T values must be >= 1");
    }
    let dir = ctx.prepare_output_dir()?;
    for t in lengths {
        let points = close_open_fraction(&series, t);
        if points.is_empty() {
            eprintln!("warning: series of {} days is shorter than T = {t}", series.len());
        }
        let path = dir.join(format!("regime_T{t}.csv"));
        write_text(&path, |w| write_regime_csv(&points, w))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_synth(a: &args::SynthArgs) -> Result<()> {
    let tc = a.tc.unwrap_or(a.n_days as f64 + 30.0);
    let residual = match a.residual {
        Residual::None => ResidualModel::None,
        Residual::White => ResidualModel::White { sigma: a.sigma },
        Residual::Ar1 => ResidualModel::Ar1 { a: a.ar, sigma: a.sigma },
    };
    let params = LpplParams::new(a.a, a.b, a.c, a.m, a.omega, a.phi, tc);
    let mut spec = SynthSpec::new(params, a.n_days, residual, a.seed);
    spec.start = a.start;
    let series = generate(&spec)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    save_csv(&series, &a.out)?;
    println!("{}", a.out.display());
    Ok(())
}

fn cmd_report(ctx: &Ctx, a: &args::ReportArgs) -> Result<ExitCode> {
    let mut cfg = ctx
        .base
        .clone()
        .ok_or_else(|| anyhow!("report needs --config with the window families"))?;
    if let Some(input) = &a.common.input {
        cfg.input = input.clone();
    }
    if let Some(seed) = a.common.seed {
        cfg.seed = seed;
    }
    let dir = ctx.output_dir();
    let report = analysis::run(&cfg, Some(&dir))?;
    println!(
        "status {}  p_lppl {:.3}  windows {}  survivors {}  -> {}",
        serde_json::to_value(report.status)?.as_str().unwrap_or("?"),
        report.scan.p_lppl,
        report.scan.n_windows,
        report.scan.n_survivors,
        dir.join("report.json").display()
    );
    for q in &report.tc_quantiles {
        println!("tc q{:.2}: {}", q.level, q.date);
    }
    Ok(ExitCode::from(report.exit_code() as u8))
}

/// Index data is licensed, so nothing is downloaded: the file is checked
/// against the input schema and rewritten in canonical form.
fn cmd_import_data(a: &args::ImportDataArgs) -> Result<()> {
    let series = load_csv(&a.from).with_context(|| format!("validating {}", a.from.display()))?;
    if a.index.is_empty() || !a.index.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        bail!("--index must be a plain name such as SSEC");
    }
    fs::create_dir_all(&a.data_dir)?;
    let out = a.data_dir.join(format!("{}.csv", a.index));
    save_csv(&series, &out)?;
    println!(
        "{}: {} rows, {} to {}",
        out.display(),
        series.len(),
        series.first_date().map(|d| d.to_string()).unwrap_or_default(),
        series.last_date().map(|d| d.to_string()).unwrap_or_default()
    );
    Ok(())
}

fn cmd_critical_values(a: &args::CriticalValuesArgs) -> Result<()> {
    let fit = simulate_critical_values(a.alpha, &SIM_SIZES, a.replications, a.seed)?;
    print_json(&fit)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let base = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(AnalysisConfig::from_toml(&text)?)
        }
        None => None,
    };
    let ctx = Ctx {
        base,
        output_dir: cli.output_dir,
    };
    match &cli.command {
        Command::Fit(a) => cmd_fit(&ctx, a)?,
        Command::Scan(a) => cmd_scan(&ctx, a)?,
        Command::Lomb(a) => cmd_lomb(&ctx, a)?,
        Command::Hq(a) => cmd_hq(&ctx, a)?,
        Command::Unitroot(a) => cmd_unitroot(&ctx, a)?,
        Command::Regime(a) => cmd_regime(&ctx, a)?,
        Command::Synth(a) => cmd_synth(a)?,
        Command::Report(a) => return cmd_report(&ctx, a),
        Command::ImportData(a) => cmd_import_data(a)?,
        Command::CriticalValues(a) => cmd_critical_values(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
