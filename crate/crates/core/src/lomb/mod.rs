//! Normalized Lomb periodogram on log-time signals.
//!
//! Signals are sampled in `u = ln(tc - t)`. The periodogram is the classical
//! mean-subtracted, variance-normalized form with the per-frequency offset
//! `tau` chosen so that the sine and cosine terms are orthogonal.

mod detrend;
mod harmonics;
mod hq;

use std::f64::consts::TAU;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use detrend::detrended_residuals;
pub use harmonics::{classify_harmonics, HarmonicLabel, HarmonicPair};
pub use hq::{hq_derivative, hq_derivative_values, hq_grid_scan, HqCell, HqGrid, HqSettings};

use crate::error::{LpplError, Result};

pub const MIN_LOMB_SAMPLES: usize = 8;

/// Samples `(u, value)` of a signal in log-time `u = ln(tc - t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogTimeSignal {
    pub u: Vec<f64>,
    pub values: Vec<f64>,
    /// Critical time the log-time axis was built from, when there is one.
    pub tc: Option<f64>,
}

impl LogTimeSignal {
    pub fn new(u: Vec<f64>, values: Vec<f64>, tc: Option<f64>) -> Result<Self> {
        if u.len() != values.len() {
            return Err(LpplError::InvalidParameter(format!(
                "abscissa and values differ in length ({} vs {})",
                u.len(),
                values.len()
            )));
        }
        Ok(LogTimeSignal { u, values, tc })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Extent of the log-time axis.
    pub fn span(&self) -> f64 {
        let (lo, hi) = self
            .u
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if lo.is_finite() {
            hi - lo
        } else {
            0.0
        }
    }
}

/// Frequency grid `[omega_min, omega_max]` stepped at `2pi / (oversampling * span)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrequencyGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub oversampling: f64,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        FrequencyGrid {
            omega_min: 0.2,
            omega_max: 40.0,
            oversampling: 4.0,
        }
    }
}

impl FrequencyGrid {
    pub fn natural_resolution(span: f64) -> f64 {
        TAU / span
    }

    pub fn frequencies(&self, span: f64) -> Vec<f64> {
        if !(span > 0.0) || !(self.omega_max >= self.omega_min) {
            return Vec::new();
        }
        let step = Self::natural_resolution(span) / self.oversampling.max(1e-9);
        let n = ((self.omega_max - self.omega_min) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.omega_min + k as f64 * step).collect()
    }

    /// Number of natural-resolution frequencies covered by the grid, used as
    /// the count of independent frequencies in the false-alarm formula.
    pub fn independent_frequencies(&self, span: f64) -> usize {
        if !(span > 0.0) {
            return 1;
        }
        let n = ((self.omega_max - self.omega_min) / Self::natural_resolution(span) + 1e-9).floor();
        (n as usize + 1).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    pub omegas: Vec<f64>,
    pub powers: Vec<f64>,
}

impl Periodogram {
    /// Highest-power frequency; the lowest frequency wins ties.
    pub fn argmax(&self) -> Option<(f64, f64)> {
        self.omegas
            .iter()
            .zip(&self.powers)
            .fold(None, |best: Option<(f64, f64)>, (&w, &p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((w, p)),
            })
    }

    /// Two-column `omega,power` text for plotting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "omega,power")?;
        for (o, p) in self.omegas.iter().zip(&self.powers) {
            writeln!(w, "{o},{p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LombPeak {
    /// Located between grid points by maximizing the periodogram around the
    /// best grid frequency.
    pub omega_lomb: f64,
    pub power: f64,
    pub false_alarm: f64,
}

/// Normalized Lomb periodogram of `(x, y)` at each angular frequency in `omegas`.
pub fn lomb_normalized(x: &[f64], y: &[f64], omegas: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n != y.len() {
        return Err(LpplError::InvalidParameter("length mismatch".into()));
    }
    if n < MIN_LOMB_SAMPLES {
        return Err(LpplError::TooFewSamples {
            needed: MIN_LOMB_SAMPLES,
            got: n,
        });
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let var = dev.iter().map(|d| d * d).sum::<f64>() / (n - 1) as f64;
    // numerically zero: spread below 1e-12 in absolute terms or relative to the level
    let level = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(var.sqrt() > 1e-12 * level.max(1.0)) || !var.is_finite() {
        return Err(LpplError::ZeroVariance);
    }
    let out = omegas
        .iter()
        .map(|&w| {
            let (mut s2, mut c2) = (0.0, 0.0);
            for &xi in x {
                let (s, c) = (2.0 * w * xi).sin_cos();
                s2 += s;
                c2 += c;
            }
            let tau = if w != 0.0 { s2.atan2(c2) / (2.0 * w) } else { 0.0 };
            let (mut yc, mut ys, mut cc, mut ss) = (0.0, 0.0, 0.0, 0.0);
            for (&xi, &d) in x.iter().zip(&dev) {
                let (s, c) = (w * (xi - tau)).sin_cos();
                yc += d * c;
                ys += d * s;
                cc += c * c;
                ss += s * s;
            }
            let mut p = 0.0;
            if cc > 0.0 {
                p += yc * yc / cc;
            }
            if ss > 0.0 {
                p += ys * ys / ss;
            }
            p / (2.0 * var)
        })
        .collect();
    Ok(out)
}

pub fn lomb_periodogram(signal: &LogTimeSignal, omegas: &[f64]) -> Result<Periodogram> {
    let powers = lomb_normalized(&signal.u, &signal.values, omegas)?;
    Ok(Periodogram {
        omegas: omegas.to_vec(),
        powers,
    })
}

/// Golden-section maximization of the periodogram on `[lo, hi]`, which
/// brackets a single grid maximum.
fn refine_peak(signal: &LogTimeSignal, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let power = |w: f64| lomb_normalized(&signal.u, &signal.values, &[w]).map(|p| p[0]);
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let (mut pa, mut pb) = (power(a)?, power(b)?);
    for _ in 0..40 {
        if pa >= pb {
            hi = b;
            b = a;
            pb = pa;
            a = hi - INV_PHI * (hi - lo);
            pa = power(a)?;
        } else {
            lo = a;
            a = b;
            pa = pb;
            b = lo + INV_PHI * (hi - lo);
            pb = power(b)?;
        }
    }
    Ok(if pa >= pb { (a, pa) } else { (b, pb) })
}

/// `1 - (1 - exp(-P))^M`, the white-noise probability that the highest of `M`
/// independent normalized powers reaches `P`.
pub fn false_alarm_probability(peak_power: f64, n_independent: usize) -> f64 {
    let m = n_independent.max(1) as f64;
    let q = (-peak_power.max(0.0)).exp();
    // 1 - (1 - q)^M computed without cancellation for small q
    let v = -((m * (-q).ln_1p()).exp_m1());
    v.clamp(0.0, 1.0)
}

/// Periodogram on `grid` plus its highest peak with white-noise false-alarm probability.
pub fn analyze(signal: &LogTimeSignal, grid: &FrequencyGrid) -> Result<(Periodogram, LombPeak)> {
    let span = signal.span();
    let omegas = grid.frequencies(span);
    if omegas.is_empty() {
        return Err(LpplError::InvalidParameter("empty frequency grid".into()));
    }
    let pg = lomb_periodogram(signal, &omegas)?;
    let (grid_omega, grid_power) = pg.argmax().expect("non-empty grid");
    let step = FrequencyGrid::natural_resolution(span) / grid.oversampling.max(1e-9);
    let lo = (grid_omega - step).max(grid.omega_min);
    let hi = (grid_omega + step).min(grid.omega_max);
    let (omega_lomb, power) = match refine_peak(signal, lo, hi)? {
        (w, p) if p > grid_power => (w, p),
        _ => (grid_omega, grid_power),
    };
    let peak = LombPeak {
        omega_lomb,
        power,
        false_alarm: false_alarm_probability(power, grid.independent_frequencies(span)),
    };
    Ok((pg, peak))
}

/// Monte Carlo false-alarm probability for correlated residuals: the fraction
/// of block-shuffled surrogates whose highest peak reaches `observed_power`.
/// Shuffling whole blocks keeps short-range correlation inside each block.
pub fn block_shuffle_false_alarm(
    signal: &LogTimeSignal,
    grid: &FrequencyGrid,
    observed_power: f64,
    block_len: usize,
    n_surrogates: usize,
    seed: u64,
) -> Result<f64> {
    let omegas = grid.frequencies(signal.span());
    let block_len = block_len.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<&[f64]> = signal.values.chunks(block_len).collect();
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    let mut exceed = 0usize;
    for _ in 0..n_surrogates {
        order.shuffle(&mut rng);
        let shuffled: Vec<f64> = order.iter().flat_map(|&b| blocks[b].iter().copied()).collect();
        let p = lomb_normalized(&signal.u, &shuffled, &omegas)?;
        if p.iter().cloned().fold(0.0, f64::max) >= observed_power {
            exceed += 1;
        }
    }
    Ok((exceed as f64 + 1.0) / (n_surrogates as f64 + 1.0))
}
