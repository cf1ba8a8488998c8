use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{LpplError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarmonicLabel {
    /// `omega_fit ~ omega_lomb`: on the line y = x.
    Fundamental,
    /// `omega_fit ~ 2 omega_lomb`: the fit locked onto the harmonic, on y = 2x.
    SecondHarmonic,
    /// Lomb peak completing less than one period over the observed log-time span.
    SpuriousLow,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPair {
    pub omega_fit: f64,
    pub omega_lomb: f64,
    /// Extent of the `ln(tc - t)` axis the Lomb peak came from.
    pub log_span: f64,
}

/// Labels each pair; the first matching rule wins in the order fundamental,
/// second harmonic, spurious low frequency.
pub fn classify_harmonics(pairs: &[HarmonicPair], rel_tol: f64) -> Result<Vec<HarmonicLabel>> {
    if !(rel_tol > 0.0 && rel_tol < 0.5) {
        return Err(LpplError::InvalidParameter(format!("rel_tol must lie in (0, 0.5), got {rel_tol}")));
    }
    Ok(pairs
        .iter()
        .map(|p| {
            let ratio = p.omega_fit / p.omega_lomb;
            if p.omega_lomb > 0.0 && (ratio - 1.0).abs() <= rel_tol {
                HarmonicLabel::Fundamental
            } else if p.omega_lomb > 0.0 && (ratio - 2.0).abs() <= rel_tol {
                HarmonicLabel::SecondHarmonic
            } else if p.omega_lomb * p.log_span / TAU < 1.0 {
                HarmonicLabel::SpuriousLow
            } else {
                HarmonicLabel::Other
            }
        })
        .collect())
}
