//! Critical values of the constant-only Dickey-Fuller tau distribution.
//!
//! The 10%, 5% and 1% levels use the MacKinnon (2010) response surfaces
//! `cv(T) = b0 + b1/T + b2/T^2 + b3/T^3`. The 0.1% level is not tabulated
//! there; its surface `b0 + b1/T + b2/T^2` was fitted to quantiles of a seeded
//! simulation under the unit-root null (see [`simulate_critical_values`],
//! regenerated with the CLI's hidden `critical-values` command).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LpplError, Result};
use crate::seed::derive_seed;

use super::unit_root::df_regression;

pub const SUPPORTED_ALPHAS: [f64; 4] = [0.1, 0.05, 0.01, 0.001];

const MACKINNON_C: [(f64, [f64; 4]); 3] = [
    (0.01, [-3.43035, -6.5393, -16.786, -79.433]),
    (0.05, [-2.86154, -2.8903, -4.234, -40.040]),
    (0.10, [-2.56677, -1.5384, -2.809, 0.0]),
];

/// Settings the embedded 0.1% surface was generated with.
pub const SIM_SEED: u64 = 20_100_001;
pub const SIM_REPLICATIONS: usize = 1_000_000;
pub const SIM_SIZES: [usize; 6] = [25, 50, 100, 250, 500, 1000];

/// Simulated 0.1% quantiles at [`SIM_SIZES`].
pub const SIM_QUANTILES_0001: [f64; 6] = [
    -4.695258721931959,
    -4.380907633719804,
    -4.223447857217889,
    -4.134936492522861,
    -4.101927217842274,
    -4.103506357559282,
];

/// Fitted `[b0, b1, b2]` of the 0.1% surface.
pub const ALPHA_0001_SURFACE: [f64; 3] = [-4.079739915554397, -14.380176736730547, -25.58754301718571];

fn alpha_matches(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

/// Critical value at level `alpha` for a regression with `n_obs` observations.
pub fn critical_value(alpha: f64, n_obs: usize) -> Result<f64> {
    let t = n_obs.max(1) as f64;
    if alpha_matches(alpha, 0.001) {
        let [b0, b1, b2] = ALPHA_0001_SURFACE;
        return Ok(b0 + b1 / t + b2 / (t * t));
    }
    MACKINNON_C
        .iter()
        .find(|(a, _)| alpha_matches(*a, alpha))
        .map(|(_, [b0, b1, b2, b3])| b0 + b1 / t + b2 / (t * t) + b3 / (t * t * t))
        .ok_or(LpplError::UnsupportedAlpha(alpha))
}

/// Simulated quantiles and the fitted surface for one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueFit {
    pub alpha: f64,
    pub replications: usize,
    pub seed: u64,
    pub sizes: Vec<usize>,
    pub quantiles: Vec<f64>,
    pub coefficients: [f64; 3],
}

fn tau_quantile(n_obs: usize, alpha: f64, reps: usize, seed: u64) -> f64 {
    const CHUNK: usize = 10_000;
    let n_chunks = reps.div_ceil(CHUNK);
    let mut taus: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "df-null", ((n_obs as u64) << 32) | c as u64));
            let count = CHUNK.min(reps - c * CHUNK);
            let mut walk = vec![0.0; n_obs + 1];
            (0..count)
                .map(|_| {
                    for i in 1..=n_obs {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        walk[i] = walk[i - 1] + e;
                    }
                    df_regression(&walk).t_ratio
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let k = ((alpha * reps as f64).ceil() as usize).clamp(1, reps) - 1;
    let (_, q, _) = taus.select_nth_unstable_by(k, f64::total_cmp);
    *q
}

/// Lower-tail `alpha` quantiles of the DF tau statistic under a driftless
/// Gaussian random walk for each regression size, and the least-squares fit
/// of `b0 + b1/T + b2/T^2` through them.
pub fn simulate_critical_values(alpha: f64, sizes: &[usize], replications: usize, seed: u64) -> Result<CriticalValueFit> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(LpplError::UnsupportedAlpha(alpha));
    }
    if sizes.len() < 3 || replications < 1000 || sizes.iter().any(|&t| t < 10) {
        return Err(LpplError::InvalidParameter(
            "need >= 3 sizes of >= 10 observations and >= 1000 replications".into(),
        ));
    }
    let quantiles: Vec<f64> = sizes.iter().map(|&t| tau_quantile(t, alpha, replications, seed)).collect();
    let design = nalgebra::DMatrix::from_fn(sizes.len(), 3, |i, j| (sizes[i] as f64).powi(-(j as i32)));
    let rhs = nalgebra::DVector::from_column_slice(&quantiles);
    let beta = design
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| LpplError::InvalidParameter(e.to_string()))?;
    Ok(CriticalValueFit {
        alpha,
        replications,
        seed,
        sizes: sizes.to_vec(),
        quantiles,
        coefficients: [beta[0], beta[1], beta[2]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_asymptotic_values() {
        let big = 1_000_000_000;
        assert!((critical_value(0.01, big).unwrap() + 3.43035).abs() < 1e-6);
        assert!((critical_value(0.05, big).unwrap() + 2.86154).abs() < 1e-6);
        assert!((critical_value(0.10, big).unwrap() + 2.56677).abs() < 1e-6);
    }

    #[test]
    fn levels_are_ordered() {
        for n in [20, 50, 100, 500, 5000] {
            let cv: Vec<f64> = SUPPORTED_ALPHAS.iter().map(|&a| critical_value(a, n).unwrap()).collect();
            assert!(cv.windows(2).all(|w| w[0] > w[1]), "{n}: {cv:?}");
        }
    }

    #[test]
    fn embedded_surface_tracks_simulation() {
        for (&t, &q) in SIM_SIZES.iter().zip(&SIM_QUANTILES_0001) {
            assert!((critical_value(0.001, t).unwrap() - q).abs() < 0.02, "{t}");
        }
    }

    #[test]
    fn unsupported_level() {
        assert!(matches!(critical_value(0.2, 100), Err(LpplError::UnsupportedAlpha(_))));
    }

    #[test]
    fn small_simulation_is_near_published_surface() {
        let fit = simulate_critical_values(0.05, &[50, 100, 200], 20_000, 3).unwrap();
        for (&t, &q) in fit.sizes.iter().zip(&fit.quantiles) {
            assert!((q - critical_value(0.05, t).unwrap()).abs() < 0.05, "{t}: {q}");
        }
    }
}
