//! Fixtures shared by the benchmarks.

use lppl_core::synth::{generate, ResidualModel, SynthSpec};
use lppl_core::{LpplParams, PriceSeries};

/// Synthetic bubble of `n` trading days with its critical time 30 days out.
pub fn bubble(n: usize, seed: u64) -> PriceSeries {
    let params = LpplParams::new(7.0, -0.1, 0.01, 0.5, 8.0, 1.0, n as f64 + 30.0);
    let spec = SynthSpec::new(params, n, ResidualModel::Ar1 { a: 0.9, sigma: 0.01 }, seed);
    generate(&spec).expect("valid synthetic spec")
}

/// `n` uneven sample times in `[0, 1)` and a noisy cosine at `omega`.
pub fn uneven_cosine(n: usize, omega: f64) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..n).map(|k| ((k as f64 + 0.5) / n as f64).powf(1.3)).collect();
    let y = x
        .iter()
        .enumerate()
        .map(|(k, &u)| (omega * u).cos() + 0.1 * ((k * 7919 % 101) as f64 / 101.0 - 0.5))
        .collect();
    (x, y)
}
