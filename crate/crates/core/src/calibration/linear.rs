//! Analytic elimination of `(A, B, C)` for fixed nonlinear parameters.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::FitData;
use crate::error::{LpplError, Result};
use crate::model::{basis, LinearParams, NonlinearParams};
use crate::series::PriceSeries;
use crate::window::WindowSpec;

/// Smallest eigenvalue allowed for the unit-diagonal scaled Gram matrix.
const MIN_SCALED_EIGENVALUE: f64 = 1e-13;

/// Solves the 3x3 normal equations for `(A, B, C)` with basis
/// `f = x^m`, `g = x^m cos(omega ln x + phi)`.
pub fn solve_linear_params(
    series: &PriceSeries,
    window: &WindowSpec,
    nonlinear: &NonlinearParams,
) -> Result<LinearParams> {
    let data = FitData::new(series, window)?;
    data.check_tc(nonlinear.tc)?;
    Ok(slave(&data, nonlinear)?.0)
}

/// Slaved linear parameters and the resulting sum of squares (from the
/// quadratic form, accurate to roughly `1e-12 * sum (y - mean)^2`).
pub(crate) fn slave(data: &FitData, nl: &NonlinearParams) -> Result<(LinearParams, f64)> {
    let n = data.t.len() as f64;
    // y is centered on its mean, so the A column absorbs the offset.
    let (mut sf, mut sg, mut sff, mut sfg, mut sgg) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut sy, mut sfy, mut sgy, mut syy) = (0.0, 0.0, 0.0, 0.0);
    for (&t, &y) in data.t.iter().zip(&data.y_centered) {
        let (f, g) = basis(nl, t);
        sf += f;
        sg += g;
        sff += f * f;
        sfg += f * g;
        sgg += g * g;
        sy += y;
        sfy += f * y;
        sgy += g * y;
        syy += y * y;
    }
    let gram = Matrix3::new(n, sf, sg, sf, sff, sfg, sg, sfg, sgg);
    let rhs = Vector3::new(sy, sfy, sgy);
    let singular = || LpplError::Singular {
        tc: nl.tc,
        m: nl.m,
        omega: nl.omega,
    };
    if !gram.iter().all(|v| v.is_finite()) {
        return Err(singular());
    }
    let d = Vector3::new(gram[(0, 0)], gram[(1, 1)], gram[(2, 2)]);
    if d.iter().any(|&v| !(v > 0.0)) {
        return Err(singular());
    }
    let s = d.map(|v| 1.0 / v.sqrt());
    let scaled = Matrix3::from_fn(|i, j| gram[(i, j)] * s[i] * s[j]);
    let eig = SymmetricEigen::new(scaled);
    if eig.eigenvalues.min() < MIN_SCALED_EIGENVALUE {
        return Err(singular());
    }
    let z = scaled
        .cholesky()
        .ok_or_else(singular)?
        .solve(&rhs.component_mul(&s));
    let beta = z.component_mul(&s);
    let sse = (syy - beta.dot(&rhs)).max(0.0);
    Ok((
        LinearParams {
            a: beta[0] + data.y_mean,
            b: beta[1],
            c: beta[2],
        },
        sse,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lppl_log_price, sse, LpplParams};
    use chrono::NaiveDate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn start() -> NaiveDate {
        NaiveDate::from_ymd_opt(2010, 1, 4).unwrap()
    }

    #[test]
    fn exact_recovery() {
        let p = LpplParams::new(7.0, -0.12, 0.015, 0.55, 8.5, 1.3, 230.0);
        let closes: Vec<f64> = (0..200).map(|t| lppl_log_price(&p, t as f64).unwrap().exp()).collect();
        let s = PriceSeries::from_closes(start(), &closes).unwrap();
        let lin = solve_linear_params(&s, &WindowSpec::new(0, 199), &p.nonlinear()).unwrap();
        for (got, want) in [(lin.a, p.a), (lin.b, p.b), (lin.c, p.c)] {
            assert!((got - want).abs() <= 1e-8 * want.abs(), "{got} vs {want}");
        }
    }

    #[test]
    fn constant_series() {
        let s = PriceSeries::from_closes(start(), &[4f64.exp(); 60]).unwrap();
        let nl = NonlinearParams { tc: 80.0, m: 0.5, omega: 6.0, phi: 0.3 };
        let lin = solve_linear_params(&s, &WindowSpec::new(0, 59), &nl).unwrap();
        assert!((lin.a - 4.0).abs() < 1e-8);
        assert!(lin.b.abs() < 1e-8 && lin.c.abs() < 1e-8);
    }

    #[test]
    fn degenerate_basis_is_singular() {
        let s = PriceSeries::from_closes(start(), &[2.0; 30]).unwrap();
        // m = 0 makes f identically 1, collinear with the intercept
        let nl = NonlinearParams { tc: 40.0, m: 0.0, omega: 6.0, phi: 0.0 };
        assert!(matches!(
            solve_linear_params(&s, &WindowSpec::new(0, 29), &nl),
            Err(LpplError::Singular { .. })
        ));
        let nl = NonlinearParams { tc: 20.0, m: 0.5, omega: 6.0, phi: 0.0 };
        assert!(solve_linear_params(&s, &WindowSpec::new(0, 29), &nl).is_err());
    }

    #[test]
    fn no_local_perturbation_improves() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let closes: Vec<f64> = (0..120)
            .map(|t| (3.0 + 0.01 * t as f64 + rng.random_range(-0.05..0.05)).exp())
            .collect();
        let s = PriceSeries::from_closes(start(), &closes).unwrap();
        let w = WindowSpec::new(0, 119);
        let nl = NonlinearParams { tc: 150.0, m: 0.4, omega: 9.0, phi: 2.0 };
        let lin = solve_linear_params(&s, &w, &nl).unwrap();
        let best = sse(&s, &LpplParams::with_linear(nl, lin), &w).unwrap();
        for da in [-1e-3, 0.0, 1e-3] {
            for db in [-1e-3, 0.0, 1e-3] {
                for dc in [-1e-3, 0.0, 1e-3] {
                    let q = LinearParams { a: lin.a + da, b: lin.b + db, c: lin.c + dc };
                    assert!(sse(&s, &LpplParams::with_linear(nl, q), &w).unwrap() >= best);
                }
            }
        }
    }
}
