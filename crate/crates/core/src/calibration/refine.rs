//! Levenberg-Marquardt refinement of all seven parameters, with Marquardt
//! diagonal scaling and an analytic Jacobian.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use super::linear::slave;
use super::FitData;
use crate::error::{LpplError, Result};
use crate::model::{LinearParams, LpplParams, NonlinearParams};

type Vec7 = SVector<f64, 7>;
type Mat7 = SMatrix<f64, 7, 7>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the sum of squares by less than this fraction.
    pub rel_sse_tol: f64,
    /// Stop when every Jacobian column is this close to orthogonal to the residuals.
    pub grad_tol: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            max_iterations: 500,
            rel_sse_tol: 1e-10,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Refined {
    pub params: LpplParams,
    pub sse: f64,
    pub converged: bool,
    pub iterations: usize,
}

// Parameter vector layout: [a, b, c, m, omega, phi, tc].
fn unpack(p: &Vec7) -> LpplParams {
    LpplParams {
        a: p[0],
        b: p[1],
        c: p[2],
        m: p[3],
        omega: p[4],
        phi: p[5],
        tc: p[6],
    }
}

fn pack(p: &LpplParams) -> Vec7 {
    Vec7::from([p.a, p.b, p.c, p.m, p.omega, p.phi, p.tc])
}

/// Normal matrix, gradient `J^T r`, column norms and sum of squares.
fn linearize(data: &FitData, p: &LpplParams) -> (Mat7, Vec7, f64) {
    let mut jtj = Mat7::zeros();
    let mut jtr = Vec7::zeros();
    let mut sse = 0.0;
    for (&t, &y) in data.t.iter().zip(&data.y) {
        let x = p.tc - t;
        let lx = x.ln();
        let xm = (p.m * lx).exp();
        let (sin, cos) = (p.omega * lx + p.phi).sin_cos();
        let model = p.a + xm * (p.b + p.c * cos);
        let r = y - model;
        let shape = p.b + p.c * cos;
        let osc = p.c * xm * sin;
        let j = Vec7::from([
            1.0,
            xm,
            xm * cos,
            lx * xm * shape,
            -osc * lx,
            -osc,
            p.m * xm / x * shape - osc * p.omega / x,
        ]);
        for col in 0..7 {
            let jc = j[col];
            jtr[col] += jc * r;
            for row in col..7 {
                jtj[(row, col)] += j[row] * jc;
            }
        }
        sse += r * r;
    }
    jtj.fill_upper_triangle_with_lower_triangle();
    (jtj, jtr, sse)
}

fn sse_at(data: &FitData, p: &LpplParams) -> f64 {
    data.t
        .iter()
        .zip(&data.y)
        .map(|(&t, &y)| {
            let x = p.tc - t;
            let lx = x.ln();
            let xm = (p.m * lx).exp();
            let r = y - p.a - xm * (p.b + p.c * (p.omega * lx + p.phi).cos());
            r * r
        })
        .sum()
}

fn admissible(data: &FitData, p: &LpplParams) -> bool {
    let t2 = data.window.t2 as f64;
    let span = (data.window.t2 - data.window.t1) as f64;
    p.is_finite() && p.tc > t2 && p.tc <= t2 + 50.0 * span.max(1.0) && p.m.abs() <= 5.0
}

/// Largest normalized correlation between a Jacobian column and the residual vector.
fn scaled_gradient(jtj: &Mat7, jtr: &Vec7, sse: f64) -> f64 {
    let rn = sse.sqrt();
    (0..7)
        .map(|k| {
            let cn = jtj[(k, k)].sqrt();
            if cn > 0.0 && rn > 0.0 {
                jtr[k].abs() / (cn * rn)
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

pub(crate) fn refine_on(data: &FitData, start: &NonlinearParams, cfg: &RefineConfig) -> Result<Refined> {
    data.check_tc(start.tc)?;
    let (lin, _) = slave(data, start)?;
    let start_params = LpplParams {
        a: lin.a,
        b: lin.b,
        c: lin.c,
        m: start.m,
        omega: start.omega,
        phi: start.phi,
        tc: start.tc,
    };
    let start_sse = sse_at(data, &start_params);

    let mut p = pack(&start_params);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let (mut jtj, mut jtr, mut sse) = linearize(data, &start_params);
    let floor = 1e-30 * data.t.len() as f64;

    while iterations < cfg.max_iterations {
        iterations += 1;
        if sse <= floor || scaled_gradient(&jtj, &jtr, sse) <= cfg.grad_tol {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj;
            for k in 0..7 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&jtr),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial = unpack(&(p + step));
            if admissible(data, &trial) {
                let trial_sse = sse_at(data, &trial);
                if trial_sse < sse {
                    let rel = (sse - trial_sse) / sse.max(1e-300);
                    p += step;
                    lambda = (lambda / 3.0).max(1e-12);
                    let (a, b, s) = linearize(data, &trial);
                    jtj = a;
                    jtr = b;
                    sse = s;
                    accepted = true;
                    if rel < cfg.rel_sse_tol {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            // no descent direction left at working precision
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    let raw = unpack(&p);
    let nl = NonlinearParams {
        tc: raw.tc,
        m: raw.m,
        omega: raw.omega,
        phi: raw.phi,
    };
    if !(nl.tc > data.window.t2 as f64) {
        return Err(LpplError::Domain {
            t: data.window.t2 as f64,
            tc: nl.tc,
        });
    }
    // Re-slave the linear part at the final nonlinear point; keep whichever is better.
    let mut best = LpplParams::new(raw.a, raw.b, raw.c, raw.m, raw.omega, raw.phi, raw.tc);
    let mut best_sse = sse_at(data, &best);
    if let Ok((LinearParams { a, b, c }, _)) = slave(data, &nl) {
        let reslaved = LpplParams::new(a, b, c, nl.m, nl.omega, nl.phi, nl.tc);
        let s = sse_at(data, &reslaved);
        if s <= best_sse {
            best = reslaved;
            best_sse = s;
        }
    }
    if best_sse > start_sse {
        best = LpplParams::new(
            start_params.a,
            start_params.b,
            start_params.c,
            start_params.m,
            start_params.omega,
            start_params.phi,
            start_params.tc,
        );
        best_sse = start_sse;
    }
    Ok(Refined {
        params: best,
        sse: best_sse,
        converged,
        iterations,
    })
}
