//! Taboo search over `(tc, m, omega, phi)` with slaved linear parameters.
//!
//! Each iteration draws Gaussian neighbours of the current point, refuses
//! neighbours whose grid cell is on the taboo list (unless they beat the best
//! point seen), and moves to the best admissible neighbour even when it is
//! worse than the current one. The best point of each visited cell competes
//! for a place in the elite list that is returned.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::linear::slave;
use super::FitData;
use crate::error::{LpplError, Result};
use crate::model::NonlinearParams;
use crate::series::PriceSeries;
use crate::window::WindowSpec;

/// Per-window bounds expressed relative to the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchBounds {
    pub m: (f64, f64),
    pub omega: (f64, f64),
    /// Upper bound of `tc` is `t2 + tc_horizon_fraction * (t2 - t1)`.
    pub tc_horizon_fraction: f64,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            m: (0.01, 1.2),
            omega: (2.0, 25.0),
            tc_horizon_fraction: 0.5,
        }
    }
}

/// Closed box searched by the taboo stage. `tc.0` is always `> t2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub tc: (f64, f64),
    pub m: (f64, f64),
    pub omega: (f64, f64),
    pub phi: (f64, f64),
}

impl SearchSpace {
    pub fn for_window(window: &WindowSpec, bounds: &SearchBounds) -> Self {
        let t2 = window.t2 as f64;
        let span = (window.t2 - window.t1) as f64;
        let lo = t2 + 1.0;
        SearchSpace {
            tc: (lo, (t2 + bounds.tc_horizon_fraction * span).max(lo)),
            m: bounds.m,
            omega: bounds.omega,
            phi: (0.0, TAU),
        }
    }

    /// A degenerate box containing only `p`.
    pub fn point(p: &NonlinearParams) -> Self {
        SearchSpace {
            tc: (p.tc, p.tc),
            m: (p.m, p.m),
            omega: (p.omega, p.omega),
            phi: (p.phi, p.phi),
        }
    }

    fn ranges(&self) -> [(f64, f64); 4] {
        [self.tc, self.m, self.omega, self.phi]
    }

    pub fn validate(&self, window: &WindowSpec) -> Result<()> {
        if !(self.tc.0 > window.t2 as f64) {
            return Err(LpplError::InvalidParameter(format!(
                "tc lower bound {} must exceed window end {}",
                self.tc.0, window.t2
            )));
        }
        for (lo, hi) in self.ranges() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(LpplError::InvalidParameter(format!("empty search range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &NonlinearParams) -> bool {
        let v = [p.tc, p.m, p.omega, p.phi];
        self.ranges()
            .iter()
            .zip(v)
            .all(|(&(lo, hi), x)| x >= lo && x <= hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TabooConfig {
    pub n_candidates: usize,
    pub n_iterations: usize,
    /// Neighbours drawn per iteration.
    pub n_neighbors: usize,
    /// Gaussian step standard deviation as a fraction of each range.
    pub step_scale: f64,
    pub taboo_len: usize,
    /// Grid resolution per dimension used to identify visited cells.
    pub cells_per_dim: usize,
    /// Restart from a uniform random point after this many iterations
    /// without improving the best point.
    pub restart_after: usize,
    pub seed: u64,
}

impl Default for TabooConfig {
    fn default() -> Self {
        TabooConfig {
            n_candidates: 10,
            n_iterations: 2000,
            n_neighbors: 2,
            step_scale: 0.05,
            taboo_len: 50,
            cells_per_dim: 20,
            restart_after: 250,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub params: NonlinearParams,
    /// Sum of squares with slaved linear parameters.
    pub sse: f64,
}

type Cell = u32;

struct Sampler<'a> {
    space: &'a SearchSpace,
    cfg: &'a TabooConfig,
    rng: ChaCha8Rng,
}

impl Sampler<'_> {
    fn uniform(&mut self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (o, (lo, hi)) in out.iter_mut().zip(self.space.ranges()) {
            *o = if hi > lo { self.rng.random_range(lo..=hi) } else { lo };
        }
        out
    }

    fn neighbor(&mut self, p: &[f64; 4]) -> [f64; 4] {
        let mut out = *p;
        for (k, (o, (lo, hi))) in out.iter_mut().zip(self.space.ranges()).enumerate() {
            let width = hi - lo;
            if width <= 0.0 {
                *o = lo;
                continue;
            }
            let z: f64 = self.rng.sample(StandardNormal);
            let mut v = *o + z * self.cfg.step_scale * width;
            if k == 3 {
                // phase is periodic
                v = lo + (v - lo).rem_euclid(width);
            } else {
                if v < lo {
                    v = lo + (lo - v);
                }
                if v > hi {
                    v = hi - (v - hi);
                }
                v = v.clamp(lo, hi);
            }
            *o = v;
        }
        out
    }

    fn cell(&self, p: &[f64; 4]) -> Cell {
        let k = self.cfg.cells_per_dim.max(1) as u32;
        p.iter()
            .zip(self.space.ranges())
            .fold(0u32, |acc, (&v, (lo, hi))| {
                let bin = if hi > lo {
                    (((v - lo) / (hi - lo)) * k as f64).floor().clamp(0.0, (k - 1) as f64) as u32
                } else {
                    0
                };
                acc * k + bin
            })
    }
}

fn to_params(p: &[f64; 4]) -> NonlinearParams {
    NonlinearParams {
        tc: p[0],
        m: p[1],
        omega: p[2],
        phi: p[3],
    }
}

struct Elite {
    cap: usize,
    items: Vec<(f64, Cell, [f64; 4])>,
}

impl Elite {
    fn offer(&mut self, sse: f64, cell: Cell, p: [f64; 4]) {
        if let Some(slot) = self.items.iter_mut().find(|e| e.1 == cell) {
            if sse < slot.0 {
                *slot = (sse, cell, p);
            }
        } else if self.items.len() < self.cap {
            self.items.push((sse, cell, p));
        } else if let Some(worst) = self
            .items
            .iter_mut()
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .filter(|w| sse < w.0)
        {
            *worst = (sse, cell, p);
        }
    }

    fn best(&self) -> f64 {
        self.items.iter().map(|e| e.0).fold(f64::INFINITY, f64::min)
    }
}

/// Runs the taboo search and returns `cfg.n_candidates` points ordered by
/// ascending slaved sum of squares. If fewer distinct cells were reached, the
/// best point is repeated to fill the list.
pub fn taboo_candidates(
    series: &PriceSeries,
    window: &WindowSpec,
    space: &SearchSpace,
    cfg: &TabooConfig,
) -> Result<Vec<Candidate>> {
    let data = FitData::new(series, window)?;
    taboo_on(&data, space, cfg)
}

pub(crate) fn taboo_on(data: &FitData, space: &SearchSpace, cfg: &TabooConfig) -> Result<Vec<Candidate>> {
    space.validate(&data.window)?;
    if cfg.n_candidates == 0 {
        return Err(LpplError::InvalidParameter("n_candidates must be >= 1".into()));
    }
    let mut s = Sampler {
        space,
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };
    let eval = |p: &[f64; 4]| slave(data, &to_params(p)).ok().map(|(_, sse)| sse);

    let mut elite = Elite {
        cap: cfg.n_candidates,
        items: Vec::with_capacity(cfg.n_candidates + 1),
    };
    let mut taboo: VecDeque<Cell> = VecDeque::with_capacity(cfg.taboo_len + 1);

    let start = |s: &mut Sampler, elite: &mut Elite| -> Option<[f64; 4]> {
        for _ in 0..100 {
            let p = s.uniform();
            if let Some(v) = eval(&p) {
                elite.offer(v, s.cell(&p), p);
                return Some(p);
            }
        }
        None
    };

    let mut current = start(&mut s, &mut elite);
    let mut since_improvement = 0usize;
    for _ in 0..cfg.n_iterations {
        let Some(cur) = current else {
            current = start(&mut s, &mut elite);
            continue;
        };
        let global_best = elite.best();
        let mut best_move: Option<(f64, Cell, [f64; 4])> = None;
        for _ in 0..cfg.n_neighbors.max(1) {
            let p = s.neighbor(&cur);
            let cell = s.cell(&p);
            let Some(v) = eval(&p) else { continue };
            if taboo.contains(&cell) && v >= global_best {
                continue;
            }
            elite.offer(v, cell, p);
            if best_move.map_or(true, |b| v < b.0) {
                best_move = Some((v, cell, p));
            }
        }
        if elite.best() < global_best {
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        match best_move {
            Some((_, cell, p)) => {
                current = Some(p);
                taboo.push_back(cell);
                if taboo.len() > cfg.taboo_len {
                    taboo.pop_front();
                }
            }
            None => current = start(&mut s, &mut elite),
        }
        if cfg.restart_after > 0 && since_improvement >= cfg.restart_after {
            since_improvement = 0;
            taboo.clear();
            current = start(&mut s, &mut elite);
        }
    }

    let mut items = elite.items;
    if items.is_empty() {
        return Err(LpplError::Unfittable {
            t1: data.window.t1,
            t2: data.window.t2,
            reason: "no admissible point in the search space".into(),
        });
    }
    items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<Candidate> = items
        .iter()
        .map(|&(sse, _, p)| Candidate {
            params: to_params(&p),
            sse,
        })
        .collect();
    while out.len() < cfg.n_candidates {
        out.push(out[0]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lppl_log_price, LpplParams};
    use chrono::NaiveDate;

    fn exact_series(p: &LpplParams, n: usize) -> PriceSeries {
        let closes: Vec<f64> = (0..n).map(|t| lppl_log_price(p, t as f64).unwrap().exp()).collect();
        PriceSeries::from_closes(NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(), &closes).unwrap()
    }

    #[test]
    fn deterministic_given_seed() {
        let p = LpplParams::new(7.0, -0.1, 0.01, 0.5, 8.0, 1.0, 330.0);
        let s = exact_series(&p, 300);
        let w = WindowSpec::new(0, 299);
        let space = SearchSpace::for_window(&w, &SearchBounds::default());
        let cfg = TabooConfig { n_iterations: 300, seed: 9, ..Default::default() };
        let a = taboo_candidates(&s, &w, &space, &cfg).unwrap();
        let b = taboo_candidates(&s, &w, &space, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert!(a.windows(2).all(|p| p[0].sse <= p[1].sse));
        assert!(a.iter().all(|c| space.contains(&c.params)));
        let c = taboo_candidates(&s, &w, &space, &TabooConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn collapsed_space_returns_the_point() {
        let p = LpplParams::new(7.0, -0.1, 0.01, 0.5, 8.0, 1.0, 330.0);
        let s = exact_series(&p, 300);
        let w = WindowSpec::new(0, 299);
        let space = SearchSpace::point(&p.nonlinear());
        let cfg = TabooConfig { n_iterations: 50, ..Default::default() };
        let out = taboo_candidates(&s, &w, &space, &cfg).unwrap();
        assert_eq!(out.len(), 10);
        assert!(out.iter().all(|c| c.params == p.nonlinear()));
    }

    #[test]
    fn rejects_tc_inside_window() {
        let p = LpplParams::new(7.0, -0.1, 0.01, 0.5, 8.0, 1.0, 330.0);
        let s = exact_series(&p, 300);
        let w = WindowSpec::new(0, 299);
        let mut space = SearchSpace::for_window(&w, &SearchBounds::default());
        space.tc.0 = 299.0;
        assert!(taboo_candidates(&s, &w, &space, &TabooConfig::default()).is_err());
    }
}
