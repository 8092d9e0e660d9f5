use serde::{Deserialize, Serialize};

use super::linear::LinearWorkspace;
use super::{Operator, RhsSpec, SolverConfig, SourceTreatment};
use crate::error::{Error, Result};
use crate::field::grid::{Grid, NONE};
use crate::field::ops::{element_gradient, element_to_nodes, flux_factor, truncate_value_t};
use crate::field::Field;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMethod {
    Newton,
    EpsContinuation,
    Picard,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub u: Vec<f64>,
    /// Linear solves spent on the accepted result.
    pub iters: usize,
    pub method: StepMethod,
}

/// Nodal source `T_n(γ |∇u|^q + f)`; element values of `|∇u|^q` are
/// averaged to nodes with weights `w_e / #vertices`.
pub fn source_nodes(grid: &Grid, u: &[f64], rhs: &RhsSpec, level: f64) -> Vec<f64> {
    let n = grid.len();
    let mut h = if rhs.gamma > 0.0 {
        let d = grid.comp_dim();
        let mut xi = [0.0; 3];
        let per: Vec<f64> = grid
            .elements
            .iter()
            .map(|el| {
                element_gradient(el, u, d, &mut xi);
                let n2: f64 = xi[..d].iter().map(|x| x * x).sum();
                n2.sqrt().powf(rhs.q)
            })
            .collect();
        let mut s = element_to_nodes(grid, &per);
        s.iter_mut().for_each(|v| *v *= rhs.gamma);
        s
    } else {
        vec![0.0; n]
    };
    if !rhs.forcing.is_empty() {
        for (v, f) in h.iter_mut().zip(&rhs.forcing) {
            *v += f;
        }
    }
    if level.is_finite() {
        h.iter_mut().for_each(|v| *v = truncate_value_t(*v, level));
    }
    h
}

/// Local vertex index of each gradient component's endpoints.
pub(crate) struct LocalMap {
    nv: usize,
    d: usize,
    /// Per element and component: `(plus, minus)` local indices, 255 for the trace.
    ends: Vec<[(u8, u8); 3]>,
}

impl LocalMap {
    pub fn new(grid: &Grid) -> Self {
        let nv = grid.verts_per_element();
        let d = grid.comp_dim();
        let find = |verts: &[u32; 4], g: u32| -> u8 {
            if g == NONE {
                return 255;
            }
            verts[..nv].iter().position(|&v| v == g).expect("component endpoint is a vertex") as u8
        };
        let ends = grid
            .elements
            .iter()
            .map(|el| {
                let mut out = [(255u8, 255u8); 3];
                for k in 0..d {
                    out[k] = (find(&el.verts, el.comps[k].plus), find(&el.verts, el.comps[k].minus));
                }
                out
            })
            .collect();
        LocalMap { nv, d, ends }
    }
}

/// Everything a step needs that does not change between steps.
pub(crate) struct StepContext<'a> {
    pub grid: &'a Grid,
    pub op: &'a Operator,
    pub rhs: &'a RhsSpec,
    pub cfg: &'a SolverConfig,
    pub eps: f64,
    pub ws: &'a LinearWorkspace,
    pub map: &'a LocalMap,
}

#[derive(Clone, Copy, PartialEq)]
enum Jac {
    None,
    Newton,
    /// Lagged coefficient: linear operator frozen at the given state.
    Picard,
}

impl StepContext<'_> {
    /// Residual `V(u-u_old)/dt + K(u) - V S` and optionally the matrix.
    ///
    /// In Picard mode the flux factor is frozen at `frozen` and the matrix is
    /// the linear operator itself, so `residual = M u - rhs`.
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        &self,
        u: &[f64],
        u_old: &[f64],
        dt: f64,
        source: &[f64],
        eps: f64,
        jac: Jac,
        frozen: Option<&[f64]>,
        vals: &mut [f64],
    ) -> Vec<f64> {
        let grid = self.grid;
        let vol = grid.volumes();
        let p = self.op.p;
        let d = self.map.d;
        let nv = self.map.nv;
        let mut r: Vec<f64> = (0..grid.len())
            .map(|i| vol[i] * ((u[i] - u_old[i]) / dt - source[i]))
            .collect();
        if jac != Jac::None {
            vals.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..grid.len() {
                vals[self.ws.diag_slot(i)] += vol[i] / dt;
            }
        }
        let mut xi = [0.0; 3];
        let mut xf = [0.0; 3];
        let mut axi = [0.0; 3];
        for (e, el) in grid.elements.iter().enumerate() {
            element_gradient(el, u, d, &mut xi);
            let a = self.op.coeff.local(e);
            for k in 0..d {
                axi[k] = (0..d).map(|l| a[k * d + l] * xi[l]).sum();
            }
            let (fac, dfac) = match frozen {
                Some(f) => {
                    element_gradient(el, f, d, &mut xf);
                    let n2: f64 = xf[..d].iter().map(|x| x * x).sum();
                    (flux_factor(n2, p, eps), 0.0)
                }
                None => {
                    let n2: f64 = xi[..d].iter().map(|x| x * x).sum();
                    let s = n2 + eps * eps;
                    let fac = flux_factor(n2, p, eps);
                    (fac, if s > 0.0 { (p - 2.0) * fac / s } else { 0.0 })
                }
            };
            let w = el.weight;
            for k in 0..d {
                let c = el.comps[k];
                let v = w * fac * axi[k] * c.inv_len;
                if c.plus != NONE {
                    r[c.plus as usize] += v;
                }
                if c.minus != NONE {
                    r[c.minus as usize] -= v;
                }
            }
            if jac == Jac::None {
                continue;
            }
            let slots = self.ws.element_slots(e);
            let ends = &self.map.ends[e];
            for k in 0..d {
                for l in 0..d {
                    let mut da = fac * a[k * d + l];
                    if jac == Jac::Newton {
                        da += dfac * axi[k] * xi[l];
                    }
                    let m = w * da * el.comps[k].inv_len * el.comps[l].inv_len;
                    if m == 0.0 {
                        continue;
                    }
                    let (pk, mk) = ends[k];
                    let (pl, ml) = ends[l];
                    for (row, sr) in [(pk, 1.0), (mk, -1.0)] {
                        if row == 255 {
                            continue;
                        }
                        for (col, sc) in [(pl, 1.0), (ml, -1.0)] {
                            if col == 255 {
                                continue;
                            }
                            vals[slots[row as usize * nv + col as usize]] += sr * sc * m;
                        }
                    }
                }
            }
        }
        r
    }

    fn source(&self, u: &[f64]) -> Vec<f64> {
        source_nodes(self.grid, u, self.rhs, self.cfg.truncation())
    }

    fn scaled_merit(&self, r: &[f64], vals: &[f64]) -> f64 {
        r.iter()
            .enumerate()
            .map(|(i, v)| (v / vals[self.ws.diag_slot(i)]).abs())
            .fold(0.0, f64::max)
    }

    fn newton(&self, guess: &[f64], u_old: &[f64], dt: f64, explicit: &[f64], eps: f64) -> Result<(Vec<f64>, usize)> {
        let lagged = self.cfg.source_treatment == SourceTreatment::SemiImplicitLagged;
        let mut vals = vec![0.0; self.ws.value_len()];
        let mut u = guess.to_vec();
        let mut src = if lagged { self.source(&u) } else { explicit.to_vec() };
        let mut r = self.assemble(&u, u_old, dt, &src, eps, Jac::Newton, None, &mut vals);
        for it in 0..self.cfg.newton_max_iters {
            let scale = 1.0 + max_abs(&u);
            let merit = self.scaled_merit(&r, &vals);
            if !merit.is_finite() {
                return Err(Error::Numerical("non-finite Newton residual".into()));
            }
            if merit <= self.cfg.newton_tol * scale {
                return Ok((u, it));
            }
            let delta = self.ws.solve(&vals, &r)?;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, b)| a - lambda * b).collect();
                let tsrc = if lagged { self.source(&trial) } else { src.clone() };
                let tr = self.assemble(&trial, u_old, dt, &tsrc, eps, Jac::None, None, &mut []);
                let tm = self.scaled_merit(&tr, &vals);
                if tm.is_finite() && tm < merit {
                    u = trial;
                    src = tsrc;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                // stagnation at round-off counts as convergence
                let step = max_abs(&delta);
                if step <= 1e-14 * scale || merit <= 100.0 * self.cfg.newton_tol * scale {
                    return Ok((u, it + 1));
                }
                return Err(Error::Numerical("Newton line search failed".into()));
            }
            r = self.assemble(&u, u_old, dt, &src, eps, Jac::Newton, None, &mut vals);
        }
        let merit = self.scaled_merit(&r, &vals);
        if merit <= self.cfg.newton_tol * (1.0 + max_abs(&u)) {
            return Ok((u, self.cfg.newton_max_iters));
        }
        Err(Error::Numerical(format!(
            "Newton did not converge in {} iterations (residual {merit:e})",
            self.cfg.newton_max_iters
        )))
    }

    fn picard(&self, u_old: &[f64], dt: f64, explicit: &[f64], eps: f64) -> Result<(Vec<f64>, usize)> {
        let lagged = self.cfg.source_treatment == SourceTreatment::SemiImplicitLagged;
        let mut vals = vec![0.0; self.ws.value_len()];
        let mut u = u_old.to_vec();
        let zero = vec![0.0; u.len()];
        let tol = (10.0 * self.cfg.newton_tol).max(1e-12);
        for it in 0..self.cfg.picard_max_iters {
            let src = if lagged { self.source(&u) } else { explicit.to_vec() };
            // residual at zero is -rhs of the frozen linear system
            let r0 = self.assemble(&zero, u_old, dt, &src, eps, Jac::Picard, Some(&u), &mut vals);
            let neg: Vec<f64> = r0.iter().map(|v| -v).collect();
            let next = self.ws.solve(&vals, &neg)?;
            let change = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            u = next;
            if change <= tol * (1.0 + max_abs(&u)) {
                return Ok((u, it + 1));
            }
        }
        Err(Error::Numerical("Picard iteration did not converge".into()))
    }

    pub fn step(&self, u_old: &[f64], dt: f64) -> Result<StepOutcome> {
        let explicit = self.source(u_old);
        match self.newton(u_old, u_old, dt, &explicit, self.eps) {
            Ok((u, iters)) => {
                return Ok(StepOutcome {
                    u,
                    iters,
                    method: StepMethod::Newton,
                })
            }
            Err(e) => {
                if !(self.op.p < 2.0 && self.cfg.eps_continuation || self.cfg.picard_fallback) {
                    return Err(e);
                }
            }
        }
        if self.op.p < 2.0 && self.cfg.eps_continuation {
            if let Ok((u, iters)) = self.continuation(u_old, dt, &explicit) {
                return Ok(StepOutcome {
                    u,
                    iters,
                    method: StepMethod::EpsContinuation,
                });
            }
        }
        if self.cfg.picard_fallback {
            let (u, iters) = self.picard(u_old, dt, &explicit, self.eps)?;
            return Ok(StepOutcome {
                u,
                iters,
                method: StepMethod::Picard,
            });
        }
        Err(Error::Numerical("nonlinear solve failed".into()))
    }

    fn continuation(&self, u_old: &[f64], dt: f64, explicit: &[f64]) -> Result<(Vec<f64>, usize)> {
        let d = self.grid.comp_dim();
        let mut xi = [0.0; 3];
        let gmax = self
            .grid
            .elements
            .iter()
            .map(|el| {
                element_gradient(el, u_old, d, &mut xi);
                xi[..d].iter().map(|x| x * x).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max);
        let mut eps = (1e-2 * gmax.max(1.0)).max(self.eps);
        let mut u = u_old.to_vec();
        let mut total = 0;
        loop {
            let (next, it) = self.newton(&u, u_old, dt, explicit, eps)?;
            u = next;
            total += it;
            if eps <= self.eps {
                return Ok((u, total));
            }
            eps = (eps * 0.5).max(self.eps);
            if eps < 2.0 * self.eps {
                eps = self.eps;
            }
        }
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Default regularization `1e-8 · max(1, ‖u₀‖_∞ / L)`.
pub(crate) fn resolve_eps(cfg: &SolverConfig, grid: &Grid, u0: &[f64]) -> f64 {
    cfg.eps
        .unwrap_or_else(|| 1e-8 * (max_abs(u0) / grid.spec().extent).max(1.0))
}

/// One backward Euler step of size `dt` from `u` at time `t`.
pub fn step(u: &Field, _t: f64, dt: f64, cfg: &SolverConfig, op: &Operator, rhs: &RhsSpec) -> Result<Field> {
    cfg.validate()?;
    let grid = u.grid();
    rhs.validate(grid, op.p)?;
    if !(dt > 0.0) {
        return Err(Error::Domain("step size must be positive".into()));
    }
    let ws = LinearWorkspace::new(grid)?;
    let map = LocalMap::new(grid);
    let ctx = StepContext {
        grid,
        op,
        rhs,
        cfg,
        eps: resolve_eps(cfg, grid, u.values()),
        ws: &ws,
        map: &map,
    };
    let out = ctx.step(u.values(), dt)?;
    Field::new(grid.clone(), out.u)
}
