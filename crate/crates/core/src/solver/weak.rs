use serde::{Deserialize, Serialize};

use super::step::{resolve_eps, source_nodes};
use super::{Operator, RhsSpec, SolverConfig, SourceTreatment};
use crate::error::{domain, Result};
use crate::field::ops::{element_gradient, flux_factor};
use crate::field::{Grid, GridMode, Trajectory};

/// `φ(t, x) = (1 - t/T) ψ(x)` with `ψ(x) = (1 - |x - c|²/ρ²)³₊`.
///
/// In radial mode `c` is the origin and `|x|` the radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl TestFunction {
    pub fn bump(center: Vec<f64>, radius: f64) -> Self {
        TestFunction { center, radius }
    }

    pub fn radial(radius: f64) -> Self {
        TestFunction {
            center: Vec::new(),
            radius,
        }
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        if !(self.radius > 0.0) {
            return domain("test function radius must be positive");
        }
        let ext = grid.spec().extent;
        match grid.mode() {
            GridMode::Cartesian { dim } => {
                if self.center.len() != dim {
                    return domain("test function centre has the wrong dimension");
                }
                if self.center.iter().any(|&c| c - self.radius < 0.0 || c + self.radius > ext) {
                    return domain("test function support leaves the domain");
                }
            }
            GridMode::Radial { .. } => {
                if self.radius > ext {
                    return domain("test function support leaves the ball");
                }
            }
        }
        Ok(())
    }

    fn offset(&self, x: &[f64]) -> Vec<f64> {
        if self.center.is_empty() {
            x.to_vec()
        } else {
            x.iter().zip(&self.center).map(|(a, c)| a - c).collect()
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let d = self.offset(x);
        let s = 1.0 - d.iter().map(|v| v * v).sum::<f64>() / (self.radius * self.radius);
        if s > 0.0 {
            s * s * s
        } else {
            0.0
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.offset(x);
        let r2 = self.radius * self.radius;
        let s = 1.0 - d.iter().map(|v| v * v).sum::<f64>() / r2;
        if s <= 0.0 {
            return vec![0.0; d.len()];
        }
        d.iter().map(|v| -6.0 * s * s * v / r2).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakResidualMode {
    /// Discrete gradient of the nodal interpolant of `φ`; vanishes up to the
    /// nonlinear tolerance on solver output.
    #[default]
    Scheme,
    /// Exact `∇φ` at element barycentres; decays with `h` and `dt`.
    Continuum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakResidual {
    pub residual: f64,
    /// Sum of the absolute values of all contributions.
    pub scale: f64,
}

impl WeakResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual.abs() / self.scale
        } else {
            self.residual.abs()
        }
    }
}

/// Residual of the time-discrete weak formulation
///
/// ```text
///   Σ_k ⟨u^{k+1} - u^k, φ^{k+1}⟩ + dt_k (⟨a(∇u^{k+1}), ∇φ^{k+1}⟩ - ⟨S^k, φ^{k+1}⟩)
/// ```
///
/// with `S^k` the truncated source the stepper used.
pub fn weak_residual(
    traj: &Trajectory,
    cfg: &SolverConfig,
    op: &Operator,
    rhs: &RhsSpec,
    phi: &TestFunction,
    mode: WeakResidualMode,
) -> Result<WeakResidual> {
    let grid = traj.grid();
    phi.check(grid)?;
    rhs.validate(grid, op.p)?;
    let t_end = grid.t_horizon();
    let eps = resolve_eps(cfg, grid, traj.state(0));
    let level = cfg.truncation();
    let vol = grid.volumes();
    let d = grid.comp_dim();
    let psi_nodes: Vec<f64> = (0..grid.len()).map(|i| phi.value(&grid.coords(i))).collect();
    let psi_grad: Vec<f64> = match mode {
        WeakResidualMode::Scheme => {
            let mut g = vec![0.0; grid.element_count() * d];
            for (e, el) in grid.elements.iter().enumerate() {
                element_gradient(el, &psi_nodes, d, &mut g[e * d..(e + 1) * d]);
            }
            g
        }
        WeakResidualMode::Continuum => grid
            .elements
            .iter()
            .flat_map(|el| phi.gradient(&el.centroid[..d]))
            .collect(),
    };
    let mut residual = 0.0;
    let mut scale = 0.0;
    let mut xi = [0.0; 3];
    let mut ax = [0.0; 3];
    for k in 0..traj.len().saturating_sub(1) {
        let dt = traj.times()[k + 1] - traj.times()[k];
        let theta = 1.0 - traj.times()[k + 1] / t_end;
        let (u0, u1) = (traj.state(k), traj.state(k + 1));
        let src_state = match cfg.source_treatment {
            SourceTreatment::Explicit => u0,
            SourceTreatment::SemiImplicitLagged => u1,
        };
        let src = source_nodes(grid, src_state, rhs, level);
        let mut time_term = 0.0;
        let mut src_term = 0.0;
        for i in 0..grid.len() {
            time_term += vol[i] * (u1[i] - u0[i]) * psi_nodes[i];
            src_term += vol[i] * src[i] * psi_nodes[i];
        }
        let mut flux_term = 0.0;
        for (e, el) in grid.elements.iter().enumerate() {
            element_gradient(el, u1, d, &mut xi);
            let n2: f64 = xi[..d].iter().map(|x| x * x).sum();
            let fac = flux_factor(n2, op.p, eps);
            op.coeff.apply(e, &xi[..d], &mut ax);
            let dot: f64 = (0..d).map(|c| ax[c] * psi_grad[e * d + c]).sum();
            flux_term += el.weight * fac * dot;
        }
        residual += theta * (time_term + dt * (flux_term - src_term));
        scale += theta * (time_term.abs() + dt * (flux_term.abs() + src_term.abs()));
    }
    Ok(WeakResidual { residual, scale })
}
