//! Backward Euler for the truncated approximating problems
//!
//! ```text
//!   (u^{k+1} - u^k)/dt - div a(∇u^{k+1}) = T_n(γ|∇u|^q + f),   u^0 = T_n(u₀)
//! ```
//!
//! with `a(ξ) = A ξ (|ξ|² + ε²)^{(p-2)/2}`. Each step is a damped Newton
//! solve; for `p < 2` a failed solve is retried with ε-continuation and then
//! with a lagged-coefficient Picard iteration.

mod driver;
mod linear;
mod step;
mod weak;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::field::{CoefficientMatrix, Grid};
use crate::regime::ExtExponent;

pub use driver::{
    approximation_sequence, comparison_run, solve, solve_on_schedule, steady_state,
    ComparisonResult, ConvergenceDiagnostics, LevelSummary,
};
pub use step::{source_nodes, step, StepOutcome, StepMethod};
pub use weak::{weak_residual, TestFunction, WeakResidual, WeakResidualMode};

/// Where the gradient source is evaluated inside a step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTreatment {
    /// At the previous time level.
    #[default]
    Explicit,
    /// At the current nonlinear iterate, without entering the Jacobian.
    SemiImplicitLagged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Blow-up threshold on `‖u‖_∞`; `None` means `1e8 ‖u₀‖_∞ + 1`.
    pub cap: Option<f64>,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub picard_fallback: bool,
    pub picard_max_iters: usize,
    /// Flux regularization; `None` means `1e-8 · max(1, ‖u₀‖_∞ / L)`.
    pub eps: Option<f64>,
    pub eps_continuation: bool,
    pub source_treatment: SourceTreatment,
    /// Truncation level `n` of the approximating problem.
    pub truncation_level: ExtExponent,
    /// A step is rejected when `‖Δu‖_∞ > max_rel_change · (1 + ‖u_old‖_∞)`.
    pub max_rel_change: f64,
    pub dt_growth: f64,
    /// Steps converging within this many Newton iterations let `dt` grow.
    pub easy_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt_init: 1e-4,
            dt_min: 1e-10,
            dt_max: 1e-2,
            cap: None,
            newton_tol: 1e-10,
            newton_max_iters: 30,
            picard_fallback: true,
            picard_max_iters: 300,
            eps: None,
            eps_continuation: true,
            source_treatment: SourceTreatment::Explicit,
            truncation_level: ExtExponent::Infinite,
            max_rel_change: 0.5,
            dt_growth: 1.2,
            easy_iters: 4,
        }
    }
}

impl SolverConfig {
    /// Constant step `dt` (growth bound and adaptivity disabled).
    pub fn fixed(dt: f64) -> Self {
        SolverConfig {
            dt_init: dt,
            dt_min: dt,
            dt_max: dt,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return domain("solver config needs 0 < dt_min <= dt_init <= dt_max");
        }
        if let Some(c) = self.cap {
            if !(c > 0.0) {
                return domain("solver cap must be positive");
            }
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iters == 0 {
            return domain("newton_tol must be positive and newton_max_iters nonzero");
        }
        if let Some(e) = self.eps {
            if !(e >= 0.0) {
                return domain("eps must be nonnegative");
            }
        }
        if let ExtExponent::Finite(n) = &self.truncation_level {
            if n.value() < 1.0 {
                return domain("truncation level must satisfy n >= 1");
            }
        }
        if !(self.max_rel_change > 0.0 && self.dt_growth >= 1.0) {
            return domain("max_rel_change must be positive and dt_growth >= 1");
        }
        Ok(())
    }

    pub fn is_fixed_step(&self) -> bool {
        self.dt_min == self.dt_max
    }

    pub(crate) fn truncation(&self) -> f64 {
        self.truncation_level.value()
    }
}

/// The diffusion operator `a(x, ξ) = A(x) ξ |ξ|^{p-2}`.
#[derive(Clone, Debug)]
pub struct Operator {
    pub p: f64,
    pub coeff: CoefficientMatrix,
}

impl Operator {
    pub fn new(p: f64, coeff: CoefficientMatrix) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return domain(format!("operator requires p > 1, got {p}"));
        }
        Ok(Operator { p, coeff })
    }

    /// The p-Laplacian with `A = I`.
    pub fn p_laplacian(grid: &Grid, p: f64) -> Result<Self> {
        Self::new(p, CoefficientMatrix::identity(grid))
    }
}

/// Right-hand side `H = γ|∇u|^q + f` with a time-independent forcing.
#[derive(Clone, Debug, PartialEq)]
pub struct RhsSpec {
    pub gamma: f64,
    pub q: f64,
    /// Nodal forcing values; empty means `f = 0`.
    pub forcing: Vec<f64>,
}

impl RhsSpec {
    pub fn zero() -> Self {
        RhsSpec {
            gamma: 0.0,
            q: 1.0,
            forcing: Vec::new(),
        }
    }

    pub fn gradient(gamma: f64, q: f64) -> Self {
        RhsSpec {
            gamma,
            q,
            forcing: Vec::new(),
        }
    }

    pub fn with_forcing(mut self, f: Vec<f64>) -> Self {
        self.forcing = f;
        self
    }

    pub fn has_forcing(&self) -> bool {
        self.forcing.iter().any(|&v| v != 0.0)
    }

    pub(crate) fn validate(&self, grid: &Grid, p: f64) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return domain("gamma must be nonnegative");
        }
        if self.gamma > 0.0 {
            if !(self.q > 0.0) {
                return domain("q must be positive");
            }
            if self.q >= p {
                return domain("the solver does not treat natural or supernatural growth (q >= p)");
            }
        }
        if !self.forcing.is_empty() && self.forcing.len() != grid.len() {
            return domain("forcing length does not match the grid");
        }
        Ok(())
    }
}
