//! Grids, discrete fields and the norms used by the estimates.
//!
//! Unknowns live at interior vertices in Cartesian mode (the boundary trace
//! is identically zero) and at shell midpoints in radial mode. Gradients are
//! piecewise constant on quadrature elements and the divergence is defined
//! as the negative adjoint of the gradient, so summation by parts
//! `⟨∇u, F⟩ = -⟨u, div F⟩` holds to rounding.

mod coefficient;
pub(crate) mod grid;
mod io;
pub(crate) mod ledger;
pub(crate) mod norms;
pub(crate) mod ops;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub use coefficient::{CoefficientMatrix, CoefficientModel};
pub use grid::{unit_sphere_measure, Grid, GridMode, GridSpec};
pub use io::{field_to_csv, read_binary, trajectory_to_csv, write_binary};
pub use ledger::{ledger, ledger_time_series, EnergyQuantity, EstimateLedger, MarcinkiewiczEntry};
pub use norms::{
    bochner_norm, gn_check, gn_relation_residual, gradient_lebesgue_norm, lebesgue_norm,
    marcinkiewicz_norm, space_time_gradient_samples, space_time_lebesgue_norm, GnRecord,
    SpaceTimeSamples,
};
pub use ops::{
    discrete_divergence, discrete_gradient, element_to_nodes, inner_elements, inner_nodes,
    p_flux, truncate_g, truncate_t, truncate_value_g, truncate_value_t,
};

/// One time slice of a discrete function with homogeneous Dirichlet trace.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.grid.spec() == other.grid.spec() && self.values == other.values
    }
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return domain(format!(
                "field has {} values but the grid has {} unknowns",
                values.len(),
                grid.len()
            ));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Field {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = grid.sample(f);
        Field { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Piecewise-constant vector field on the quadrature elements.
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Arc<Grid>,
    data: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: Arc<Grid>, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.element_count() * grid.comp_dim() {
            return domain("vector field length does not match the grid");
        }
        Ok(VectorField { grid, data })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.element_count() * grid.comp_dim();
        VectorField {
            grid,
            data: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn element(&self, e: usize) -> &[f64] {
        let d = self.grid.comp_dim();
        &self.data[e * d..(e + 1) * d]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Euclidean magnitude per element.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.data
            .chunks(self.grid.comp_dim())
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupKind {
    /// `‖u‖_∞` exceeded the cap.
    CapExceeded,
    /// The step size fell below `dt_min` while the step kept being rejected.
    DtUnderflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", content = "cause", rename_all = "snake_case")]
pub enum TerminationStatus {
    Completed,
    Blowup(BlowupKind),
    NewtonFailure,
}

impl TerminationStatus {
    pub fn label(&self) -> &'static str {
        match self {
            TerminationStatus::Completed => "completed",
            TerminationStatus::Blowup(_) => "blowup",
            TerminationStatus::NewtonFailure => "newton_failure",
        }
    }

    pub fn is_blowup(&self) -> bool {
        matches!(self, TerminationStatus::Blowup(_))
    }
}

/// Time samples of a solve together with its step schedule.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: Arc<Grid>,
    times: Vec<f64>,
    dts: Vec<f64>,
    states: Vec<Vec<f64>>,
    newton_iters: Vec<usize>,
    status: TerminationStatus,
}

impl PartialEq for Trajectory {
    fn eq(&self, other: &Self) -> bool {
        self.grid.spec() == other.grid.spec()
            && self.times == other.times
            && self.states == other.states
            && self.status == other.status
    }
}

impl Trajectory {
    /// Starts a trajectory at `t = 0` with the given initial state.
    pub fn start(u0: &Field) -> Self {
        Trajectory {
            grid: u0.grid.clone(),
            times: vec![0.0],
            dts: Vec::new(),
            states: vec![u0.values.clone()],
            newton_iters: vec![0],
            status: TerminationStatus::Completed,
        }
    }

    /// Builds a trajectory from raw samples; times must increase strictly.
    pub fn from_samples(
        grid: Arc<Grid>,
        times: Vec<f64>,
        states: Vec<Vec<f64>>,
        status: TerminationStatus,
    ) -> Result<Self> {
        if times.len() != states.len() {
            return domain("times and states differ in length");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return domain("trajectory times must increase strictly");
        }
        if states.iter().any(|s| s.len() != grid.len()) {
            return domain("trajectory state length does not match the grid");
        }
        let n = times.len();
        let dts = times.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Trajectory {
            grid,
            dts,
            times,
            states,
            newton_iters: vec![0; n],
            status,
        })
    }

    pub(crate) fn set_status(&mut self, status: TerminationStatus) {
        self.status = status;
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k]
    }

    pub fn field(&self, k: usize) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.states[k].clone(),
        }
    }

    pub fn final_field(&self) -> Field {
        self.field(self.len() - 1)
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn newton_iters(&self) -> &[usize] {
        &self.newton_iters
    }

    pub fn status(&self) -> TerminationStatus {
        self.status
    }

    /// Accepted step sizes, exactly as used by the stepper.
    pub fn dt_schedule(&self) -> Vec<f64> {
        self.dts.clone()
    }

    /// Appends a sample produced by a step of size `dt`.
    pub(crate) fn push_step(&mut self, dt: f64, t: f64, values: Vec<f64>, iters: usize) {
        self.dts.push(dt);
        self.times.push(t);
        self.states.push(values);
        self.newton_iters.push(iters);
    }

    /// Left-endpoint quadrature weights: sample `k` carries `t_{k+1} - t_k`,
    /// the last sample carries 0.
    pub fn time_weights(&self) -> Vec<f64> {
        let mut w = self.dt_schedule();
        if !self.is_empty() {
            w.push(0.0);
        }
        w
    }

    /// Keeps the samples up to and including `t`.
    pub fn prefix_until(&self, t: f64) -> Trajectory {
        let n = self.times.iter().take_while(|&&s| s <= t).count().max(1);
        Trajectory {
            grid: self.grid.clone(),
            times: self.times[..n].to_vec(),
            dts: self.dts[..n - 1].to_vec(),
            states: self.states[..n].to_vec(),
            newton_iters: self.newton_iters[..n].to_vec(),
            status: self.status,
        }
    }
}
