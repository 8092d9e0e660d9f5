use serde::{Deserialize, Serialize};

use super::linear::LinearWorkspace;
use super::step::{max_abs, resolve_eps, LocalMap, StepContext};
use super::{Operator, RhsSpec, SolverConfig};
use crate::error::{domain, Error, Result};
use crate::field::norms::lebesgue_raw;
use crate::field::ops::truncate_value_t;
use crate::field::{BlowupKind, Field, Grid, TerminationStatus, Trajectory};

struct Runner {
    ws: LinearWorkspace,
    map: LocalMap,
    eps: f64,
}

impl Runner {
    fn new(grid: &Grid, cfg: &SolverConfig, op: &Operator, rhs: &RhsSpec, u0: &[f64]) -> Result<Self> {
        cfg.validate()?;
        rhs.validate(grid, op.p)?;
        Ok(Runner {
            ws: LinearWorkspace::new(grid)?,
            map: LocalMap::new(grid),
            eps: resolve_eps(cfg, grid, u0),
        })
    }

    fn ctx<'a>(&'a self, grid: &'a Grid, cfg: &'a SolverConfig, op: &'a Operator, rhs: &'a RhsSpec) -> StepContext<'a> {
        StepContext {
            grid,
            op,
            rhs,
            cfg,
            eps: self.eps,
            ws: &self.ws,
            map: &self.map,
        }
    }
}

fn initial_state(u0: &Field, cfg: &SolverConfig) -> Field {
    let level = cfg.truncation();
    if level.is_finite() {
        u0.map(|v| truncate_value_t(v, level))
    } else {
        u0.clone()
    }
}

fn resolve_cap(cfg: &SolverConfig, u0: &Field) -> f64 {
    cfg.cap.unwrap_or_else(|| 1e8 * u0.max_abs() + 1.0)
}

/// Integrates to the grid's time horizon with adaptive steps.
///
/// A step is halved when the nonlinear solve fails or when
/// `‖Δu‖_∞ > max_rel_change · (1 + ‖u_old‖_∞)`, and grows by `dt_growth`
/// after steps that converged within `easy_iters` iterations. With
/// `dt_min = dt_max` the step is fixed and the growth bound is off.
///
/// Termination: `Blowup(CapExceeded)` once `‖u‖_∞` exceeds the cap,
/// `Blowup(DtUnderflow)` when the growth bound pushes `dt` below `dt_min`,
/// `NewtonFailure` when nonlinear solves keep failing down to `dt_min`.
pub fn solve(u0: &Field, cfg: &SolverConfig, op: &Operator, rhs: &RhsSpec) -> Result<Trajectory> {
    let grid = u0.grid().clone();
    let start = initial_state(u0, cfg);
    let runner = Runner::new(&grid, cfg, op, rhs, start.values())?;
    let ctx = runner.ctx(&grid, cfg, op, rhs);
    let cap = resolve_cap(cfg, u0);
    let fixed = cfg.is_fixed_step();
    let t_end = grid.t_horizon();
    let slack = 1e-12 * t_end;
    let mut traj = Trajectory::start(&start);
    let mut u = start.into_values();
    let mut t = 0.0;
    let mut dt = cfg.dt_init;
    while t_end - t > slack {
        let last = dt >= t_end - t - slack;
        let dt_eff = if last { t_end - t } else { dt };
        let outcome = ctx.step(&u, dt_eff).and_then(|o| {
            if o.u.iter().all(|v| v.is_finite()) {
                Ok(o)
            } else {
                Err(Error::Numerical("non-finite state".into()))
            }
        });
        match outcome {
            Ok(out) => {
                let change = out.u.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if !fixed && change > cfg.max_rel_change * (1.0 + max_abs(&u)) {
                    dt = 0.5 * dt_eff;
                    if dt < cfg.dt_min {
                        traj.set_status(TerminationStatus::Blowup(BlowupKind::DtUnderflow));
                        break;
                    }
                    continue;
                }
                t = if last { t_end } else { t + dt_eff };
                let over = max_abs(&out.u) > cap;
                u = out.u;
                traj.push_step(dt_eff, t, u.clone(), out.iters);
                if over {
                    traj.set_status(TerminationStatus::Blowup(BlowupKind::CapExceeded));
                    break;
                }
                if !fixed && !last && out.iters <= cfg.easy_iters {
                    dt = (dt * cfg.dt_growth).min(cfg.dt_max);
                }
            }
            Err(_) => {
                dt = 0.5 * dt_eff;
                if fixed || dt < cfg.dt_min {
                    traj.set_status(TerminationStatus::NewtonFailure);
                    break;
                }
            }
        }
    }
    Ok(traj)
}

/// Replays the step schedule of `reference` (same times, same step sizes).
pub fn solve_on_schedule(
    u0: &Field,
    reference: &Trajectory,
    cfg: &SolverConfig,
    op: &Operator,
    rhs: &RhsSpec,
) -> Result<Trajectory> {
    let grid = u0.grid().clone();
    if grid.spec() != reference.grid().spec() {
        return domain("schedule comes from a different grid");
    }
    let start = initial_state(u0, cfg);
    let runner = Runner::new(&grid, cfg, op, rhs, start.values())?;
    let ctx = runner.ctx(&grid, cfg, op, rhs);
    let cap = resolve_cap(cfg, u0);
    let mut traj = Trajectory::start(&start);
    let mut u = start.into_values();
    let dts = reference.dt_schedule();
    for (k, dt) in dts.iter().enumerate() {
        match ctx.step(&u, *dt) {
            Ok(out) if out.u.iter().all(|v| v.is_finite()) => {
                let over = max_abs(&out.u) > cap;
                u = out.u;
                traj.push_step(*dt, reference.times()[k + 1], u.clone(), out.iters);
                if over {
                    traj.set_status(TerminationStatus::Blowup(BlowupKind::CapExceeded));
                    return Ok(traj);
                }
            }
            _ => {
                traj.set_status(TerminationStatus::NewtonFailure);
                return Ok(traj);
            }
        }
    }
    traj.set_status(match reference.status() {
        TerminationStatus::Completed => TerminationStatus::Completed,
        _ if traj.final_time() < reference.grid().t_horizon() => reference.status(),
        _ => TerminationStatus::Completed,
    });
    Ok(traj)
}

/// Pseudo-transient continuation to a steady state: backward Euler steps
/// with doubling `dt` until `‖Δu‖_∞ ≤ tol (1 + ‖u‖_∞)`.
pub fn steady_state(init: &Field, cfg: &SolverConfig, op: &Operator, rhs: &RhsSpec, tol: f64) -> Result<Field> {
    let grid = init.grid().clone();
    let runner = Runner::new(&grid, cfg, op, rhs, init.values())?;
    let ctx = runner.ctx(&grid, cfg, op, rhs);
    let mut u = init.values().to_vec();
    let mut dt = cfg.dt_init;
    for _ in 0..400 {
        match ctx.step(&u, dt) {
            Ok(out) => {
                let change = out.u.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                u = out.u;
                if change <= tol * (1.0 + max_abs(&u)) {
                    return Field::new(grid, u);
                }
                dt = (2.0 * dt).min(1e12);
            }
            Err(e) => {
                dt *= 0.5;
                if dt < cfg.dt_min {
                    return Err(e);
                }
            }
        }
    }
    Err(Error::Numerical("steady state not reached".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: f64,
    pub status: TerminationStatus,
    pub final_time: f64,
    pub steps: usize,
    pub sup_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceDiagnostics {
    pub levels: Vec<LevelSummary>,
    /// `‖u_{n_{j+1}} - u_{n_j}‖_{L^p(Q_T)}` on the common time samples.
    pub distances: Vec<f64>,
    pub tolerance: f64,
    pub stabilized: bool,
    /// Whether all levels produced bitwise identical trajectories.
    #[serde(skip)]
    pub identical: bool,
    #[serde(skip)]
    pub trajectories: Vec<Trajectory>,
}

/// Solves the truncated problems at each level `n`.
///
/// The largest level runs adaptively and the others replay its schedule, so
/// all levels share their time samples.
pub fn approximation_sequence(
    u0: &Field,
    cfg: &SolverConfig,
    op: &Operator,
    rhs: &RhsSpec,
    levels: &[f64],
    tol: f64,
) -> Result<ConvergenceDiagnostics> {
    if levels.is_empty() {
        return domain("approximation_sequence needs at least one level");
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) || levels[0] < 1.0 {
        return domain("truncation levels must increase strictly and start at n >= 1");
    }
    let with_level = |n: f64| -> Result<SolverConfig> {
        let mut c = cfg.clone();
        c.truncation_level = crate::regime::ExtExponent::finite(n)?;
        Ok(c)
    };
    let top = with_level(*levels.last().unwrap())?;
    let reference = solve(u0, &top, op, rhs)?;
    let mut trajs = Vec::with_capacity(levels.len());
    for &n in &levels[..levels.len() - 1] {
        trajs.push(solve_on_schedule(u0, &reference, &with_level(n)?, op, rhs)?);
    }
    trajs.push(reference);
    let vol = u0.grid().volumes();
    let distances: Vec<f64> = trajs
        .windows(2)
        .map(|w| {
            let common = w[0].len().min(w[1].len());
            let weights = w[1].time_weights();
            let mut acc = 0.0;
            for k in 0..common.saturating_sub(1) {
                let diff: Vec<f64> = w[0].state(k).iter().zip(w[1].state(k)).map(|(a, b)| a - b).collect();
                acc += weights[k] * lebesgue_raw(vol, &diff, op.p).powf(op.p);
            }
            acc.powf(1.0 / op.p)
        })
        .collect();
    let identical = trajs.windows(2).all(|w| w[0].states() == w[1].states());
    let summaries = levels
        .iter()
        .zip(&trajs)
        .map(|(&level, t)| LevelSummary {
            level,
            status: t.status(),
            final_time: t.final_time(),
            steps: t.len() - 1,
            sup_norm: t.states().iter().map(|s| max_abs(s)).fold(0.0, f64::max),
        })
        .collect();
    let stabilized = distances.last().map(|d| *d < tol).unwrap_or(true);
    Ok(ConvergenceDiagnostics {
        levels: summaries,
        distances,
        tolerance: tol,
        stabilized,
        identical,
        trajectories: trajs,
    })
}

#[derive(Clone, Debug)]
pub struct ComparisonResult {
    pub u: Trajectory,
    /// The source-free flow from the same datum on the same schedule.
    pub big_u: Trajectory,
    /// `min (u - U)` over all nodes and common time samples.
    pub min_gap: f64,
    pub common_samples: usize,
}

/// Solves the full problem and the source-free flow on one step schedule.
pub fn comparison_run(u0: &Field, cfg: &SolverConfig, op: &Operator, rhs: &RhsSpec) -> Result<ComparisonResult> {
    if rhs.gamma < 0.0 || rhs.forcing.iter().any(|&f| f < 0.0) || u0.values().iter().any(|&v| v < 0.0) {
        return domain("comparison requires gamma >= 0, f >= 0 and u0 >= 0");
    }
    let u = solve(u0, cfg, op, rhs)?;
    let big_u = solve_on_schedule(u0, &u, cfg, op, &RhsSpec::zero())?;
    let common = u.len().min(big_u.len());
    let mut min_gap = f64::INFINITY;
    for k in 0..common {
        for (a, b) in u.state(k).iter().zip(big_u.state(k)) {
            min_gap = min_gap.min(a - b);
        }
    }
    Ok(ComparisonResult {
        u,
        big_u,
        min_gap,
        common_samples: common,
    })
}
