use serde::{Deserialize, Serialize};

use super::ops::gradient_values;
use super::{Field, Trajectory};
use crate::error::{domain, Result};

fn check_exponent(s: f64, what: &str) -> Result<()> {
    if !(s > 0.0) {
        return domain(format!("{what} exponent must be positive, got {s}"));
    }
    Ok(())
}

fn weighted_norm(values: impl Iterator<Item = (f64, f64)>, s: f64) -> f64 {
    if s.is_infinite() {
        return values.fold(0.0, |m, (_, v)| m.max(v.abs()));
    }
    let sum: f64 = values.map(|(w, v)| w * v.abs().powf(s)).sum();
    sum.powf(1.0 / s)
}

/// `(Σ_i V_i |v_i|^s)^{1/s}`; `s = ∞` gives the maximum.
pub fn lebesgue_norm(u: &Field, s: f64) -> Result<f64> {
    check_exponent(s, "Lebesgue")?;
    Ok(lebesgue_raw(u.grid().volumes(), u.values(), s))
}

pub(crate) fn lebesgue_raw(vol: &[f64], v: &[f64], s: f64) -> f64 {
    weighted_norm(vol.iter().copied().zip(v.iter().copied()), s)
}

/// `(Σ_e w_e |∇u_e|^s)^{1/s}`.
pub fn gradient_lebesgue_norm(u: &Field, s: f64) -> Result<f64> {
    check_exponent(s, "Lebesgue")?;
    Ok(gradient_norm_raw(u.grid(), u.values(), s))
}

pub(crate) fn gradient_norm_raw(grid: &super::Grid, u: &[f64], s: f64) -> f64 {
    let d = grid.comp_dim();
    let g = gradient_values(grid, u);
    let mags = g.chunks(d).map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt());
    weighted_norm(grid.element_weights().zip(mags), s)
}

/// `‖u‖_{L^r(0,T;L^m)}` with left-endpoint time weights; `r = ∞` is the
/// maximum over all samples.
pub fn bochner_norm(traj: &Trajectory, r: f64, m: f64) -> Result<f64> {
    if traj.is_empty() {
        return domain("bochner norm of an empty trajectory");
    }
    if !(r >= 1.0) {
        return domain(format!("time exponent must satisfy r >= 1, got {r}"));
    }
    check_exponent(m, "space")?;
    let vol = traj.grid().volumes();
    let spatial = traj.states().iter().map(|s| lebesgue_raw(vol, s, m));
    Ok(weighted_norm(traj.time_weights().into_iter().zip(spatial), r))
}

/// Values with their space-time measures.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpaceTimeSamples {
    pub values: Vec<f64>,
    pub measures: Vec<f64>,
}

impl SpaceTimeSamples {
    pub fn total_measure(&self) -> f64 {
        self.measures.iter().sum()
    }
}

/// `|∇u|^power` on every element and time sample, with measure `w_e · dt_k`.
pub fn space_time_gradient_samples(traj: &Trajectory, power: f64) -> SpaceTimeSamples {
    let grid = traj.grid();
    let d = grid.comp_dim();
    let weights: Vec<f64> = grid.element_weights().collect();
    let mut out = SpaceTimeSamples::default();
    for (state, dt) in traj.states().iter().zip(traj.time_weights()) {
        if dt == 0.0 {
            continue;
        }
        let g = gradient_values(grid, state);
        for (c, w) in g.chunks(d).zip(&weights) {
            let mag = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            out.values.push(mag.powf(power));
            out.measures.push(w * dt);
        }
    }
    out
}

pub fn space_time_lebesgue_norm(samples: &SpaceTimeSamples, s: f64) -> Result<f64> {
    check_exponent(s, "Lebesgue")?;
    Ok(weighted_norm(
        samples.measures.iter().copied().zip(samples.values.iter().copied()),
        s,
    ))
}

/// `sup_{k>0} (k^γ meas{|v| > k})^{1/γ}`.
///
/// The level-set measure is piecewise constant in `k`, so the supremum is
/// attained as `k` increases to one of the sample magnitudes.
pub fn marcinkiewicz_norm(samples: &SpaceTimeSamples, gamma: f64) -> Result<f64> {
    check_exponent(gamma, "Marcinkiewicz")?;
    let mut pairs: Vec<(f64, f64)> = samples
        .values
        .iter()
        .zip(&samples.measures)
        .map(|(v, m)| (v.abs(), *m))
        .filter(|(v, m)| *v > 0.0 && *m > 0.0)
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best: f64 = 0.0;
    let mut cum = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let level = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == level {
            cum += pairs[i].1;
            i += 1;
        }
        best = best.max(level.powf(gamma) * cum);
    }
    Ok(best.powf(1.0 / gamma))
}

/// Both sides of the parabolic Gagliardo–Nirenberg inequality, constant omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnRecord {
    pub h: f64,
    pub eta: f64,
    pub w: f64,
    pub y: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `Nh/w + (N(η-h)+ηh)/y - N`.
pub fn gn_relation_residual(n: u32, h: f64, eta: f64, w: f64, y: f64) -> f64 {
    let n = n as f64;
    n * h / w + (n * (eta - h) + eta * h) / y - n
}

/// `lhs = ∫ ‖v‖_{L^w}^y dt`, `rhs = sup_t ‖v‖_{L^h}^{y-η} ∫ ‖∇v‖_{L^η}^η dt`.
pub fn gn_check(traj: &Trajectory, h: f64, eta: f64, w: f64, y: f64) -> Result<GnRecord> {
    if traj.is_empty() {
        return domain("gn_check on an empty trajectory");
    }
    let n = traj.grid().effective_dim();
    let nf = n as f64;
    if !(eta >= 1.0 && eta < nf) {
        return domain(format!("gn_check requires 1 <= eta < N = {n}, got eta = {eta}"));
    }
    let eta_star = nf * eta / (nf - eta);
    if !(h >= 1.0 && h <= eta_star) {
        return domain(format!("gn_check requires 1 <= h <= eta* = {eta_star}, got h = {h}"));
    }
    if !(w > 0.0 && y > 0.0) {
        return domain("gn_check requires positive w and y");
    }
    let res = gn_relation_residual(n, h, eta, w, y);
    if !(res.abs() <= 1e-9) {
        return domain(format!("(w, y) violate the interpolation relation: residual {res:e}"));
    }
    let grid = traj.grid();
    let vol = grid.volumes();
    let weights = traj.time_weights();
    let mut lhs = 0.0;
    let mut sup_h: f64 = 0.0;
    let mut grad = 0.0;
    for (state, dt) in traj.states().iter().zip(&weights) {
        sup_h = sup_h.max(lebesgue_raw(vol, state, h));
        if *dt > 0.0 {
            lhs += dt * lebesgue_raw(vol, state, w).powf(y);
            grad += dt * gradient_norm_raw(grid, state, eta).powf(eta);
        }
    }
    let rhs = sup_h.powf(y - eta) * grad;
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(GnRecord {
        h,
        eta,
        w,
        y,
        lhs,
        rhs,
        ratio,
    })
}
