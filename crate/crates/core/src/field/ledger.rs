use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::norms::{gradient_norm_raw, lebesgue_raw, marcinkiewicz_norm, space_time_gradient_samples, GnRecord};
use super::Trajectory;
use crate::error::{domain, Result};

/// Which transform of `u` the gradient energy is measured on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyQuantity {
    /// `∇((1+|u|)^β)`
    PowerBeta,
    /// `∇((1+|u|)^{β-1} u)`
    PowerBetaMinusOneTimesU,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarcinkiewiczEntry {
    pub label: String,
    /// The norm is taken of `|∇u|^power`.
    pub power: f64,
    pub gamma: f64,
    pub value: f64,
}

/// Measured a priori quantities of one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateLedger {
    pub sigma: f64,
    pub p: f64,
    pub beta: f64,
    /// `sup_k ‖u(t_k)‖_{L^σ}`.
    pub sup_t_lsigma: f64,
    /// `∫∫ |∇Φ(u)|^p` for the transform named by `grad_beta_quantity`.
    pub grad_beta_energy: f64,
    pub grad_beta_quantity: EnergyQuantity,
    /// The `(1+|u|)^{β-1} u` energy, also reported when `β ≥ 1`.
    pub grad_beta_variant: Option<f64>,
    /// `sup_t ‖u‖_σ^σ + grad_beta_energy`.
    pub total: f64,
    pub marcinkiewicz: Vec<MarcinkiewiczEntry>,
    pub gn_residuals: Vec<GnRecord>,
    pub blowup_flag: bool,
}

fn transform(q: EnergyQuantity, beta: f64) -> impl Fn(f64) -> f64 {
    move |u: f64| match q {
        EnergyQuantity::PowerBeta => (1.0 + u.abs()).powf(beta) - 1.0,
        EnergyQuantity::PowerBetaMinusOneTimesU => (1.0 + u.abs()).powf(beta - 1.0) * u,
    }
}

/// Per-sample `∫ |∇Φ(u(t_k))|^p dx`.
pub(crate) fn energy_per_sample(traj: &Trajectory, q: EnergyQuantity, p: f64, beta: f64) -> Vec<f64> {
    let f = transform(q, beta);
    let grid = traj.grid();
    traj.states()
        .iter()
        .map(|s| {
            let v: Vec<f64> = s.iter().map(|&x| f(x)).collect();
            gradient_norm_raw(grid, &v, p).powf(p)
        })
        .collect()
}

fn space_time_energy(traj: &Trajectory, q: EnergyQuantity, p: f64, beta: f64) -> f64 {
    let per = energy_per_sample(traj, q, p, beta);
    per.iter().zip(traj.time_weights()).map(|(e, w)| e * w).sum()
}

/// Fills the estimate ledger of a trajectory.
///
/// With `β < 1` the gradient energy is measured on `(1+|u|)^{β-1} u`;
/// otherwise on `(1+|u|)^β`, with the other transform kept as the variant.
/// The Marcinkiewicz entries are `|∇u|^{(p(N+1)-N)/(N+2)}` in
/// `M^{(N+2)/(N+1)}` and `|∇u|^{p/2}` in `M^1`.
pub fn ledger(traj: &Trajectory, sigma: f64, p: f64, beta: f64) -> Result<EstimateLedger> {
    if traj.is_empty() {
        return domain("ledger of an empty trajectory");
    }
    if !(sigma > 0.0 && p > 1.0) {
        return domain("ledger requires sigma > 0 and p > 1");
    }
    let grid = traj.grid();
    let vol = grid.volumes();
    let sup_t_lsigma = traj
        .states()
        .iter()
        .map(|s| lebesgue_raw(vol, s, sigma))
        .fold(0.0, f64::max);
    let (quantity, variant) = if beta < 1.0 {
        (EnergyQuantity::PowerBetaMinusOneTimesU, None)
    } else {
        (
            EnergyQuantity::PowerBeta,
            Some(space_time_energy(traj, EnergyQuantity::PowerBetaMinusOneTimesU, p, beta)),
        )
    };
    let energy = space_time_energy(traj, quantity, p, beta);
    let n = grid.effective_dim() as f64;
    let b1_power = (p * (n + 1.0) - n) / (n + 2.0);
    let b1_gamma = (n + 2.0) / (n + 1.0);
    let mut marcinkiewicz = Vec::new();
    for (label, power, gamma) in [("grad_b1", b1_power, b1_gamma), ("grad_b2", p / 2.0, 1.0)] {
        if power > 0.0 {
            let s = space_time_gradient_samples(traj, power);
            marcinkiewicz.push(MarcinkiewiczEntry {
                label: label.to_string(),
                power,
                gamma,
                value: marcinkiewicz_norm(&s, gamma)?,
            });
        }
    }
    Ok(EstimateLedger {
        sigma,
        p,
        beta,
        sup_t_lsigma,
        grad_beta_energy: energy,
        grad_beta_quantity: quantity,
        grad_beta_variant: variant,
        total: sup_t_lsigma.powf(sigma) + energy,
        marcinkiewicz,
        gn_residuals: Vec::new(),
        blowup_flag: traj.status().is_blowup(),
    })
}

/// CSV time series with columns
/// `t,dt,sup_norm,Lsigma_norm,grad_beta_energy_partial,newton_iters`.
pub fn ledger_time_series(traj: &Trajectory, sigma: f64, p: f64, beta: f64) -> String {
    let q = if beta < 1.0 {
        EnergyQuantity::PowerBetaMinusOneTimesU
    } else {
        EnergyQuantity::PowerBeta
    };
    let per = energy_per_sample(traj, q, p, beta);
    let vol = traj.grid().volumes();
    let mut out = String::from("t,dt,sup_norm,Lsigma_norm,grad_beta_energy_partial,newton_iters\n");
    let mut partial = 0.0;
    for k in 0..traj.len() {
        let t = traj.times()[k];
        let dt = if k == 0 { 0.0 } else { t - traj.times()[k - 1] };
        if k > 0 {
            partial += per[k - 1] * dt;
        }
        let s = traj.state(k);
        let sup = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let _ = writeln!(
            out,
            "{t:e},{dt:e},{sup:e},{:e},{partial:e},{}",
            lebesgue_raw(vol, s, sigma),
            traj.newton_iters()[k]
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Field, Grid, TerminationStatus};
    use std::sync::Arc;

    #[test]
    fn zero_trajectory_has_zero_ledger() {
        let g = Arc::new(Grid::cartesian_unit(2, 6, 1.0).unwrap());
        let tr = Trajectory::from_samples(
            g.clone(),
            vec![0.0, 0.1, 0.2],
            vec![vec![0.0; g.len()]; 3],
            TerminationStatus::Completed,
        )
        .unwrap();
        for beta in [0.7, 1.5] {
            let l = ledger(&tr, 2.0, 2.0, beta).unwrap();
            assert_eq!(l.sup_t_lsigma, 0.0);
            assert_eq!(l.grad_beta_energy, 0.0);
            assert!(l.marcinkiewicz.iter().all(|m| m.value == 0.0));
            assert!(!l.blowup_flag);
        }
        let l = ledger(&tr, 2.0, 2.0, 0.7).unwrap();
        assert_eq!(l.grad_beta_quantity, EnergyQuantity::PowerBetaMinusOneTimesU);
        assert!(l.grad_beta_variant.is_none());
        assert!(ledger(&tr, 2.0, 2.0, 1.0).unwrap().grad_beta_variant.is_some());
    }

    #[test]
    fn beta_one_variant_matches_plain_energy() {
        // at β = 1 both transforms have the same gradient for u ≥ 0
        let g = Arc::new(Grid::cartesian_unit(1, 16, 1.0).unwrap());
        let u = Field::from_fn(g.clone(), |x| (std::f64::consts::PI * x[0]).sin());
        let mut tr = Trajectory::start(&u);
        tr.push_step(0.1, 0.1, u.values().to_vec(), 1);
        let l = ledger(&tr, 2.0, 2.0, 1.0).unwrap();
        assert!((l.grad_beta_energy - l.grad_beta_variant.unwrap()).abs() < 1e-13);
        let csv = ledger_time_series(&tr, 2.0, 2.0, 1.0);
        assert_eq!(csv.lines().count(), 3);
    }
}
