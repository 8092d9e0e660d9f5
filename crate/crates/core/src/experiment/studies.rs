use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{relative_drift, ConstantFit, HarnackFit, LevelRecord, ProbeReport, Verdict};
use super::run::ledger_for;
use super::scenario::{
    DatumProfile, DatumSpec, ForcingFamily, ForcingSpec, GridKind, GridSection, ProbeSpec, ProblemSection, Scenario,
    Setup,
};
use crate::error::{domain, Result};
use crate::field::norms::lebesgue_raw;
use crate::field::{
    gn_check, gn_relation_residual, ledger, space_time_gradient_samples, EstimateLedger, Field, Grid, GridMode,
    GridSpec, TerminationStatus, Trajectory,
};
use crate::regime::{formulas, MSubcase, Regime};
use crate::solver::{solve, Operator, RhsSpec, SolverConfig, SourceTreatment};

fn one() -> f64 {
    1.0
}

fn run_at(s: &Scenario, cells: usize) -> Result<(Setup, Trajectory)> {
    let setup = s.setup_at(cells)?;
    let traj = solve(&setup.u0, &s.solver, &setup.operator, &setup.rhs)?;
    Ok((setup, traj))
}

fn record(label: String, cells: usize, traj: &Trajectory, ledger: EstimateLedger, tracked: f64) -> LevelRecord {
    LevelRecord {
        label,
        cells,
        status: traj.status(),
        final_time: traj.final_time(),
        steps: traj.len() - 1,
        tracked,
        ledger,
        extras: BTreeMap::new(),
    }
}

fn check_levels(levels: &[usize], min: usize) -> Result<()> {
    if levels.len() < min {
        return domain(format!("need at least {min} refinement levels, got {}", levels.len()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return domain("refinement levels must increase");
    }
    Ok(())
}

/// Ledger totals across grid refinements, with the drift of the two finest.
pub fn refinement_report(s: &Scenario, levels: &[usize], probe: &str) -> Result<ProbeReport> {
    check_levels(levels, 2)?;
    let runs: Vec<LevelRecord> = levels
        .par_iter()
        .map(|&cells| {
            let (setup, traj) = run_at(s, cells)?;
            let l = ledger_for(&setup, &traj, true)?;
            let total = l.total;
            Ok(record(format!("cells={cells}"), cells, &traj, l, total))
        })
        .collect::<Result<_>>()?;
    let mut rep = ProbeReport::new(&s.name, probe);
    let n = runs.len();
    let drift = relative_drift(runs[n - 2].tracked, runs[n - 1].tracked);
    let blowup = runs.iter().any(|r| r.status != TerminationStatus::Completed);
    let pass = drift < 0.1 && !blowup && drift.is_finite();
    rep.verdicts.push(Verdict {
        name: "stability".into(),
        outcome: if pass { "stable" } else { "unstable" }.into(),
        value: drift,
        threshold: 0.1,
        pass,
    });
    if blowup {
        rep.notes.push("a run terminated early; in a subcritical scenario this points at the solver or the scales".into());
    }
    rep.levels = runs;
    Ok(rep)
}

/// Refinement study of a red or orange scenario with admissible data.
pub fn regime_stability_study(s: &Scenario, refinements: &[usize]) -> Result<ProbeReport> {
    let setup = s.setup_at(refinements.first().copied().unwrap_or(s.grid.cells))?;
    if !matches!(setup.report.regime, Regime::FiniteEnergyRed | Regime::InfiniteEnergyOrange) {
        return domain(format!("regime stability needs a red or orange scenario, got {}", setup.report.regime.tag()));
    }
    if !setup.admissible {
        return domain("scenario data are not admissible for its regime");
    }
    refinement_report(s, refinements, "regime_stability")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatOrderReport {
    pub cells: Vec<usize>,
    /// Steps `4h²`, so that the time error is of the same order as the space error.
    pub spatial_dts: Vec<f64>,
    pub spatial_errors: Vec<f64>,
    pub spatial_orders: Vec<f64>,
    pub observed_spatial_order: f64,
    /// Steps proportional to `h`, so that the time error dominates.
    pub temporal_dts: Vec<f64>,
    pub temporal_errors: Vec<f64>,
    pub temporal_orders: Vec<f64>,
    pub observed_temporal_order: f64,
    pub finest_error: f64,
}

fn orders(errors: &[f64], ratios: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(ratios)
        .map(|(e, r)| (e[0] / e[1]).ln() / r.ln())
        .collect()
}

/// Convergence orders of the heat flow against `e^{-π²t/L²} sin(πx/L)` in 1D.
pub fn heat_order_study(s: &Scenario, levels: &[usize]) -> Result<HeatOrderReport> {
    check_levels(levels, 3)?;
    if s.problem.p != 2.0 || s.problem.gamma != 0.0 || s.forcing.family != ForcingFamily::None {
        return domain("the manufactured heat study needs p = 2, gamma = 0 and no forcing");
    }
    if s.grid.kind != GridKind::Cartesian || s.grid.dim != Some(1) || s.datum.profile != DatumProfile::Sine {
        return domain("the manufactured heat study needs a 1D Cartesian grid and a sine datum");
    }
    let (ext, t_end, amp) = (s.grid.extent, s.grid.t_horizon, s.datum.amplitude);
    let decay = (-PI * PI * t_end / (ext * ext)).exp();
    let error_at = |cells: usize, dt: f64| -> Result<f64> {
        let grid = Arc::new(Grid::new(GridSpec {
            mode: GridMode::Cartesian { dim: 1 },
            extent: ext,
            cells,
            t_horizon: t_end,
        })?);
        let u0 = Field::from_fn(grid.clone(), |x| amp * (PI * x[0] / ext).sin());
        let cfg = SolverConfig {
            dt_init: dt,
            dt_min: dt,
            dt_max: dt,
            ..s.solver.clone()
        };
        let op = Operator::p_laplacian(&grid, 2.0)?;
        let traj = solve(&u0, &cfg, &op, &RhsSpec::zero())?;
        if traj.status() != TerminationStatus::Completed {
            return domain("manufactured heat run did not complete");
        }
        let fin = traj.final_field();
        Ok((0..grid.len())
            .map(|i| (fin.values()[i] - amp * decay * (PI * u0.grid().coords(i)[0] / ext).sin()).abs())
            .fold(0.0, f64::max))
    };
    let spatial_dts: Vec<f64> = levels.iter().map(|&c| 4.0 * (ext / c as f64).powi(2)).collect();
    let temporal_dts: Vec<f64> = levels
        .iter()
        .map(|&c| t_end / 25.0 * levels[0] as f64 / c as f64)
        .collect();
    let jobs: Vec<(usize, f64)> = levels
        .iter()
        .copied()
        .zip(spatial_dts.iter().copied())
        .chain(levels.iter().copied().zip(temporal_dts.iter().copied()))
        .collect();
    let errs: Vec<f64> = jobs.par_iter().map(|&(c, dt)| error_at(c, dt)).collect::<Result<_>>()?;
    let (spatial_errors, temporal_errors) = errs.split_at(levels.len());
    let ratios: Vec<f64> = levels.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
    let spatial_orders = orders(spatial_errors, &ratios);
    let temporal_orders = orders(temporal_errors, &ratios);
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(HeatOrderReport {
        cells: levels.to_vec(),
        observed_spatial_order: min(&spatial_orders),
        observed_temporal_order: min(&temporal_orders),
        finest_error: *spatial_errors.last().unwrap(),
        spatial_dts,
        spatial_errors: spatial_errors.to_vec(),
        spatial_orders,
        temporal_dts,
        temporal_errors: temporal_errors.to_vec(),
        temporal_orders,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessParams {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    pub q: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    pub eta: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    pub refinements: Vec<usize>,
    #[serde(default = "default_sharp_t")]
    pub t_horizon: f64,
    /// Allows `p < 2`, where verdicts are reported but not asserted.
    #[serde(default)]
    pub extrapolation: bool,
    #[serde(default = "sharpness_solver")]
    pub solver: SolverConfig,
}

/// Lagged source: the explicit source is unstable near the singular datum.
fn sharpness_solver() -> SolverConfig {
    SolverConfig {
        source_treatment: SourceTreatment::SemiImplicitLagged,
        ..SolverConfig::default()
    }
}

fn default_omega() -> f64 {
    0.01
}

fn default_sharp_t() -> f64 {
    0.01
}

impl SharpnessParams {
    pub fn new(n: u32, p: f64, q: f64, eta: f64, refinements: Vec<usize>) -> Self {
        SharpnessParams {
            n,
            p,
            q,
            gamma: 1.0,
            eta,
            omega: default_omega(),
            refinements,
            t_horizon: default_sharp_t(),
            extrapolation: false,
            solver: sharpness_solver(),
        }
    }

    fn scenario(&self, eta: f64, tag: &str) -> Scenario {
        Scenario {
            name: format!("sharpness_{tag}_N{}_p{}_q{}", self.n, self.p, self.q),
            seed: 0,
            problem: ProblemSection {
                n: self.n,
                p: self.p,
                q: self.q,
                gamma: self.gamma,
                coefficient: Default::default(),
                coefficient_bounds: None,
                expect_regime: None,
            },
            grid: GridSection {
                kind: GridKind::Radial,
                dim: None,
                extent: 1.0,
                cells: self.refinements[0],
                t_horizon: self.t_horizon,
            },
            datum: DatumSpec {
                profile: DatumProfile::PowerLaw,
                amplitude: 1.0,
                radius: Some(1.0),
                width: None,
                center: None,
                eta: Some(eta),
                omega: Some(self.omega),
                path: None,
                normalize: false,
                norm_exponent: None,
                norm_value: None,
                lebesgue: Some(eta),
            },
            forcing: ForcingSpec::default(),
            solver: self.solver.clone(),
            probes: ProbeSpec::default(),
            base_dir: None,
        }
    }
}

/// `∫_{B_r} U` on a radial grid, with the straddling shell counted pro rata.
fn ball_integral(grid: &Grid, u: &[f64], r: f64) -> f64 {
    let h = grid.h();
    let n = grid.effective_dim() as i32;
    let mut acc = 0.0;
    for (i, (v, vol)) in u.iter().zip(grid.volumes()).enumerate() {
        let (r0, r1) = (i as f64 * h, (i + 1) as f64 * h);
        if r1 <= r {
            acc += v * vol;
        } else if r0 < r {
            acc += v * vol * (r.powi(n) - r0.powi(n)) / (r1.powi(n) - r0.powi(n));
            break;
        } else {
            break;
        }
    }
    acc
}

fn harnack_fit(p: &SharpnessParams, sigma_free: &Trajectory) -> Option<HarnackFit> {
    let (nf, pp, eta, om) = (p.n as f64, p.p, p.eta, p.omega);
    let lambda = formulas::lambda_harnack(p.n, pp).ok()?;
    let a = -nf / lambda;
    let b = pp * nf * (eta - 1.0) / (lambda * eta) + pp * om / lambda + nf;
    let start_exp = pp + (nf - om * eta) * (pp - 2.0) / eta;
    let grid = sigma_free.grid();
    let h = grid.h();
    let mut pts = Vec::new();
    for k in 1..sigma_free.len() {
        let t = sigma_free.times()[k];
        for j in 0..12 {
            let r = 4.0 * h * 1.5f64.powi(j);
            if r > 0.5 * grid.spec().extent || t < r.powf(start_exp) {
                continue;
            }
            let integral = ball_integral(grid, sigma_free.state(k), r);
            if integral > 0.0 {
                pts.push((integral.ln() - a * t.ln() - b * r.ln(), integral, t, r));
            }
        }
    }
    if pts.is_empty() {
        return None;
    }
    let mean = pts.iter().map(|x| x.0).sum::<f64>() / pts.len() as f64;
    let rms = (pts.iter().map(|x| (x.0 - mean).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    let c = mean.exp();
    let min_ratio = pts
        .iter()
        .map(|&(_, i, t, r)| i / (c * t.powf(a) * r.powf(b)))
        .fold(f64::INFINITY, f64::min);
    Some(HarnackFit {
        lambda,
        exponent_t: a,
        exponent_r: b,
        c_fit: c,
        log_rms: rms,
        min_ratio,
        samples: pts.len(),
    })
}

/// Singular-datum probe: a control run with `η = σ` and a probe run with the
/// requested `η < σ`, both on refined radial grids.
///
/// Verdicts compare growth factors of `sup_t ‖u‖_σ^σ`; they are heuristic
/// evidence about the nonexistence statement, never a proof of it.
pub fn sharpness_probe(params: &SharpnessParams) -> Result<ProbeReport> {
    if params.refinements.len() < 3 {
        return domain(format!("sharpness probe needs at least 3 refinements, got {}", params.refinements.len()));
    }
    check_levels(&params.refinements, 3)?;
    if params.p < 2.0 && !params.extrapolation {
        return domain("the singular-datum statement is for p >= 2; set extrapolation to probe p < 2");
    }
    let sigma = formulas::critical_sigma(params.n, params.p, params.q)?;
    if !(params.eta >= 1.0 && params.eta < sigma) {
        return domain(format!("sharpness probe needs 1 <= eta < sigma = {sigma}, got eta = {}", params.eta));
    }
    if !(params.omega > 0.0) {
        return domain("omega must be positive");
    }
    let control = params.scenario(sigma, "control");
    let probe = params.scenario(params.eta, "probe");
    let jobs: Vec<(&str, &Scenario, usize)> = [("control", &control), ("probe", &probe)]
        .iter()
        .flat_map(|&(tag, s)| params.refinements.iter().map(move |&c| (tag, s, c)))
        .collect();
    let runs: Vec<LevelRecord> = jobs
        .par_iter()
        .map(|&(tag, s, cells)| {
            let (setup, traj) = run_at(s, cells)?;
            let l = ledger(&traj, sigma, params.p, (sigma + params.p - 2.0) / params.p)?;
            let tracked = l.sup_t_lsigma.powf(sigma);
            let mut rec = record(format!("{tag}/cells={cells}"), cells, &traj, l, tracked);
            rec.extras.insert("eta".into(), if tag == "control" { sigma } else { params.eta });
            rec.extras.insert("datum_l_sigma_pow".into(), lebesgue_raw(setup.grid.volumes(), traj.state(0), sigma).powf(sigma));
            Ok(rec)
        })
        .collect::<Result<_>>()?;
    let k = params.refinements.len();
    let (ctrl, prb) = runs.split_at(k);
    let mut rep = ProbeReport::new(format!("N{}_p{}_q{}_eta{}", params.n, params.p, params.q, params.eta), "sharpness");
    let lhs = sigma - params.eta;
    let rhs = params.omega * params.eta * (params.eta + params.q - params.p + 1.0) / (params.p - params.q);
    rep.verdicts.push(Verdict {
        name: "sieta".into(),
        outcome: if lhs > rhs { "violated" } else { "satisfied" }.into(),
        value: lhs,
        threshold: rhs,
        pass: lhs > rhs,
    });
    let c_drift = relative_drift(ctrl[k - 2].tracked, ctrl[k - 1].tracked);
    let c_ok = c_drift < 0.1 && ctrl.iter().all(|r| r.status == TerminationStatus::Completed);
    rep.verdicts.push(Verdict {
        name: "control".into(),
        outcome: if c_ok { "stabilizes" } else { "does not stabilize" }.into(),
        value: c_drift,
        threshold: 0.1,
        pass: c_ok,
    });
    let growth = prb[k - 1].tracked / prb[0].tracked;
    let blowup = prb[k - 1].status.is_blowup();
    let p_ok = growth >= 2.0 || blowup;
    rep.verdicts.push(Verdict {
        name: "probe".into(),
        outcome: if blowup {
            "blowup"
        } else if p_ok {
            "grows"
        } else {
            "bounded"
        }
        .into(),
        value: growth,
        threshold: 2.0,
        pass: p_ok,
    });
    let (outcome, pass) = if params.p < 2.0 {
        ("not asserted (extrapolation)", false)
    } else if !c_ok {
        ("withheld: control did not stabilize", false)
    } else if p_ok {
        ("sharpness-consistent", true)
    } else {
        ("inconclusive", false)
    };
    rep.verdicts.push(Verdict {
        name: "sharpness".into(),
        outcome: outcome.into(),
        value: growth,
        threshold: 2.0,
        pass,
    });
    rep.notes.push(
        "heuristic evidence only: growth factors at finite resolution, not a proof of nonexistence".into(),
    );
    let setup = probe.setup_at(*params.refinements.last().unwrap())?;
    let free = solve(&setup.u0, &params.solver, &setup.operator, &RhsSpec::zero())?;
    rep.harnack = harnack_fit(params, &free);
    if rep.harnack.is_none() {
        rep.notes.push("no (t, r) pair in the resolved range for the lower-bound fit".into());
    }
    rep.levels = runs;
    Ok(rep)
}

fn l1_budget(setup: &Setup, traj: &Trajectory) -> f64 {
    let vol = setup.grid.volumes();
    let grad = if setup.rhs.gamma > 0.0 {
        let s = space_time_gradient_samples(traj, setup.rhs.q);
        s.values.iter().zip(&s.measures).map(|(v, m)| v * m).sum::<f64>()
    } else {
        0.0
    };
    let f = lebesgue_raw(vol, &setup.rhs.forcing, 1.0) * traj.final_time();
    setup.rhs.gamma * grad + f + lebesgue_raw(vol, traj.state(0), 1.0)
}

fn through_origin_fit(label: &str, values: &[f64], scales: &[f64]) -> ConstantFit {
    let num: f64 = values.iter().zip(scales).map(|(v, m)| v * m).sum();
    let den: f64 = scales.iter().map(|m| m * m).sum();
    let c = if den > 0.0 { num / den } else { 0.0 };
    let logs: Vec<f64> = values
        .iter()
        .zip(scales)
        .filter(|(v, m)| **v > 0.0 && **m > 0.0 && c > 0.0)
        .map(|(v, m)| (v / (c * m)).ln())
        .collect();
    let log_rms = if logs.is_empty() {
        0.0
    } else {
        (logs.iter().map(|x| x * x).sum::<f64>() / logs.len() as f64).sqrt()
    };
    ConstantFit {
        label: label.into(),
        c,
        log_rms,
    }
}

/// Marcinkiewicz norms of `|∇u|^{(p(N+1)-N)/(N+2)}` and `|∇u|^{p/2}` against
/// `M = γ‖|∇u|^q‖_{L¹} + ‖f‖_{L¹} + ‖u₀‖_{L¹}` under refinement.
pub fn marcinkiewicz_verification(s: &Scenario, refinements: &[usize]) -> Result<ProbeReport> {
    check_levels(refinements, 2)?;
    let probe_setup = s.setup_at(refinements[0])?;
    match probe_setup.report.regime {
        Regime::RenormalizedYellow | Regime::Sublinear(MSubcase::MEq1) => {}
        other => return domain(format!("Marcinkiewicz verification needs L^1 data (yellow or m = 1), got {}", other.tag())),
    }
    let runs: Vec<LevelRecord> = refinements
        .par_iter()
        .map(|&cells| {
            let (setup, traj) = run_at(s, cells)?;
            let l = ledger_for(&setup, &traj, true)?;
            let m = l1_budget(&setup, &traj);
            let mut rec = record(format!("cells={cells}"), cells, &traj, l.clone(), 0.0);
            rec.extras.insert("M".into(), m);
            for e in &l.marcinkiewicz {
                let ratio = if m > 0.0 { e.value / m } else { 0.0 };
                rec.extras.insert(format!("ratio_{}", e.label), ratio);
                rec.extras.insert(format!("norm_{}", e.label), e.value);
            }
            rec.tracked = rec.extras.get("ratio_grad_b1").copied().unwrap_or(0.0);
            Ok(rec)
        })
        .collect::<Result<_>>()?;
    let mut rep = ProbeReport::new(&s.name, "marcinkiewicz");
    let n = runs.len();
    for label in ["grad_b1", "grad_b2"] {
        let key = format!("ratio_{label}");
        let ratios: Vec<f64> = runs.iter().filter_map(|r| r.extras.get(&key).copied()).collect();
        if ratios.len() != n {
            continue;
        }
        let drift = relative_drift(ratios[n - 2], ratios[n - 1]);
        let bounded = ratios.iter().all(|r| r.is_finite());
        let pass = bounded && drift < 0.2;
        rep.verdicts.push(Verdict {
            name: label.into(),
            outcome: if pass { "verified" } else { "not verified" }.into(),
            value: drift,
            threshold: 0.2,
            pass,
        });
        let norms: Vec<f64> = runs.iter().map(|r| r.extras[&format!("norm_{label}")]).collect();
        let ms: Vec<f64> = runs.iter().map(|r| r.extras["M"]).collect();
        rep.fits.push(through_origin_fit(label, &norms, &ms));
    }
    rep.levels = runs;
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeParams {
    #[serde(default = "default_js")]
    pub js: Vec<f64>,
    #[serde(default = "default_spike_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub radius: Option<f64>,
    /// Space exponent of the spikes; default: the critical value of the
    /// mixed-norm condition with `r = ∞`.
    #[serde(default)]
    pub m: Option<f64>,
    /// Exponent of the interior family; default `2m`.
    #[serde(default)]
    pub m_interior: Option<f64>,
}

fn default_spike_amplitude() -> f64 {
    300.0
}

fn default_js() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}

impl Default for SpikeParams {
    fn default() -> Self {
        SpikeParams {
            js: default_js(),
            amplitude: default_spike_amplitude(),
            radius: None,
            m: None,
            m_interior: None,
        }
    }
}

/// Forcing families with constant `L^∞(0,T;L^m)` norm and shrinking support.
pub fn equi_integrability_stress(base: &Scenario, params: &SpikeParams) -> Result<ProbeReport> {
    let setup = base.setup()?;
    if setup.report.regime != Regime::FiniteEnergyRed {
        return domain(format!("equi-integrability stress needs a red scenario, got {}", setup.report.regime.tag()));
    }
    if params.js.len() < 2 || params.js.windows(2).any(|w| w[1] <= w[0]) || params.js[0] < 1.0 {
        return domain("spike parameters j must increase from j >= 1");
    }
    let (nf, p) = (base.problem.n as f64, base.problem.p);
    let sigma = setup.report.required_sigma.unwrap_or(1.0);
    let m_crit = params.m.unwrap_or(nf * sigma / (nf * (p - 1.0) + p * sigma));
    if m_crit < 1.0 {
        return domain(format!("critical m = {m_crit} is below 1; no L^m spike family at the boundary"));
    }
    let m_int = params.m_interior.unwrap_or(2.0 * m_crit);
    let variant = |family: ForcingFamily, j: f64, m: f64, amplitude: f64| {
        let mut s = base.clone();
        s.forcing = ForcingSpec {
            family,
            amplitude: Some(amplitude),
            radius: params.radius,
            center: None,
            j: Some(j),
            m: Some(m),
            r: None,
            path: None,
        };
        s
    };
    let mut jobs = Vec::new();
    for &j in &params.js {
        jobs.push(("spike", j, variant(ForcingFamily::Spike, j, m_crit, params.amplitude)));
    }
    for &j in &params.js {
        jobs.push(("control", j, variant(ForcingFamily::Spike, 1.0, m_crit, params.amplitude / j)));
    }
    for &j in &params.js {
        jobs.push(("interior", j, variant(ForcingFamily::Spike, j, m_int, params.amplitude)));
    }
    let runs: Vec<LevelRecord> = jobs
        .par_iter()
        .map(|(tag, j, s)| {
            let (setup, traj) = run_at(s, s.grid.cells)?;
            let l = ledger_for(&setup, &traj, false)?;
            let total = l.total;
            let mut rec = record(format!("{tag}/j={j}"), s.grid.cells, &traj, l, total);
            let m = s.forcing.m.unwrap();
            rec.extras.insert("j".into(), *j);
            rec.extras.insert("m".into(), m);
            rec.extras.insert("f_Lm".into(), lebesgue_raw(setup.grid.volumes(), &setup.rhs.forcing, m));
            Ok(rec)
        })
        .collect::<Result<_>>()?;
    let k = params.js.len();
    let family = |i: usize| -> Vec<f64> { runs[i * k..(i + 1) * k].iter().map(|r| r.tracked).collect() };
    let (spike, control, interior) = (family(0), family(1), family(2));
    let growth = |v: &[f64]| v[v.len() - 1] / v[0];
    let peak = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max) / v[0];
    let monotone = spike.windows(2).all(|w| w[1] > w[0]);
    let mut rep = ProbeReport::new(&base.name, "equi_integrability");
    rep.verdicts.push(Verdict {
        name: "spike_growth".into(),
        outcome: if monotone { "monotone growth" } else { "no monotone growth" }.into(),
        value: growth(&spike),
        threshold: 1.0,
        pass: monotone,
    });
    let c_peak = peak(&control);
    rep.verdicts.push(Verdict {
        name: "control_bounded".into(),
        outcome: if c_peak <= 1.0 + 1e-9 { "bounded" } else { "not bounded" }.into(),
        value: c_peak,
        threshold: 1.0,
        pass: c_peak <= 1.0 + 1e-9,
    });
    let i_peak = peak(&interior);
    let i_ok = i_peak < growth(&spike).max(1.0) || i_peak <= 1.0 + 1e-9;
    rep.verdicts.push(Verdict {
        name: "interior_bounded".into(),
        outcome: if i_ok { "bounded below the critical growth" } else { "not bounded" }.into(),
        value: i_peak,
        threshold: growth(&spike),
        pass: i_ok,
    });
    rep.notes.push(format!("critical m = {m_crit}, interior m = {m_int}, r = inf"));
    rep.levels = runs;
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SublinearParams {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    pub m: f64,
    pub q: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "default_sub_cells")]
    pub cells: usize,
    #[serde(default = "default_sub_t")]
    pub t_horizon: f64,
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_sub_cells() -> usize {
    48
}

fn default_sub_t() -> f64 {
    0.05
}

fn default_scales() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}

impl SublinearParams {
    pub fn new(n: u32, p: f64, m: f64, q: f64) -> Self {
        SublinearParams {
            n,
            p,
            m,
            q,
            gamma: 1.0,
            cells: default_sub_cells(),
            t_horizon: default_sub_t(),
            scales: default_scales(),
            solver: SolverConfig::default(),
        }
    }

    fn scenario(&self, q: f64, scale: f64, tag: &str) -> Scenario {
        let kind = if self.n == 2 { GridKind::Cartesian } else { GridKind::Radial };
        Scenario {
            name: format!("sublinear_{tag}_N{}_p{}_m{}_q{q}_s{scale}", self.n, self.p, self.m),
            seed: 0,
            problem: ProblemSection {
                n: self.n,
                p: self.p,
                q,
                gamma: self.gamma,
                coefficient: Default::default(),
                coefficient_bounds: None,
                expect_regime: None,
            },
            grid: GridSection {
                kind,
                dim: None,
                extent: 1.0,
                cells: self.cells,
                t_horizon: self.t_horizon,
            },
            datum: DatumSpec {
                profile: DatumProfile::Bump,
                amplitude: 1.0,
                radius: Some(0.25),
                width: None,
                center: None,
                eta: None,
                omega: None,
                path: None,
                normalize: true,
                norm_exponent: Some(self.m),
                norm_value: Some(scale),
                lebesgue: Some(self.m),
            },
            forcing: ForcingSpec {
                family: ForcingFamily::Bump,
                amplitude: Some(scale),
                radius: Some(0.25),
                center: None,
                j: None,
                m: Some(self.m),
                r: None,
                path: None,
            },
            solver: self.solver.clone(),
            probes: ProbeSpec::default(),
            base_dir: None,
        }
    }
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Sublinear runs with the `μ`-ledger `‖∇((1+|u|)^{μ-1}u)‖_p^p`, `μ = (m+p-2)/p`,
/// and a data-doubling sweep against a superlinear baseline.
pub fn sublinear_suite(params: &SublinearParams) -> Result<ProbeReport> {
    let (n, p, m, q) = (params.n, params.p, params.m, params.q);
    if !(p > 1.0 && p < 2.0) {
        return domain("sublinear suite needs 1 < p < 2");
    }
    if !(q > 0.0 && q <= p / 2.0) {
        return domain(format!("not sublinear: q = {q} exceeds p/2 = {}", p / 2.0));
    }
    let exps = formulas::sublinear_exponents(n, p, m)?;
    let mu = exps.mu;
    let s0 = params.scenario(q, 1.0, "run");
    s0.validate()?;
    let setup = s0.setup()?;
    if !setup.admissible {
        return domain(format!("m = {m} is not an admissible datum exponent for q = {q}"));
    }
    let q_base = 0.5 * (formulas::superlinear_threshold(n, p)?.max(p - n as f64 / (n as f64 + 2.0)) + p);
    let mut jobs = Vec::new();
    for &s in &params.scales {
        jobs.push(("sublinear", s, params.scenario(q, s, "run")));
    }
    for &s in &params.scales {
        jobs.push(("baseline", s, params.scenario(q_base, s, "baseline")));
    }
    let runs: Vec<LevelRecord> = jobs
        .par_iter()
        .map(|(tag, scale, s)| {
            let setup = s.setup()?;
            let traj = solve(&setup.u0, &s.solver, &setup.operator, &setup.rhs)?;
            let l = ledger(&traj, m, p, mu)?;
            let mut rec = record(format!("{tag}/scale={scale}"), s.grid.cells, &traj, l.clone(), l.grad_beta_energy);
            rec.extras.insert("scale".into(), *scale);
            rec.extras.insert("q".into(), s.problem.q);
            if m == 1.0 {
                let budget = l1_budget(&setup, &traj);
                if let Some(e) = l.marcinkiewicz.iter().find(|e| e.label == "grad_b2") {
                    rec.extras.insert("ratio_grad_b2".into(), if budget > 0.0 { e.value / budget } else { 0.0 });
                }
            }
            Ok(rec)
        })
        .collect::<Result<_>>()?;
    let k = params.scales.len();
    let sub: Vec<f64> = runs[..k].iter().map(|r| r.tracked).collect();
    let sup: Vec<f64> = runs[k..].iter().map(|r| r.tracked).collect();
    let slope_sub = loglog_slope(&params.scales, &sub);
    let slope_sup = loglog_slope(&params.scales, &sup);
    let mut rep = ProbeReport::new(format!("N{n}_p{p}_m{m}_q{q}"), "sublinear");
    rep.verdicts.push(Verdict {
        name: "sublinear_signature".into(),
        outcome: if slope_sub < slope_sup { "flatter than baseline" } else { "not flatter than baseline" }.into(),
        value: slope_sub,
        threshold: slope_sup,
        pass: slope_sub < slope_sup,
    });
    rep.notes.push(format!("mu = {mu}, baseline q = {q_base}; slopes are a trend report"));
    if mu == 1.0 {
        rep.notes.push("mu = 1: the ledger is the plain gradient energy".into());
    }
    rep.levels = runs;
    Ok(rep)
}

/// Calibration and monitoring of the parabolic Gagliardo–Nirenberg ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnStudy {
    pub h: f64,
    pub eta: f64,
    pub w: f64,
    pub y: f64,
    /// Largest ratio over concentrating bumps.
    pub calibrated_c: f64,
    pub calibration_ratios: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `max ratio / calibrated_c`.
    pub max_excess: f64,
    pub rejects_mismatched: bool,
}

fn random_smooth_trajectory(grid: &Arc<Grid>, rng: &mut ChaCha8Rng, steps: usize) -> Result<Trajectory> {
    let dim = grid.comp_dim();
    let ext = grid.spec().extent;
    let modes: Vec<(Vec<f64>, f64, f64)> = (0..6)
        .map(|_| {
            let k: Vec<f64> = (0..dim).map(|_| rng.gen_range(1..=3) as f64).collect();
            (k, rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0))
        })
        .collect();
    let t_end = grid.t_horizon();
    let times: Vec<f64> = (0..=steps).map(|k| t_end * k as f64 / steps as f64).collect();
    let states = times
        .iter()
        .map(|&t| {
            grid.sample(|x| {
                modes
                    .iter()
                    .map(|(k, a, b)| {
                        let s: f64 = k.iter().zip(x).map(|(ki, xi)| (PI * ki * xi / ext).sin()).product();
                        a * (b * t).exp() * s
                    })
                    .sum()
            })
        })
        .collect();
    Trajectory::from_samples(grid.clone(), times, states, TerminationStatus::Completed)
}

fn bump_trajectory(grid: &Arc<Grid>, width: f64, steps: usize) -> Result<Trajectory> {
    let ext = grid.spec().extent;
    let c = vec![0.5 * ext; grid.comp_dim()];
    let t_end = grid.t_horizon();
    let times: Vec<f64> = (0..=steps).map(|k| t_end * k as f64 / steps as f64).collect();
    let states = times
        .iter()
        .map(|&t| {
            let w = width * (1.0 + t / t_end);
            grid.sample(|x| super::data::smooth_bump(x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum(), w))
        })
        .collect();
    Trajectory::from_samples(grid.clone(), times, states, TerminationStatus::Completed)
}

/// Calibrates the constant on bumps of shrinking width, then evaluates
/// `count` random smooth space-time fields on a 2D grid.
pub fn gn_study(seed: u64, count: usize, cells: usize, h: f64, eta: f64) -> Result<GnStudy> {
    let grid = Arc::new(Grid::cartesian_unit(2, cells, 1.0)?);
    let n = 2.0;
    let w = eta * (n + h) / n;
    let y = w;
    let steps = 8;
    let widths: Vec<f64> = (0..8).map(|k| 0.45 * 0.75f64.powi(k)).filter(|&r| r >= 4.0 * grid.h()).collect();
    let calibration_ratios: Vec<f64> = widths
        .iter()
        .map(|&r| Ok(gn_check(&bump_trajectory(&grid, r, steps)?, h, eta, w, y)?.ratio))
        .collect::<Result<_>>()?;
    let calibrated_c = calibration_ratios.iter().copied().fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(count);
    for _ in 0..count {
        let traj = random_smooth_trajectory(&grid, &mut rng, steps)?;
        ratios.push(gn_check(&traj, h, eta, w, y)?.ratio);
    }
    let max_excess = ratios.iter().copied().fold(0.0, f64::max) / calibrated_c;
    let probe = bump_trajectory(&grid, 0.3, steps)?;
    let rejects_mismatched = gn_relation_residual(2, h, eta, w, y + 0.5).abs() > 1e-9
        && gn_check(&probe, h, eta, w, y + 0.5).is_err()
        && gn_check(&probe, h, eta, w * 1.1, y).is_err();
    Ok(GnStudy {
        h,
        eta,
        w,
        y,
        calibrated_c,
        calibration_ratios,
        ratios,
        max_excess,
        rejects_mismatched,
    })
}
