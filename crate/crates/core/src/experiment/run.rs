use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::ProbeReport;
use super::scenario::{GridKind, Scenario, Setup};
use super::studies::{heat_order_study, refinement_report, HeatOrderReport};
use crate::error::{Error, Result};
use crate::field::{field_to_csv, gn_check, ledger, ledger_time_series, EstimateLedger, TerminationStatus, Trajectory};
use crate::regime::RegimeReport;
use crate::solver::{
    approximation_sequence, comparison_run, solve, weak_residual, ConvergenceDiagnostics, TestFunction, WeakResidual,
    WeakResidualMode,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub min_gap: f64,
    pub common_samples: usize,
    pub source_free_status: TerminationStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakResidualSummary {
    pub scheme: WeakResidual,
    pub continuum: WeakResidual,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeResults {
    pub comparison: Option<ComparisonSummary>,
    pub weak_residual: Option<WeakResidualSummary>,
    pub refinement: Option<ProbeReport>,
    pub truncation: Option<ConvergenceDiagnostics>,
    pub manufactured: Option<HeatOrderReport>,
}

/// Everything needed to reproduce and audit one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub seed: u64,
    pub input_hash: String,
    pub version: String,
    pub scenario: Scenario,
    pub regime: RegimeReport,
    pub admissible_data: bool,
    /// `completed`, `blowup` or `newton_failure`.
    pub status: String,
    pub termination: TerminationStatus,
    pub final_time: f64,
    pub steps: usize,
    pub ledger: Option<EstimateLedger>,
    pub probes: ProbeResults,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub trajectory: Trajectory,
    pub time_series: String,
}

pub(crate) fn ledger_for(setup: &Setup, traj: &Trajectory, with_marcinkiewicz: bool) -> Result<EstimateLedger> {
    let mut l = ledger(traj, setup.ledger_sigma, setup.operator.p, setup.ledger_beta)?;
    if !with_marcinkiewicz {
        l.marcinkiewicz.clear();
    }
    Ok(l)
}

fn test_function(s: &Scenario) -> TestFunction {
    let ext = s.grid.extent;
    match s.grid.kind {
        GridKind::Radial => TestFunction::radial(0.9 * ext),
        GridKind::Cartesian => {
            let dim = s.grid.dim.unwrap_or(s.problem.n as usize);
            TestFunction::bump(vec![0.5 * ext; dim], 0.4 * ext)
        }
    }
}

/// Executes one scenario with all requested probes.
pub fn run_scenario(s: &Scenario) -> Result<RunOutcome> {
    s.validate()?;
    let setup = s.setup()?;
    let traj = solve(&setup.u0, &s.solver, &setup.operator, &setup.rhs)?;
    let mut ledger_value = if s.probes.ledger || s.probes.marcinkiewicz || !s.probes.gn.is_empty() {
        Some(ledger_for(&setup, &traj, s.probes.marcinkiewicz)?)
    } else {
        None
    };
    if let Some(l) = ledger_value.as_mut() {
        for g in &s.probes.gn {
            l.gn_residuals.push(gn_check(&traj, g.h, g.eta, g.w, g.y)?);
        }
    }
    let mut probes = ProbeResults::default();
    if s.probes.comparison {
        let c = comparison_run(&setup.u0, &s.solver, &setup.operator, &setup.rhs)?;
        probes.comparison = Some(ComparisonSummary {
            min_gap: c.min_gap,
            common_samples: c.common_samples,
            source_free_status: c.big_u.status(),
        });
    }
    if s.probes.weak_residual {
        let phi = test_function(s);
        let w = |mode| weak_residual(&traj, &s.solver, &setup.operator, &setup.rhs, &phi, mode);
        probes.weak_residual = Some(WeakResidualSummary {
            scheme: w(WeakResidualMode::Scheme)?,
            continuum: w(WeakResidualMode::Continuum)?,
        });
    }
    if s.probes.refinement_levels.len() >= 2 {
        probes.refinement = Some(refinement_report(s, &s.probes.refinement_levels, "refinement")?);
    }
    if !s.probes.truncation_levels.is_empty() {
        probes.truncation = Some(approximation_sequence(
            &setup.u0,
            &s.solver,
            &setup.operator,
            &setup.rhs,
            &s.probes.truncation_levels,
            1e-3,
        )?);
    }
    if s.probes.manufactured {
        let levels = if s.probes.refinement_levels.len() >= 3 {
            s.probes.refinement_levels.clone()
        } else {
            vec![128, 256, 512]
        };
        probes.manufactured = Some(heat_order_study(s, &levels)?);
    }
    let time_series = ledger_time_series(&traj, setup.ledger_sigma, setup.operator.p, setup.ledger_beta);
    let manifest = RunManifest {
        name: s.name.clone(),
        seed: s.seed,
        input_hash: s.input_hash()?,
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: s.clone(),
        regime: setup.report.clone(),
        admissible_data: setup.admissible,
        status: traj.status().label().to_string(),
        termination: traj.status(),
        final_time: traj.final_time(),
        steps: traj.len() - 1,
        ledger: ledger_value,
        probes,
    };
    Ok(RunOutcome {
        manifest,
        trajectory: traj,
        time_series,
    })
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Format(e.to_string()))
}

/// Writes `manifest.json`, `time_series.csv` and `final_state.csv` into `dir`.
pub fn write_run(dir: &Path, out: &RunOutcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("manifest.json"), to_json(&out.manifest)?)?;
    std::fs::write(dir.join("time_series.csv"), &out.time_series)?;
    std::fs::write(dir.join("final_state.csv"), field_to_csv(&out.trajectory.final_field()))?;
    Ok(())
}

/// Writes `report.json` and one `<probe>_<scenario>.csv` per report into `dir`.
pub fn write_probe_reports(dir: &Path, reports: &[ProbeReport]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), to_json(&reports)?)?;
    for r in reports {
        std::fs::write(dir.join(format!("{}_{}.csv", r.probe, r.scenario)), r.to_csv())?;
    }
    Ok(())
}
