use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::RunManifest;
use crate::error::{config_err, Error, Result};
use crate::field::{EstimateLedger, TerminationStatus};

/// One run inside a probe: a refinement level or a member of a data family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub label: String,
    pub cells: usize,
    pub status: TerminationStatus,
    pub final_time: f64,
    pub steps: usize,
    /// The quantity the verdicts are computed from.
    pub tracked: f64,
    pub ledger: EstimateLedger,
    pub extras: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub outcome: String,
    /// Drift, growth factor or slope the outcome is based on.
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Least-squares fit of `∫_{B_r} U(t) ≈ c t^{a} r^{b}` in log space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnackFit {
    pub lambda: f64,
    pub exponent_t: f64,
    pub exponent_r: f64,
    pub c_fit: f64,
    /// Root mean square of the log residuals.
    pub log_rms: f64,
    /// Smallest observed `∫_{B_r} U / (c_fit t^a r^b)`.
    pub min_ratio: f64,
    pub samples: usize,
}

/// Fitted constant `c` in `value ≈ c · scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantFit {
    pub label: String,
    pub c: f64,
    pub log_rms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub scenario: String,
    pub probe: String,
    pub levels: Vec<LevelRecord>,
    pub verdicts: Vec<Verdict>,
    pub harnack: Option<HarnackFit>,
    pub fits: Vec<ConstantFit>,
    pub notes: Vec<String>,
}

impl ProbeReport {
    pub fn new(scenario: impl Into<String>, probe: impl Into<String>) -> Self {
        ProbeReport {
            scenario: scenario.into(),
            probe: probe.into(),
            levels: Vec::new(),
            verdicts: Vec::new(),
            harnack: None,
            fits: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    /// Per-level table; extra columns are the union of all extras, sorted.
    pub fn to_csv(&self) -> String {
        let keys: BTreeSet<&String> = self.levels.iter().flat_map(|l| l.extras.keys()).collect();
        let mut out = String::from("label,cells,status,final_time,steps,tracked,sup_t_lsigma,grad_beta_energy,total");
        for k in &keys {
            out.push(',');
            out.push_str(k);
        }
        out.push('\n');
        for l in &self.levels {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                l.label,
                l.cells,
                l.status.label(),
                l.final_time,
                l.steps,
                l.tracked,
                l.ledger.sup_t_lsigma,
                l.ledger.grad_beta_energy,
                l.ledger.total
            );
            for k in &keys {
                match l.extras.get(*k) {
                    Some(v) => {
                        let _ = write!(out, ",{v}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// `|b - a| / |b|` (or `|b - a|` when `b = 0`).
pub fn relative_drift(a: f64, b: f64) -> f64 {
    let d = (b - a).abs();
    if b != 0.0 {
        d / b.abs()
    } else {
        d
    }
}

fn manifest_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<Vec<_>>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if path.is_dir() {
            manifest_files(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == "manifest.json") {
            out.push(path);
        }
    }
    Ok(())
}

fn probe_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<Vec<_>>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if path.is_dir() {
            probe_files(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == "report.json") {
            out.push(path);
        }
    }
    Ok(())
}

/// Run manifests and probe reports found below `dir`, sorted by name.
#[derive(Clone, Debug, Default)]
pub struct Collected {
    pub manifests: Vec<RunManifest>,
    pub probes: Vec<ProbeReport>,
}

pub fn collect(dir: &Path) -> Result<Collected> {
    if !dir.is_dir() {
        return Err(config_err(dir.display().to_string(), "not a directory"));
    }
    let mut files = Vec::new();
    manifest_files(dir, &mut files)?;
    let mut manifests = Vec::with_capacity(files.len());
    for f in &files {
        let text = std::fs::read_to_string(f)?;
        let m: RunManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", f.display())))?;
        manifests.push(m);
    }
    let mut pfiles = Vec::new();
    probe_files(dir, &mut pfiles)?;
    let mut probes = Vec::new();
    for f in &pfiles {
        let text = std::fs::read_to_string(f)?;
        let r: Vec<ProbeReport> = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", f.display())))?;
        probes.extend(r);
    }
    if manifests.is_empty() && probes.is_empty() {
        return Err(config_err(dir.display().to_string(), "no manifests or probe reports found"));
    }
    manifests.sort_by(|a, b| a.name.cmp(&b.name));
    probes.sort_by(|a, b| (&a.scenario, &a.probe).cmp(&(&b.scenario, &b.probe)));
    Ok(Collected { manifests, probes })
}

pub fn summary_csv(c: &Collected) -> String {
    let mut out = String::from(
        "name,N,p,q,gamma,regime,admissible,status,final_time,steps,sup_t_lsigma,grad_beta_energy,total,input_hash\n",
    );
    for m in &c.manifests {
        let (s, e, t) = m
            .ledger
            .as_ref()
            .map(|l| (l.sup_t_lsigma, l.grad_beta_energy, l.total))
            .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            m.name,
            m.scenario.problem.n,
            m.scenario.problem.p,
            m.scenario.problem.q,
            m.scenario.problem.gamma,
            m.regime.regime.tag(),
            m.admissible_data,
            m.status,
            m.final_time,
            m.steps,
            s,
            e,
            t,
            m.input_hash
        );
    }
    out
}

pub fn summary_text(c: &Collected) -> String {
    let mut out = String::new();
    if !c.manifests.is_empty() {
        let _ = writeln!(out, "{} run(s)", c.manifests.len());
        let width = c.manifests.iter().map(|m| m.name.len()).max().unwrap_or(4).max(4);
        let _ = writeln!(out, "{:<width$}  {:<18}  {:<14}  {:>10}  {:>6}  {:>14}", "name", "regime", "status", "t_final", "steps", "ledger_total");
        for m in &c.manifests {
            let total = m.ledger.as_ref().map(|l| l.total).unwrap_or(f64::NAN);
            let _ = writeln!(
                out,
                "{:<width$}  {:<18}  {:<14}  {:>10.4e}  {:>6}  {:>14.6e}",
                m.name,
                m.regime.regime.tag(),
                m.status,
                m.final_time,
                m.steps,
                total
            );
        }
    }
    for p in &c.probes {
        let _ = writeln!(out, "\n{} / {}", p.probe, p.scenario);
        for v in &p.verdicts {
            let _ = writeln!(
                out,
                "  {:<24} {:<28} value={:.4e} threshold={:.4e} {}",
                v.name,
                v.outcome,
                v.value,
                v.threshold,
                if v.pass { "pass" } else { "fail" }
            );
        }
        for n in &p.notes {
            let _ = writeln!(out, "  note: {n}");
        }
    }
    out
}
