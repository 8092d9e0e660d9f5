use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::report::ProbeReport;
use super::run::{run_scenario, write_probe_reports, write_run, RunManifest};
use super::scenario::{from_value, parse_value, set_dotted, ConfigFormat, Scenario};
use super::studies::{
    equi_integrability_stress, heat_order_study, marcinkiewicz_verification, regime_stability_study, sharpness_probe,
    sublinear_suite, SharpnessParams, SpikeParams, SublinearParams,
};
use crate::error::{config_err, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// Plain runs over the expanded grid of scenarios.
    Grid,
    RegimeStability,
    Sharpness,
    Marcinkiewicz,
    EquiIntegrability,
    Sublinear,
    HeatOrder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub name: String,
    pub kind: StudyKind,
    /// Scenario file, relative to the study file.
    #[serde(default)]
    pub base: Option<PathBuf>,
    /// Inline scenario table, used when `base` is absent.
    #[serde(default)]
    pub scenario: Option<Value>,
    /// Dotted key to list of values; the study runs the Cartesian product.
    #[serde(default)]
    pub vary: BTreeMap<String, Vec<Value>>,
    #[serde(default)]
    pub refinements: Vec<usize>,
    #[serde(default)]
    pub sharpness: Option<Value>,
    #[serde(default)]
    pub spikes: Option<Value>,
    #[serde(default)]
    pub sublinear: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub study: StudySection,
}

#[derive(Clone, Debug, Default)]
pub struct StudyOutcome {
    pub manifests: Vec<RunManifest>,
    pub reports: Vec<ProbeReport>,
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    pub jobs: Option<usize>,
    /// Replaces every scenario seed.
    pub seed: Option<u64>,
}

fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// All combinations of `vary`, applied to `base`, with a name suffix each.
pub fn expand(base: &Value, vary: &BTreeMap<String, Vec<Value>>) -> Result<Vec<(String, Value)>> {
    let mut out = vec![(String::new(), base.clone())];
    for (key, values) in vary {
        if values.is_empty() {
            return Err(config_err(format!("study.vary.{key}"), "empty value list"));
        }
        let last = key.rsplit('.').next().unwrap_or(key);
        let mut next = Vec::with_capacity(out.len() * values.len());
        for (suffix, v) in &out {
            for x in values {
                let mut v = v.clone();
                set_dotted(&mut v, key, x.clone())?;
                next.push((format!("{suffix}_{last}{}", value_label(x)), v));
            }
        }
        out = next;
    }
    Ok(out)
}

impl StudyFile {
    pub fn from_str(text: &str, format: ConfigFormat) -> Result<Self> {
        from_value(parse_value(text, format)?)
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)?;
        let f = Self::from_str(&text, ConfigFormat::from_path(path))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((f, dir))
    }

    fn base_scenario(&self, dir: &Path) -> Result<(Value, PathBuf)> {
        let s = &self.study;
        match (&s.base, &s.scenario) {
            (Some(p), None) => {
                let path = dir.join(p);
                let text = std::fs::read_to_string(&path)?;
                let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
                Ok((parse_value(&text, ConfigFormat::from_path(&path))?, base_dir))
            }
            (None, Some(v)) => Ok((v.clone(), dir.to_path_buf())),
            (Some(_), Some(_)) => Err(config_err("study", "give either base or scenario, not both")),
            (None, None) => Err(config_err("study", "needs base or scenario")),
        }
    }

    /// The expanded scenarios, in a fixed order.
    pub fn scenarios(&self, dir: &Path, seed: Option<u64>) -> Result<Vec<Scenario>> {
        let (base, base_dir) = self.base_scenario(dir)?;
        let stem = base.get("name").and_then(Value::as_str).unwrap_or(&self.study.name).to_string();
        expand(&base, &self.study.vary)?
            .into_iter()
            .map(|(suffix, mut v)| {
                set_dotted(&mut v, "name", Value::String(format!("{stem}{suffix}")))?;
                if let Some(seed) = seed {
                    set_dotted(&mut v, "seed", Value::from(seed))?;
                }
                let mut s: Scenario = from_value(v)?;
                s.validate()?;
                s.base_dir = Some(base_dir.clone());
                Ok(s)
            })
            .collect()
    }

    fn params<T: serde::de::DeserializeOwned>(&self, section: &Option<Value>, key: &str) -> Result<Vec<(String, T)>> {
        let base = section.clone().ok_or_else(|| config_err(format!("study.{key}"), "missing section"))?;
        expand(&base, &self.study.vary)?
            .into_iter()
            .map(|(suffix, v)| {
                from_value(v)
                    .map(|t| (suffix, t))
                    .map_err(|e| match e {
                        Error::Config { path, message } => config_err(format!("study.{key}.{path}"), message),
                        other => other,
                    })
            })
            .collect()
    }

    /// Runs the study and writes its artifacts below `out`.
    pub fn run(&self, dir: &Path, out: &Path, opts: &SweepOptions) -> Result<StudyOutcome> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(j) = opts.jobs {
            builder = builder.num_threads(j.max(1));
        }
        let pool = builder.build().map_err(|e| Error::Numerical(e.to_string()))?;
        pool.install(|| self.run_inner(dir, out, opts))
    }

    fn run_inner(&self, dir: &Path, out: &Path, opts: &SweepOptions) -> Result<StudyOutcome> {
        let st = &self.study;
        let mut outcome = StudyOutcome::default();
        match st.kind {
            StudyKind::Grid => {
                let scen = self.scenarios(dir, opts.seed)?;
                let runs: Vec<_> = scen.par_iter().map(run_scenario).collect::<Result<_>>()?;
                for r in runs {
                    write_run(&out.join(&r.manifest.name), &r)?;
                    if let Some(rep) = &r.manifest.probes.refinement {
                        outcome.reports.push(rep.clone());
                    }
                    outcome.manifests.push(r.manifest);
                }
            }
            StudyKind::RegimeStability | StudyKind::Marcinkiewicz | StudyKind::EquiIntegrability => {
                let scen = self.scenarios(dir, opts.seed)?;
                let spikes: SpikeParams = match &st.spikes {
                    Some(v) => from_value(v.clone())?,
                    None => SpikeParams::default(),
                };
                for s in &scen {
                    let rep = match st.kind {
                        StudyKind::RegimeStability => regime_stability_study(s, &st.refinements)?,
                        StudyKind::Marcinkiewicz => marcinkiewicz_verification(s, &st.refinements)?,
                        _ => equi_integrability_stress(s, &spikes)?,
                    };
                    outcome.reports.push(rep);
                }
            }
            StudyKind::HeatOrder => {
                let levels = if st.refinements.is_empty() { vec![128, 256, 512] } else { st.refinements.clone() };
                for s in self.scenarios(dir, opts.seed)? {
                    let h = heat_order_study(&s, &levels)?;
                    let mut rep = ProbeReport::new(&s.name, "heat_order");
                    rep.notes.push(format!(
                        "observed spatial order {:.4}, temporal order {:.4}, finest error {:.3e}",
                        h.observed_spatial_order, h.observed_temporal_order, h.finest_error
                    ));
                    outcome.reports.push(rep);
                }
            }
            StudyKind::Sharpness => {
                for (_, p) in self.params::<SharpnessParams>(&st.sharpness, "sharpness")? {
                    outcome.reports.push(sharpness_probe(&p)?);
                }
            }
            StudyKind::Sublinear => {
                for (_, p) in self.params::<SublinearParams>(&st.sublinear, "sublinear")? {
                    outcome.reports.push(sublinear_suite(&p)?);
                }
            }
        }
        if !outcome.reports.is_empty() {
            write_probe_reports(&out.join(&st.name), &outcome.reports)?;
        }
        Ok(outcome)
    }
}
