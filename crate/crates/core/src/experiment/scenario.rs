use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::data::{sample_datum, sample_forcing};
use crate::error::{config_err, Error, Result};
use crate::field::{CoefficientMatrix, CoefficientModel, Field, Grid, GridMode, GridSpec};
use crate::regime::{admissible_data, classify, classify_with_datum, DataSpaceSpec, ProblemExponents, Regime, RegimeReport};
use crate::solver::{Operator, RhsSpec, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemSection,
    pub grid: GridSection,
    pub datum: DatumSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub probes: ProbeSpec,
    /// Directory that relative file paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    #[default]
    Identity,
    Scalar,
    RandomSpd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    pub q: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default)]
    pub coefficient: CoefficientKind,
    /// Scalar value, or the ellipticity bounds `[alpha, lambda]` of `random_spd`.
    #[serde(default)]
    pub coefficient_bounds: Option<[f64; 2]>,
    /// Regime tag the exponents must classify to.
    #[serde(default)]
    pub expect_regime: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Cartesian,
    Radial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub kind: GridKind,
    /// Cartesian dimension; defaults to `N`.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default = "one")]
    pub extent: f64,
    pub cells: usize,
    pub t_horizon: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatumProfile {
    /// `A Π sin(π x_i / L)`; radial: `A sin(π r/R)/(π r/R)`.
    Sine,
    /// `A (1 - |x-c|²/ρ²)³₊`
    Bump,
    /// `A exp(-|x-c|²/(2w²))`
    Gaussian,
    Constant,
    /// `A |x-c|^{-N/η+ω}` on `|x-c| < ρ`, sampled by `L^η` cell means.
    PowerLaw,
    /// Nodal values from a CSV (last column) or a binary dump.
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumSpec {
    pub profile: DatumProfile,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Rescale so that `‖u₀‖_{L^s} = norm_value`; `s` defaults to `σ`.
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub norm_exponent: Option<f64>,
    #[serde(default)]
    pub norm_value: Option<f64>,
    /// Declared Lebesgue exponent of the datum (default: `η` for power laws, `∞` otherwise).
    #[serde(default)]
    pub lebesgue: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingFamily {
    #[default]
    None,
    Constant,
    Bump,
    /// `A j^{N/m} bump(j (x - c))`: constant `L^m` norm, concentrating support.
    Spike,
    File,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    #[serde(default)]
    pub family: ForcingFamily,
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub j: Option<f64>,
    /// Space exponent of `L^r(0,T;L^m)`; default `∞`.
    #[serde(default)]
    pub m: Option<f64>,
    /// Time exponent; default `∞` (the forcing is time independent).
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnProbe {
    pub h: f64,
    pub eta: f64,
    pub w: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSpec {
    pub ledger: bool,
    pub marcinkiewicz: bool,
    pub gn: Vec<GnProbe>,
    pub comparison: bool,
    pub weak_residual: bool,
    /// Grid cell counts for a refinement study.
    pub refinement_levels: Vec<usize>,
    /// Truncation levels `n` of the approximating problems.
    pub truncation_levels: Vec<f64>,
    /// Observed convergence orders against the separable heat solution.
    pub manufactured: bool,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            ledger: true,
            marcinkiewicz: true,
            gn: Vec::new(),
            comparison: false,
            weak_residual: false,
            refinement_levels: Vec::new(),
            truncation_levels: Vec::new(),
            manufactured: false,
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Input format of a config file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

impl ConfigFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ConfigFormat::Json,
            _ => ConfigFormat::Toml,
        }
    }
}

/// Parses TOML or JSON into a generic value.
pub fn parse_value(text: &str, format: ConfigFormat) -> Result<serde_json::Value> {
    match format {
        ConfigFormat::Toml => toml::from_str(text).map_err(|e| config_err("<toml>", e.to_string().trim_end())),
        ConfigFormat::Json => serde_json::from_str(text).map_err(|e| config_err("<json>", e.to_string())),
    }
}

/// Deserializes a value, reporting the dotted path of the offending key.
pub fn from_value<T: DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        config_err(path, e.into_inner().to_string())
    })
}

/// Sets `value` at a dotted key path, creating tables on the way.
pub fn set_dotted(root: &mut serde_json::Value, key: &str, value: serde_json::Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| config_err(key, "path crosses a non-table value"))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    Err(config_err(key, "empty key"))
}

/// Everything a run needs, resolved from a scenario.
#[derive(Clone, Debug)]
pub struct Setup {
    pub grid: Arc<Grid>,
    pub u0: Field,
    pub operator: Operator,
    pub rhs: RhsSpec,
    pub exponents: ProblemExponents,
    pub report: RegimeReport,
    pub data_spaces: DataSpaceSpec,
    pub admissible: bool,
    /// Exponent and power of the ledger: `σ` and `β` (sublinear: `m` and `μ`).
    pub ledger_sigma: f64,
    pub ledger_beta: f64,
}

impl Scenario {
    pub fn from_str(text: &str, format: ConfigFormat) -> Result<Self> {
        let s: Scenario = from_value(parse_value(text, format)?)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut s = Self::from_str(&text, ConfigFormat::from_path(path))?;
        s.base_dir = path.parent().map(Path::to_path_buf);
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(config_err("name", "must be a non-empty file-name-safe string"));
        }
        let e = self.exponents()?;
        if let Some(tag) = &self.problem.expect_regime {
            let got = self.regime_report(&e)?.regime;
            if got.tag() != tag {
                return Err(config_err(
                    "problem.expect_regime",
                    format!("exponents classify as {}, not {tag}", got.tag()),
                ));
            }
        }
        if self.grid.kind == GridKind::Cartesian {
            let dim = self.grid.dim.unwrap_or(self.problem.n as usize);
            if !(1..=3).contains(&dim) {
                return Err(config_err("grid.dim", "Cartesian grids have dimension 1, 2 or 3"));
            }
        }
        if self.grid.cells < 2 {
            return Err(config_err("grid.cells", "need at least 2 cells"));
        }
        if !(self.grid.extent > 0.0 && self.grid.t_horizon > 0.0) {
            return Err(config_err("grid", "extent and t_horizon must be positive"));
        }
        self.solver
            .validate()
            .map_err(|e| config_err("solver", e.to_string()))?;
        Ok(())
    }

    /// Classification exponents; with `γ = 0` the source is absent and the
    /// shape `(N, p, q)` is classified as if `γ = 1`.
    pub fn exponents(&self) -> Result<ProblemExponents> {
        let pr = &self.problem;
        let e = if pr.gamma == 0.0 {
            ProblemExponents::shape(pr.n, pr.p, pr.q)
        } else {
            ProblemExponents::new(pr.n, pr.p, pr.q, pr.gamma)
        };
        e.map_err(|e| config_err("problem", e.to_string()))
    }

    fn datum_lebesgue(&self) -> f64 {
        match self.datum.lebesgue {
            Some(s) => s,
            None if self.datum.profile == DatumProfile::PowerLaw => self.datum.eta.unwrap_or(1.0),
            None => f64::INFINITY,
        }
    }

    fn regime_report(&self, e: &ProblemExponents) -> Result<RegimeReport> {
        let sigma_datum = self.datum_lebesgue();
        let base = classify(e);
        if let Regime::Sublinear(_) = base.regime {
            if sigma_datum.is_finite() {
                return classify_with_datum(e, sigma_datum).map_err(|err| config_err("datum.lebesgue", err.to_string()));
            }
        }
        Ok(base)
    }

    pub fn grid_spec(&self, cells: usize) -> GridSpec {
        let mode = match self.grid.kind {
            GridKind::Cartesian => GridMode::Cartesian {
                dim: self.grid.dim.unwrap_or(self.problem.n as usize),
            },
            GridKind::Radial => GridMode::Radial { n: self.problem.n },
        };
        GridSpec {
            mode,
            extent: self.grid.extent,
            cells,
            t_horizon: self.grid.t_horizon,
        }
    }

    fn base_dir(&self) -> &Path {
        self.base_dir.as_deref().unwrap_or(Path::new("."))
    }

    /// Resolves the scenario at its own resolution.
    pub fn setup(&self) -> Result<Setup> {
        self.setup_at(self.grid.cells)
    }

    /// Resolves the scenario on a grid with `cells` cells per axis.
    pub fn setup_at(&self, cells: usize) -> Result<Setup> {
        let grid = Arc::new(Grid::new(self.grid_spec(cells)).map_err(|e| config_err("grid", e.to_string()))?);
        let exponents = self.exponents()?;
        let report = self.regime_report(&exponents)?;
        let p = self.problem.p;
        let (ledger_sigma, ledger_beta) = match (report.regime, self.datum_lebesgue()) {
            (Regime::Sublinear(_), m) if m.is_finite() => (m, (m + p - 2.0) / p),
            (Regime::Sublinear(_), _) => (2.0, 1.0),
            _ => {
                let s = report.required_sigma.filter(|s| *s >= 1.0).unwrap_or(1.0);
                (s, (s + p - 2.0) / p)
            }
        };
        let norm_exponent = self.datum.norm_exponent.unwrap_or(ledger_sigma);
        let u0 = sample_datum(&self.datum, &grid, norm_exponent, self.base_dir())
            .map_err(|e| config_err("datum", e.to_string()))?;
        let forcing =
            sample_forcing(&self.forcing, &grid, self.base_dir()).map_err(|e| config_err("forcing", e.to_string()))?;
        let model = match self.problem.coefficient {
            CoefficientKind::Identity => CoefficientModel::Identity,
            CoefficientKind::Scalar => CoefficientModel::Scalar {
                value: self.problem.coefficient_bounds.map(|b| b[0]).unwrap_or(1.0),
            },
            CoefficientKind::RandomSpd => {
                let [alpha, lambda] = self.problem.coefficient_bounds.unwrap_or([0.5, 2.0]);
                CoefficientModel::RandomSpd {
                    alpha,
                    lambda,
                    seed: self.seed,
                }
            }
        };
        let coeff = CoefficientMatrix::build(&grid, model).map_err(|e| config_err("problem.coefficient", e.to_string()))?;
        let operator = Operator::new(p, coeff)?;
        let mut rhs = RhsSpec::gradient(self.problem.gamma, self.problem.q);
        if forcing.iter().any(|&v| v != 0.0) {
            rhs = rhs.with_forcing(forcing);
        }
        let data_spaces = DataSpaceSpec::new(
            self.forcing.m.unwrap_or(f64::INFINITY),
            self.forcing.r.unwrap_or(f64::INFINITY),
            self.datum_lebesgue(),
        )
        .map_err(|e| config_err("forcing", e.to_string()))?;
        let admissible = admissible_data(&exponents, &data_spaces);
        Ok(Setup {
            u0: Field::new(grid.clone(), u0)?,
            grid,
            operator,
            rhs,
            exponents,
            report,
            data_spaces,
            admissible,
            ledger_sigma,
            ledger_beta,
        })
    }

    /// SHA-256 over the canonical JSON of the scenario and any input files.
    pub fn input_hash(&self) -> Result<String> {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(self).map_err(|e| Error::Format(e.to_string()))?);
        for path in [&self.datum.path, &self.forcing.path].into_iter().flatten() {
            hasher.update(std::fs::read(self.base_dir().join(path))?);
        }
        Ok(hex::encode(hasher.finalize()))
    }
}
