//! `splb`: regime queries, atlases, scenario runs, sweeps and reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use splb_core::experiment::{
    collect, run_scenario, summary_csv, summary_text, write_run, Scenario, StudyFile, SweepOptions,
};
use splb_core::regime::{
    admissible_data, atlas, atlas_csv, atlas_range, atlas_svg, classify, classify_with_datum, Atlas,
};
use splb_core::{DataSpaceSpec, Error, Exponent, ExtExponent, ProblemExponents, Regime, RegimeReport, Result};

#[derive(Parser)]
#[command(name = "splb", version, about = "Parabolic problems with a superlinear gradient source")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regime, critical exponents and data spaces of (N, p, q).
    Classify(ClassifyArgs),
    /// Colored q-axis breakpoints for one or more p, as SVG and CSV.
    Atlas(AtlasArgs),
    /// Run one scenario file.
    Run(RunArgs),
    /// Run a study file (parameter grid or probe study).
    Sweep(SweepArgs),
    /// Merge manifests and probe reports below a directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(short = 'N')]
    n: u32,
    /// Decimal or fraction, e.g. `2` or `9/5`.
    #[arg(short = 'p', allow_hyphen_values = true)]
    p: String,
    #[arg(short = 'q', allow_hyphen_values = true)]
    q: String,
    /// Space exponent of the forcing, `f ∈ L^r(0,T;L^m)`; `inf` allowed.
    #[arg(long)]
    m: Option<String>,
    /// Time exponent of the forcing.
    #[arg(long)]
    r: Option<String>,
    /// Lebesgue exponent of the datum; defaults to the required one.
    #[arg(long)]
    sigma_datum: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AtlasArgs {
    #[arg(short = 'N')]
    n: u32,
    /// Explicit p values; overrides the range flags.
    #[arg(short = 'p', num_args = 1.., value_delimiter = ',')]
    p: Vec<String>,
    #[arg(long)]
    p_min: Option<String>,
    #[arg(long)]
    p_max: Option<String>,
    #[arg(long, default_value_t = 5)]
    samples: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SweepArgs {
    study: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ReportArgs {
    dir: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Classify(a) => cmd_classify(&a),
        Command::Atlas(a) => cmd_atlas(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Report(a) => cmd_report(&a),
    };
    match res {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exponent(s: &str) -> Result<Exponent> {
    s.trim().parse()
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("SPLB_SEED") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| Error::Config {
            path: "SPLB_SEED".into(),
            message: format!("not an unsigned integer: `{v}`"),
        }),
        Err(_) => Ok(None),
    }
}

/// Creates `dir`, refusing a non-empty one unless `force` is set.
fn prepare_out(dir: &Path, force: bool) -> Result<()> {
    if dir.is_dir() && std::fs::read_dir(dir)?.next().is_some() && !force {
        return Err(Error::Config {
            path: dir.display().to_string(),
            message: "output directory is not empty (use --force to overwrite)".into(),
        });
    }
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v}"))
}

fn cmd_classify(a: &ClassifyArgs) -> Result<String> {
    let e = ProblemExponents::shape_exact(a.n, exponent(&a.p)?, exponent(&a.q)?)?;
    let report = match &a.m {
        Some(m) if matches!(classify(&e).regime, Regime::Sublinear(_)) => {
            let m: ExtExponent = m.parse()?;
            match m {
                ExtExponent::Finite(v) => classify_with_datum(&e, v.value())?,
                ExtExponent::Infinite => classify_with_datum(&e, 2.0)?,
            }
        }
        _ => classify(&e),
    };
    let admissible = match (&a.m, &a.r) {
        (Some(m), Some(r)) => Some(admissibility(&e, &report, m, r, a.sigma_datum.as_deref())?),
        _ => None,
    };
    if a.json {
        let v = serde_json::json!({ "report": report, "admissible": admissible });
        let text = serde_json::to_string_pretty(&v).map_err(|e| Error::Format(e.to_string()))?;
        return Ok(text + "\n");
    }
    let d = &report.derived;
    let mut out = String::new();
    let _ = writeln!(out, "regime:    {} ({})", report.regime, report.regime.tag());
    let _ = writeln!(out, "sigma:     {}", opt(d.sigma));
    let _ = writeln!(out, "beta:      {}", opt(d.beta));
    let _ = writeln!(out, "eta:       {}", opt(d.eta_grad));
    let notion = report.solution_notion.map_or_else(|| "-".to_string(), |n| format!("{n:?}"));
    let _ = writeln!(out, "solution:  {notion}");
    let _ = writeln!(out, "datum:     u0 in {}", report.datum_space);
    let _ = writeln!(out, "forcing:   f in {}", report.forcing_space);
    if let Some(ok) = admissible {
        let _ = writeln!(out, "admissible: {ok}");
    }
    if !report.notes.is_empty() {
        let _ = writeln!(out, "notes:     {}", report.notes);
    }
    Ok(out)
}

fn admissibility(e: &ProblemExponents, report: &RegimeReport, m: &str, r: &str, sigma: Option<&str>) -> Result<bool> {
    let sigma_datum = match sigma {
        Some(s) => s.parse()?,
        None => ExtExponent::finite(report.required_sigma.unwrap_or(1.0))?,
    };
    let spec = DataSpaceSpec {
        m: m.parse()?,
        r: r.parse()?,
        sigma_datum,
    };
    Ok(admissible_data(e, &spec))
}

fn cmd_atlas(a: &AtlasArgs) -> Result<String> {
    let atlases: Vec<Atlas> = if !a.p.is_empty() {
        a.p.iter().map(|p| atlas(a.n, &exponent(p)?)).collect::<Result<_>>()?
    } else {
        let (lo, hi) = match (&a.p_min, &a.p_max) {
            (Some(lo), Some(hi)) => (exponent(lo)?, exponent(hi)?),
            _ => {
                return Err(Error::Config {
                    path: "p".into(),
                    message: "give -p values or both --p-min and --p-max".into(),
                })
            }
        };
        atlas_range(a.n, &lo, &hi, a.samples)?
    };
    prepare_out(&a.out, a.force)?;
    std::fs::write(a.out.join("atlas.csv"), atlas_csv(&atlases))?;
    std::fs::write(a.out.join("atlas.svg"), atlas_svg(&atlases))?;
    let mut out = String::new();
    for at in &atlases {
        let _ = writeln!(out, "N={} p={}", at.n, at.p);
        for r in &at.rows {
            let _ = writeln!(
                out,
                "  q = {:<10} {:<22} {} -> {}",
                r.q_break.to_string(),
                format!("{:?}", r.breakpoint),
                r.regime_left,
                r.regime_right
            );
        }
    }
    let _ = writeln!(out, "wrote {}", a.out.display());
    Ok(out)
}

fn cmd_run(a: &RunArgs) -> Result<String> {
    let mut s = Scenario::load(&a.scenario)?;
    if let Some(seed) = env_seed()? {
        s.seed = seed;
    }
    prepare_out(&a.out, a.force)?;
    let outcome = run_scenario(&s)?;
    write_run(&a.out, &outcome)?;
    let m = &outcome.manifest;
    let mut out = String::new();
    let _ = writeln!(out, "{}: regime {}, status {}", m.name, m.regime.regime.tag(), m.status);
    let _ = writeln!(out, "final time {:.6e} after {} steps", m.final_time, m.steps);
    if let Some(h) = &m.probes.manufactured {
        let _ = writeln!(
            out,
            "observed order: space {:.4}, time {:.4}",
            h.observed_spatial_order, h.observed_temporal_order
        );
    }
    let _ = writeln!(out, "wrote {}", a.out.display());
    Ok(out)
}

fn cmd_sweep(a: &SweepArgs) -> Result<String> {
    let (study, dir) = StudyFile::load(&a.study)?;
    prepare_out(&a.out, a.force)?;
    let opts = SweepOptions {
        jobs: a.jobs,
        seed: env_seed()?,
    };
    let outcome = study.run(&dir, &a.out, &opts)?;
    let mut out = String::new();
    for m in &outcome.manifests {
        let _ = writeln!(out, "{}: regime {}, status {}", m.name, m.regime.regime.tag(), m.status);
    }
    for r in &outcome.reports {
        let passed = r.verdicts.iter().filter(|v| v.pass).count();
        let _ = writeln!(out, "{} / {}: {passed}/{} verdicts pass", r.probe, r.scenario, r.verdicts.len());
    }
    let _ = writeln!(out, "wrote {}", a.out.display());
    Ok(out)
}

fn cmd_report(a: &ReportArgs) -> Result<String> {
    let c = collect(&a.dir)?;
    let text = summary_text(&c);
    std::fs::write(a.dir.join("summary.csv"), summary_csv(&c))?;
    std::fs::write(a.dir.join("summary.txt"), &text)?;
    Ok(text)
}
