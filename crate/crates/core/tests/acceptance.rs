//! Acceptance suite: one pass/fail line per criterion, with timings.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splb_core::experiment::*;
use splb_core::field::*;
use splb_core::regime::{atlas, atlas_csv, formulas, Exponent};
use splb_core::solver::{comparison_run, solve, steady_state, Operator, RhsSpec, SolverConfig};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn scenario(text: &str) -> Scenario {
    Scenario::from_str(text, ConfigFormat::Toml).expect("scenario parses")
}

fn exponent_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 1200 {
        let n = rng.gen_range(2..=8u32);
        let p = rng.gen_range(1.05..(n as f64 - 0.05));
        let nf = n as f64;
        let q2 = p - nf / (nf + 2.0);
        let q1 = p - nf / (nf + 1.0);
        let threshold = formulas::superlinear_threshold(n, p).map_err(|e| e.to_string())?;
        // sigma is only defined above the superlinear threshold
        if q1 <= threshold {
            continue;
        }
        let s2 = formulas::critical_sigma(n, p, q2).map_err(|e| e.to_string())?;
        let s1 = formulas::critical_sigma(n, p, q1).map_err(|e| e.to_string())?;
        ensure(close(s2, 2.0, 1e-12), || format!("sigma(q2) = {s2} at N={n} p={p}"))?;
        ensure(close(s1, 1.0, 1e-12), || format!("sigma(q1) = {s1} at N={n} p={p}"))?;

        let cap = formulas::a_cap(n, p).map_err(|e| e.to_string())?;
        let a = rng.gen_range(1.0..cap);
        let nu = formulas::nu_of_a(n, p, a).map_err(|e| e.to_string())?;
        let chain = formulas::b_of_nu(n, p, nu).map_err(|e| e.to_string())?;
        let direct = formulas::b_of_a(n, p, a).map_err(|e| e.to_string())?;
        ensure(close(chain, direct, 1e-12), || format!("b chain {chain} vs {direct}"))?;

        let lo = q1.max(threshold);
        if lo < q2 {
            let q = rng.gen_range(lo..q2);
            if q > lo {
                let e1 = formulas::eta_gradient(n, p, q).map_err(|e| e.to_string())?;
                let e2 = formulas::eta_gradient_via_beta(n, p, q).map_err(|e| e.to_string())?;
                ensure(close(e1, e2, 1e-12), || format!("eta {e1} vs {e2} at N={n} p={p} q={q}"))?;
            }
        }
        checked += 1;
    }
    for n in 3..=12 {
        let nf = n as f64;
        let t = formulas::superlinear_threshold(n, 2.0).map_err(|e| e.to_string())?;
        let linear = (2.0 * (nf + 1.0) - nf) / (nf + 2.0);
        ensure(t == 1.0 && linear == 1.0, || format!("thresholds at p = 2, N = {n}: {t}, {linear}"))?;
    }
    Ok(format!("{checked} sampled (N, p, q)"))
}

fn atlas_goldens() -> Check {
    let cases: [(u32, &str, &[(i64, i64)]); 3] = [
        (2, include_str!("golden/atlas_N2.csv"), &[(9, 5), (3, 2), (4, 3), (6, 5)]),
        (3, include_str!("golden/atlas_N3.csv"), &[(2, 1), (5, 2), (9, 5), (3, 2), (27, 20), (6, 5), (11, 10)]),
        (5, include_str!("golden/atlas_N5.csv"), &[(3, 1), (9, 2), (9, 5), (3, 2), (5, 4)]),
    ];
    let mut rows = 0;
    for (n, golden, ps) in cases {
        let mut atlases = Vec::new();
        for &(a, b) in ps {
            atlases.push(atlas(n, &Exponent::from_ratio(a, b)).map_err(|e| e.to_string())?);
        }
        let got = atlas_csv(&atlases);
        let expected: String = golden.replace("\r\n", "\n");
        ensure(got == expected, || format!("N = {n} differs from its golden file:\n{got}"))?;
        rows += got.lines().count() - 1;
    }
    Ok(format!("{rows} breakpoint rows match"))
}

fn solver_verification() -> Check {
    let heat = scenario(
        r#"
name = "heat1d"
[problem]
N = 3
p = 2.0
q = 1.5
gamma = 0.0
[grid]
kind = "cartesian"
dim = 1
cells = 128
t_horizon = 0.1
[datum]
profile = "sine"
[probes]
manufactured = true
refinement_levels = [128, 256, 512]
"#,
    );
    let out = run_scenario(&heat).map_err(|e| e.to_string())?;
    let h = out.manifest.probes.manufactured.ok_or("no manufactured report")?;
    ensure(h.observed_spatial_order >= 1.8, || format!("spatial order {}", h.observed_spatial_order))?;
    ensure(h.observed_temporal_order >= 0.8, || format!("temporal order {}", h.observed_temporal_order))?;
    ensure(h.finest_error < 1e-3, || format!("finest error {}", h.finest_error))?;

    let grid = Arc::new(Grid::cartesian_unit(1, 256, 1.0).map_err(|e| e.to_string())?);
    let mut worst: f64 = 0.0;
    for p in [1.5, 3.0] {
        let op = Operator::p_laplacian(&grid, p).map_err(|e| e.to_string())?;
        let rhs = RhsSpec::zero().with_forcing(vec![1.0; grid.len()]);
        let cfg = SolverConfig {
            dt_init: 1e-2,
            dt_max: 1e6,
            ..Default::default()
        };
        let u = steady_state(&Field::zeros(grid.clone()), &cfg, &op, &rhs, 1e-10).map_err(|e| e.to_string())?;
        let pc = p / (p - 1.0);
        let exact = |x: f64| (0.5f64.powf(pc) - (x - 0.5).abs().powf(pc)) / pc;
        let err = (0..grid.len())
            .map(|i| (u.values()[i] - exact(grid.coords(i)[0])).abs())
            .fold(0.0, f64::max);
        ensure(err < 1e-3, || format!("steady state p = {p}: error {err}"))?;
        worst = worst.max(err);
    }
    Ok(format!(
        "orders {:.3} / {:.3}, heat error {:.2e}, steady error {:.2e}",
        h.observed_spatial_order, h.observed_temporal_order, h.finest_error, worst
    ))
}

fn structural_invariants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let grids = [
        Grid::cartesian_unit(1, 33, 1.0),
        Grid::cartesian_unit(2, 12, 1.0),
        Grid::cartesian_unit(3, 6, 1.0),
        Grid::radial_ball(3, 1.0, 24, 1.0),
    ];
    let mut sbp: f64 = 0.0;
    for g in grids {
        let g = Arc::new(g.map_err(|e| e.to_string())?);
        for _ in 0..10 {
            let u = Field::new(g.clone(), (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .map_err(|e| e.to_string())?;
            let n = g.element_count() * g.comp_dim();
            let f = VectorField::new(g.clone(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .map_err(|e| e.to_string())?;
            let lhs = inner_elements(&discrete_gradient(&u), &f);
            let rhs = -inner_nodes(&u, &discrete_divergence(&f));
            let d = (lhs - rhs).abs() / (1.0 + lhs.abs());
            ensure(d <= 1e-12, || format!("summation by parts defect {d:e}"))?;
            sbp = sbp.max(d);
        }
    }
    // Exact on dyadic data; for arbitrary doubles the sum can land on a tie.
    let mut ulp_defects = 0;
    for _ in 0..10_000 {
        let v = rng.gen_range(-(1i64 << 40)..(1i64 << 40)) as f64 / (1u64 << 20) as f64;
        let k = rng.gen_range(1..(1i64 << 30)) as f64 / (1u64 << 20) as f64;
        ensure(truncate_value_t(v, k) + truncate_value_g(v, k) == v, || format!("T + G != id at v = {v}, k = {k}"))?;
        let v = rng.gen_range(-1e3..1e3f64) * rng.gen_range(0.0..1.0f64).powi(3);
        let k = rng.gen_range(0.01..50.0);
        let s = truncate_value_t(v, k) + truncate_value_g(v, k);
        if s != v {
            ulp_defects += 1;
            ensure(s == v.next_up() || s == v.next_down(), || format!("T + G off by more than an ulp at v = {v}"))?;
        }
    }
    let g2 = Arc::new(Grid::cartesian_unit(2, 10, 0.1).map_err(|e| e.to_string())?);
    for _ in 0..100 {
        let steps = 4;
        let times: Vec<f64> = (0..=steps).map(|k| 0.1 * k as f64 / steps as f64).collect();
        let states: Vec<Vec<f64>> = times
            .iter()
            .map(|_| (0..g2.len()).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let traj = Trajectory::from_samples(g2.clone(), times, states, TerminationStatus::Completed)
            .map_err(|e| e.to_string())?;
        let power = rng.gen_range(0.5..2.0);
        let gamma = rng.gen_range(0.5..3.0);
        let s = space_time_gradient_samples(&traj, power);
        let m = marcinkiewicz_norm(&s, gamma).map_err(|e| e.to_string())?;
        let l = space_time_lebesgue_norm(&s, gamma).map_err(|e| e.to_string())?;
        ensure(m <= l * (1.0 + 1e-12), || format!("Chebyshev bound fails: {m} > {l}"))?;
    }
    let g = Arc::new(Grid::cartesian_unit(2, 16, 0.05).map_err(|e| e.to_string())?);
    for p in [1.6, 2.0, 2.5] {
        let u0 = Field::from_fn(g.clone(), |x| 16.0 * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]));
        let op = Operator::p_laplacian(&g, p).map_err(|e| e.to_string())?;
        let a = solve(&u0, &SolverConfig::default(), &op, &RhsSpec::zero()).map_err(|e| e.to_string())?;
        let b = solve(&u0, &SolverConfig::default(), &op, &RhsSpec::zero()).map_err(|e| e.to_string())?;
        ensure(a == b && a.dt_schedule() == b.dt_schedule(), || format!("p = {p}: repeated solves differ"))?;
        let energies: Vec<f64> = (0..a.len()).map(|k| lebesgue_norm(&a.field(k), 2.0).unwrap()).collect();
        ensure(energies.windows(2).all(|w| w[1] <= w[0] + 1e-14), || format!("p = {p}: L2 energy increases"))?;
    }
    Ok(format!("summation-by-parts defect {sbp:.1e}, T+G exact on dyadic data, {ulp_defects}/10000 one-ulp ties on arbitrary doubles"))
}

fn comparison_principle() -> Check {
    let cases = [
        (2, "cartesian", 1.5, 1.2, 1.0, 24),
        (2, "cartesian", 1.5, 1.0, 2.0, 24),
        (3, "radial", 2.0, 1.5, 1.0, 128),
        (3, "radial", 2.0, 1.2, 1.0, 128),
        (4, "radial", 3.0, 2.5, 1.0, 128),
    ];
    let mut worst = f64::INFINITY;
    for (n, kind, p, q, gamma, cells) in cases {
        let s = scenario(&format!(
            r#"
name = "cmp"
[problem]
N = {n}
p = {p}
q = {q}
gamma = {gamma}
[grid]
kind = "{kind}"
cells = {cells}
t_horizon = 0.05
[datum]
profile = "bump"
amplitude = 2.0
[forcing]
family = "bump"
amplitude = 3.0
"#
        ));
        let setup = s.setup().map_err(|e| e.to_string())?;
        let c = comparison_run(&setup.u0, &s.solver, &setup.operator, &setup.rhs).map_err(|e| e.to_string())?;
        ensure(c.min_gap >= -1e-10, || format!("N={n} p={p} q={q}: min gap {}", c.min_gap))?;
        worst = worst.min(c.min_gap);
        let free = RhsSpec::gradient(0.0, q);
        let z = comparison_run(&setup.u0, &s.solver, &setup.operator, &free).map_err(|e| e.to_string())?;
        ensure(z.u.states() == z.big_u.states(), || format!("N={n} p={p}: gamma = 0 runs differ"))?;
    }
    Ok(format!("min gap {worst:.3e} over 5 scenarios"))
}

fn regime_stability() -> Check {
    let mut parts = Vec::new();
    for (tag, q) in [("red", 1.35), ("orange", 1.1)] {
        let s = scenario(&format!(
            r#"
name = "{tag}"
[problem]
N = 2
p = 1.7
q = {q}
expect_regime = "{tag}"
[grid]
kind = "cartesian"
cells = 32
t_horizon = 0.05
[datum]
profile = "bump"
normalize = true
"#
        ));
        let r = regime_stability_study(&s, &[32, 64, 128]).map_err(|e| e.to_string())?;
        let v = r.verdict("stability").ok_or("no stability verdict")?;
        ensure(v.pass, || format!("{tag}: {v:?}"))?;
        parts.push(format!("{tag} drift {:.2e}", v.value));
    }
    Ok(parts.join(", "))
}

fn sharpness() -> Check {
    let sigma = formulas::critical_sigma(3, 2.0, 1.5).map_err(|e| e.to_string())?;
    let p = SharpnessParams::new(3, 2.0, 1.5, 0.8 * sigma, vec![128, 256, 512]);
    let r = sharpness_probe(&p).map_err(|e| e.to_string())?;
    let control = r.verdict("control").ok_or("no control verdict")?;
    let probe = r.verdict("probe").ok_or("no probe verdict")?;
    ensure(control.pass, || format!("control: {control:?}"))?;
    ensure(probe.pass, || format!("probe: {probe:?}"))?;
    ensure(r.verdict("sharpness").is_some_and(|v| v.pass), || "sharpness verdict not reached".into())?;
    ensure(r.notes.iter().any(|n| n.contains("heuristic")), || "report lacks the heuristic label".into())?;
    Ok(format!(
        "control drift {:.2e}, probe {} (growth {:.2}); heuristic evidence",
        control.value, probe.outcome, probe.value
    ))
}

fn marcinkiewicz() -> Check {
    let s = scenario(
        r#"
name = "yellow"
[problem]
N = 2
p = 1.8
q = 1.05
expect_regime = "yellow"
[grid]
kind = "radial"
cells = 128
t_horizon = 0.05
[datum]
profile = "bump"
lebesgue = 1.0
[forcing]
family = "bump"
m = 1.0
r = 1.0
"#,
    );
    let r = marcinkiewicz_verification(&s, &[128, 256, 512]).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for name in ["grad_b1", "grad_b2"] {
        let v = r.verdict(name).ok_or("missing verdict")?;
        ensure(v.pass, || format!("{name}: {v:?}"))?;
        parts.push(format!("{name} drift {:.2e}", v.value));
    }
    Ok(parts.join(", "))
}

fn gagliardo_nirenberg() -> Check {
    let g = gn_study(2024, 50, 32, 2.0, 1.5).map_err(|e| e.to_string())?;
    ensure(g.ratios.len() == 50, || "expected 50 fields".into())?;
    ensure(g.max_excess <= 1.01, || format!("ratio exceeds the constant by {:.3}", g.max_excess))?;
    ensure(g.rejects_mismatched, || "mismatched (w, y) accepted".into())?;
    Ok(format!("max ratio / c = {:.3}, c = {:.4}", g.max_excess, g.calibrated_c))
}

fn main() {
    let criteria: [(&str, &str, Duration, fn() -> Check); 9] = [
        ("AC1", "exponent identities", Duration::from_secs(1), exponent_suite),
        ("AC2", "atlas golden files", Duration::from_secs(1), atlas_goldens),
        ("AC3", "solver verification", Duration::from_secs(30), solver_verification),
        ("AC4", "structural invariants", Duration::from_secs(10), structural_invariants),
        ("AC5", "comparison principle", Duration::from_secs(60), comparison_principle),
        ("AC6", "regime stability", Duration::from_secs(600), regime_stability),
        ("AC7", "sharpness probe", Duration::from_secs(600), sharpness),
        ("AC8", "Marcinkiewicz verification", Duration::from_secs(300), marcinkiewicz),
        ("AC9", "Gagliardo-Nirenberg checker", Duration::from_secs(30), gagliardo_nirenberg),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| id.contains(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget {budget:?}")),
            Err(e) => (false, e),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{id} {} {name} [{:.2}s / {}s] {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
