use std::f64::consts::PI;
use std::sync::Arc;

use splb_core::field::lebesgue_norm;
use splb_core::field::BlowupKind;
use splb_core::solver::{
    approximation_sequence, comparison_run, solve, steady_state, weak_residual, TestFunction,
    WeakResidualMode,
};
use splb_core::{Field, Grid, Operator, RhsSpec, SolverConfig, TerminationStatus};

fn unit_1d(cells: usize, t: f64) -> Arc<Grid> {
    Arc::new(Grid::cartesian_unit(1, cells, t).unwrap())
}

#[test]
fn heat_mode_decays_at_first_eigenvalue() {
    let grid = unit_1d(64, 0.1);
    let u0 = Field::from_fn(grid.clone(), |x| (PI * x[0]).sin());
    let op = Operator::p_laplacian(&grid, 2.0).unwrap();
    let traj = solve(&u0, &SolverConfig::fixed(1e-3), &op, &RhsSpec::zero()).unwrap();
    assert_eq!(traj.status(), TerminationStatus::Completed);
    assert_eq!(traj.final_time(), 0.1);
    let peak = traj.final_field().max_abs();
    let exact = (-PI * PI * 0.1).exp();
    assert!((peak - exact).abs() / exact < 1e-2, "{peak} vs {exact}");
}

#[test]
fn radial_heat_mode_in_three_dimensions() {
    let grid = Arc::new(Grid::radial_ball(3, 1.0, 80, 0.05).unwrap());
    let u0 = Field::from_fn(grid.clone(), |x| (PI * x[0]).sin() / (PI * x[0]));
    let op = Operator::p_laplacian(&grid, 2.0).unwrap();
    let traj = solve(&u0, &SolverConfig::fixed(5e-4), &op, &RhsSpec::zero()).unwrap();
    let ratio = traj.final_field().values()[0] / u0.values()[0];
    let exact = (-PI * PI * 0.05).exp();
    assert!((ratio - exact).abs() / exact < 2e-2, "{ratio} vs {exact}");
}

#[test]
fn steady_torsion_profiles() {
    let grid = unit_1d(128, 1.0);
    for p in [1.5, 2.0, 3.0] {
        let op = Operator::p_laplacian(&grid, p).unwrap();
        let rhs = RhsSpec::zero().with_forcing(vec![1.0; grid.len()]);
        let cfg = SolverConfig {
            dt_init: 1e-2,
            dt_max: 1e6,
            ..Default::default()
        };
        let u = steady_state(&Field::zeros(grid.clone()), &cfg, &op, &rhs, 1e-10).unwrap();
        let pc = p / (p - 1.0);
        let exact = |x: f64| (0.5f64.powf(pc) - (x - 0.5).abs().powf(pc)) / pc;
        let peak = exact(0.5);
        let err = (0..grid.len())
            .map(|i| (u.values()[i] - exact(grid.coords(i)[0])).abs())
            .fold(0.0, f64::max);
        assert!(err / peak < 1e-2, "p = {p}: relative error {}", err / peak);
    }
}

#[test]
fn maximum_principle_and_energy_decay() {
    let grid = Arc::new(Grid::cartesian_unit(2, 16, 0.05).unwrap());
    for p in [1.6, 2.0, 2.5] {
        let u0 = Field::from_fn(grid.clone(), |x| 16.0 * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]));
        let op = Operator::p_laplacian(&grid, p).unwrap();
        let traj = solve(&u0, &SolverConfig::default(), &op, &RhsSpec::zero()).unwrap();
        assert_eq!(traj.status(), TerminationStatus::Completed);
        let top = u0.max_abs();
        let mut prev = f64::INFINITY;
        for k in 0..traj.len() {
            let f = traj.field(k);
            assert!(f.values().iter().all(|&v| v >= -1e-12 && v <= top + 1e-12));
            let e = lebesgue_norm(&f, 2.0).unwrap();
            assert!(e <= prev + 1e-12);
            prev = e;
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let grid = Arc::new(Grid::cartesian_unit(2, 12, 0.02).unwrap());
    let u0 = Field::from_fn(grid.clone(), |x| (PI * x[0]).sin() * (PI * x[1]).sin());
    let op = Operator::p_laplacian(&grid, 1.7).unwrap();
    let rhs = RhsSpec::gradient(1.0, 1.2);
    let a = solve(&u0, &SolverConfig::default(), &op, &rhs).unwrap();
    let b = solve(&u0, &SolverConfig::default(), &op, &rhs).unwrap();
    assert_eq!(a.states(), b.states());
    assert_eq!(a.times(), b.times());
}

#[test]
fn gradient_source_lies_above_source_free_flow() {
    let grid = unit_1d(48, 0.1);
    let u0 = Field::from_fn(grid.clone(), |x| (PI * x[0]).sin());
    for (p, q) in [(2.0, 1.5), (3.0, 2.5), (1.8, 1.2)] {
        let op = Operator::p_laplacian(&grid, p).unwrap();
        let rhs = RhsSpec::gradient(2.0, q).with_forcing(vec![0.5; grid.len()]);
        let res = comparison_run(&u0, &SolverConfig::default(), &op, &rhs).unwrap();
        assert!(res.min_gap >= -1e-12, "p = {p}: gap {}", res.min_gap);
        assert_eq!(res.u.times(), res.big_u.times());
    }
}

#[test]
fn bounded_data_give_identical_approximations() {
    let grid = unit_1d(32, 0.05);
    let u0 = Field::from_fn(grid.clone(), |x| 0.5 * (PI * x[0]).sin());
    let op = Operator::p_laplacian(&grid, 2.0).unwrap();
    let rhs = RhsSpec::gradient(1.0, 1.5);
    let diag =
        approximation_sequence(&u0, &SolverConfig::default(), &op, &rhs, &[10.0, 20.0, 40.0], 1e-3)
            .unwrap();
    assert!(diag.identical);
    assert!(diag.stabilized);
    assert!(diag.distances.iter().all(|&d| d == 0.0));
}

#[test]
fn cap_triggers_blowup_status() {
    let grid = unit_1d(32, 0.5);
    let u0 = Field::from_fn(grid.clone(), |x| (PI * x[0]).sin());
    let op = Operator::p_laplacian(&grid, 2.0).unwrap();
    let rhs = RhsSpec::zero().with_forcing(vec![50.0; grid.len()]);
    let cfg = SolverConfig {
        cap: Some(2.0),
        ..Default::default()
    };
    let traj = solve(&u0, &cfg, &op, &rhs).unwrap();
    assert_eq!(traj.status(), TerminationStatus::Blowup(BlowupKind::CapExceeded));
    assert!(traj.final_time() < 0.5);
}

#[test]
fn scheme_weak_residual_vanishes() {
    let grid = Arc::new(Grid::cartesian_unit(2, 16, 0.02).unwrap());
    let u0 = Field::from_fn(grid.clone(), |x| (PI * x[0]).sin() * (PI * x[1]).sin());
    let op = Operator::p_laplacian(&grid, 2.4).unwrap();
    let rhs = RhsSpec::gradient(1.0, 1.5);
    let cfg = SolverConfig::default();
    let traj = solve(&u0, &cfg, &op, &rhs).unwrap();
    let phi = TestFunction::bump(vec![0.5, 0.5], 0.4);
    let scheme = weak_residual(&traj, &cfg, &op, &rhs, &phi, WeakResidualMode::Scheme).unwrap();
    assert!(scheme.relative() < 1e-8, "{scheme:?}");
    let cont = weak_residual(&traj, &cfg, &op, &rhs, &phi, WeakResidualMode::Continuum).unwrap();
    assert!(cont.relative() < 5e-2, "{cont:?}");
}

#[test]
fn rejects_natural_growth() {
    let grid = unit_1d(8, 0.1);
    let u0 = Field::zeros(grid.clone());
    let op = Operator::p_laplacian(&grid, 2.0).unwrap();
    assert!(solve(&u0, &SolverConfig::default(), &op, &RhsSpec::gradient(1.0, 2.0)).is_err());
}
