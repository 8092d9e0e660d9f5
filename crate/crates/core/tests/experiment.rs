use splb_core::error::Error;
use splb_core::experiment::*;
use splb_core::field::TerminationStatus;

fn scenario(text: &str) -> Scenario {
    Scenario::from_str(text, ConfigFormat::Toml).unwrap()
}

fn red_2d(cells: usize) -> Scenario {
    scenario(&format!(
        r#"
name = "red2d"
[problem]
N = 2
p = 1.7
q = 1.35
[grid]
kind = "cartesian"
cells = {cells}
t_horizon = 0.05
[datum]
profile = "bump"
normalize = true
"#
    ))
}

fn yellow_radial(amplitude: f64, gamma: f64) -> Scenario {
    scenario(&format!(
        r#"
name = "yellow"
[problem]
N = 3
p = 2.0
q = 1.1
gamma = {gamma}
[grid]
kind = "radial"
cells = 64
t_horizon = 0.05
[datum]
profile = "bump"
amplitude = {amplitude}
lebesgue = 1.0
[forcing]
family = "bump"
amplitude = {amplitude}
m = 1.0
r = 1.0
"#
    ))
}

#[test]
fn toml_and_json_parse_to_the_same_scenario() {
    let s = red_2d(16);
    let json = serde_json::to_string(&s).unwrap();
    let back = Scenario::from_str(&json, ConfigFormat::Json).unwrap();
    assert_eq!(s, back);
    let toml_text = s.to_toml().unwrap();
    assert_eq!(Scenario::from_str(&toml_text, ConfigFormat::Toml).unwrap(), s);
}

#[test]
fn unknown_key_reports_its_path() {
    let text = r#"
name = "bad"
[problem]
N = 2
p = 1.7
q = 1.35
[grid]
kind = "cartesian"
cells = 8
t_horizon = 0.05
celz = 3
[datum]
profile = "bump"
"#;
    match Scenario::from_str(text, ConfigFormat::Toml) {
        Err(Error::Config { path, .. }) => assert!(path.starts_with("grid"), "{path}"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn declared_regime_must_match() {
    let mut s = red_2d(8);
    s.problem.expect_regime = Some("orange".into());
    assert!(matches!(s.validate(), Err(Error::Config { .. })));
    s.problem.expect_regime = Some("red".into());
    s.validate().unwrap();
}

#[test]
fn dotted_expansion_names_every_combination() {
    let base = serde_json::json!({"problem": {"q": 1.0}});
    let mut vary = std::collections::BTreeMap::new();
    vary.insert("problem.q".to_string(), vec![serde_json::json!(1.1), serde_json::json!(1.5)]);
    vary.insert("grid.cells".to_string(), vec![serde_json::json!(8), serde_json::json!(16)]);
    let out = expand(&base, &vary).unwrap();
    let names: Vec<&str> = out.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["_cells8_q1.1", "_cells8_q1.5", "_cells16_q1.1", "_cells16_q1.5"]);
    assert_eq!(out[3].1["grid"]["cells"], 16);
    assert_eq!(out[3].1["problem"]["q"], 1.5);
}

#[test]
fn run_writes_deterministic_artifacts() {
    let mut s = red_2d(12);
    s.probes.comparison = true;
    s.probes.weak_residual = true;
    let a = run_scenario(&s).unwrap();
    let b = run_scenario(&s).unwrap();
    assert_eq!(a.time_series, b.time_series);
    assert_eq!(a.manifest, b.manifest);
    assert_eq!(a.manifest.status, "completed");
    assert_eq!(a.manifest.regime.regime.tag(), "red");
    assert!(a.manifest.probes.comparison.as_ref().unwrap().min_gap >= -1e-10);
    assert!(a.manifest.probes.weak_residual.as_ref().unwrap().scheme.relative() < 1e-8);
    let dir = tempfile::tempdir().unwrap();
    write_run(dir.path(), &a).unwrap();
    for f in ["manifest.json", "time_series.csv", "final_state.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let collected = collect(dir.path()).unwrap();
    assert_eq!(collected.manifests, vec![a.manifest.clone()]);
    assert!(summary_csv(&collected).lines().nth(1).unwrap().starts_with("red2d,2,1.7,1.35,1,red,true,completed"));
}

#[test]
fn input_hash_tracks_the_configuration() {
    let s = red_2d(12);
    let mut t = s.clone();
    assert_eq!(s.input_hash().unwrap(), t.input_hash().unwrap());
    t.problem.q = 1.3;
    assert_ne!(s.input_hash().unwrap(), t.input_hash().unwrap());
}

#[test]
fn cap_blowup_is_a_result() {
    let mut s = red_2d(8);
    s.solver.cap = Some(1e-3);
    let out = run_scenario(&s).unwrap();
    assert_eq!(out.manifest.status, "blowup");
    assert!(out.manifest.termination.is_blowup());
}

#[test]
fn red_scenario_is_stable_under_refinement() {
    let r = regime_stability_study(&red_2d(16), &[16, 32]).unwrap();
    let v = r.verdict("stability").unwrap();
    assert!(v.pass, "{v:?}");
    let csv = r.to_csv();
    assert_eq!(csv, regime_stability_study(&red_2d(16), &[16, 32]).unwrap().to_csv());
}

#[test]
fn stability_study_needs_red_or_orange() {
    let err = regime_stability_study(&yellow_radial(1.0, 1.0), &[32, 64]).unwrap_err();
    assert!(matches!(err, Error::Domain(_)));
    assert!(refinement_report(&red_2d(16), &[16], "x").is_err());
}

#[test]
fn weaker_source_lowers_the_ledger() {
    let totals: Vec<f64> = [1.0, 0.5, 0.1, 0.0]
        .iter()
        .map(|&g| {
            let mut s = red_2d(16);
            s.problem.gamma = g;
            run_scenario(&s).unwrap().manifest.ledger.unwrap().total
        })
        .collect();
    assert!(totals.windows(2).all(|w| w[1] <= w[0]), "{totals:?}");
}

#[test]
fn sharpness_guards() {
    let few = SharpnessParams::new(3, 2.0, 1.5, 2.4, vec![32, 64]);
    assert!(matches!(sharpness_probe(&few), Err(Error::Domain(_))));
    let at_sigma = SharpnessParams::new(3, 2.0, 1.5, 3.0, vec![32, 64, 128]);
    assert!(sharpness_probe(&at_sigma).is_err());
    let singular = SharpnessParams::new(3, 1.8, 1.4, 1.2, vec![32, 64, 128]);
    assert!(sharpness_probe(&singular).is_err());
}

#[test]
fn sharpness_verdict_is_never_asserted_when_extrapolating() {
    // N=3, p=1.8, q=1.4: sigma = 3(0.6)/0.4 = 4.5
    let mut p = SharpnessParams::new(3, 1.8, 1.4, 3.6, vec![32, 64, 128]);
    p.extrapolation = true;
    p.t_horizon = 1e-3;
    let r = sharpness_probe(&p).unwrap();
    let v = r.verdict("sharpness").unwrap();
    assert!(!v.pass);
    assert!(v.outcome.contains("not asserted"));
    assert!(r.notes.iter().any(|n| n.contains("heuristic")));
}

#[test]
fn marcinkiewicz_needs_l1_data() {
    assert!(matches!(marcinkiewicz_verification(&red_2d(16), &[16, 32]), Err(Error::Domain(_))));
}

#[test]
fn zero_solution_has_zero_ratios() {
    let r = marcinkiewicz_verification(&yellow_radial(0.0, 1.0), &[32, 64]).unwrap();
    for l in &r.levels {
        assert_eq!(l.extras["ratio_grad_b1"], 0.0);
        assert_eq!(l.extras["ratio_grad_b2"], 0.0);
    }
}

#[test]
fn marcinkiewicz_ratios_are_scale_invariant_for_the_heat_flow() {
    // p = 2, N = 3: both gradient powers equal 1, so the ratios are homogeneous of degree 0.
    let ratio = |c: f64| {
        let r = marcinkiewicz_verification(&yellow_radial(c, 0.0), &[64, 128]).unwrap();
        let l = r.levels.last().unwrap();
        (l.extras["ratio_grad_b1"], l.extras["ratio_grad_b2"])
    };
    let (b1, b2) = ratio(1.0);
    for c in [0.9, 1.1] {
        let (x1, x2) = ratio(c);
        assert!(relative_drift(b1, x1) < 0.05 && relative_drift(b2, x2) < 0.05, "c = {c}");
    }
}

#[test]
fn marcinkiewicz_ratios_stabilize() {
    let r = marcinkiewicz_verification(&yellow_radial(1.0, 1.0), &[64, 128, 256]).unwrap();
    assert!(r.verdict("grad_b1").unwrap().pass);
    assert!(r.verdict("grad_b2").unwrap().pass);
    assert_eq!(r.fits.len(), 2);
}

#[test]
fn spikes_grow_and_controls_stay_bounded() {
    let s = scenario(
        r#"
name = "red3d"
[problem]
N = 3
p = 2.0
q = 1.7
[grid]
kind = "radial"
cells = 128
t_horizon = 0.05
[datum]
profile = "bump"
normalize = true
"#,
    );
    let params = SpikeParams {
        js: vec![1.0, 2.0, 4.0],
        ..SpikeParams::default()
    };
    let r = equi_integrability_stress(&s, &params).unwrap();
    for name in ["spike_growth", "control_bounded", "interior_bounded"] {
        assert!(r.verdict(name).unwrap().pass, "{name}: {:?}", r.verdict(name));
    }
    assert!(r.levels.iter().all(|l| l.status == TerminationStatus::Completed));
}

#[test]
fn spikes_need_a_red_base() {
    let err = equi_integrability_stress(&yellow_radial(1.0, 1.0), &SpikeParams::default()).unwrap_err();
    assert!(matches!(err, Error::Domain(_)));
}

#[test]
fn sublinear_rejects_superlinear_q() {
    let err = sublinear_suite(&SublinearParams::new(2, 1.5, 1.0, 0.9)).unwrap_err();
    assert!(err.to_string().contains("not sublinear"));
}

#[test]
fn sublinear_m2_uses_plain_energy() {
    let mut p = SublinearParams::new(2, 1.5, 2.0, 0.5);
    p.cells = 16;
    let r = sublinear_suite(&p).unwrap();
    assert!(r.notes.iter().any(|n| n.contains("mu = 1")));
    assert!(r.levels.iter().all(|l| l.ledger.beta == 1.0));
}

#[test]
fn gn_ratios_stay_below_the_calibrated_constant() {
    let g = gn_study(3, 10, 16, 2.0, 1.5).unwrap();
    assert!(g.max_excess <= 1.01, "{}", g.max_excess);
    assert!(g.rejects_mismatched);
}

#[test]
fn heat_study_rejects_a_source() {
    let mut s = red_2d(8);
    s.grid.dim = Some(1);
    assert!(heat_order_study(&s, &[16, 32, 64]).is_err());
}

#[test]
fn sweep_over_q_classifies_each_member() {
    let text = r#"
[study]
name = "qsweep"
kind = "grid"
[study.scenario]
name = "n3"
[study.scenario.problem]
N = 3
p = 2.0
q = 1.1
[study.scenario.grid]
kind = "radial"
cells = 32
t_horizon = 0.02
[study.scenario.datum]
profile = "bump"
[study.vary]
"problem.q" = [1.1, 1.35, 1.5]
"#;
    let study = StudyFile::from_str(text, ConfigFormat::Toml).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let opts = SweepOptions {
        jobs: Some(2),
        seed: Some(9),
    };
    let out = study.run(dir.path(), dir.path(), &opts).unwrap();
    let tags: Vec<&str> = out.manifests.iter().map(|m| m.regime.regime.tag()).collect();
    assert_eq!(tags, ["yellow", "orange", "red"]);
    assert!(out.manifests.iter().all(|m| m.seed == 9));
    let c = collect(dir.path()).unwrap();
    assert_eq!(c.manifests.len(), 3);
    assert_eq!(c.manifests[0].name, "n3_q1.1");
}

#[test]
fn empty_directory_has_nothing_to_report() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(collect(dir.path()), Err(Error::Config { .. })));
}
