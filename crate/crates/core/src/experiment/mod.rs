//! Scenario files, probe studies and report collection.

mod data;
mod report;
mod run;
mod scenario;
mod studies;
mod sweep;

pub use data::{power_law_datum, smooth_bump, spike_forcing};
pub use report::{
    collect, relative_drift, summary_csv, summary_text, Collected, ConstantFit, HarnackFit, LevelRecord, ProbeReport,
    Verdict,
};
pub use run::{
    run_scenario, write_probe_reports, write_run, ComparisonSummary, ProbeResults, RunManifest, RunOutcome,
    WeakResidualSummary,
};
pub use scenario::{
    from_value, parse_value, set_dotted, CoefficientKind, ConfigFormat, DatumProfile, DatumSpec, ForcingFamily,
    ForcingSpec, GnProbe, GridKind, GridSection, ProbeSpec, ProblemSection, Scenario, Setup,
};
pub use studies::{
    equi_integrability_stress, gn_study, heat_order_study, marcinkiewicz_verification, refinement_report,
    regime_stability_study, sharpness_probe, sublinear_suite, GnStudy, HeatOrderReport, SharpnessParams, SpikeParams,
    SublinearParams,
};
pub use sweep::{expand, StudyFile, StudyKind, StudyOutcome, StudySection, SweepOptions};
