use serde::Serialize;

use mbqc_mps::cluster::ChiBoundReport;
use mbqc_mps::{ClusterSpec, Mode, SimulationRecord};

pub const RUN_SCHEMA: u32 = 1;

#[derive(Serialize)]
pub struct Inputs {
    pub spec_sha256: String,
    pub pattern_sha256: String,
    pub seed: u64,
}

#[derive(Serialize)]
pub struct StepReport {
    pub target: String,
    pub angle: Option<f64>,
    pub p0: f64,
    pub p1: f64,
    pub outcome: u8,
    pub chi_after: Vec<usize>,
}

#[derive(Serialize)]
pub struct FinalReport {
    pub labels: Vec<String>,
    pub chi_profile: Vec<usize>,
}

#[derive(Serialize)]
pub struct Timings {
    pub build_ms: f64,
    pub total_ms: f64,
    pub per_step_ms: Vec<f64>,
}

/// Everything except `timings` is a function of the inputs alone.
#[derive(Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub mode: Mode,
    pub inputs: Inputs,
    pub outcomes: String,
    pub steps: Vec<StepReport>,
    pub max_chi_series: Vec<usize>,
    pub final_state: FinalReport,
    pub fidelity: Option<f64>,
    pub timings: Timings,
}

impl RunReport {
    pub fn new(spec: &ClusterSpec, inputs: Inputs, rec: &SimulationRecord, build_ms: f64, fidelity: Option<f64>) -> Self {
        let steps: Vec<StepReport> = rec
            .steps
            .iter()
            .map(|s| StepReport {
                target: spec.label(s.target),
                angle: s.angle,
                p0: s.p0,
                p1: s.p1,
                outcome: s.outcome,
                chi_after: s.chi_after.as_ref().map(|c| c.bonds.clone()).unwrap_or_default(),
            })
            .collect();
        let max_chi_series = rec.steps.iter().map(|s| s.chi_after.as_ref().map_or(1, |c| c.max())).collect();
        Self {
            schema: RUN_SCHEMA,
            mode: rec.mode,
            inputs,
            outcomes: rec.outcome_string(),
            steps,
            max_chi_series,
            final_state: FinalReport {
                labels: rec.final_state.labels().iter().map(|&q| spec.label(q)).collect(),
                chi_profile: rec.final_state.chi_profile().bonds,
            },
            fidelity,
            timings: Timings {
                build_ms,
                total_ms: rec.total.as_secs_f64() * 1e3,
                per_step_ms: rec.steps.iter().map(|s| s.elapsed.as_secs_f64() * 1e3).collect(),
            },
        }
    }
}

#[derive(Serialize)]
pub struct BuildSummary {
    pub width: usize,
    pub length: usize,
    pub n: usize,
    pub chi_profile: Vec<usize>,
    pub max_chi: usize,
    pub bound: usize,
    pub peak_chi: usize,
    pub gates: usize,
    pub dump: String,
}

#[derive(Serialize)]
pub struct DenseCheck {
    pub performed: bool,
    pub state_error: Option<f64>,
    pub spectrum_error: Option<f64>,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct VerifyReport {
    pub chi_bound: ChiBoundReport,
    pub dense_check: DenseCheck,
    pub pass: bool,
}
