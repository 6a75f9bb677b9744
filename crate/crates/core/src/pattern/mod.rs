//! Adaptive single-qubit measurement patterns.
//!
//! A pattern is a static sequence of measurements. Each basis is either the
//! computational basis, an XY-plane basis `|0⟩ ± e^{iθ}|1⟩` whose angle may
//! be negated and/or shifted by π depending on the XOR of earlier outcomes,
//! or a fixed basis change given as a unitary. Outcome-dependent Pauli
//! corrections on the unmeasured output qubits are part of the pattern.
//!
//! Two execution modes are provided:
//!
//! - [`Mode::FullUpdate`] measures qubits in any order; every measurement
//!   removes the qubit and re-canonicalizes the whole chain.
//! - [`Mode::InOrder`] requires the measured qubits to be the leading sites
//!   of the chain, measured left to right. The chain is never rewritten;
//!   only a boundary vector on the bond left of the next site is carried
//!   along, making each step O(χ²).

mod json;
pub mod library;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::ClusterError;
use crate::linalg::{self, Unitary2};
use crate::mps::{sample_outcome, ChiProfile, MpsError, MpsState, QubitId};
use crate::EPS_PROB;

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("step {step} depends on {dep}, which is not measured in an earlier step")]
    Causality { step: usize, dep: QubitId },

    #[error("outcome of {0} is not available")]
    MissingOutcome(QubitId),

    #[error("{0} is measured more than once")]
    MeasuredTwice(QubitId),

    #[error("output qubit {0} is also measured")]
    OutputMeasured(QubitId),

    #[error("correction targets measured qubit {0}")]
    CorrectionOnMeasured(QubitId),

    #[error("in-order mode: step {step} measures {target} but the next chain site is {expected}")]
    OutOfOrder { step: usize, target: QubitId, expected: String },

    #[error("forced outcome list has {given} entries for {steps} steps")]
    ForcedLength { given: usize, steps: usize },

    #[error("invalid pattern document")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Cluster(#[from] ClusterError),

    #[error(transparent)]
    Mps(#[from] MpsError),
}

impl PatternError {
    pub fn is_internal(&self) -> bool {
        match self {
            PatternError::Mps(e) => e.is_internal(),
            PatternError::Cluster(e) => e.is_internal(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Basis {
    Computational,
    /// Basis `|0⟩ ± e^{iφ}|1⟩` (outcome 0 for `+`) with
    /// `φ = (−1)^{⊕ sign_deps}·theta + π·(⊕ pi_deps)`.
    Xy { theta: f64, sign_deps: Vec<QubitId>, pi_deps: Vec<QubitId> },
    /// Apply this unitary, then measure in the computational basis.
    Fixed(Unitary2),
}

impl Basis {
    pub fn xy(theta: f64) -> Self {
        Basis::Xy { theta, sign_deps: Vec::new(), pi_deps: Vec::new() }
    }

    fn deps(&self) -> impl Iterator<Item = &QubitId> {
        let (a, b): (&[QubitId], &[QubitId]) = match self {
            Basis::Xy { sign_deps, pi_deps, .. } => (sign_deps, pi_deps),
            _ => (&[], &[]),
        };
        a.iter().chain(b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementStep {
    pub target: QubitId,
    pub basis: Basis,
}

/// `Z^{⊕ z_deps} X^{⊕ x_deps}` on an output qubit (X first).
#[derive(Clone, Debug, PartialEq)]
pub struct Correction {
    pub target: QubitId,
    pub x_deps: Vec<QubitId>,
    pub z_deps: Vec<QubitId>,
}

/// Unitary applied to a |+⟩ qubit before the cluster is entangled.
#[derive(Clone, Debug, PartialEq)]
pub struct InputPrep {
    pub target: QubitId,
    pub unitary: Unitary2,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeasurementPattern {
    pub inputs: Vec<InputPrep>,
    pub steps: Vec<MeasurementStep>,
    pub outputs: Vec<QubitId>,
    pub corrections: Vec<Correction>,
}

fn parity(deps: &[QubitId], outcomes: &BTreeMap<QubitId, u8>) -> Result<u8, PatternError> {
    deps.iter().try_fold(0u8, |acc, q| {
        outcomes.get(q).map(|&r| acc ^ (r & 1)).ok_or(PatternError::MissingOutcome(*q))
    })
}

/// Effective measurement angle of an XY step, `None` for other bases.
pub fn resolve_angle(step: &MeasurementStep, outcomes: &BTreeMap<QubitId, u8>) -> Result<Option<f64>, PatternError> {
    match &step.basis {
        Basis::Xy { theta, sign_deps, pi_deps } => {
            let sign = if parity(sign_deps, outcomes)? == 1 { -1.0 } else { 1.0 };
            let shift = if parity(pi_deps, outcomes)? == 1 { std::f64::consts::PI } else { 0.0 };
            Ok(Some(sign * theta + shift))
        }
        _ => Ok(None),
    }
}

/// The unitary `U` such that measuring in the step's basis equals applying
/// `U` and measuring in the computational basis.
pub fn resolve_basis(step: &MeasurementStep, outcomes: &BTreeMap<QubitId, u8>) -> Result<Unitary2, PatternError> {
    match &step.basis {
        Basis::Computational => Ok(linalg::identity2()),
        Basis::Fixed(u) => Ok(*u),
        Basis::Xy { .. } => {
            let phi = resolve_angle(step, outcomes)?.expect("xy basis has an angle");
            Ok(linalg::hadamard() * linalg::phase(-phi))
        }
    }
}

impl MeasurementPattern {
    /// Measurement order of the pattern.
    pub fn measured(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.steps.iter().map(|s| s.target)
    }

    /// Checks single measurement per qubit, unmeasured outputs and
    /// feed-forward causality.
    pub fn validate(&self) -> Result<(), PatternError> {
        let mut earlier = BTreeSet::new();
        for (i, step) in self.steps.iter().enumerate() {
            for &dep in step.basis.deps() {
                if !earlier.contains(&dep) {
                    return Err(PatternError::Causality { step: i, dep });
                }
            }
            if !earlier.insert(step.target) {
                return Err(PatternError::MeasuredTwice(step.target));
            }
        }
        if let Some(&q) = self.outputs.iter().find(|q| earlier.contains(q)) {
            return Err(PatternError::OutputMeasured(q));
        }
        for c in &self.corrections {
            if earlier.contains(&c.target) {
                return Err(PatternError::CorrectionOnMeasured(c.target));
            }
            if let Some(&dep) = c.x_deps.iter().chain(&c.z_deps).find(|d| !earlier.contains(d)) {
                return Err(PatternError::Causality { step: self.steps.len(), dep });
            }
        }
        Ok(())
    }

    /// In-order mode precondition: step `i` measures chain site `i`.
    pub fn check_in_order(&self, state: &MpsState) -> Result<(), PatternError> {
        for (i, step) in self.steps.iter().enumerate() {
            match state.labels().get(i) {
                Some(&l) if l == step.target => {}
                other => {
                    return Err(PatternError::OutOfOrder {
                        step: i,
                        target: step.target,
                        expected: other.map_or("none".to_string(), |l| l.to_string()),
                    })
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FullUpdate,
    InOrder,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::FullUpdate => "full_update",
            Mode::InOrder => "in_order",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full_update" => Ok(Mode::FullUpdate),
            "in_order" => Ok(Mode::InOrder),
            other => Err(format!("unknown mode {other:?} (expected full_update or in_order)")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    /// Record the chain's bond dimensions after every step. Costs O(n) per
    /// step.
    pub record_chi: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { record_chi: true }
    }
}

/// Flattened 2×2 complex matrix, `[row][col][re, im]`.
pub type MatrixDoc = [[[f64; 2]; 2]; 2];

pub(crate) fn matrix_doc(u: &Unitary2) -> MatrixDoc {
    let e = |r, c| {
        let z: C64 = u[(r, c)];
        [z.re, z.im]
    };
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub target: QubitId,
    /// Effective angle for XY-plane steps.
    pub angle: Option<f64>,
    pub unitary: MatrixDoc,
    pub p0: f64,
    pub p1: f64,
    pub outcome: u8,
    pub chi_after: Option<ChiProfile>,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct SimulationRecord {
    pub mode: Mode,
    pub steps: Vec<StepRecord>,
    pub total: Duration,
    /// State of the unmeasured qubits, corrections applied.
    pub final_state: MpsState,
}

impl SimulationRecord {
    pub fn outcome_string(&self) -> String {
        self.steps.iter().map(|s| char::from(b'0' + s.outcome)).collect()
    }

    pub fn outcomes(&self) -> BTreeMap<QubitId, u8> {
        self.steps.iter().map(|s| (s.target, s.outcome)).collect()
    }
}

/// Execution state for either mode; cloned per branch during enumeration.
#[derive(Clone, Debug)]
enum Engine {
    Full { state: MpsState, pending: Option<usize> },
    InOrder(Cursor),
}

#[derive(Clone, Debug)]
struct Cursor {
    state: MpsState,
    /// Normalized amplitudes `w` with the projected state `Σ_a w_a |R_a⟩`,
    /// `|R_a⟩` the right Schmidt vectors of the bond left of `next`.
    boundary: DMatrix<C64>,
    next: usize,
    candidates: Option<[DMatrix<C64>; 2]>,
}

impl Engine {
    fn new(state: MpsState, mode: Mode) -> Self {
        match mode {
            Mode::FullUpdate => Engine::Full { state, pending: None },
            Mode::InOrder => Engine::InOrder(Cursor {
                state,
                boundary: DMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
                next: 0,
                candidates: None,
            }),
        }
    }

    /// Rotates the target into the measurement basis and returns the
    /// outcome probabilities.
    fn probe(&mut self, target: QubitId, u: &Unitary2) -> Result<(f64, f64), MpsError> {
        match self {
            Engine::Full { state, pending } => {
                let k = state.position_of(target)?;
                state.apply_single_qubit(k, u)?;
                *pending = Some(k);
                state.outcome_probabilities(k)
            }
            Engine::InOrder(c) => {
                let k = c.next;
                c.state.check_site(k)?;
                let site = &c.state.sites()[k];
                let x0 = &c.boundary * site.gamma(0);
                let x1 = &c.boundary * site.gamma(1);
                let lam_r = c.state.lambda_right(k);
                let mut ys = [&x0 * u[(0, 0)] + &x1 * u[(0, 1)], &x0 * u[(1, 0)] + &x1 * u[(1, 1)]];
                for y in ys.iter_mut() {
                    for (col, &l) in lam_r.iter().enumerate() {
                        y.column_mut(col).scale_mut(l);
                    }
                }
                let p0 = ys[0].norm_squared();
                let p1 = ys[1].norm_squared();
                c.candidates = Some(ys);
                let total = p0 + p1;
                Ok((p0 / total, p1 / total))
            }
        }
    }

    fn project(&mut self, outcome: u8) -> Result<(), MpsError> {
        match self {
            Engine::Full { state, pending } => {
                let k = pending.take().expect("probe before project");
                *state = state.project_and_update(k, outcome)?;
            }
            Engine::InOrder(c) => {
                let [y0, y1] = c.candidates.take().expect("probe before project");
                let (y, p) = if outcome == 0 { (y0, 0) } else { (y1, 1) };
                let norm = y.norm();
                if norm * norm <= EPS_PROB {
                    return Err(MpsError::ZeroProbability { site: c.next, outcome: p, probability: norm * norm });
                }
                c.boundary = y / C64::new(norm, 0.0);
                c.next += 1;
            }
        }
        Ok(())
    }

    fn chi_profile(&self) -> ChiProfile {
        match self {
            Engine::Full { state, .. } => state.chi_profile(),
            Engine::InOrder(c) => ChiProfile {
                bonds: c.state.bonds().iter().skip(c.next).map(|b| b.chi()).collect(),
            },
        }
    }

    fn finish(self) -> Result<MpsState, MpsError> {
        match self {
            Engine::Full { state, .. } => Ok(state),
            Engine::InOrder(c) => {
                if c.next == 0 {
                    return Ok(c.state);
                }
                let n = c.state.len();
                let (sites, bonds) = crate::mps::sweep_right(
                    vec![1.0],
                    c.boundary,
                    &c.state.sites()[c.next..],
                    c.state.bonds().get(c.next..).unwrap_or(&[]),
                )?;
                let labels = c.state.labels()[c.next..n].to_vec();
                Ok(MpsState { sites, bonds, labels })
            }
        }
    }
}

fn apply_corrections(
    state: &mut MpsState,
    pattern: &MeasurementPattern,
    outcomes: &BTreeMap<QubitId, u8>,
) -> Result<(), PatternError> {
    for c in &pattern.corrections {
        let k = state.position_of(c.target)?;
        if parity(&c.x_deps, outcomes)? == 1 {
            state.apply_single_qubit(k, &linalg::pauli_x())?;
        }
        if parity(&c.z_deps, outcomes)? == 1 {
            state.apply_single_qubit(k, &linalg::pauli_z())?;
        }
    }
    Ok(())
}

fn run_inner<F>(
    state: MpsState,
    pattern: &MeasurementPattern,
    mode: Mode,
    options: RunOptions,
    mut choose: F,
) -> Result<SimulationRecord, PatternError>
where
    F: FnMut(usize, f64, f64) -> Result<u8, PatternError>,
{
    pattern.validate()?;
    if mode == Mode::InOrder {
        pattern.check_in_order(&state)?;
    }
    let start = Instant::now();
    let mut engine = Engine::new(state, mode);
    let mut outcomes = BTreeMap::new();
    let mut steps = Vec::with_capacity(pattern.steps.len());
    for (i, step) in pattern.steps.iter().enumerate() {
        let t0 = Instant::now();
        let u = resolve_basis(step, &outcomes)?;
        let (p0, p1) = engine.probe(step.target, &u)?;
        let outcome = choose(i, p0, p1)?;
        engine.project(outcome)?;
        outcomes.insert(step.target, outcome);
        let chi_after = options.record_chi.then(|| engine.chi_profile());
        steps.push(StepRecord {
            target: step.target,
            angle: resolve_angle(step, &outcomes)?,
            unitary: matrix_doc(&u),
            p0,
            p1,
            outcome,
            chi_after,
            elapsed: t0.elapsed(),
        });
    }
    let mut final_state = engine.finish()?;
    apply_corrections(&mut final_state, pattern, &outcomes)?;
    Ok(SimulationRecord { mode, steps, total: start.elapsed(), final_state })
}

/// Runs `pattern` on `state`, sampling each outcome with one uniform draw
/// from `rng` in pattern order.
pub fn run_pattern<R: Rng + ?Sized>(
    state: MpsState,
    pattern: &MeasurementPattern,
    rng: &mut R,
    mode: Mode,
) -> Result<SimulationRecord, PatternError> {
    run_pattern_with(state, pattern, rng, mode, RunOptions::default())
}

pub fn run_pattern_with<R: Rng + ?Sized>(
    state: MpsState,
    pattern: &MeasurementPattern,
    rng: &mut R,
    mode: Mode,
    options: RunOptions,
) -> Result<SimulationRecord, PatternError> {
    run_inner(state, pattern, mode, options, |_, p0, p1| Ok(sample_outcome(p0, p1, rng.random::<f64>())))
}

/// Runs `pattern` with prescribed outcomes, one per step.
pub fn run_forced(
    state: MpsState,
    pattern: &MeasurementPattern,
    forced: &[u8],
    mode: Mode,
) -> Result<SimulationRecord, PatternError> {
    if forced.len() != pattern.steps.len() {
        return Err(PatternError::ForcedLength { given: forced.len(), steps: pattern.steps.len() });
    }
    run_inner(state, pattern, mode, RunOptions::default(), |i, p0, p1| {
        let r = forced[i];
        let p = if r == 0 { p0 } else { p1 };
        if p <= EPS_PROB {
            return Err(MpsError::ZeroProbability { site: i, outcome: r, probability: p }.into());
        }
        Ok(r)
    })
}

/// Probability of every outcome string reachable by `pattern` (in step
/// order), enumerating both outcomes of every measurement. Branches with
/// probability at or below `EPS_PROB` are pruned.
pub fn branch_distribution(
    state: &MpsState,
    pattern: &MeasurementPattern,
    mode: Mode,
) -> Result<BTreeMap<String, f64>, PatternError> {
    pattern.validate()?;
    if mode == Mode::InOrder {
        pattern.check_in_order(state)?;
    }
    let mut out = BTreeMap::new();
    let mut outcomes = BTreeMap::new();
    explore(Engine::new(state.clone(), mode), pattern, 0, 1.0, &mut String::new(), &mut outcomes, &mut out)?;
    Ok(out)
}

fn explore(
    mut engine: Engine,
    pattern: &MeasurementPattern,
    step: usize,
    prob: f64,
    prefix: &mut String,
    outcomes: &mut BTreeMap<QubitId, u8>,
    out: &mut BTreeMap<String, f64>,
) -> Result<(), PatternError> {
    let Some(s) = pattern.steps.get(step) else {
        out.insert(prefix.clone(), prob);
        return Ok(());
    };
    let u = resolve_basis(s, outcomes)?;
    let (p0, p1) = engine.probe(s.target, &u)?;
    for (r, p) in [(0u8, p0), (1u8, p1)] {
        if p <= EPS_PROB {
            continue;
        }
        let mut branch = engine.clone();
        branch.project(r)?;
        prefix.push(char::from(b'0' + r));
        outcomes.insert(s.target, r);
        explore(branch, pattern, step + 1, prob * p, prefix, outcomes, out)?;
        outcomes.remove(&s.target);
        prefix.pop();
    }
    Ok(())
}
