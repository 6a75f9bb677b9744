//! Brute-force 2ⁿ statevector oracle.
//!
//! Every operation here is a direct loop over amplitudes so it can be checked
//! by inspection; all MPS equivalence tests route through it.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::bits::{qubit_bit, remove_qubit};
use crate::cluster::ClusterSpec;
use crate::linalg::{self, Unitary2, Unitary4};
use crate::mps::{MpsError, MpsResult, QubitId};
use crate::pattern::{resolve_basis, MeasurementPattern, PatternError};
use crate::{DENSE_LIMIT, EPS_PROB};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    amps: Vec<C64>,
}

/// Born probabilities of one qubit and, when requested, the normalized
/// projection onto the chosen outcome (the qubit stays in the register).
#[derive(Clone, Debug)]
pub struct DenseMeasurement {
    pub p0: f64,
    pub p1: f64,
    pub projected: Option<DenseState>,
}

impl DenseState {
    pub fn from_amplitudes(amps: Vec<C64>) -> MpsResult<Self> {
        if !amps.len().is_power_of_two() {
            return Err(MpsError::BadLength(amps.len()));
        }
        Ok(Self { amps })
    }

    /// |+⟩^{⊗n}.
    pub fn plus(n: usize) -> Self {
        let a = C64::new((0.5f64).powi(n as i32).sqrt(), 0.0);
        Self { amps: vec![a; 1 << n] }
    }

    pub fn n(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply_single_qubit(&mut self, k: usize, u: &Unitary2) {
        let bit = 1 << k;
        for idx in 0..self.amps.len() {
            if idx & bit == 0 {
                let (a0, a1) = (self.amps[idx], self.amps[idx | bit]);
                self.amps[idx] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
                self.amps[idx | bit] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
            }
        }
    }

    /// Applies `g` on the local index `2·bit_a + bit_b`.
    pub fn apply_two_qubit(&mut self, a: usize, b: usize, g: &Unitary4) {
        assert_ne!(a, b);
        let (ba, bb) = (1 << a, 1 << b);
        for idx in 0..self.amps.len() {
            if idx & (ba | bb) == 0 {
                let ids = [idx, idx | bb, idx | ba, idx | ba | bb];
                let old = ids.map(|i| self.amps[i]);
                for (row, &target) in ids.iter().enumerate() {
                    self.amps[target] = (0..4).map(|col| g[(row, col)] * old[col]).sum();
                }
            }
        }
    }

    pub fn cphase(&mut self, a: usize, b: usize) {
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            if qubit_bit(idx, a) == 1 && qubit_bit(idx, b) == 1 {
                *amp = -*amp;
            }
        }
    }

    pub fn probabilities(&self, k: usize) -> (f64, f64) {
        let mut p = [0.0; 2];
        for (idx, amp) in self.amps.iter().enumerate() {
            p[qubit_bit(idx, k)] += amp.norm_sqr();
        }
        (p[0], p[1])
    }

    pub fn measure(&self, k: usize, outcome: Option<u8>) -> MpsResult<DenseMeasurement> {
        let (p0, p1) = self.probabilities(k);
        let projected = match outcome {
            None => None,
            Some(r) => Some(self.project(k, r)?),
        };
        Ok(DenseMeasurement { p0, p1, projected })
    }

    /// Normalized projection of qubit `k` onto `outcome`; `n` is unchanged.
    pub fn project(&self, k: usize, outcome: u8) -> MpsResult<DenseState> {
        let (p0, p1) = self.probabilities(k);
        let p = if outcome == 0 { p0 } else { p1 };
        if p <= EPS_PROB {
            return Err(MpsError::ZeroProbability { site: k, outcome, probability: p });
        }
        let s = 1.0 / p.sqrt();
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(idx, &a)| if qubit_bit(idx, k) == outcome as usize { a * s } else { C64::new(0.0, 0.0) })
            .collect();
        Ok(Self { amps })
    }

    /// Projects qubit `k` onto `outcome` and removes it from the register.
    pub fn discard(&self, k: usize, outcome: u8) -> MpsResult<DenseState> {
        let projected = self.project(k, outcome)?;
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len() / 2];
        for (idx, &a) in projected.amps.iter().enumerate() {
            if qubit_bit(idx, k) == outcome as usize {
                amps[remove_qubit(idx, k)] = a;
            }
        }
        Ok(Self { amps })
    }

    /// Schmidt coefficients across `{0..k} | {k..n}` (first `k` qubits on the
    /// left): the singular values of the `2^k × 2^{n−k}` amplitude matrix,
    /// descending.
    pub fn schmidt_spectrum(&self, k: usize) -> Vec<f64> {
        let left = 1usize << k;
        let right = self.amps.len() / left;
        // column-major reshape: row = first k qubits, column = the rest
        let m = faer::Mat::<C64>::from_fn(left, right, |r, c| self.amps[r + left * c]);
        let mut sv = m.singular_values().expect("dense SVD converges");
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &DenseState) -> f64 {
        assert_eq!(self.amps.len(), other.amps.len());
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
    }

    /// ∞-norm distance after aligning the global phase on the largest
    /// amplitude of `self`.
    pub fn distance_up_to_phase(&self, other: &DenseState) -> f64 {
        assert_eq!(self.amps.len(), other.amps.len());
        let (j, _) = self
            .amps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .expect("non-empty");
        let phase = if other.amps[j].norm() > 0.0 {
            let r = self.amps[j] / other.amps[j];
            r / r.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b * phase).norm()).fold(0.0, f64::max)
    }
}

/// Exhaustive outcome tree of `pattern` on `psi`, where `labels[q]` names
/// the qubit stored at index bit `q`. Outcome strings list outcomes in step
/// order; branches of zero probability are pruned.
pub fn enumerate_branches(
    psi: &DenseState,
    labels: &[QubitId],
    pattern: &MeasurementPattern,
) -> Result<BTreeMap<String, f64>, PatternError> {
    let mut out = BTreeMap::new();
    let mut outcomes = BTreeMap::new();
    branch(psi, labels, pattern, 0, 1.0, &mut String::new(), &mut outcomes, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn branch(
    psi: &DenseState,
    labels: &[QubitId],
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
    let q = labels.iter().position(|&l| l == s.target).ok_or(MpsError::UnknownLabel(s.target))?;
    let u = resolve_basis(s, outcomes)?;
    let mut rotated = psi.clone();
    rotated.apply_single_qubit(q, &u);
    let (p0, p1) = rotated.probabilities(q);
    for (r, p) in [(0u8, p0), (1u8, p1)] {
        if p <= EPS_PROB {
            continue;
        }
        let next = rotated.project(q, r)?;
        prefix.push(char::from(b'0' + r));
        outcomes.insert(s.target, r);
        branch(&next, labels, pattern, step + 1, prob * p, prefix, outcomes, out)?;
        outcomes.remove(&s.target);
        prefix.pop();
    }
    Ok(())
}

/// Dense counterpart of a full pattern run with prescribed outcomes: the
/// cluster of `spec` with the pattern's inputs, the measurements in order and
/// the byproduct corrections. Returns the state of the unmeasured qubits in
/// ascending label order.
pub fn run_pattern_dense(
    spec: &ClusterSpec,
    pattern: &MeasurementPattern,
    outcomes: &[u8],
) -> Result<DenseState, PatternError> {
    if outcomes.len() != pattern.steps.len() {
        return Err(PatternError::ForcedLength { given: outcomes.len(), steps: pattern.steps.len() });
    }
    let n = spec.n();
    if n > DENSE_LIMIT {
        return Err(MpsError::DenseLimit { n, limit: DENSE_LIMIT }.into());
    }
    let mut psi = DenseState::plus(n);
    for input in &pattern.inputs {
        psi.apply_single_qubit(input.target.0, &input.unitary);
    }
    for (a, b) in spec.edge_sites() {
        psi.cphase(a, b);
    }
    let mut labels: Vec<QubitId> = (0..n).map(QubitId).collect();
    let mut seen = BTreeMap::new();
    for (step, &r) in pattern.steps.iter().zip(outcomes) {
        let q = labels.iter().position(|&l| l == step.target).ok_or(MpsError::UnknownLabel(step.target))?;
        psi.apply_single_qubit(q, &resolve_basis(step, &seen)?);
        psi = psi.discard(q, r)?;
        labels.remove(q);
        seen.insert(step.target, r);
    }
    let parity = |deps: &[QubitId]| deps.iter().fold(0u8, |acc, d| acc ^ seen.get(d).copied().unwrap_or(0));
    for c in &pattern.corrections {
        let q = labels.iter().position(|&l| l == c.target).ok_or(MpsError::UnknownLabel(c.target))?;
        if parity(&c.x_deps) == 1 {
            psi.apply_single_qubit(q, &linalg::pauli_x());
        }
        if parity(&c.z_deps) == 1 {
            psi.apply_single_qubit(q, &linalg::pauli_z());
        }
    }
    Ok(psi)
}
