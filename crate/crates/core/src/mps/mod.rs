//! Matrix product states in Vidal's Γ/λ canonical form.
//!
//! ```text
//!        .- bond 0 -.        .- bond 1 -.       .- bond n-2 -.
//!        V          V        V          V       V            V
//!  Γ[0] ---- λ[0] ---- Γ[1] ---- λ[1] ---- ... ---- λ[n-2] ---- Γ[n-1]
//!   |                   |                                         |
//!   i_0                 i_1                                       i_{n-1}
//! ```
//!
//! Every bond vector holds the Schmidt coefficients of the bipartition
//! `{0..=k} | {k+1..n}` in descending order, and the vector families
//! `|L_a⟩ = Σ λ[k-1]_z Γ[k]^i_{za} |L_z⟩|i⟩` and
//! `|R_a⟩ = Σ Γ[k+1]^i_{ab} λ[k+1]_b |i⟩|R_b⟩` are orthonormal on both sides
//! of each bond. The chain ends carry a virtual bond vector `[1]`.

mod update;

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dense::DenseState;
use crate::linalg::{self, Unitary2};
use crate::DENSE_LIMIT;

pub use update::sample_outcome;
pub(crate) use update::sweep_right;

const BOUNDARY: &[f64] = &[1.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpsError {
    #[error("state has no qubits")]
    Empty,

    #[error("amplitude vector length {0} is not a power of two")]
    BadLength(usize),

    #[error("input state is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("{n} qubits exceed the dense conversion limit of {limit}")]
    DenseLimit { n: usize, limit: usize },

    #[error("site {site} out of range for a chain of {len} sites")]
    SiteOutOfRange { site: usize, len: usize },

    #[error("no site carries label {0}")]
    UnknownLabel(QubitId),

    #[error("matrix is not unitary (max |U†U - I| = {0:e})")]
    NotUnitary(f64),

    #[error("sites {0} and {1} are not distinct")]
    SameSite(usize, usize),

    #[error("sites {0} and {1} are not adjacent in the chain")]
    NotAdjacent(usize, usize),

    #[error("outcome {outcome} on site {site} has probability {probability:e}")]
    ZeroProbability { site: usize, outcome: u8, probability: f64 },

    #[error("singular value decomposition failed to converge")]
    SvdFailed,

    #[error("canonical form lost during update (defect {0:e})")]
    CanonicalFormLost(f64),
}

impl MpsError {
    /// True for errors that indicate a broken internal invariant rather than
    /// invalid input.
    pub fn is_internal(&self) -> bool {
        matches!(self, MpsError::SvdFailed | MpsError::CanonicalFormLost(_))
    }
}

pub type MpsResult<T> = Result<T, MpsError>;

/// External identifier of a physical qubit. For clusters this is the
/// column-major grid position; it survives the removal of measured qubits
/// from the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QubitId(pub usize);

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// Γ tensor of one site, stored as one `χ_left × χ_right` matrix per value of
/// the physical index.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    pub(crate) gamma: [DMatrix<C64>; 2],
}

impl SiteTensor {
    pub(crate) fn new(g0: DMatrix<C64>, g1: DMatrix<C64>) -> Self {
        debug_assert_eq!(g0.shape(), g1.shape());
        Self { gamma: [g0, g1] }
    }

    pub fn chi_left(&self) -> usize {
        self.gamma[0].nrows()
    }

    pub fn chi_right(&self) -> usize {
        self.gamma[0].ncols()
    }

    /// Γ^i as a `χ_left × χ_right` matrix.
    pub fn gamma(&self, i: usize) -> &DMatrix<C64> {
        &self.gamma[i]
    }

    fn is_finite(&self) -> bool {
        self.gamma.iter().all(|g| g.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// Schmidt coefficients of one bond, descending.
#[derive(Clone, Debug, PartialEq)]
pub struct BondVector(pub(crate) Vec<f64>);

impl BondVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn chi(&self) -> usize {
        self.0.len()
    }
}

/// Bond dimensions of a chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChiProfile {
    pub bonds: Vec<usize>,
}

impl ChiProfile {
    /// Maximal Schmidt number over all bonds; 1 for chains without bonds.
    pub fn max(&self) -> usize {
        self.bonds.iter().copied().max().unwrap_or(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpsState {
    pub(crate) sites: Vec<SiteTensor>,
    pub(crate) bonds: Vec<BondVector>,
    pub(crate) labels: Vec<QubitId>,
}

fn scale_rows(m: &mut DMatrix<C64>, w: &[f64]) {
    for (r, &x) in w.iter().enumerate() {
        m.row_mut(r).scale_mut(x);
    }
}

fn scale_cols(m: &mut DMatrix<C64>, w: &[f64]) {
    for (c, &x) in w.iter().enumerate() {
        m.column_mut(c).scale_mut(x);
    }
}

impl MpsState {
    /// Product state; each entry is the (normalized) single-qubit amplitude
    /// pair of one site.
    pub fn product(qubits: &[[C64; 2]]) -> MpsResult<Self> {
        if qubits.is_empty() {
            return Err(MpsError::Empty);
        }
        let mut sites = Vec::with_capacity(qubits.len());
        for q in qubits {
            let norm = (q[0].norm_sqr() + q[1].norm_sqr()).sqrt();
            if (norm - 1.0).abs() > 1e-8 {
                return Err(MpsError::NotNormalized(norm));
            }
            sites.push(SiteTensor::new(
                DMatrix::from_element(1, 1, q[0] / norm),
                DMatrix::from_element(1, 1, q[1] / norm),
            ));
        }
        let n = sites.len();
        Ok(Self {
            sites,
            bonds: vec![BondVector(vec![1.0]); n - 1],
            labels: (0..n).map(QubitId).collect(),
        })
    }

    /// |+⟩^{⊗n}.
    pub fn plus_state(n: usize) -> MpsResult<Self> {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::product(&vec![[h, h]; n])
    }

    /// |0⟩^{⊗n}.
    pub fn zero_state(n: usize) -> MpsResult<Self> {
        Self::product(&vec![[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]; n])
    }

    /// Builds the canonical chain from a dense statevector by a sequence of
    /// Schmidt decompositions, peeling off one qubit at a time from the left.
    pub fn from_dense(psi: &DenseState) -> MpsResult<Self> {
        let n = psi.n();
        if n == 0 {
            return Err(MpsError::Empty);
        }
        if n > DENSE_LIMIT {
            return Err(MpsError::DenseLimit { n, limit: DENSE_LIMIT });
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(MpsError::NotNormalized(norm));
        }

        // rows: right Schmidt vectors of the previous bond, in the basis of
        // the remaining qubits (lowest remaining qubit = lowest index bit)
        let mut right = DMatrix::from_row_slice(1, psi.amplitudes().len(), psi.amplitudes());
        let mut lam_prev: Vec<f64> = vec![1.0];
        let mut sites = Vec::with_capacity(n);
        let mut bonds = Vec::with_capacity(n - 1);

        for _ in 0..n - 1 {
            let chi_l = right.nrows();
            let half = right.ncols() / 2;
            let mut theta = DMatrix::zeros(2 * chi_l, half);
            let mut parts = [DMatrix::zeros(chi_l, half), DMatrix::zeros(chi_l, half)];
            for a in 0..chi_l {
                for h in 0..half {
                    for (i, part) in parts.iter_mut().enumerate() {
                        let z = right[(a, i + 2 * h)];
                        part[(a, h)] = z;
                        theta[(a + chi_l * i, h)] = z * lam_prev[a];
                    }
                }
            }
            let mut sch = linalg::truncated_svd(theta).ok_or(MpsError::SvdFailed)?;
            sch.normalize();
            let v = sch.vt.adjoint();
            let [p0, p1] = parts;
            let mut g0 = p0 * &v;
            let mut g1 = p1 * &v;
            let inv: Vec<f64> = sch.s.iter().map(|x| 1.0 / x).collect();
            scale_cols(&mut g0, &inv);
            scale_cols(&mut g1, &inv);
            sites.push(SiteTensor::new(g0, g1));
            bonds.push(BondVector(sch.s.clone()));
            lam_prev = sch.s;
            right = sch.vt;
        }
        let chi_l = right.nrows();
        sites.push(SiteTensor::new(
            DMatrix::from_fn(chi_l, 1, |a, _| right[(a, 0)]),
            DMatrix::from_fn(chi_l, 1, |a, _| right[(a, 1)]),
        ));

        Ok(Self { sites, bonds, labels: (0..n).map(QubitId).collect() })
    }

    /// Contracts the chain into its 2ⁿ amplitudes (qubit `k` = chain site
    /// `k` = index bit `k`). A chain with no sites yields the scalar `[1]`.
    pub fn to_dense(&self) -> MpsResult<DenseState> {
        let n = self.len();
        if n > DENSE_LIMIT {
            return Err(MpsError::DenseLimit { n, limit: DENSE_LIMIT });
        }
        let mut acc = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for k in 0..n {
            let mut weighted = acc;
            scale_cols(&mut weighted, self.lambda_left(k));
            let y0 = &weighted * &self.sites[k].gamma[0];
            let y1 = &weighted * &self.sites[k].gamma[1];
            let rows = y0.nrows();
            let mut next = DMatrix::zeros(2 * rows, y0.ncols());
            next.rows_mut(0, rows).copy_from(&y0);
            next.rows_mut(rows, rows).copy_from(&y1);
            acc = next;
        }
        let amps: Vec<C64> = acc.column(0).iter().copied().collect();
        DenseState::from_amplitudes(amps)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[SiteTensor] {
        &self.sites
    }

    pub fn bonds(&self) -> &[BondVector] {
        &self.bonds
    }

    pub fn labels(&self) -> &[QubitId] {
        &self.labels
    }

    /// Replaces the external labels; the slice must have one entry per site.
    pub fn with_labels(mut self, labels: Vec<QubitId>) -> Self {
        assert_eq!(labels.len(), self.len(), "one label per site");
        self.labels = labels;
        self
    }

    /// Chain position of the qubit carrying `label`.
    pub fn position_of(&self, label: QubitId) -> MpsResult<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(MpsError::UnknownLabel(label))
    }

    pub(crate) fn check_site(&self, k: usize) -> MpsResult<()> {
        if k < self.len() {
            Ok(())
        } else {
            Err(MpsError::SiteOutOfRange { site: k, len: self.len() })
        }
    }

    /// λ on the bond left of site `k` (`[1]` at the chain start).
    pub(crate) fn lambda_left(&self, k: usize) -> &[f64] {
        if k == 0 {
            BOUNDARY
        } else {
            &self.bonds[k - 1].0
        }
    }

    /// λ on the bond right of site `k` (`[1]` at the chain end).
    pub(crate) fn lambda_right(&self, k: usize) -> &[f64] {
        self.bonds.get(k).map_or(BOUNDARY, |b| &b.0)
    }

    /// Absorbs a single-qubit unitary into Γ of site `k`:
    /// `Γ̃^i = Σ_j U_ij Γ^j`. Bond vectors are untouched.
    pub fn apply_single_qubit(&mut self, k: usize, u: &Unitary2) -> MpsResult<()> {
        self.check_site(k)?;
        let defect = linalg::unitarity_defect(u);
        if defect > 1e-10 {
            return Err(MpsError::NotUnitary(defect));
        }
        let [g0, g1] = &self.sites[k].gamma;
        let n0 = g0 * u[(0, 0)] + g1 * u[(0, 1)];
        let n1 = g0 * u[(1, 0)] + g1 * u[(1, 1)];
        self.sites[k].gamma = [n0, n1];
        Ok(())
    }

    /// `A^i = diag(λ_left)·Γ^i·diag(λ_right)` for site `k`.
    pub(crate) fn a_tensor(&self, k: usize, i: usize) -> DMatrix<C64> {
        let mut a = self.sites[k].gamma[i].clone();
        scale_rows(&mut a, self.lambda_left(k));
        scale_cols(&mut a, self.lambda_right(k));
        a
    }

    /// Born probabilities `(p0, p1)` of a computational-basis measurement of
    /// site `k`, read off the local A tensor.
    pub fn outcome_probabilities(&self, k: usize) -> MpsResult<(f64, f64)> {
        self.check_site(k)?;
        let p0 = self.a_tensor(k, 0).norm_squared();
        let p1 = self.a_tensor(k, 1).norm_squared();
        let total = p0 + p1;
        Ok((p0 / total, p1 / total))
    }

    /// Projects site `k` onto `outcome`, drops it from the chain and rebuilds
    /// the canonical form of the remaining `n − 1` qubits.
    pub fn project_and_update(&self, k: usize, outcome: u8) -> MpsResult<MpsState> {
        update::project_and_update(self, k, outcome)
    }

    /// Samples a computational-basis outcome for site `k` using exactly one
    /// uniform draw from `rng`, then projects onto it.
    pub fn measure<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> MpsResult<(u8, MpsState)> {
        let (p0, p1) = self.outcome_probabilities(k)?;
        let outcome = sample_outcome(p0, p1, rng.random::<f64>());
        let post = self.project_and_update(k, outcome)?;
        Ok((outcome, post))
    }

    pub fn chi_profile(&self) -> ChiProfile {
        ChiProfile { bonds: self.bonds.iter().map(BondVector::chi).collect() }
    }

    pub fn max_chi(&self) -> usize {
        self.chi_profile().max()
    }

    /// Number of stored scalars: Γ entries plus λ entries.
    pub fn parameter_count(&self) -> usize {
        let gammas: usize = self.sites.iter().map(|s| 2 * s.chi_left() * s.chi_right()).sum();
        let lambdas: usize = self.bonds.iter().map(BondVector::chi).sum();
        gammas + lambdas
    }

    /// Largest violation of the canonical-form conditions: unit-norm,
    /// descending, positive bond vectors, and orthonormal left and right
    /// Schmidt vector families at every site. Infinite on shape mismatch or
    /// non-finite entries.
    pub fn canonical_defect(&self) -> f64 {
        let n = self.len();
        if self.bonds.len() + 1 != n.max(1) || self.labels.len() != n {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for b in &self.bonds {
            let v = &b.0;
            if v.is_empty() || v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
                return f64::INFINITY;
            }
            worst = worst.max((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs());
            for w in v.windows(2) {
                worst = worst.max(w[1] - w[0]);
            }
        }
        for k in 0..n {
            let site = &self.sites[k];
            if !site.is_finite()
                || site.chi_left() != self.lambda_left(k).len()
                || site.chi_right() != self.lambda_right(k).len()
            {
                return f64::INFINITY;
            }
            let mut left = DMatrix::<C64>::zeros(site.chi_right(), site.chi_right());
            let mut right = DMatrix::<C64>::zeros(site.chi_left(), site.chi_left());
            for i in 0..2 {
                let mut l = site.gamma[i].clone();
                scale_rows(&mut l, self.lambda_left(k));
                left += l.adjoint() * &l;
                let mut r = site.gamma[i].clone();
                scale_cols(&mut r, self.lambda_right(k));
                right += &r * r.adjoint();
            }
            let id_l = DMatrix::<C64>::identity(left.nrows(), left.ncols());
            let id_r = DMatrix::<C64>::identity(right.nrows(), right.ncols());
            worst = worst.max((left - id_l).camax()).max((right - id_r).camax());
        }
        worst
    }

    /// True iff [`canonical_defect`](Self::canonical_defect) is within `tol`.
    pub fn check_canonical(&self, tol: f64) -> bool {
        self.canonical_defect() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hadamard;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell() -> DenseState {
        DenseState::from_amplitudes(vec![c(FRAC_1_SQRT_2), c(0.0), c(0.0), c(FRAC_1_SQRT_2)]).unwrap()
    }

    #[test]
    fn product_state_has_unit_bonds() {
        let psi = DenseState::from_amplitudes(vec![c(1.0), c(0.0), c(0.0), c(0.0)]).unwrap();
        let mps = MpsState::from_dense(&psi).unwrap();
        assert_eq!(mps.chi_profile().bonds, vec![1]);
        assert!((mps.bonds[0].0[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bell_pair_schmidt_form() {
        let mps = MpsState::from_dense(&bell()).unwrap();
        assert_eq!(mps.chi_profile().bonds, vec![2]);
        for &x in mps.bonds[0].values() {
            assert!((x - FRAC_1_SQRT_2).abs() < 1e-12);
        }
        assert!(mps.check_canonical(1e-12));
    }

    #[test]
    fn single_site_to_dense() {
        let mps = MpsState::zero_state(1).unwrap();
        let d = mps.to_dense().unwrap();
        assert_eq!(d.amplitudes(), &[c(1.0), c(0.0)]);
    }

    #[test]
    fn from_dense_rejects_bad_input() {
        let unnormalized = DenseState::from_amplitudes(vec![c(1.0), c(1.0)]).unwrap();
        assert!(matches!(MpsState::from_dense(&unnormalized), Err(MpsError::NotNormalized(_))));
        let scalar = DenseState::from_amplitudes(vec![c(1.0)]).unwrap();
        assert_eq!(MpsState::from_dense(&scalar), Err(MpsError::Empty));
    }

    #[test]
    fn identity_leaves_state_bitwise_unchanged() {
        let mut mps = MpsState::from_dense(&bell()).unwrap();
        let before = mps.clone();
        mps.apply_single_qubit(1, &linalg::identity2()).unwrap();
        assert_eq!(mps, before);
    }

    #[test]
    fn hadamard_on_first_qubit() {
        let mut mps = MpsState::zero_state(2).unwrap();
        mps.apply_single_qubit(0, &hadamard()).unwrap();
        let d = mps.to_dense().unwrap();
        // |00⟩ + |10⟩ in ket order q0 q1, i.e. index bits 0b00 and 0b01
        let expect = [c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), c(0.0), c(0.0)];
        for (a, b) in d.amplitudes().iter().zip(expect) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn non_unitary_is_rejected() {
        let mut mps = MpsState::zero_state(2).unwrap();
        let m = Unitary2::new(c(1.0), c(1.0), c(0.0), c(1.0));
        assert!(matches!(mps.apply_single_qubit(0, &m), Err(MpsError::NotUnitary(_))));
        assert_eq!(
            mps.apply_single_qubit(2, &hadamard()),
            Err(MpsError::SiteOutOfRange { site: 2, len: 2 })
        );
    }

    #[test]
    fn probabilities_of_simple_product_states() {
        let plus = MpsState::plus_state(3).unwrap();
        let (p0, p1) = plus.outcome_probabilities(1).unwrap();
        assert!((p0 - 0.5).abs() < 1e-14 && (p1 - 0.5).abs() < 1e-14);
        let zero = MpsState::zero_state(3).unwrap();
        assert_eq!(zero.outcome_probabilities(2).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn scaled_lambda_breaks_canonical_form() {
        let mut mps = MpsState::from_dense(&bell()).unwrap();
        assert!(mps.check_canonical(1e-9));
        mps.bonds[0].0[0] *= 2.0;
        assert!(!mps.check_canonical(1e-9));
    }

    #[test]
    fn chi_profile_of_bell_and_product() {
        assert_eq!(MpsState::plus_state(4).unwrap().chi_profile().bonds, vec![1, 1, 1]);
        assert_eq!(MpsState::from_dense(&bell()).unwrap().chi_profile().bonds, vec![2]);
    }
}
