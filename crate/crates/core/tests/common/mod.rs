#![allow(dead_code)]

use mbqc_mps::linalg::Unitary2;
use mbqc_mps::pattern::library::GateDemo;
use mbqc_mps::{DenseState, MpsState, QubitId, C64};
use nalgebra::{DVector, Matrix2};
use rand::Rng;
use rand_distr::StandardNormal;

pub const TOL: f64 = 1e-9;

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DenseState {
    let amps: Vec<C64> = (0..1usize << n).map(|_| gaussian(rng)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    DenseState::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

/// Haar-random 2×2 unitary (QR of a complex Gaussian matrix, phases fixed).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R) -> Unitary2 {
    let m = Matrix2::from_fn(|_, _| gaussian(rng));
    let qr = m.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..2 {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            for i in 0..2 {
                q[(i, j)] *= ph;
            }
        }
    }
    q
}

pub fn dense(state: &MpsState) -> DenseState {
    state.to_dense().unwrap()
}

pub fn assert_close_up_to_phase(a: &DenseState, b: &DenseState, tol: f64) {
    let d = a.distance_up_to_phase(b);
    assert!(d <= tol, "states differ by {d:e}");
}

pub fn assert_canonical(state: &MpsState) {
    let defect = state.canonical_defect();
    assert!(defect <= TOL, "canonical defect {defect:e}");
}

/// `gate · ⊗_j (U_j|+⟩)` for a gate demo, the j-th input landing on the j-th
/// output; bit `k` of the result is the qubit `labels[k]`.
pub fn logical_output(demo: &GateDemo, labels: &[QubitId]) -> DenseState {
    let m = demo.pattern.outputs.len();
    let plus = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let factors: Vec<[C64; 2]> = demo
        .pattern
        .inputs
        .iter()
        .map(|i| [i.unitary[(0, 0)] * plus + i.unitary[(0, 1)] * plus, i.unitary[(1, 0)] * plus + i.unitary[(1, 1)] * plus])
        .collect();
    let v = DVector::from_fn(1 << m, |idx, _| {
        (0..m).map(|j| factors[j][(idx >> (m - 1 - j)) & 1]).product::<C64>()
    });
    let w = &demo.gate * v;
    let slot: Vec<usize> = labels
        .iter()
        .map(|l| demo.pattern.outputs.iter().position(|o| o == l).expect("label is an output"))
        .collect();
    let amps = (0..1usize << m)
        .map(|idx| {
            let logical = (0..m).fold(0, |acc, k| acc | (((idx >> k) & 1) << (m - 1 - slot[k])));
            w[logical]
        })
        .collect();
    DenseState::from_amplitudes(amps).unwrap()
}
