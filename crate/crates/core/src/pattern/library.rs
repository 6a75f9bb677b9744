//! Ready-made patterns with known logical action.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{Basis, Correction, InputPrep, MeasurementPattern, MeasurementStep};
use crate::cluster::{ClusterSpec, GridCoord};
use crate::linalg::{self, Unitary2};
use crate::mps::QubitId;

/// A pattern together with the cluster it runs on and the logical gate it
/// implements on the inputs, in the order of `pattern.outputs`.
#[derive(Clone, Debug)]
pub struct GateDemo {
    pub spec: ClusterSpec,
    pub pattern: MeasurementPattern,
    /// Qubits carrying the logical inputs before the measurements.
    pub input_qubits: Vec<QubitId>,
    /// Logical gate; for two outputs the basis index is `2·i_first + i_second`.
    pub gate: DMatrix<C64>,
}

fn toggle(set: &mut BTreeSet<QubitId>, q: QubitId) {
    if !set.remove(&q) {
        set.insert(q);
    }
}

/// Chain `1 × (m+1)`: the input `input·|+⟩` on the first qubit is carried to
/// the last one while `H·P(−θ_j)` is applied for every angle in turn.
pub fn linear_rotation(angles: &[f64], input: Unitary2) -> GateDemo {
    let m = angles.len();
    let spec = ClusterSpec::grid(1, m + 1);
    let mut x = BTreeSet::new();
    let mut z = BTreeSet::new();
    let mut steps = Vec::with_capacity(m);
    let mut gate = linalg::identity2();
    for (j, &theta) in angles.iter().enumerate() {
        let q = QubitId(j);
        steps.push(MeasurementStep {
            target: q,
            basis: Basis::Xy { theta, sign_deps: x.iter().copied().collect(), pi_deps: Vec::new() },
        });
        let mut next_x = z;
        toggle(&mut next_x, q);
        z = std::mem::replace(&mut x, next_x);
        gate = linalg::hadamard() * linalg::phase(-theta) * gate;
    }
    let out = QubitId(m);
    GateDemo {
        spec,
        pattern: MeasurementPattern {
            inputs: vec![InputPrep { target: QubitId(0), unitary: input }],
            steps,
            outputs: vec![out],
            corrections: vec![Correction { target: out, x_deps: x.into_iter().collect(), z_deps: z.into_iter().collect() }],
        },
        input_qubits: vec![QubitId(0)],
        gate: DMatrix::from_iterator(2, 2, gate.iter().copied()),
    }
}

/// One-qubit teleportation along a three-qubit chain (two X measurements).
pub fn teleport(input: Unitary2) -> GateDemo {
    linear_rotation(&[0.0, 0.0], input)
}

/// CNOT on a `2 × 3` grid. The control sits on `c1r0` and is never measured;
/// the target enters at `c0r1` and leaves at `c2r1`. The corner qubits
/// `c0r0` and `c2r0` are not entangled and are measured in Z.
pub fn cnot(control_in: Unitary2, target_in: Unitary2) -> GateDemo {
    let g = GridCoord::new;
    let spec = ClusterSpec::from_edges(
        2,
        3,
        1,
        vec![(g(1, 0), g(1, 1)), (g(0, 1), g(1, 1)), (g(1, 1), g(2, 1))],
    );
    let q = |c: GridCoord| spec.qubit(c);
    let (control, t_in, middle, t_out) = (q(g(1, 0)), q(g(0, 1)), q(g(1, 1)), q(g(2, 1)));
    let pattern = MeasurementPattern {
        inputs: vec![
            InputPrep { target: control, unitary: control_in },
            InputPrep { target: t_in, unitary: target_in },
        ],
        steps: vec![
            MeasurementStep { target: q(g(0, 0)), basis: Basis::Computational },
            MeasurementStep { target: t_in, basis: Basis::xy(0.0) },
            MeasurementStep { target: middle, basis: Basis::xy(0.0) },
            MeasurementStep { target: q(g(2, 0)), basis: Basis::Computational },
        ],
        outputs: vec![control, t_out],
        corrections: vec![
            Correction { target: t_out, x_deps: vec![middle], z_deps: vec![t_in] },
            Correction { target: control, x_deps: Vec::new(), z_deps: vec![t_in] },
        ],
    };
    let c = linalg::cnot();
    GateDemo {
        spec,
        pattern,
        input_qubits: vec![control, t_in],
        gate: DMatrix::from_iterator(4, 4, c.iter().copied()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byproduct_bookkeeping_on_four_steps() {
        let demo = linear_rotation(&[0.1, 0.2, 0.3, 0.4], linalg::identity2());
        let deps: Vec<Vec<QubitId>> = demo
            .pattern
            .steps
            .iter()
            .map(|s| match &s.basis {
                Basis::Xy { sign_deps, .. } => sign_deps.clone(),
                _ => unreachable!(),
            })
            .collect();
        let q = QubitId;
        assert_eq!(deps, vec![vec![], vec![q(0)], vec![q(1)], vec![q(0), q(2)]]);
        let c = &demo.pattern.corrections[0];
        assert_eq!(c.x_deps, vec![q(1), q(3)]);
        assert_eq!(c.z_deps, vec![q(0), q(2)]);
        demo.pattern.validate().unwrap();
    }

    #[test]
    fn teleport_is_identity() {
        let demo = teleport(linalg::hadamard());
        assert!((demo.gate - DMatrix::identity(2, 2)).camax() < 1e-15);
    }
}
