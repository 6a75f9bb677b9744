//! Small dense linear-algebra helpers: standard gates, unitarity checks and
//! the truncated Schmidt (thin SVD) kernel used by every re-canonicalization.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::EPS_TRUNC;

pub type Unitary2 = Matrix2<C64>;
pub type Unitary4 = Matrix4<C64>;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn identity2() -> Unitary2 {
    Unitary2::identity()
}

pub fn hadamard() -> Unitary2 {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    Unitary2::new(h, h, h, -h)
}

pub fn pauli_x() -> Unitary2 {
    Unitary2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_z() -> Unitary2 {
    Unitary2::new(ONE, ZERO, ZERO, -ONE)
}

/// diag(1, e^{iφ}).
pub fn phase(phi: f64) -> Unitary2 {
    Unitary2::new(ONE, ZERO, ZERO, C64::from_polar(1.0, phi))
}

/// Controlled phase: diag(1, 1, 1, −1).
pub fn cphase() -> Unitary4 {
    let mut g = Unitary4::identity();
    g[(3, 3)] = -ONE;
    g
}

/// Two-qubit gates act on the index `2·i_a + i_b`, where `a` is the first
/// (left) qubit.
pub fn swap() -> Unitary4 {
    let mut g = Unitary4::zeros();
    g[(0, 0)] = ONE;
    g[(1, 2)] = ONE;
    g[(2, 1)] = ONE;
    g[(3, 3)] = ONE;
    g
}

/// CNOT with the first qubit as control.
pub fn cnot() -> Unitary4 {
    let mut g = Unitary4::zeros();
    g[(0, 0)] = ONE;
    g[(1, 1)] = ONE;
    g[(2, 3)] = ONE;
    g[(3, 2)] = ONE;
    g
}

/// Largest entry of |U†U − I|.
pub fn unitarity_defect<const N: usize>(
    u: &nalgebra::SMatrix<C64, N, N>,
) -> f64 {
    let prod = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

/// Truncated thin singular value decomposition `M ≈ U·diag(s)·V†` with the
/// singular values in descending order and every value at or below
/// [`EPS_TRUNC`] removed.
///
/// For a matrix `B`, the columns of `V` are the eigenvectors of the reduced
/// density matrix `ρ = Bᵀ B*` and `s²` its eigenvalues; the SVD route yields
/// both without squaring the condition number.
#[derive(Clone, Debug)]
pub struct Schmidt {
    pub u: DMatrix<C64>,
    pub s: Vec<f64>,
    pub vt: DMatrix<C64>,
}

impl Schmidt {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Rescales the spectrum to unit 2-norm and returns the norm it had.
    pub fn normalize(&mut self) -> f64 {
        let norm = self.s.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            self.s.iter_mut().for_each(|x| *x /= norm);
        }
        norm
    }
}

/// Returns `None` when the SVD fails to converge.
pub fn truncated_svd(m: DMatrix<C64>) -> Option<Schmidt> {
    let (rows, cols) = m.shape();
    let a = faer::Mat::<C64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = a.thin_svd().ok()?;
    let (u, v) = (svd.U(), svd.V());
    let sv = svd.S().column_vector();

    let mut order: Vec<usize> = (0..sv.nrows()).filter(|&i| sv[i].re > EPS_TRUNC).collect();
    order.sort_by(|&a, &b| sv[b].re.total_cmp(&sv[a].re));

    let rank = order.len();
    let u_out = DMatrix::from_fn(rows, rank, |i, k| u[(i, order[k])]);
    let vt_out = DMatrix::from_fn(rank, cols, |k, j| v[(j, order[k])].conj());
    let s = order.iter().map(|&i| sv[i].re).collect();
    Some(Schmidt { u: u_out, s, vt: vt_out })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_gates_are_unitary() {
        for g in [hadamard(), pauli_x(), pauli_z(), phase(0.37), identity2()] {
            assert!(unitarity_defect(&g) < 1e-14);
        }
        for g in [cphase(), swap(), cnot()] {
            assert!(unitarity_defect(&g) < 1e-14);
        }
        let bad = Unitary2::new(ONE, ONE, ZERO, ONE);
        assert!(unitarity_defect(&bad) > 0.5);
    }

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let m = DMatrix::from_fn(4, 3, |i, j| C64::new((i * 3 + j) as f64 * 0.1, (i as f64) - (j as f64)));
        let sch = truncated_svd(m.clone()).unwrap();
        assert!(sch.s.windows(2).all(|w| w[0] >= w[1]));
        let sigma = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            sch.rank(),
            sch.s.iter().map(|&x| C64::new(x, 0.0)),
        ));
        let back = &sch.u * sigma * &sch.vt;
        assert!((back - m).camax() < 1e-12);
    }

    #[test]
    fn svd_drops_numerical_zeros() {
        // rank one outer product
        let a = nalgebra::DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)]);
        let b = nalgebra::DVector::from_vec(vec![C64::new(0.5, 0.0), C64::new(1.0, 0.0), C64::new(0.0, -1.0)]);
        let m = &a * b.transpose();
        let sch = truncated_svd(m).unwrap();
        assert_eq!(sch.rank(), 1);
    }
}
