//! Post-measurement re-canonicalization.
//!
//! After site `k` is projected onto outcome `r`, the remaining state is
//! `Σ_ab A_ab |L_a⟩|R_b⟩` with `A = diag(λ_left)·Γ^r·diag(λ_right) / √p(r)`.
//! The Schmidt decomposition of `A` gives the spectrum of the merged bond
//! and the new Schmidt vectors expressed in the old ones: `|R'_β⟩ = Σ_b M_βb |R_b⟩`
//! on the right and `|L'_β⟩ = Σ_a N_βa |L_a⟩` on the left.
//!
//! The rightward sweep then visits sites `k+1..n`. At each site it forms
//! `B^i_{βc} = μ_β Σ_b M_βb Γ^i_bc λ_c`, whose reduced density matrix over
//! `c` has the next bond's spectrum as eigenvalues and the next `M` as
//! eigenvectors. The new tensor is `Γ̃^i_{βγ} = Σ_bc M_βb Γ^i_bc λ_c M'*_γc / λ̃_γ`.
//! The leftward sweep mirrors this on sites `k−1..0`.
//!
//! Eigenpairs of every reduced density matrix come from the singular value
//! decomposition of the corresponding `B` (or `C`) matrix, so no division by
//! an old Schmidt coefficient ever occurs; the only divisions are by the new
//! spectrum, which is bounded below by `EPS_TRUNC`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{scale_cols, scale_rows, BondVector, MpsError, MpsResult, MpsState, SiteTensor};
use crate::linalg::{self, Schmidt};
use crate::EPS_PROB;

/// Spectra whose norm drifts further than this from one indicate that the
/// input chain was not in canonical form.
const NORM_DRIFT: f64 = 1e-6;

/// Outcome choice shared by every sampling path: outcome 0 iff `u < p0`,
/// except that an outcome with probability at or below `EPS_PROB` is never
/// chosen.
pub fn sample_outcome(p0: f64, p1: f64, u: f64) -> u8 {
    if p1 <= EPS_PROB {
        0
    } else if p0 <= EPS_PROB || u >= p0 {
        1
    } else {
        0
    }
}

/// Normalized decomposition together with the norm of the input, which is
/// needed to turn `B·V` back into isometries.
fn decompose(m: DMatrix<C64>) -> MpsResult<(Schmidt, f64)> {
    let mut sch = linalg::truncated_svd(m).ok_or(MpsError::SvdFailed)?;
    let norm = sch.normalize();
    if !norm.is_finite() || (norm - 1.0).abs() > NORM_DRIFT {
        return Err(MpsError::CanonicalFormLost((norm - 1.0).abs()));
    }
    Ok((sch, norm))
}

pub(super) fn project_and_update(state: &MpsState, k: usize, outcome: u8) -> MpsResult<MpsState> {
    state.check_site(k)?;
    let r = usize::from(outcome & 1);
    let n = state.len();

    let mut a = state.a_tensor(k, r);
    let p_raw = a.norm_squared();
    let p_other = state.a_tensor(k, 1 - r).norm_squared();
    let p = p_raw / (p_raw + p_other);
    if p <= EPS_PROB {
        return Err(MpsError::ZeroProbability { site: k, outcome, probability: p });
    }
    a /= C64::new(p_raw.sqrt(), 0.0);

    let (merged, _) = decompose(a)?;

    let right_bonds = state.bonds.get(k + 1..).unwrap_or(&[]);
    let (right_sites, right_new_bonds) =
        sweep_right(merged.s.clone(), merged.vt.clone(), &state.sites[k + 1..], right_bonds)?;

    let left_bonds = &state.bonds[..k.saturating_sub(1)];
    let (left_sites, left_new_bonds) =
        sweep_left(merged.s.clone(), merged.u.transpose(), &state.sites[..k], left_bonds)?;

    let mut bonds = left_new_bonds;
    if k > 0 && k + 1 < n {
        bonds.push(BondVector(merged.s));
    }
    bonds.extend(right_new_bonds);

    let mut sites = left_sites;
    sites.extend(right_sites);

    let mut labels = state.labels.clone();
    labels.remove(k);

    Ok(MpsState { sites, bonds, labels })
}

/// Re-canonicalizes `sites` (with `bonds[j]` to the right of `sites[j]`)
/// given that the state restricted to the bond on their left is
/// `Σ_β μ_β |L'_β⟩ ⊗ Σ_b M_βb |R_b⟩`, `|R_b⟩` being the old right Schmidt
/// vectors of that bond. Returns the new tensors and the new internal bonds.
pub(crate) fn sweep_right(
    mut mu: Vec<f64>,
    mut m: DMatrix<C64>,
    sites: &[SiteTensor],
    bonds: &[BondVector],
) -> MpsResult<(Vec<SiteTensor>, Vec<BondVector>)> {
    let mut new_sites = Vec::with_capacity(sites.len());
    let mut new_bonds = Vec::with_capacity(bonds.len());
    for (j, site) in sites.iter().enumerate() {
        let lam_r: &[f64] = bonds.get(j).map_or(&[1.0], |b| &b.0);
        let rows = mu.len();
        let chi_next = lam_r.len();

        let mut k0 = &m * &site.gamma[0];
        let mut k1 = &m * &site.gamma[1];
        scale_cols(&mut k0, lam_r);
        scale_cols(&mut k1, lam_r);

        let mut b = DMatrix::zeros(2 * rows, chi_next);
        for (i, ki) in [&k0, &k1].into_iter().enumerate() {
            let mut block = ki.clone();
            scale_rows(&mut block, &mu);
            b.rows_mut(i * rows, rows).copy_from(&block);
        }

        let (sch, norm) = decompose(b)?;
        let v = sch.vt.adjoint();
        let inv: Vec<f64> = sch.s.iter().map(|x| 1.0 / (x * norm)).collect();
        let mut g0 = k0 * &v;
        let mut g1 = k1 * &v;
        scale_cols(&mut g0, &inv);
        scale_cols(&mut g1, &inv);
        new_sites.push(SiteTensor::new(g0, g1));

        if j + 1 < sites.len() {
            new_bonds.push(BondVector(sch.s.clone()));
        }
        m = sch.vt;
        mu = sch.s;
    }
    Ok((new_sites, new_bonds))
}

/// Mirror image of [`sweep_right`]: `sites` lie left of the bond whose state
/// is `Σ_β μ_β (Σ_a N_βa |L_a⟩) ⊗ |R'_β⟩`; `bonds[j]` sits to the right of
/// `sites[j]` and the leftmost bond is virtual.
pub(crate) fn sweep_left(
    mut mu: Vec<f64>,
    mut n_mat: DMatrix<C64>,
    sites: &[SiteTensor],
    bonds: &[BondVector],
) -> MpsResult<(Vec<SiteTensor>, Vec<BondVector>)> {
    let mut new_sites = Vec::with_capacity(sites.len());
    let mut new_bonds = Vec::with_capacity(bonds.len());
    for (j, site) in sites.iter().enumerate().rev() {
        let lam_l: &[f64] = if j == 0 { &[1.0] } else { &bonds[j - 1].0 };
        let cols = mu.len();
        let chi_prev = lam_l.len();

        let nt = n_mat.transpose();
        let mut k0 = &site.gamma[0] * &nt;
        let mut k1 = &site.gamma[1] * &nt;
        scale_rows(&mut k0, lam_l);
        scale_rows(&mut k1, lam_l);

        let mut c = DMatrix::zeros(chi_prev, 2 * cols);
        for (i, ki) in [&k0, &k1].into_iter().enumerate() {
            let mut block = ki.clone();
            scale_cols(&mut block, &mu);
            c.columns_mut(i * cols, cols).copy_from(&block);
        }

        let (sch, norm) = decompose(c)?;
        let ud = sch.u.adjoint();
        let inv: Vec<f64> = sch.s.iter().map(|x| 1.0 / (x * norm)).collect();
        let mut g0 = &ud * k0;
        let mut g1 = &ud * k1;
        scale_rows(&mut g0, &inv);
        scale_rows(&mut g1, &inv);
        new_sites.push(SiteTensor::new(g0, g1));

        if j > 0 {
            new_bonds.push(BondVector(sch.s.clone()));
        }
        n_mat = sch.u.transpose();
        mu = sch.s;
    }
    new_sites.reverse();
    new_bonds.reverse();
    Ok((new_sites, new_bonds))
}
