//! Rectangular cluster states in column-major chain order.
//!
//! A `d × l` grid (width `d` rows, length `l` columns) is laid out on the
//! chain column by column, so grid point `(col, row)` sits at site
//! `col·d + row`. Vertical neighbours are adjacent on the chain while
//! horizontal neighbours are `d` sites apart; the latter are entangled through
//! a swap network.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Unitary2, Unitary4};
use crate::mps::{BondVector, MpsError, MpsResult, MpsState, QubitId, SiteTensor};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("invalid cluster document")]
    Json(#[from] serde_json::Error),

    #[error("grid must have width and length of at least 1")]
    EmptyGrid,

    #[error("coordinate {0} lies outside the grid")]
    OutOfGrid(GridCoord),

    #[error("self-edge at {0}")]
    SelfEdge(GridCoord),

    #[error("duplicate edge {0} - {1}")]
    DuplicateEdge(GridCoord, GridCoord),

    #[error("edge {0} - {1} spans more than {2} columns")]
    RangeExceeded(GridCoord, GridCoord, usize),

    #[error("explicit edges given together with nearest_neighbour = true")]
    ExplicitEdges,

    #[error("cannot parse qubit label {0:?} (expected c<col>r<row>)")]
    BadLabel(String),

    #[error(transparent)]
    Mps(#[from] MpsError),
}

impl ClusterError {
    /// True for numerical failures inside the simulator, as opposed to bad
    /// input.
    pub fn is_internal(&self) -> bool {
        matches!(self, ClusterError::Mps(e) if e.is_internal())
    }
}

/// Grid position; `col` runs along the length, `row` across the width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridCoord {
    pub col: usize,
    pub row: usize,
}

impl GridCoord {
    pub fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

impl fmt::Display for GridCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}r{}", self.col, self.row)
    }
}

impl FromStr for GridCoord {
    type Err = ClusterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ClusterError::BadLabel(s.to_string());
        let rest = s.strip_prefix('c').ok_or_else(bad)?;
        let (col, row) = rest.split_once('r').ok_or_else(bad)?;
        Ok(Self { col: col.parse().map_err(|_| bad())?, row: row.parse().map_err(|_| bad())? })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterSpec {
    pub width: usize,
    pub length: usize,
    /// Declared maximum column distance of any edge.
    pub range: usize,
    pub edges: Vec<(GridCoord, GridCoord)>,
    pub nearest_neighbour: bool,
}

#[derive(Serialize, Deserialize)]
struct CoordDoc {
    col: usize,
    row: usize,
}

#[derive(Serialize, Deserialize)]
struct ClusterDoc {
    width: usize,
    length: usize,
    range: usize,
    #[serde(default)]
    edges: Vec<[CoordDoc; 2]>,
    #[serde(default)]
    nearest_neighbour: bool,
}

impl ClusterSpec {
    /// Nearest-neighbour `width × length` grid.
    pub fn grid(width: usize, length: usize) -> Self {
        let mut spec = Self { width, length, range: 1, edges: Vec::new(), nearest_neighbour: true };
        spec.edges = spec.nearest_neighbour_edges();
        spec
    }

    /// Nearest-neighbour grid plus both diagonals between consecutive columns.
    pub fn with_diagonals(width: usize, length: usize) -> Self {
        let mut edges = Self::grid(width, length).edges;
        for col in 0..length.saturating_sub(1) {
            for row in 0..width {
                if row + 1 < width {
                    edges.push((GridCoord::new(col, row), GridCoord::new(col + 1, row + 1)));
                    edges.push((GridCoord::new(col, row + 1), GridCoord::new(col + 1, row)));
                }
            }
        }
        Self { width, length, range: 1, edges, nearest_neighbour: false }
    }

    /// Explicit edge list; nothing is validated until use.
    pub fn from_edges(width: usize, length: usize, range: usize, edges: Vec<(GridCoord, GridCoord)>) -> Self {
        Self { width, length, range, edges, nearest_neighbour: false }
    }

    fn nearest_neighbour_edges(&self) -> Vec<(GridCoord, GridCoord)> {
        let mut edges = Vec::new();
        for col in 0..self.length {
            for row in 0..self.width {
                let here = GridCoord::new(col, row);
                if row + 1 < self.width {
                    edges.push((here, GridCoord::new(col, row + 1)));
                }
                if col + 1 < self.length {
                    edges.push((here, GridCoord::new(col + 1, row)));
                }
            }
        }
        edges
    }

    pub fn from_json(text: &str) -> Result<Self, ClusterError> {
        let doc: ClusterDoc = serde_json::from_str(text)?;
        if doc.nearest_neighbour {
            if !doc.edges.is_empty() {
                return Err(ClusterError::ExplicitEdges);
            }
            let mut spec = Self::grid(doc.width, doc.length);
            spec.range = doc.range;
            return Ok(spec);
        }
        let edges = doc
            .edges
            .into_iter()
            .map(|[a, b]| (GridCoord::new(a.col, a.row), GridCoord::new(b.col, b.row)))
            .collect();
        Ok(Self::from_edges(doc.width, doc.length, doc.range, edges))
    }

    pub fn to_json(&self) -> String {
        let edges = if self.nearest_neighbour {
            Vec::new()
        } else {
            self.edges
                .iter()
                .map(|(a, b)| [CoordDoc { col: a.col, row: a.row }, CoordDoc { col: b.col, row: b.row }])
                .collect()
        };
        let doc = ClusterDoc {
            width: self.width,
            length: self.length,
            range: self.range,
            edges,
            nearest_neighbour: self.nearest_neighbour,
        };
        serde_json::to_string_pretty(&doc).expect("cluster document serializes")
    }

    pub fn n(&self) -> usize {
        self.width * self.length
    }

    /// Column-major chain position.
    pub fn site(&self, c: GridCoord) -> usize {
        c.col * self.width + c.row
    }

    pub fn coord(&self, site: usize) -> GridCoord {
        GridCoord::new(site / self.width, site % self.width)
    }

    pub fn qubit(&self, c: GridCoord) -> QubitId {
        QubitId(self.site(c))
    }

    /// Parses a `c<col>r<row>` label into the qubit it names on this grid.
    pub fn parse_label(&self, label: &str) -> Result<QubitId, ClusterError> {
        let c: GridCoord = label.parse()?;
        self.check_coord(c)?;
        Ok(self.qubit(c))
    }

    pub fn label(&self, q: QubitId) -> String {
        self.coord(q.0).to_string()
    }

    fn check_coord(&self, c: GridCoord) -> Result<(), ClusterError> {
        if c.col < self.length && c.row < self.width {
            Ok(())
        } else {
            Err(ClusterError::OutOfGrid(c))
        }
    }

    /// Coordinates inside the grid, no self-edges, no duplicates.
    pub fn validate_geometry(&self) -> Result<(), ClusterError> {
        if self.width == 0 || self.length == 0 {
            return Err(ClusterError::EmptyGrid);
        }
        let mut seen = BTreeSet::new();
        for &(a, b) in &self.edges {
            self.check_coord(a)?;
            self.check_coord(b)?;
            if a == b {
                return Err(ClusterError::SelfEdge(a));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(ClusterError::DuplicateEdge(a, b));
            }
        }
        Ok(())
    }

    /// Edges whose column distance exceeds the declared range.
    pub fn range_violations(&self) -> Vec<(GridCoord, GridCoord)> {
        self.edges.iter().copied().filter(|(a, b)| a.col.abs_diff(b.col) > self.range).collect()
    }

    /// Geometry plus the declared range.
    pub fn validate(&self) -> Result<(), ClusterError> {
        self.validate_geometry()?;
        match self.range_violations().first() {
            Some(&(a, b)) => Err(ClusterError::RangeExceeded(a, b, self.range)),
            None => Ok(()),
        }
    }

    /// Chain-site pairs in application order: by rightmost endpoint, then by
    /// leftmost endpoint.
    pub fn edge_sites(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (self.site(a), self.site(b));
                (x.min(y), x.max(y))
            })
            .collect();
        pairs.sort_by_key(|&(lo, hi)| (hi, lo));
        pairs
    }

    /// Upper bound on every bond's Schmidt number: `2^d` for nearest-neighbour
    /// grids, `2^⌊(r+1/2)d⌋` for range-`r` edge sets, and never more than
    /// `2^⌊n/2⌋`.
    pub fn chi_bound(&self) -> usize {
        let exponent = if self.nearest_neighbour {
            self.width
        } else {
            (2 * self.range + 1) * self.width / 2
        };
        1usize << exponent.min(self.n() / 2)
    }
}

impl MpsState {
    /// Applies a two-qubit unitary to chain sites `k`, `k+1` (local index
    /// `2·i_k + i_{k+1}`) and restores the Schmidt form of bond `k`.
    pub fn apply_two_site_gate(&mut self, k: usize, g: &Unitary4) -> MpsResult<()> {
        if k + 1 >= self.len() {
            return Err(MpsError::NotAdjacent(k, k + 1));
        }
        let defect = linalg::unitarity_defect(g);
        if defect > 1e-10 {
            return Err(MpsError::NotUnitary(defect));
        }

        let lam_l = self.lambda_left(k).to_vec();
        let lam_r = self.lambda_right(k + 1).to_vec();
        let (chi_l, chi_r) = (lam_l.len(), lam_r.len());

        // two-site block without the outer bond vectors
        let mut left = self.sites[k].gamma.clone();
        for g_i in left.iter_mut() {
            for (c, &x) in self.bonds[k].0.iter().enumerate() {
                g_i.column_mut(c).scale_mut(x);
            }
        }
        let right = &self.sites[k + 1].gamma;
        let raw: [[DMatrix<C64>; 2]; 2] =
            [0, 1].map(|i| [0, 1].map(|j| &left[i] * &right[j]));
        let block: [[DMatrix<C64>; 2]; 2] = [0, 1].map(|i| {
            [0, 1].map(|j| {
                let mut acc = DMatrix::zeros(chi_l, chi_r);
                for ip in 0..2 {
                    for jp in 0..2 {
                        let coeff = g[(2 * i + j, 2 * ip + jp)];
                        if coeff != C64::new(0.0, 0.0) {
                            acc += &raw[ip][jp] * coeff;
                        }
                    }
                }
                acc
            })
        });

        let mut theta = DMatrix::zeros(2 * chi_l, 2 * chi_r);
        for i in 0..2 {
            for j in 0..2 {
                let mut t = block[i][j].clone();
                for (a, &x) in lam_l.iter().enumerate() {
                    t.row_mut(a).scale_mut(x);
                }
                for (c, &x) in lam_r.iter().enumerate() {
                    t.column_mut(c).scale_mut(x);
                }
                theta.view_mut((i * chi_l, j * chi_r), (chi_l, chi_r)).copy_from(&t);
            }
        }

        let mut sch = linalg::truncated_svd(theta).ok_or(MpsError::SvdFailed)?;
        let norm = sch.normalize();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(MpsError::CanonicalFormLost((norm - 1.0).abs()));
        }
        let m = sch.rank();
        let inv: Vec<f64> = sch.s.iter().map(|x| 1.0 / (x * norm)).collect();

        let new_left = [0, 1].map(|i| {
            let mut acc = DMatrix::<C64>::zeros(chi_l, m);
            for j in 0..2 {
                let mut t = block[i][j].clone();
                for (c, &x) in lam_r.iter().enumerate() {
                    t.column_mut(c).scale_mut(x);
                }
                acc += t * sch.vt.columns(j * chi_r, chi_r).adjoint();
            }
            for (b, &x) in inv.iter().enumerate() {
                acc.column_mut(b).scale_mut(x);
            }
            acc
        });
        let new_right = [0, 1].map(|j| {
            let mut acc = DMatrix::<C64>::zeros(m, chi_r);
            for i in 0..2 {
                let mut t = block[i][j].clone();
                for (a, &x) in lam_l.iter().enumerate() {
                    t.row_mut(a).scale_mut(x);
                }
                acc += sch.u.rows(i * chi_l, chi_l).adjoint() * t;
            }
            for (b, &x) in inv.iter().enumerate() {
                acc.row_mut(b).scale_mut(x);
            }
            acc
        });

        let [l0, l1] = new_left;
        let [r0, r1] = new_right;
        self.sites[k] = SiteTensor::new(l0, l1);
        self.sites[k + 1] = SiteTensor::new(r0, r1);
        self.bonds[k] = BondVector(sch.s);
        Ok(())
    }

    /// CPHASE between chain sites `a` and `b`; distant pairs are brought
    /// together with adjacent swaps and moved back afterwards.
    pub fn apply_cphase(&mut self, a: usize, b: usize) -> MpsResult<()> {
        self.cphase_with_peak(a, b).map(|_| ())
    }

    /// As [`apply_cphase`](Self::apply_cphase), returning the largest bond
    /// dimension seen during the swap network.
    pub(crate) fn cphase_with_peak(&mut self, a: usize, b: usize) -> MpsResult<usize> {
        if a == b {
            return Err(MpsError::SameSite(a, b));
        }
        self.check_site(a)?;
        self.check_site(b)?;
        let (lo, hi) = (a.min(b), a.max(b));
        let swap = linalg::swap();
        let mut peak = self.max_chi();
        for j in (lo + 1..hi).rev() {
            self.apply_two_site_gate(j, &swap)?;
            peak = peak.max(self.bonds[j].chi());
        }
        self.apply_two_site_gate(lo, &linalg::cphase())?;
        peak = peak.max(self.bonds[lo].chi());
        for j in lo + 1..hi {
            self.apply_two_site_gate(j, &swap)?;
            peak = peak.max(self.bonds[j].chi());
        }
        Ok(peak)
    }
}

/// Statistics of one cluster construction.
#[derive(Clone, Debug, Default)]
pub struct BuildTrace {
    /// Largest bond dimension seen at any point of the construction.
    pub peak_chi: usize,
    pub gates: usize,
}

/// `(∏ CPHASE)·|+⟩^{⊗dl}`; qubit labels are the column-major sites.
pub fn build_cluster(spec: &ClusterSpec) -> Result<MpsState, ClusterError> {
    build_cluster_traced(spec, &[]).map(|(s, _)| s)
}

/// Like [`build_cluster`], but first applies `inputs` (site, unitary) to the
/// |+⟩ qubits, e.g. to load input states before entangling.
pub fn build_cluster_prepared(spec: &ClusterSpec, inputs: &[(usize, Unitary2)]) -> Result<MpsState, ClusterError> {
    build_cluster_traced(spec, inputs).map(|(s, _)| s)
}

pub fn build_cluster_traced(
    spec: &ClusterSpec,
    inputs: &[(usize, Unitary2)],
) -> Result<(MpsState, BuildTrace), ClusterError> {
    spec.validate_geometry()?;
    let mut state = MpsState::plus_state(spec.n())?;
    for (site, u) in inputs {
        state.apply_single_qubit(*site, u)?;
    }
    let mut trace = BuildTrace { peak_chi: 1, gates: 0 };
    for (a, b) in spec.edge_sites() {
        let peak = state.cphase_with_peak(a, b)?;
        trace.peak_chi = trace.peak_chi.max(peak);
        trace.gates += 1 + 2 * (b - a - 1);
    }
    Ok((state, trace))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BondCheck {
    pub bond: usize,
    pub chi: usize,
    pub within_bound: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ChiBoundReport {
    pub width: usize,
    pub length: usize,
    pub range: usize,
    pub bound: usize,
    pub max_chi: usize,
    pub bonds: Vec<BondCheck>,
    /// Bonds whose Schmidt number exceeds the bound.
    pub offending_bonds: Vec<usize>,
    /// Edges spanning more columns than the declared range, as labels.
    pub range_violations: Vec<(String, String)>,
    pub pass: bool,
}

/// Compares every bond's Schmidt number with the bound implied by the
/// spec's geometry. Fails on any excess or any edge breaking the declared
/// range.
pub fn verify_chi_bound(spec: &ClusterSpec, state: &MpsState) -> ChiBoundReport {
    let bound = spec.chi_bound();
    let profile = state.chi_profile();
    let bonds: Vec<BondCheck> = profile
        .bonds
        .iter()
        .enumerate()
        .map(|(bond, &chi)| BondCheck { bond, chi, within_bound: chi <= bound })
        .collect();
    let offending_bonds: Vec<usize> = bonds.iter().filter(|b| !b.within_bound).map(|b| b.bond).collect();
    let range_violations: Vec<(String, String)> =
        spec.range_violations().into_iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    ChiBoundReport {
        width: spec.width,
        length: spec.length,
        range: spec.range,
        bound,
        max_chi: profile.max(),
        pass: offending_bonds.is_empty() && range_violations.is_empty(),
        bonds,
        offending_bonds,
        range_violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseState;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn label_round_trip() {
        let c: GridCoord = "c12r3".parse().unwrap();
        assert_eq!(c, GridCoord::new(12, 3));
        assert_eq!(c.to_string(), "c12r3");
        assert!("x1r2".parse::<GridCoord>().is_err());
        assert!("c1".parse::<GridCoord>().is_err());
    }

    #[test]
    fn column_major_ordering() {
        let spec = ClusterSpec::grid(3, 4);
        assert_eq!(spec.site(GridCoord::new(2, 1)), 7);
        assert_eq!(spec.coord(7), GridCoord::new(2, 1));
        // 2 vertical edges per column, 3 horizontal edges per column gap
        assert_eq!(spec.edges.len(), 2 * 4 + 3 * 3);
    }

    #[test]
    fn geometry_validation() {
        let a = GridCoord::new(0, 0);
        let b = GridCoord::new(1, 0);
        assert!(matches!(
            ClusterSpec::from_edges(1, 2, 1, vec![(a, a)]).validate(),
            Err(ClusterError::SelfEdge(_))
        ));
        assert!(matches!(
            ClusterSpec::from_edges(1, 2, 1, vec![(a, b), (b, a)]).validate(),
            Err(ClusterError::DuplicateEdge(..))
        ));
        assert!(matches!(
            ClusterSpec::from_edges(1, 2, 1, vec![(a, GridCoord::new(2, 0))]).validate(),
            Err(ClusterError::OutOfGrid(_))
        ));
        assert!(matches!(
            ClusterSpec::from_edges(1, 3, 1, vec![(a, GridCoord::new(2, 0))]).validate(),
            Err(ClusterError::RangeExceeded(..))
        ));
        assert!(matches!(ClusterSpec::grid(0, 3).validate(), Err(ClusterError::EmptyGrid)));
    }

    #[test]
    fn nearest_neighbour_json_must_not_list_edges() {
        let text = r#"{"width":2,"length":2,"range":1,"edges":[[{"col":0,"row":0},{"col":1,"row":0}]],"nearest_neighbour":true}"#;
        assert!(matches!(ClusterSpec::from_json(text), Err(ClusterError::ExplicitEdges)));
        let ok = r#"{"width":2,"length":3,"range":1,"edges":[],"nearest_neighbour":true}"#;
        assert_eq!(ClusterSpec::from_json(ok).unwrap(), ClusterSpec::grid(2, 3));
        assert!(ClusterSpec::from_json("{not json").is_err());
    }

    #[test]
    fn json_round_trip_with_explicit_edges() {
        let spec = ClusterSpec::with_diagonals(2, 3);
        assert_eq!(ClusterSpec::from_json(&spec.to_json()).unwrap(), spec);
    }

    #[test]
    fn cphase_on_plus_pair_gives_bell_like_schmidt_form() {
        let mut mps = MpsState::plus_state(2).unwrap();
        mps.apply_two_site_gate(0, &linalg::cphase()).unwrap();
        assert_eq!(mps.chi_profile().bonds, vec![2]);
        for &x in mps.bonds()[0].values() {
            assert!((x - FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_gate_keeps_the_state() {
        let mut mps = build_cluster(&ClusterSpec::grid(1, 4)).unwrap();
        let before = mps.to_dense().unwrap();
        mps.apply_two_site_gate(1, &Unitary4::identity()).unwrap();
        assert!(mps.to_dense().unwrap().distance_up_to_phase(&before) < 1e-12);
    }

    #[test]
    fn gate_errors() {
        let mut mps = MpsState::plus_state(3).unwrap();
        assert_eq!(mps.apply_two_site_gate(2, &linalg::cphase()), Err(MpsError::NotAdjacent(2, 3)));
        let mut bad = Unitary4::identity();
        bad[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(mps.apply_two_site_gate(0, &bad), Err(MpsError::NotUnitary(_))));
        assert_eq!(mps.apply_cphase(1, 1), Err(MpsError::SameSite(1, 1)));
    }

    #[test]
    fn distant_cphase_matches_dense() {
        let mut mps = MpsState::plus_state(3).unwrap();
        mps.apply_cphase(0, 2).unwrap();
        let mut dense = DenseState::plus(3);
        dense.cphase(0, 2);
        assert!(mps.to_dense().unwrap().distance_up_to_phase(&dense) < 1e-12);
        assert!(mps.check_canonical(1e-10));
    }

    #[test]
    fn cphase_twice_is_identity() {
        let mut mps = MpsState::plus_state(4).unwrap();
        mps.apply_single_qubit(3, &linalg::phase(0.4)).unwrap();
        let start = mps.to_dense().unwrap();
        mps.apply_cphase(3, 0).unwrap();
        mps.apply_cphase(0, 3).unwrap();
        assert!(mps.to_dense().unwrap().distance_up_to_phase(&start) < 1e-12);
        assert_eq!(mps.max_chi(), 1);
    }

    #[test]
    fn chi_bounds() {
        assert_eq!(ClusterSpec::grid(2, 5).chi_bound(), 4);
        assert_eq!(ClusterSpec::with_diagonals(2, 5).chi_bound(), 8);
        assert_eq!(ClusterSpec::grid(1, 6).chi_bound(), 2);
        assert_eq!(ClusterSpec::grid(3, 2).chi_bound(), 8);
        assert_eq!(ClusterSpec::grid(3, 1).chi_bound(), 2);
    }

    #[test]
    fn declared_range_violation_fails_verification() {
        let mut spec = ClusterSpec::grid(2, 5);
        spec.nearest_neighbour = false;
        spec.range = 0;
        let state = build_cluster(&spec).unwrap();
        let report = verify_chi_bound(&spec, &state);
        assert!(!report.pass);
        assert_eq!(report.bound, 2);
        assert!(!report.offending_bonds.is_empty());
        assert!(!report.range_violations.is_empty());
    }
}
