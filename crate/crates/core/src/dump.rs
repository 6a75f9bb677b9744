//! JSON dump of a chain for inspection.

use serde::{Deserialize, Serialize};

use crate::mps::{MpsState, QubitId};

pub const DUMP_SCHEMA: u32 = 1;

/// Γ tensors as `gamma[i][row][col] = [re, im]`, λ per internal bond.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StateDump {
    pub schema: u32,
    pub labels: Vec<QubitId>,
    pub bonds: Vec<Vec<f64>>,
    pub sites: Vec<SiteDump>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SiteDump {
    pub chi_left: usize,
    pub chi_right: usize,
    pub gamma: [Vec<Vec<[f64; 2]>>; 2],
}

impl StateDump {
    pub fn new(state: &MpsState) -> Self {
        let sites = state
            .sites()
            .iter()
            .map(|s| {
                let g = |i: usize| {
                    let m = s.gamma(i);
                    (0..m.nrows())
                        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
                        .collect()
                };
                SiteDump { chi_left: s.chi_left(), chi_right: s.chi_right(), gamma: [g(0), g(1)] }
            })
            .collect();
        Self {
            schema: DUMP_SCHEMA,
            labels: state.labels().to_vec(),
            bonds: state.bonds().iter().map(|b| b.values().to_vec()).collect(),
            sites,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_shapes() {
        let d = StateDump::new(&MpsState::plus_state(3).unwrap());
        assert_eq!(d.schema, 1);
        assert_eq!(d.sites.len(), 3);
        assert_eq!(d.bonds, vec![vec![1.0], vec![1.0]]);
        assert_eq!(d.sites[1].gamma[1], vec![vec![[std::f64::consts::FRAC_1_SQRT_2, 0.0]]]);
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<StateDump>(&json).unwrap(), d);
    }
}
