use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{matrix_doc, Basis, Correction, InputPrep, MatrixDoc, MeasurementPattern, MeasurementStep, PatternError};
use crate::cluster::ClusterSpec;
use crate::linalg::{unitarity_defect, Unitary2};
use crate::mps::{MpsError, QubitId};

const UNITARITY_TOL: f64 = 1e-10;

#[derive(Serialize, Deserialize)]
#[serde(tag = "plane")]
enum BasisDoc {
    Z,
    #[serde(rename = "XY")]
    Xy {
        theta: f64,
        #[serde(default)]
        sign_deps: Vec<String>,
        #[serde(default)]
        pi_deps: Vec<String>,
    },
    U {
        unitary: MatrixDoc,
    },
}

#[derive(Serialize, Deserialize)]
struct StepDoc {
    target: String,
    basis: BasisDoc,
}

#[derive(Serialize, Deserialize)]
struct InputDoc {
    target: String,
    unitary: MatrixDoc,
}

#[derive(Serialize, Deserialize)]
struct CorrectionDoc {
    target: String,
    #[serde(default)]
    x_deps: Vec<String>,
    #[serde(default)]
    z_deps: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct PatternDoc {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    inputs: Vec<InputDoc>,
    steps: Vec<StepDoc>,
    #[serde(default)]
    outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    corrections: Vec<CorrectionDoc>,
}

fn unitary(doc: &MatrixDoc) -> Result<Unitary2, PatternError> {
    let e = |r: usize, c: usize| C64::new(doc[r][c][0], doc[r][c][1]);
    let u = Matrix2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1));
    let defect = unitarity_defect(&u);
    if defect.is_nan() || defect > UNITARITY_TOL {
        return Err(MpsError::NotUnitary(defect).into());
    }
    Ok(u)
}

impl MeasurementPattern {
    /// Parses a pattern document whose qubits are named by `c<col>r<row>`
    /// labels on `spec`'s grid. The result is validated.
    pub fn from_json(text: &str, spec: &ClusterSpec) -> Result<Self, PatternError> {
        let doc: PatternDoc = serde_json::from_str(text)?;
        let q = |s: &str| spec.parse_label(s).map_err(PatternError::from);
        let qs = |v: &[String]| v.iter().map(|s| q(s)).collect::<Result<Vec<QubitId>, _>>();

        let inputs = doc
            .inputs
            .iter()
            .map(|i| Ok(InputPrep { target: q(&i.target)?, unitary: unitary(&i.unitary)? }))
            .collect::<Result<_, PatternError>>()?;
        let steps = doc
            .steps
            .iter()
            .map(|s| {
                let basis = match &s.basis {
                    BasisDoc::Z => Basis::Computational,
                    BasisDoc::Xy { theta, sign_deps, pi_deps } => {
                        Basis::Xy { theta: *theta, sign_deps: qs(sign_deps)?, pi_deps: qs(pi_deps)? }
                    }
                    BasisDoc::U { unitary: m } => Basis::Fixed(unitary(m)?),
                };
                Ok(MeasurementStep { target: q(&s.target)?, basis })
            })
            .collect::<Result<_, PatternError>>()?;
        let corrections = doc
            .corrections
            .iter()
            .map(|c| Ok(Correction { target: q(&c.target)?, x_deps: qs(&c.x_deps)?, z_deps: qs(&c.z_deps)? }))
            .collect::<Result<_, PatternError>>()?;
        let pattern = MeasurementPattern { inputs, steps, outputs: qs(&doc.outputs)?, corrections };
        pattern.validate()?;
        Ok(pattern)
    }

    pub fn to_json(&self, spec: &ClusterSpec) -> String {
        let l = |q: &QubitId| spec.label(*q);
        let ls = |v: &[QubitId]| v.iter().map(l).collect::<Vec<_>>();
        let doc = PatternDoc {
            inputs: self.inputs.iter().map(|i| InputDoc { target: l(&i.target), unitary: matrix_doc(&i.unitary) }).collect(),
            steps: self
                .steps
                .iter()
                .map(|s| StepDoc {
                    target: l(&s.target),
                    basis: match &s.basis {
                        Basis::Computational => BasisDoc::Z,
                        Basis::Xy { theta, sign_deps, pi_deps } => {
                            BasisDoc::Xy { theta: *theta, sign_deps: ls(sign_deps), pi_deps: ls(pi_deps) }
                        }
                        Basis::Fixed(u) => BasisDoc::U { unitary: matrix_doc(u) },
                    },
                })
                .collect(),
            outputs: ls(&self.outputs),
            corrections: self
                .corrections
                .iter()
                .map(|c| CorrectionDoc { target: l(&c.target), x_deps: ls(&c.x_deps), z_deps: ls(&c.z_deps) })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("pattern document serializes")
    }

    /// Input preparations as (chain site, unitary) pairs for the cluster
    /// builder. Qubit ids are the column-major sites of a freshly built grid.
    pub fn input_sites(&self) -> Vec<(usize, Unitary2)> {
        self.inputs.iter().map(|i| (i.target.0, i.unitary)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_form() {
        let spec = ClusterSpec::grid(2, 10);
        let text = r#"{"steps": [
            {"target": "c1r0", "basis": {"plane": "Z"}},
            {"target": "c3r1", "basis": {"plane": "XY", "theta": 0.7853981633974483, "sign_deps": ["c1r0"], "pi_deps": []}}
        ], "outputs": ["c9r0"]}"#;
        let p = MeasurementPattern::from_json(text, &spec).unwrap();
        assert_eq!(p.steps.len(), 2);
        assert_eq!(p.steps[1].target, QubitId(7));
        assert_eq!(p.outputs, vec![QubitId(18)]);
        match &p.steps[1].basis {
            Basis::Xy { sign_deps, .. } => assert_eq!(sign_deps, &vec![QubitId(2)]),
            other => panic!("unexpected basis {other:?}"),
        }
        let again = MeasurementPattern::from_json(&p.to_json(&spec), &spec).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn rejects_bad_documents() {
        let spec = ClusterSpec::grid(1, 3);
        let off_grid = r#"{"steps": [{"target": "c5r0", "basis": {"plane": "Z"}}]}"#;
        assert!(matches!(MeasurementPattern::from_json(off_grid, &spec), Err(PatternError::Cluster(_))));
        let not_unitary = r#"{"steps": [{"target": "c0r0", "basis": {"plane": "U",
            "unitary": [[[1,0],[1,0]],[[0,0],[1,0]]]}}]}"#;
        assert!(matches!(MeasurementPattern::from_json(not_unitary, &spec), Err(PatternError::Mps(_))));
        let acausal = r#"{"steps": [{"target": "c0r0", "basis": {"plane": "XY", "theta": 1.0, "sign_deps": ["c1r0"]}}]}"#;
        assert!(matches!(MeasurementPattern::from_json(acausal, &spec), Err(PatternError::Causality { .. })));
        assert!(matches!(MeasurementPattern::from_json("{", &spec), Err(PatternError::Json(_))));
    }
}
