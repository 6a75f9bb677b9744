use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context};
use sha2::{Digest, Sha256};

use mbqc_mps::bench::{fit_exponent, run_cell, BenchError, ScalingCell};
use mbqc_mps::cluster::{build_cluster, build_cluster_prepared, build_cluster_traced, verify_chi_bound};
use mbqc_mps::dense::run_pattern_dense;
use mbqc_mps::dump::StateDump;
use mbqc_mps::pattern::run_pattern;
use mbqc_mps::{seeded_rng, ClusterError, ClusterSpec, DenseState, MeasurementPattern, Mode, PatternError};

use crate::report::{BuildSummary, DenseCheck, Inputs, RunReport, VerifyReport};

/// Largest register the `--verify` and `verify` dense cross-checks accept.
pub const VERIFY_LIMIT: usize = 20;
const DENSE_TOL: f64 = 1e-9;

pub enum Failure {
    /// Bad input or a failed check; exit code 1.
    Validation(anyhow::Error),
    /// A numerical invariant of the simulator broke; exit code 2.
    Internal(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Internal(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Validation(e) | Failure::Internal(e) => e,
        }
    }
}

impl From<ClusterError> for Failure {
    fn from(e: ClusterError) -> Self {
        if e.is_internal() {
            Failure::Internal(e.into())
        } else {
            Failure::Validation(e.into())
        }
    }
}

impl From<PatternError> for Failure {
    fn from(e: PatternError) -> Self {
        if e.is_internal() {
            Failure::Internal(e.into())
        } else {
            Failure::Validation(e.into())
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Cluster(e) => e.into(),
            BenchError::Pattern(e) => e.into(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::Validation)
}

fn sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn print_json<T: serde::Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    // a closed pipe (e.g. `| head`) is not an error worth reporting
    let _ = writeln!(io::stdout().lock(), "{text}");
}

fn load_spec(path: &Path) -> Result<(String, ClusterSpec), Failure> {
    let text = read(path)?;
    let spec = ClusterSpec::from_json(&text).with_context(|| format!("in {}", path.display())).map_err(Failure::Validation)?;
    spec.validate_geometry()?;
    Ok((text, spec))
}

pub fn build(spec_path: &Path, out: &Path) -> CmdResult {
    let (_, spec) = load_spec(spec_path)?;
    let (state, trace) = build_cluster_traced(&spec, &[])?;
    let dump = serde_json::to_string(&StateDump::new(&state)).expect("dump serializes");
    fs::write(out, dump)
        .with_context(|| format!("writing {}", out.display()))
        .map_err(Failure::Validation)?;
    print_json(&BuildSummary {
        width: spec.width,
        length: spec.length,
        n: spec.n(),
        chi_profile: state.chi_profile().bonds,
        max_chi: state.max_chi(),
        bound: spec.chi_bound(),
        peak_chi: trace.peak_chi,
        gates: trace.gates,
        dump: out.display().to_string(),
    });
    Ok(())
}

pub fn run(spec_path: &Path, pattern_path: &Path, seed: u64, mode: Mode, verify: bool) -> CmdResult {
    let (spec_text, spec) = load_spec(spec_path)?;
    let pattern_text = read(pattern_path)?;
    let pattern = MeasurementPattern::from_json(&pattern_text, &spec)?;
    if verify && spec.n() > VERIFY_LIMIT {
        return Err(Failure::Validation(anyhow!(
            "--verify needs a dense simulation of {} qubits; refusing above {VERIFY_LIMIT}",
            spec.n()
        )));
    }

    let t0 = Instant::now();
    let state = build_cluster_prepared(&spec, &pattern.input_sites())?;
    let build_ms = t0.elapsed().as_secs_f64() * 1e3;
    let rec = run_pattern(state, &pattern, &mut seeded_rng(seed), mode)?;

    let fidelity = if verify {
        let outcomes: Vec<u8> = rec.steps.iter().map(|s| s.outcome).collect();
        let reference = run_pattern_dense(&spec, &pattern, &outcomes)?;
        let got = rec.final_state.to_dense().map_err(PatternError::from)?;
        Some(reference.fidelity(&got))
    } else {
        None
    };

    let inputs = Inputs { spec_sha256: sha256(&spec_text), pattern_sha256: sha256(&pattern_text), seed };
    print_json(&RunReport::new(&spec, inputs, &rec, build_ms, fidelity));
    match fidelity {
        Some(f) if f < 1.0 - DENSE_TOL => {
            Err(Failure::Internal(anyhow!("output state disagrees with dense simulation (fidelity {f})")))
        }
        _ => Ok(()),
    }
}

fn dense_cluster(spec: &ClusterSpec) -> DenseState {
    let mut psi = DenseState::plus(spec.n());
    for (a, b) in spec.edge_sites() {
        psi.cphase(a, b);
    }
    psi
}

pub fn verify(spec_path: &Path) -> CmdResult {
    let (_, spec) = load_spec(spec_path)?;
    let state = build_cluster(&spec)?;
    let bound = verify_chi_bound(&spec, &state);
    let dense_check = if spec.n() <= VERIFY_LIMIT {
        let psi = dense_cluster(&spec);
        let got = state.to_dense().map_err(PatternError::from)?;
        let state_error = psi.distance_up_to_phase(&got);
        let mut spectrum_error = 0.0f64;
        for (j, b) in state.bonds().iter().enumerate() {
            let exact = psi.schmidt_spectrum(j + 1);
            let len = exact.len().max(b.chi());
            for i in 0..len {
                let x = b.values().get(i).copied().unwrap_or(0.0);
                let y = exact.get(i).copied().unwrap_or(0.0);
                spectrum_error = spectrum_error.max((x - y).abs());
            }
        }
        DenseCheck {
            performed: true,
            state_error: Some(state_error),
            spectrum_error: Some(spectrum_error),
            pass: state_error <= DENSE_TOL && spectrum_error <= DENSE_TOL,
        }
    } else {
        DenseCheck { performed: false, state_error: None, spectrum_error: None, pass: true }
    };
    let pass = bound.pass && dense_check.pass;
    let dense_failed = !dense_check.pass;
    print_json(&VerifyReport { chi_bound: bound, dense_check, pass });
    if dense_failed {
        Err(Failure::Internal(anyhow!("cluster state disagrees with dense construction")))
    } else if !pass {
        Err(Failure::Validation(anyhow!("Schmidt-number bound violated")))
    } else {
        Ok(())
    }
}

pub fn bench(widths: &[usize], lengths: &[usize], mode: Mode, repeats: usize, seed: u64, parallel: bool) -> CmdResult {
    if widths.is_empty() || lengths.is_empty() || widths.contains(&0) || lengths.contains(&0) {
        return Err(Failure::Validation(anyhow!("widths and lengths must be non-empty lists of positive integers")));
    }
    let grid: Vec<(usize, usize)> = widths.iter().flat_map(|&d| lengths.iter().map(move |&l| (d, l))).collect();
    let results: Vec<Result<ScalingCell, BenchError>> = if parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> =
                grid.iter().map(|&(d, l)| s.spawn(move || run_cell(d, l, mode, repeats, seed))).collect();
            handles.into_iter().map(|h| h.join().expect("bench thread panicked")).collect()
        })
    } else {
        grid.iter().map(|&(d, l)| run_cell(d, l, mode, repeats, seed)).collect()
    };
    let cells = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    println!("{}", ScalingCell::CSV_HEADER);
    for c in &cells {
        println!("{c}");
    }
    let mut by_width: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for c in &cells {
        by_width.entry(c.d).or_default().push((c.l as f64, c.total_ms));
    }
    for (d, pts) in &by_width {
        if let Some(fit) = fit_exponent(pts) {
            println!("# fit d={d} mode={mode} exponent={:.4} r2={:.4}", fit.exponent, fit.r_squared);
        }
    }
    if widths.len() > 1 {
        for &l in lengths {
            let per_step: Vec<String> = cells
                .iter()
                .filter(|c| c.l == l)
                .map(|c| format!("d={}:{:.6}", c.d, c.per_step_ms))
                .collect();
            println!("# per_step_ms l={l} {}", per_step.join(" "));
        }
    }
    Ok(())
}
