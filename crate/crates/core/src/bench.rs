//! Timing harness for measurement patterns on grid clusters.

use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cluster::{build_cluster, ClusterError, ClusterSpec};
use crate::pattern::{run_pattern_with, Basis, MeasurementPattern, MeasurementStep, Mode, PatternError, RunOptions};
use crate::mps::QubitId;
use crate::seeded_rng;

/// Measures every qubit in chain order in the XY plane at π/4, with the sign
/// of each angle conditioned on the previous outcome.
pub fn sweep_pattern(n: usize) -> MeasurementPattern {
    let steps = (0..n)
        .map(|i| MeasurementStep {
            target: QubitId(i),
            basis: Basis::Xy {
                theta: std::f64::consts::FRAC_PI_4,
                sign_deps: if i > 0 { vec![QubitId(i - 1)] } else { Vec::new() },
                pi_deps: Vec::new(),
            },
        })
        .collect();
    MeasurementPattern { steps, ..Default::default() }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ScalingCell {
    pub d: usize,
    pub l: usize,
    pub n: usize,
    pub mode: Mode,
    pub max_chi: usize,
    pub total_ms: f64,
    pub per_step_ms: f64,
}

impl ScalingCell {
    pub const CSV_HEADER: &'static str = "d,l,n,mode,max_chi,total_ms,per_step_ms";
}

impl fmt::Display for ScalingCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{:.4},{:.6}",
            self.d, self.l, self.n, self.mode, self.max_chi, self.total_ms, self.per_step_ms
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort();
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2
    }
}

/// Builds a `d × l` nearest-neighbour cluster once and runs
/// [`sweep_pattern`] on a fresh copy `repeats` times. Reported times are
/// medians and exclude construction and copying.
pub fn run_cell(d: usize, l: usize, mode: Mode, repeats: usize, seed: u64) -> Result<ScalingCell, BenchError> {
    let spec = ClusterSpec::grid(d, l);
    let state = build_cluster(&spec)?;
    let pattern = sweep_pattern(spec.n());
    let options = RunOptions { record_chi: false };
    let mut times = Vec::with_capacity(repeats.max(1));
    for r in 0..repeats.max(1) {
        let copy = state.clone();
        let mut rng = seeded_rng(seed.wrapping_add(r as u64));
        let t0 = Instant::now();
        run_pattern_with(copy, &pattern, &mut rng, mode, options)?;
        times.push(t0.elapsed());
    }
    let total_ms = median(times).as_secs_f64() * 1e3;
    Ok(ScalingCell {
        d,
        l,
        n: spec.n(),
        mode,
        max_chi: state.max_chi(),
        total_ms,
        per_step_ms: total_ms / spec.n() as f64,
    })
}

/// Least-squares fit of `log y = exponent · log x + intercept`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_exponent(points: &[(f64, f64)]) -> Option<PowerFit> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(PowerFit { exponent, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power_law() {
        let pts: Vec<_> = [8.0, 16.0, 32.0, 64.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(1.5))).collect();
        let fit = fit_exponent(&pts).unwrap();
        assert!((fit.exponent - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_exponent(&[(1.0, 1.0)]).is_none());
    }

    #[test]
    fn median_of_even_and_odd() {
        let ms = |v: &[u64]| v.iter().map(|&x| Duration::from_millis(x)).collect::<Vec<_>>();
        assert_eq!(median(ms(&[5, 1, 3])), Duration::from_millis(3));
        assert_eq!(median(ms(&[4, 1, 3, 2])), Duration::from_micros(2500));
    }

    #[test]
    fn cell_reports_shape() {
        let cell = run_cell(2, 3, Mode::InOrder, 1, 0).unwrap();
        assert_eq!((cell.n, cell.max_chi), (6, 4));
        assert_eq!(cell.to_string().split(',').count(), ScalingCell::CSV_HEADER.split(',').count());
    }
}
