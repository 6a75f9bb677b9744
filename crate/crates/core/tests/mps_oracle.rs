mod common;

use common::{assert_canonical, assert_close_up_to_phase, dense, random_state, random_unitary, TOL};
use mbqc_mps::cluster::build_cluster;
use mbqc_mps::linalg::hadamard;
use mbqc_mps::{seeded_rng, ClusterSpec, DenseState, MpsError, MpsState, QubitId, C64};
use proptest::prelude::*;
use rand::Rng;

fn squared_spectrum_error(state: &MpsState, reference: &DenseState) -> f64 {
    let mut worst = 0.0f64;
    for (j, b) in state.bonds().iter().enumerate() {
        let exact = reference.schmidt_spectrum(j + 1);
        for (i, e) in exact.iter().enumerate() {
            let got = b.values().get(i).copied().unwrap_or(0.0);
            worst = worst.max((got * got - e * e).abs());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dense_round_trip(seed in any::<u64>(), n in 1usize..=10) {
        let psi = random_state(&mut seeded_rng(seed), n);
        let mps = MpsState::from_dense(&psi).unwrap();
        assert_canonical(&mps);
        let back = mps.to_dense().unwrap();
        prop_assert!(psi.distance_up_to_phase(&back) <= 1e-10);
        prop_assert!(squared_spectrum_error(&mps, &psi) <= TOL);
    }

    #[test]
    fn unitary_commutes_with_dense(seed in any::<u64>(), n in 1usize..=9) {
        let mut rng = seeded_rng(seed);
        let psi = random_state(&mut rng, n);
        let k = rng.random_range(0..n);
        let u = random_unitary(&mut rng);
        let mut mps = MpsState::from_dense(&psi).unwrap();
        mps.apply_single_qubit(k, &u).unwrap();
        let mut expect = psi.clone();
        expect.apply_single_qubit(k, &u);
        assert_canonical(&mps);
        assert_close_up_to_phase(&expect, &dense(&mps), TOL);
        let profile_before = MpsState::from_dense(&psi).unwrap().chi_profile();
        prop_assert_eq!(mps.chi_profile(), profile_before);
    }

    #[test]
    fn projection_commutes_with_dense(seed in any::<u64>(), n in 2usize..=9) {
        let mut rng = seeded_rng(seed);
        let psi = random_state(&mut rng, n);
        let k = rng.random_range(0..n);
        let mps = MpsState::from_dense(&psi).unwrap();
        let (p0, p1) = mps.outcome_probabilities(k).unwrap();
        let (e0, e1) = psi.probabilities(k);
        prop_assert!((p0 - e0).abs() <= TOL && (p1 - e1).abs() <= TOL);
        prop_assert!((p0 + p1 - 1.0).abs() <= TOL);
        for r in 0..2u8 {
            let post = mps.project_and_update(k, r).unwrap();
            let expect = psi.discard(k, r).unwrap();
            assert_canonical(&post);
            assert_close_up_to_phase(&expect, &dense(&post), TOL);
            prop_assert!(squared_spectrum_error(&post, &expect) <= TOL);
            let mut labels: Vec<QubitId> = (0..n).map(QubitId).collect();
            labels.remove(k);
            prop_assert_eq!(post.labels(), &labels[..]);
        }
    }

    #[test]
    fn projection_never_raises_schmidt_numbers(seed in any::<u64>(), d in 1usize..=3, l in 2usize..=4) {
        let mut rng = seeded_rng(seed);
        let spec = ClusterSpec::grid(d, l);
        let mut state = build_cluster(&spec).unwrap();
        for _ in 0..spec.n() - 1 {
            let k = rng.random_range(0..state.len());
            let u = random_unitary(&mut rng);
            state.apply_single_qubit(k, &u).unwrap();
            let before = state.chi_profile().bonds;
            let (p0, _) = state.outcome_probabilities(k).unwrap();
            let r = if p0 > 0.5 { 0 } else { 1 };
            state = state.project_and_update(k, r).unwrap();
            assert_canonical(&state);
            for (j, &chi) in state.chi_profile().bonds.iter().enumerate() {
                let bound = if j + 1 < k {
                    before[j]
                } else if j + 1 == k {
                    before[j].min(before[j + 1])
                } else {
                    before[j + 1]
                };
                prop_assert!(chi <= bound, "bond {} grew from {} to {}", j, bound, chi);
            }
        }
    }

    #[test]
    fn parameter_count_matches_profile(seed in any::<u64>(), n in 1usize..=10) {
        let mps = MpsState::from_dense(&random_state(&mut seeded_rng(seed), n)).unwrap();
        let chi = mps.max_chi();
        let mut widths = vec![1];
        widths.extend(mps.chi_profile().bonds);
        widths.push(1);
        let gammas: usize = widths.windows(2).map(|w| 2 * w[0] * w[1]).sum();
        let lambdas: usize = widths[1..n].iter().sum();
        prop_assert_eq!(mps.parameter_count(), gammas + lambdas);
        prop_assert!(mps.parameter_count() <= (2 * chi * chi + chi) * n);
    }

    #[test]
    fn seeded_measurement_is_deterministic(seed in any::<u64>(), n in 2usize..=8) {
        let psi = random_state(&mut seeded_rng(seed ^ 0x5eed), n);
        let mps = MpsState::from_dense(&psi).unwrap();
        let run = |s: u64| {
            let mut rng = seeded_rng(s);
            let mut state = mps.clone();
            let mut outcomes = Vec::new();
            while state.len() > 1 {
                let (r, next) = state.measure(0, &mut rng).unwrap();
                outcomes.push(r);
                state = next;
            }
            (outcomes, state)
        };
        prop_assert_eq!(run(seed), run(seed));
    }
}

#[test]
fn sampling_frequency_follows_born_rule() {
    let mut rng = seeded_rng(2024);
    let plus = MpsState::plus_state(2).unwrap();
    let draws = 10_000;
    let ones: usize = (0..draws).map(|_| plus.measure(1, &mut rng).unwrap().0 as usize).sum();
    let freq = ones as f64 / draws as f64;
    assert!((freq - 0.5).abs() <= 0.02, "frequency {freq}");

    let mut skewed = MpsState::zero_state(1).unwrap();
    let theta: f64 = 0.6;
    let ry = nalgebra::Matrix2::new(
        C64::new((theta / 2.0).cos(), 0.0),
        C64::new(-(theta / 2.0).sin(), 0.0),
        C64::new((theta / 2.0).sin(), 0.0),
        C64::new((theta / 2.0).cos(), 0.0),
    );
    skewed.apply_single_qubit(0, &ry).unwrap();
    let p1 = (theta / 2.0).sin().powi(2);
    let ones: usize = (0..draws).map(|_| skewed.measure(0, &mut rng).unwrap().0 as usize).sum();
    let freq = ones as f64 / draws as f64;
    let sigma = (p1 * (1.0 - p1) / draws as f64).sqrt();
    assert!((freq - p1).abs() <= 4.0 * sigma, "frequency {freq}, expected {p1}");
}

#[test]
fn linear_cluster_x_measurement() {
    let state = build_cluster(&ClusterSpec::grid(1, 3)).unwrap();
    let mut expect = DenseState::plus(3);
    expect.cphase(0, 1);
    expect.cphase(1, 2);
    assert_close_up_to_phase(&expect, &dense(&state), TOL);
    for r in 0..2u8 {
        let mut s = state.clone();
        s.apply_single_qubit(1, &hadamard()).unwrap();
        let (p0, p1) = s.outcome_probabilities(1).unwrap();
        assert!((p0 - 0.5).abs() <= TOL && (p1 - 0.5).abs() <= TOL);
        let post = s.project_and_update(1, r).unwrap();
        assert_canonical(&post);
        let mut e = expect.clone();
        e.apply_single_qubit(1, &hadamard());
        let e = e.discard(1, r).unwrap();
        assert_close_up_to_phase(&e, &dense(&post), TOL);
        assert_eq!(post.labels(), &[QubitId(0), QubitId(2)]);
        // the outer qubits end up maximally entangled
        let lam = post.bonds()[0].values();
        assert_eq!(lam.len(), 2);
        assert!(lam.iter().all(|l| (l - std::f64::consts::FRAC_1_SQRT_2).abs() <= TOL));
    }
}

#[test]
fn random_eight_qubit_state_both_outcomes_everywhere() {
    let mut rng = seeded_rng(8);
    let psi = random_state(&mut rng, 8);
    let mps = MpsState::from_dense(&psi).unwrap();
    assert_eq!(mps.chi_profile().bonds, vec![2, 4, 8, 16, 8, 4, 2]);
    for k in 0..8 {
        for r in 0..2u8 {
            let post = mps.project_and_update(k, r).unwrap();
            assert_canonical(&post);
            assert_close_up_to_phase(&psi.discard(k, r).unwrap(), &dense(&post), TOL);
        }
    }
}

#[test]
fn measuring_until_empty() {
    let mut rng = seeded_rng(3);
    let mut state = MpsState::from_dense(&random_state(&mut rng, 5)).unwrap();
    while !state.is_empty() {
        let k = rng.random_range(0..state.len());
        state = state.measure(k, &mut rng).unwrap().1;
        assert_canonical(&state);
    }
    assert!(matches!(state.outcome_probabilities(0), Err(MpsError::SiteOutOfRange { .. })));
}
