mod common;

use std::collections::HashMap;

use common::load;
use num_complex::Complex64;
use qmeasure::fermion::Mapping;
use qmeasure::grouping::{default_weights, optimal_allocation, plan_cost, proxy_group_costs, Ensemble};
use qmeasure::molecular::{build_electronic_hamiltonian, ObservableSet};
use qmeasure::pauli::{Letter, PauliProduct};
use qmeasure::shadows::{
    derand_plan, derandomize, enumerate_majorana_frames, enumerate_qwc_frames, enumerated_second_moments,
    frame_resolved_variance, one_shot_variance, sample_clifford_frame, sample_majorana_frame, sample_qwc_frame,
    simulate_shadow, Budget, DerandOptions, FrameKind, MeasurementFrame, ShadowScheme, Tableau,
};
use qmeasure::state::{expectation, lowest_eigenstates, WaveVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn h2() -> (ObservableSet, qmeasure::pauli::PauliPolynomial, Vec<WaveVector>) {
    let mi = load("h2");
    let h = Mapping::Jw.encode(&build_electronic_hamiltonian(&mi)).unwrap();
    let states = lowest_eigenstates(&h, Mapping::Jw, 2, 6).unwrap();
    (ObservableSet::single(&h), h, states)
}

/// Every 2-qubit symplectic tableau, by brute force over all image choices.
fn all_two_qubit_tableaux() -> Vec<Tableau> {
    let mut out = Vec::new();
    let p = |v: u64| PauliProduct::from_bits(2, v & 3, v >> 2).unwrap();
    for a in 1..16u64 {
        for b in 1..16u64 {
            for c in 1..16u64 {
                for d in 1..16u64 {
                    if let Ok(t) = Tableau::from_images(vec![p(a), p(b), p(c), p(d)]) {
                        out.push(t);
                    }
                }
            }
        }
    }
    out
}

#[test]
fn qwc_frames_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 10_000;
    let mut counts: HashMap<Letter, f64> = HashMap::new();
    for _ in 0..draws {
        if let FrameKind::QwcBasis(l) = sample_qwc_frame(1, &mut rng).kind {
            *counts.entry(l[0]).or_default() += 1.0;
        }
    }
    let expected = draws as f64 / 3.0;
    let chi2: f64 = counts.values().map(|c| (c - expected).powi(2) / expected).sum();
    // 2 degrees of freedom, 0.1% critical value
    assert!(chi2 < 13.8, "chi2 {chi2}");
}

#[test]
fn clifford_sampler_matches_exhaustive_enumeration() {
    let all = all_two_qubit_tableaux();
    assert_eq!(all.len(), 720);
    let x0 = PauliProduct::parse("X0", 2).unwrap();
    let mut exact: HashMap<PauliProduct, f64> = HashMap::new();
    for t in &all {
        *exact.entry(t.pauli_image(&x0).without_phase()).or_default() += 1.0 / 720.0;
    }
    assert_eq!(exact.len(), 15);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 100_000;
    let mut seen: HashMap<PauliProduct, f64> = HashMap::new();
    for _ in 0..draws {
        let f = sample_clifford_frame(2, &mut rng);
        let FrameKind::CliffordTableau(t) = f.kind else { unreachable!() };
        *seen.entry(t.pauli_image(&x0).without_phase()).or_default() += 1.0 / draws as f64;
    }
    for (p, q) in &exact {
        let se = (q * (1.0 - q) / draws as f64).sqrt();
        assert!((seen.get(p).copied().unwrap_or(0.0) - q).abs() < 4.0 * se, "{p}");
    }
}

#[test]
fn majorana_pairings() {
    let n = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let draws = 60_000;
    let mut hit = 0.0;
    for _ in 0..draws {
        let FrameKind::MajoranaPairing(p) = sample_majorana_frame(n, &mut rng).kind else { unreachable!() };
        if p.contains(&(0, 1)) {
            hit += 1.0;
        }
    }
    let q = 1.0 / 5.0;
    let se = (q * (1.0 - q) / draws as f64).sqrt();
    assert!((hit / draws as f64 - q).abs() < 4.0 * se);
    // brute force over all 15 matchings: a quartic monomial is covered by 3 of them
    let frames = enumerate_majorana_frames(n);
    let covered = frames
        .iter()
        .filter(|f| {
            let FrameKind::MajoranaPairing(p) = &f.kind else { unreachable!() };
            p.iter().filter(|(a, b)| *a < 4 && *b < 4).count() == 2
        })
        .count();
    assert_eq!(covered, 3);
}

#[test]
fn clifford_closed_form_matches_enumeration() {
    let h = qmeasure::pauli::PauliPolynomial::from_labels(
        2,
        &[("Z0", 0.5), ("Z0 Z1", 0.3), ("X0 X1", 0.2), ("Y0 Y1", -0.25), ("X1", 0.4)],
    )
    .unwrap();
    let set = ObservableSet::single(&h);
    let amps = (0..4).map(|i| Complex64::new((i as f64 + 0.3).sin(), (i as f64 * 0.8).cos())).collect();
    let psi = WaveVector::new(2, amps).unwrap().normalized();
    let frames: Vec<MeasurementFrame> = all_two_qubit_tableaux()
        .into_iter()
        .map(|t| MeasurementFrame { kind: FrameKind::CliffordTableau(t), weight: 1.0 / 720.0 })
        .collect();
    let listed = enumerated_second_moments(&frames, ShadowScheme::FcCs, &set, &psi, Mapping::Jw).unwrap();
    let exact = one_shot_variance(ShadowScheme::FcCs, &set, &psi, Budget::Exact, Mapping::Jw).unwrap();
    let mean = expectation(&psi, &h).unwrap() - h.identity_coefficient();
    assert!((listed[0] - mean * mean - exact.variances[0]).abs() < 1e-10);
}

#[test]
fn exact_and_monte_carlo_agree_on_h2() {
    let (set, _, states) = h2();
    let psi = &states[0];
    let frames = enumerate_qwc_frames(4);
    assert_eq!(frames.len(), 81);
    let listed = enumerated_second_moments(&frames, ShadowScheme::QwcCs, &set, psi, Mapping::Jw).unwrap();
    for scheme in [ShadowScheme::QwcCs, ShadowScheme::FcCs, ShadowScheme::MajoranaCs] {
        let exact = one_shot_variance(scheme, &set, psi, Budget::Exact, Mapping::Jw).unwrap();
        let mc = one_shot_variance(scheme, &set, psi, Budget::Frames { count: 4000, seed: 3 }, Mapping::Jw).unwrap();
        let (e, m, s) = (exact.variances[0], mc.variances[0], mc.stderr[0]);
        assert!((e - m).abs() < 4.0 * s, "{scheme:?}: exact {e} mc {m} ± {s}");
        let budget = Budget::Frames { count: 4000, seed: 3 };
        let r_exact = frame_resolved_variance(scheme, &set, psi, Budget::Exact, Mapping::Jw).unwrap();
        let r_mc = frame_resolved_variance(scheme, &set, psi, budget, Mapping::Jw).unwrap();
        let (re, rm, rs) = (r_exact.variances[0], r_mc.variances[0], r_mc.stderr[0]);
        assert!((re - rm).abs() < 4.0 * rs, "{scheme:?}: resolved exact {re} mc {rm} ± {rs}");
        assert!(re <= e + 1e-12);
        if scheme == ShadowScheme::QwcCs {
            let mu = expectation(psi, &set.observable(0).hermitian_part()).unwrap()
                - set.observable(0).identity_coefficient().re;
            assert!((listed[0] - mu * mu - e).abs() < 1e-10 * e);
        }
    }
}

#[test]
fn estimators_are_unbiased() {
    let (set, h, states) = h2();
    let amps: Vec<Complex64> =
        states[0].amplitudes.iter().zip(&states[3].amplitudes).map(|(a, b)| 0.8 * a + 0.6 * b).collect();
    let psi = WaveVector::new(4, amps).unwrap();
    let truth = expectation(&psi, &h).unwrap();
    for scheme in [ShadowScheme::QwcCs, ShadowScheme::FcCs, ShadowScheme::MajoranaCs] {
        let (est, err) = simulate_shadow(scheme, &set, &psi, 100_000, 17, Mapping::Jw).unwrap();
        assert!((est[0].re - truth).abs() < 3.0 * err[0], "{scheme:?}: {} vs {truth} ± {}", est[0].re, err[0]);
    }
}

#[test]
fn identical_seeds_give_identical_estimates() {
    let (set, _, states) = h2();
    let run = || {
        one_shot_variance(ShadowScheme::FcCs, &set, &states[0], Budget::Frames { count: 50, seed: 42 }, Mapping::Jw)
            .unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn derand_beats_random_qwc_on_h2_mc() {
    let (set, _, states) = h2();
    let d = derandomize(&set, &default_weights(&set), DerandOptions::default()).unwrap();
    assert!(d.objective.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    let mut plan = derand_plan(&set, &d.frames).unwrap();
    plan.validate(&set).unwrap();
    let mut derand = 0.0;
    let mut random = 0.0;
    for psi in &states {
        let ens = Ensemble::pure(psi);
        derand += plan_cost(&plan, &set, &ens).unwrap();
        random += one_shot_variance(ShadowScheme::QwcCs, &set, psi, Budget::Exact, Mapping::Jw).unwrap().variances[0];
    }
    assert!(derand < random, "derand {derand} qwc-cs {random}");
    // optimal shots on the derandomized groups can only help
    let v = proxy_group_costs(&plan, &set, &Ensemble::uniform(&states)).unwrap();
    plan.set_allocations(&optimal_allocation(&v));
    plan.validate(&set).unwrap();
}
