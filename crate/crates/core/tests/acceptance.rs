//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{dense_pauli, dense_polynomial, determinant_ci, fci_reference, load};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::{any, prop, ProptestConfig};
use proptest::test_runner::TestRunner;
use qmeasure::fermion::{FermionPolynomial, Mapping};
use qmeasure::fragments::{lr_decompose, FermionicFragment, LR_THRESHOLD};
use qmeasure::grouping::{optimal_allocation, proxy_group_costs, sorted_insertion, Compat, Ensemble};
use qmeasure::metrics::{
    build_strategy, evaluate, ground_metric, qse_matrices, simulate_plan_shots, solve_qse, Method, Problem, Strategy,
    StrategyOptions, Task, DEFAULT_EPSILON, QSE_THRESHOLD,
};
use qmeasure::molecular::{
    build_cis_operators, build_electronic_hamiltonian, build_qse_observables, cis_dimension, qse_labels, ObservableSet,
    QseForm,
};
use qmeasure::pauli::{Letter, PauliPolynomial, PauliProduct};
use qmeasure::shadows::{one_shot_variance, Budget, ShadowScheme};
use qmeasure::state::{expectation, WaveVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Check = Result<String, String>;

const MOLECULES: [&str; 8] = ["h2", "h3p", "h4", "hf", "lih", "h6", "beh2", "h2o"];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn problem(molecule: &str, task: Task) -> Problem {
    Problem::new(molecule, load(molecule), task, Mapping::Jw, None, None).unwrap()
}

fn metric(p: &Problem, method: Method) -> f64 {
    let s = build_strategy(p, method, &StrategyOptions::default()).unwrap();
    evaluate(p, &s, &p.exact).unwrap().millions(DEFAULT_EPSILON)
}

fn structural_counts() -> Check {
    let expected = [30, 90, 306, 462, 1122, 1406, 2450, 1722];
    let mut got = Vec::new();
    for (mol, want) in MOLECULES.iter().zip(expected) {
        let mi = load(mol);
        let ops = build_cis_operators(mi.n_electrons, mi.n_modes()).map_err(|e| e.to_string())?;
        ensure(ops.len() == cis_dimension(mi.n_electrons, mi.n_modes()), || format!("{mol}: operator count"))?;
        let n_op = qse_labels(ops.len()).len();
        ensure(n_op == want, || format!("{mol}: N_op {n_op}, expected {want}"))?;
        got.push(format!("{mol} {n_op}"));
    }
    // The full observable table agrees with the label count where it is cheap to build.
    for mol in ["h2", "h3p"] {
        let mi = load(mol);
        let ops = build_cis_operators(mi.n_electrons, mi.n_modes()).unwrap();
        let set = build_qse_observables(&build_electronic_hamiltonian(&mi), &ops, Mapping::Jw, QseForm::Complex)
            .map_err(|e| e.to_string())?;
        ensure(set.n_op() == qse_labels(ops.len()).len(), || format!("{mol}: built set size {}", set.n_op()))?;
    }
    Ok(format!("N_op {}", got.join(", ")))
}

fn pauli_counts() -> Check {
    let expected = [14, 61, 184, 630, 630, 918, 665, 1085];
    let mut got = Vec::new();
    for (mol, want) in MOLECULES.iter().zip(expected) {
        let n_p = Mapping::Jw.encode(&build_electronic_hamiltonian(&load(mol))).map_err(|e| e.to_string())?.n_paulis();
        ensure(n_p == want, || format!("{mol}: MC N_P {n_p}, expected {want}"))?;
        got.push(format!("{mol} {n_p}"));
    }
    let mut qse = Vec::new();
    for (mol, want) in [("h2", 127.0), ("h3p", 1879.0)] {
        let n_p = problem(mol, Task::Qse).set.n_p() as f64;
        ensure((n_p - want).abs() <= 0.02 * want, || format!("{mol}: QSE N_P {n_p}, expected {want} within 2%"))?;
        qse.push(format!("{mol} {n_p}"));
    }
    Ok(format!("MC N_P {}; QSE N_P {}", got.join(", "), qse.join(", ")))
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> WaveVector {
    let amps = (0..1 << n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    WaveVector::new(n, amps).unwrap().normalized()
}

fn allocation_identity() -> Check {
    let hamiltonians: Vec<PauliPolynomial> =
        ["h2", "h3p"].iter().map(|m| Mapping::Jw.encode(&build_electronic_hamiltonian(&load(m))).unwrap()).collect();
    let mut runner = TestRunner::new(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) });
    let worst = std::cell::Cell::new(0.0f64);
    runner
        .run(
            &(0usize..2, any::<u64>(), any::<bool>(), prop::collection::vec(0.1f64..10.0, 61)),
            |(which, seed, qwc, weights)| {
                let h = &hamiltonians[which];
                let set = ObservableSet::single(h);
                let psi = random_state(set.n_qubits(), &mut ChaCha8Rng::seed_from_u64(seed));
                let compat = if qwc { Compat::Qwc } else { Compat::Fc };
                let mut plan = sorted_insertion(&set, &weights[..set.n_p()], compat);
                let v = proxy_group_costs(&plan, &set, &Ensemble::pure(&psi)).unwrap();
                plan.set_allocations(&optimal_allocation(&v));
                let cost = ground_metric(&Strategy::Plan(plan), &set, &psi).unwrap().value;
                let root: f64 = v.iter().map(|x| x.sqrt()).sum();
                let rel = (cost - root * root).abs() / (root * root);
                worst.set(worst.get().max(rel));
                proptest::prop_assert!(rel <= 1e-10, "relative gap {rel}");
                Ok(())
            },
        )
        .map_err(|e| e.to_string())?;
    Ok(format!("64 random plans on h2/h3p, worst relative gap {:.1e}", worst.get()))
}

fn estimator_closure() -> Check {
    let p = problem("h2", Task::Qse);
    let strategy = build_strategy(&p, Method::FcSi, &StrategyOptions::default()).unwrap();
    let Strategy::Plan(plan) = &strategy else { return Err("fc-si did not give a grouping plan".into()) };
    let m = evaluate(&p, &strategy, &p.exact).unwrap();
    let eps = DEFAULT_EPSILON;
    let sim = simulate_plan_shots(plan, &p.set, &p.exact[0], m.shots(eps), 100, 7).map_err(|e| e.to_string())?;
    let worst = sim.rms.iter().copied().fold(0.0, f64::max);
    ensure((0.7 * eps..=1.3 * eps).contains(&worst), || format!("max RMS {worst:.3e} outside [0.7ε, 1.3ε]"))?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (n, (r, pred)) in sim.rms.iter().zip(&sim.predicted).enumerate() {
        if *pred == 0.0 {
            ensure(*r == 0.0, || format!("observable {n} has no variance but RMS {r}"))?;
            continue;
        }
        let ratio = r / pred;
        ensure((0.7..=1.3).contains(&ratio), || format!("observable {n}: RMS/predicted {ratio:.3}"))?;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(format!(
        "M = {:.3e} shots, 100 repetitions: max RMS {:.3e} (ε = {eps:.0e}), per-observable RMS/predicted in [{lo:.3}, {hi:.3}]",
        m.shots(eps),
        worst
    ))
}

fn method_ordering() -> Check {
    let mut lines = Vec::new();
    for mol in ["h2", "h3p", "h4"] {
        let q = problem(mol, Task::Qse);
        let (maj, fc) = (metric(&q, Method::MajoranaCs), metric(&q, Method::FcSi));
        ensure(maj < fc, || format!("{mol} qse: majorana-cs {maj:.3} ≥ fc-si {fc:.3}"))?;
        let mc = problem(mol, Task::Mc);
        let [f3, ics, der, fcsi, qwcsi] =
            [Method::F3, Method::FcIcs, Method::Derand, Method::FcSi, Method::QwcSi].map(|m| metric(&mc, m));
        ensure(f3 < ics && ics < der, || format!("{mol} mc: f3 {f3:.3}, fc-ics {ics:.3}, derand {der:.3}"))?;
        ensure(fcsi < qwcsi, || format!("{mol} mc: fc-si {fcsi:.3} ≥ qwc-si {qwcsi:.3}"))?;
        lines.push(format!("{mol} qse {maj:.2}<{fc:.2}, mc {f3:.3}<{ics:.3}<{der:.3} and {fcsi:.3}<{qwcsi:.3}"));
    }
    Ok(lines.join("; "))
}

fn spot_checks() -> Check {
    let cases = [
        ("h2", Task::Qse, Method::FcSi, 2.82),
        ("h2", Task::Mc, Method::F3, 0.278),
        ("h3p", Task::Qse, Method::MajoranaCs, 3.09),
    ];
    let mut out = Vec::new();
    for (mol, task, method, reference) in cases {
        let v = metric(&problem(mol, task), method);
        let dev = (v - reference) / reference;
        ensure(dev.abs() <= 0.15, || format!("{mol} {task} {method}: {v:.3} vs {reference} ({:+.1}%)", 100.0 * dev))?;
        out.push(format!("{mol} {task} {method} {v:.3} ({:+.1}%)", 100.0 * dev));
    }
    Ok(out.join(", "))
}

/// Dense unitary rotating the given single-qubit basis onto Z.
fn basis_rotation(bases: &[Letter]) -> DMatrix<Complex64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let h = DMatrix::from_row_slice(2, 2, &[c(r, 0.), c(r, 0.), c(r, 0.), c(-r, 0.)]);
    let sdg = DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., -1.)]);
    let mut u = DMatrix::from_element(1, 1, c(1., 0.));
    for q in (0..bases.len()).rev() {
        let local = match bases[q] {
            Letter::X => h.clone(),
            Letter::Y => &h * &sdg,
            _ => DMatrix::identity(2, 2),
        };
        u = u.kronecker(&local);
    }
    u
}

/// Mean and second moment of the local-basis shadow estimator of `h` minus its constant,
/// by summing over every basis string and outcome of the dense state.
fn dense_qwc_moments(h: &PauliPolynomial, psi: &WaveVector) -> (f64, f64) {
    let n = psi.n_qubits;
    let v = DVector::from_vec(psi.amplitudes.clone());
    let (mut mean, mut second) = (0.0, 0.0);
    let letters = [Letter::X, Letter::Y, Letter::Z];
    for code in 0..3usize.pow(n as u32) {
        let bases: Vec<Letter> = (0..n).map(|q| letters[code / 3usize.pow(q as u32) % 3]).collect();
        let rotated = basis_rotation(&bases) * &v;
        for (s, amp) in rotated.iter().enumerate() {
            let prob = amp.norm_sqr();
            let mut est = 0.0;
            for (p, c) in h.iter() {
                if p.is_identity() {
                    continue;
                }
                let support: Vec<usize> = (0..n).filter(|&q| p.letter(q) != Letter::I).collect();
                if support.iter().all(|&q| p.letter(q) == bases[q]) {
                    let parity = support.iter().filter(|&&q| s >> q & 1 == 1).count();
                    let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
                    est += c * sign * 3f64.powi(support.len() as i32);
                }
            }
            let w = prob / 3f64.powi(n as i32);
            mean += w * est;
            second += w * est * est;
        }
    }
    (mean, second)
}

fn dense_oracles() -> Check {
    let tol = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;

    for _ in 0..200 {
        let a = PauliProduct::random(5, &mut rng);
        let b = PauliProduct::random(5, &mut rng);
        let ab = a.multiply(&b).unwrap();
        let err = (dense_pauli(&ab) - dense_pauli(&a) * dense_pauli(&b)).camax();
        worst = worst.max(err);
        ensure(err < tol, || format!("product {a}·{b}: {err:.1e}"))?;
    }

    for mol in ["h2", "h3p"] {
        let mi = load(mol);
        let ham = build_electronic_hamiltonian(&mi);
        let (dets, ci) = determinant_ci(&mi);
        let jw = dense_polynomial(&Mapping::Jw.encode(&ham).unwrap());
        let restricted = DMatrix::from_fn(dets.len(), dets.len(), |i, j| jw[(dets[i] as usize, dets[j] as usize)]);
        let err = (restricted - ci.map(|x| Complex64::new(x, 0.0))).camax();
        worst = worst.max(err);
        ensure(err < tol, || format!("{mol}: JW sector differs from determinant CI by {err:.1e}"))?;
        let spectrum = |m: DMatrix<Complex64>| {
            let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
            e.sort_by(f64::total_cmp);
            e
        };
        let bk = dense_polynomial(&Mapping::Bk.encode(&ham).unwrap());
        for (x, y) in spectrum(jw).iter().zip(spectrum(bk)) {
            worst = worst.max((x - y).abs());
            ensure((x - y).abs() < tol, || format!("{mol}: JW/BK spectra differ, {x} vs {y}"))?;
        }

        let lr = lr_decompose(&mi, LR_THRESHOLD).unwrap();
        let mut total = FermionicFragment::from_one_body(&lr.one_body).unwrap().to_fermion().unwrap();
        for f in &lr.fragments {
            total.add(1.0, &f.to_fermion().unwrap()).unwrap();
        }
        let resummed: FermionPolynomial = total;
        let dense = dense_polynomial(&Mapping::Jw.encode(&resummed).unwrap());
        let restricted =
            DMatrix::from_fn(dets.len(), dets.len(), |i, j| dense[(dets[i] as usize, dets[j] as usize)].re);
        let err = (restricted - &ci).amax();
        worst = worst.max(err);
        ensure(err < tol, || format!("{mol}: fragment resummation error {err:.1e}"))?;
    }

    let h2 = Mapping::Jw.encode(&build_electronic_hamiltonian(&load("h2"))).unwrap();
    let toy =
        PauliPolynomial::from_labels(3, &[("Z0", 0.4), ("X0 X1", -0.3), ("Y1 Z2", 0.25), ("X0 Y1 Z2", 0.1)]).unwrap();
    for (h, seed) in [(&h2, 5u64), (&toy, 6)] {
        let psi = random_state(h.n_qubits(), &mut ChaCha8Rng::seed_from_u64(seed));
        let (mean, second) = dense_qwc_moments(h, &psi);
        let truth = expectation(&psi, h).unwrap() - h.identity_coefficient();
        let set = ObservableSet::single(h);
        let var = one_shot_variance(ShadowScheme::QwcCs, &set, &psi, Budget::Exact, Mapping::Jw).unwrap().variances[0];
        let (e1, e2) = ((mean - truth).abs(), (second - mean * mean - var).abs());
        worst = worst.max(e1).max(e2);
        ensure(e1 < tol && e2 < tol * (1.0 + var), || {
            format!("local shadow channel: mean {e1:.1e}, variance {e2:.1e}")
        })?;
    }
    Ok(format!(
        "Pauli products, JW/BK spectra, fragment resummation and the local shadow channel; worst deviation {worst:.1e}"
    ))
}

fn qse_end_to_end() -> Check {
    let p = problem("h2", Task::Qse);
    let (h, s) = qse_matrices(&p.set, &p.exact[0]).map_err(|e| e.to_string())?;
    let exact = solve_qse(&h, &s, QSE_THRESHOLD).map_err(|e| e.to_string())?[0];
    let fci = fci_reference("h2");
    ensure((exact - fci).abs() < 1e-8, || format!("QSE ground {exact} vs FCI {fci}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let reps = 200;
    let epsilons = [1e-2, 1e-3, 1e-4];
    let mut rms = Vec::new();
    for eps in epsilons {
        let off = Normal::new(0.0, eps / 2f64.sqrt()).unwrap();
        let diag = Normal::new(0.0, eps).unwrap();
        let mut acc = 0.0;
        for _ in 0..reps {
            let (mut hn, mut sn) = (h.clone(), s.clone());
            for m in [&mut hn, &mut sn] {
                for i in 0..m.nrows() {
                    m[(i, i)] += diag.sample(&mut rng);
                    for j in i + 1..m.nrows() {
                        let z = Complex64::new(off.sample(&mut rng), off.sample(&mut rng));
                        m[(i, j)] += z;
                        m[(j, i)] += z.conj();
                    }
                }
            }
            let e = solve_qse(&hn, &sn, 10.0 * eps).map_err(|e| format!("ε = {eps:.0e}: {e}"))?[0];
            acc += (e - exact).powi(2);
        }
        rms.push((acc / reps as f64).sqrt());
    }
    let xs: Vec<f64> = epsilons.iter().map(|e| e.log10()).collect();
    let ys: Vec<f64> = rms.iter().map(|r| r.log10()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    ensure((slope - 1.0).abs() <= 0.2, || format!("log-log slope {slope:.3}"))?;
    Ok(format!(
        "exact matrices give {exact:.10} (FCI {fci:.10}); noisy RMS {:.2e}/{:.2e}/{:.2e}, slope {slope:.3}",
        rms[0], rms[1], rms[2]
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("structural counts", structural_counts),
        ("Pauli counts", pauli_counts),
        ("optimal allocation identity", allocation_identity),
        ("estimator closure", estimator_closure),
        ("method ordering", method_ordering),
        ("quantitative spot checks", spot_checks),
        ("dense oracle equivalence", dense_oracles),
        ("QSE end-to-end", qse_end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({secs:.1}s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.1}s) {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
