//! Finite-shot simulation of a deterministic plan: each group is measured
//! `round(M·m_α)` times, outcomes are drawn from the exact joint distribution of its
//! commuting Paulis, and every `⟨A_n⟩` is the sum of its fragment sample means.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::grouping::{Group, MeasurementPlan};
use crate::molecular::ObservableSet;
use crate::pauli::PauliProduct;
use crate::shadows::Decomposer;
use crate::state::{apply_sum, inner, pauli_expectation, walsh_hadamard, WaveVector};

#[derive(Clone, Debug)]
pub struct ShotSimulation {
    /// Exact `⟨A_n⟩`.
    pub exact: Vec<Complex64>,
    /// Root-mean-square error of each estimate over repetitions.
    pub rms: Vec<f64>,
    /// `√(Σ_α Var_ψ(A_n^(α))/N_α)` for the shot counts actually used.
    pub predicted: Vec<f64>,
    pub shots_per_group: Vec<u64>,
}

/// Joint outcome distribution of one group and each fragment's value per outcome.
struct GroupOutcomes {
    probabilities: Vec<f64>,
    values: Vec<(usize, Vec<Complex64>)>,
}

fn group_outcomes(group: &Group, set: &ObservableSet, state: &WaveVector) -> Result<GroupOutcomes> {
    let mut generators: Vec<PauliProduct> = Vec::new();
    let mut d = Decomposer::new(Vec::new())?;
    for &k in &group.paulis {
        let p = set.pauli(k);
        if generators.is_empty() || d.mask(&p).is_none() {
            generators.push(p);
            d = Decomposer::new(generators.clone())?;
        }
    }
    let dim = 1usize << generators.len();
    let mut e = vec![0.0; dim];
    e[0] = 1.0;
    for (t, slot) in e.iter_mut().enumerate().skip(1) {
        *slot = pauli_expectation(state, &d.product(t as u64));
    }
    walsh_hadamard(&mut e);
    let probabilities: Vec<f64> = e.into_iter().map(|x| (x / dim as f64).max(0.0)).collect();
    let mut acc: Vec<Option<Vec<Complex64>>> = vec![None; set.n_op()];
    for (&k, &f) in group.paulis.iter().zip(&group.fractions) {
        let (t, s) = d
            .signed(&set.pauli(k))
            .ok_or_else(|| Error::Invalid(format!("{} does not commute with its group", set.pauli(k))))?;
        for &(n, c) in set.members(k) {
            let a = acc[n as usize].get_or_insert_with(|| vec![Complex64::new(0.0, 0.0); dim]);
            a[t as usize] += c * f * s;
        }
    }
    let values = acc
        .into_iter()
        .enumerate()
        .filter_map(|(n, v)| {
            v.map(|mut v| {
                walsh_hadamard(&mut v);
                (n, v)
            })
        })
        .collect();
    Ok(GroupOutcomes { probabilities, values })
}

/// Multinomial counts by successive binomial draws.
fn multinomial(shots: u64, probabilities: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<u64>> {
    let mut left = shots;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(probabilities.len());
    for p in probabilities {
        if left == 0 || mass <= 0.0 {
            out.push(0);
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let c = Binomial::new(left, q).map_err(|e| Error::Invalid(e.to_string()))?.sample(rng);
        out.push(c);
        left -= c;
        mass -= p;
    }
    if let Some(last) = out.last_mut() {
        *last += left;
    }
    Ok(out)
}

/// Repeats the full `total_shots` experiment `repetitions` times.
pub fn simulate_plan_shots(
    plan: &MeasurementPlan,
    set: &ObservableSet,
    state: &WaveVector,
    total_shots: f64,
    repetitions: usize,
    seed: u64,
) -> Result<ShotSimulation> {
    plan.validate(set)?;
    let exact: Vec<Complex64> =
        set.observables().iter().map(|a| inner(&state.amplitudes, &apply_sum(a, &state.amplitudes))).collect();
    let groups: Vec<GroupOutcomes> =
        plan.groups.iter().map(|g| group_outcomes(g, set, state)).collect::<Result<_>>()?;
    let shots_per_group: Vec<u64> = plan.groups.iter().map(|g| (total_shots * g.m).round().max(1.0) as u64).collect();

    let mut predicted = vec![0.0; set.n_op()];
    for (g, &shots) in groups.iter().zip(&shots_per_group) {
        for (n, v) in &g.values {
            let mean: Complex64 = v.iter().zip(&g.probabilities).map(|(x, p)| x * p).sum();
            let second: f64 = v.iter().zip(&g.probabilities).map(|(x, p)| x.norm_sqr() * p).sum();
            predicted[*n] += (second - mean.norm_sqr()).max(0.0) / shots as f64;
        }
    }
    let identity = PauliProduct::identity(set.n_qubits());
    let offset: Vec<Complex64> = set.observables().iter().map(|a| a.coefficient(&identity)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sq = vec![0.0; set.n_op()];
    for _ in 0..repetitions {
        let mut est = offset.clone();
        for (g, &shots) in groups.iter().zip(&shots_per_group) {
            let counts = multinomial(shots, &g.probabilities, &mut rng)?;
            for (n, v) in &g.values {
                let s: Complex64 = v.iter().zip(&counts).map(|(x, c)| x * *c as f64).sum();
                est[*n] += s / shots as f64;
            }
        }
        for (n, e) in est.iter().enumerate() {
            sq[n] += (e - exact[n]).norm_sqr();
        }
    }
    Ok(ShotSimulation {
        exact,
        rms: sq.into_iter().map(|s| (s / repetitions as f64).sqrt()).collect(),
        predicted: predicted.into_iter().map(f64::sqrt).collect(),
        shots_per_group,
    })
}
