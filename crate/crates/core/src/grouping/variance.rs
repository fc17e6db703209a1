use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{Group, MeasurementPlan};
use crate::error::{Error, Result};
use crate::molecular::ObservableSet;
use crate::pauli::PauliProduct;
use crate::state::{inner, pauli_expectation, WaveVector, VARIANCE_TOL};

/// Lower bound on `m_α` before renormalization.
pub const ALLOCATION_FLOOR: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I_POW: [Complex64; 4] =
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)];

/// States with trace-one weights; a single state is the pure-state case.
#[derive(Clone, Debug)]
pub struct Ensemble<'a> {
    pub states: &'a [WaveVector],
    pub weights: Vec<f64>,
}

impl<'a> Ensemble<'a> {
    pub fn pure(state: &'a WaveVector) -> Self {
        Self { states: std::slice::from_ref(state), weights: vec![1.0] }
    }

    pub fn uniform(states: &'a [WaveVector]) -> Self {
        let w = 1.0 / states.len() as f64;
        Self { states, weights: vec![w; states.len()] }
    }

    pub fn n_qubits(&self) -> usize {
        self.states[0].n_qubits
    }

    pub fn iter(&self) -> impl Iterator<Item = (&WaveVector, f64)> {
        self.states.iter().zip(self.weights.iter().copied())
    }
}

fn checked_variance(second: f64, mean: Complex64) -> Result<f64> {
    let v = second - mean.norm_sqr();
    if v < -VARIANCE_TOL * second.max(1.0) {
        return Err(Error::NegativeVariance(v));
    }
    Ok(v.max(0.0))
}

/// `Var_ρ(A_n^(α))` for every observable `n` with a member in `group`.
///
/// Uses `Var = Σ_i w_i ‖A ψ_i‖² − |Σ_i w_i ⟨ψ_i|A|ψ_i⟩|²`, valid because group members commute.
pub fn group_variances(group: &Group, set: &ObservableSet, ens: &Ensemble) -> Result<Vec<(u32, f64)>> {
    let dim = 1usize << set.n_qubits();
    let mut second: HashMap<u32, f64> = HashMap::new();
    let mut mean: HashMap<u32, Complex64> = HashMap::new();
    let mut scratch = vec![ZERO; dim];
    for (psi, w) in ens.iter() {
        let mut acc: HashMap<u32, Vec<Complex64>> = HashMap::new();
        for (&k, &f) in group.paulis.iter().zip(&group.fractions) {
            if f == 0.0 {
                continue;
            }
            let p = set.pauli(k);
            scratch.iter_mut().for_each(|x| *x = ZERO);
            for (b, a) in psi.amplitudes.iter().enumerate() {
                if *a != ZERO {
                    let (b2, ph) = p.apply_to_basis(b as u64);
                    scratch[b2 as usize] = I_POW[ph as usize] * a;
                }
            }
            for &(n, c) in set.members(k) {
                let v = acc.entry(n).or_insert_with(|| vec![ZERO; dim]);
                let s = c * f;
                for (vi, si) in v.iter_mut().zip(&scratch) {
                    *vi += s * si;
                }
            }
        }
        for (n, v) in acc {
            *second.entry(n).or_default() += w * v.iter().map(Complex64::norm_sqr).sum::<f64>();
            *mean.entry(n).or_default() += w * inner(&psi.amplitudes, &v);
        }
    }
    let mut out: Vec<(u32, f64)> =
        second.into_iter().map(|(n, s)| Ok((n, checked_variance(s, mean[&n])?))).collect::<Result<_>>()?;
    out.sort_by_key(|e| e.0);
    Ok(out)
}

/// Per-group proxy variance `V_α = max_n Var_ρ(A_n^(α))`.
pub fn proxy_group_costs(plan: &MeasurementPlan, set: &ObservableSet, ens: &Ensemble) -> Result<Vec<f64>> {
    plan.groups
        .par_iter()
        .map(|g| Ok(group_variances(g, set, ens)?.into_iter().map(|e| e.1).fold(0.0, f64::max)))
        .collect()
}

/// `m_α ∝ √V_α`, floored at [`ALLOCATION_FLOOR`] and renormalized; uniform if all vanish.
pub fn optimal_allocation(variances: &[f64]) -> Vec<f64> {
    let roots: Vec<f64> = variances.iter().map(|v| v.max(0.0).sqrt()).collect();
    let total: f64 = roots.iter().sum();
    if total == 0.0 {
        return vec![1.0 / variances.len() as f64; variances.len()];
    }
    let floored: Vec<f64> = roots.iter().map(|r| (r / total).max(ALLOCATION_FLOOR)).collect();
    let norm: f64 = floored.iter().sum();
    floored.into_iter().map(|m| m / norm).collect()
}

/// `Σ_α V_α / m_α`; infinite when a group with variance gets no shots.
pub fn allocation_cost(variances: &[f64], m: &[f64]) -> f64 {
    variances
        .iter()
        .zip(m)
        .map(|(v, m)| {
            if *v == 0.0 {
                0.0
            } else if *m <= 0.0 {
                f64::INFINITY
            } else {
                v / m
            }
        })
        .sum()
}

/// Proxy cost of a plan with its current allocations, without the `1/ε²` factor.
pub fn plan_cost(plan: &MeasurementPlan, set: &ObservableSet, ens: &Ensemble) -> Result<f64> {
    let v = proxy_group_costs(plan, set, ens)?;
    Ok(allocation_cost(&v, &plan.allocations()))
}

/// Pauli expectation values and covariances over an ensemble, computed lazily.
pub struct CovarianceCache<'a> {
    ens: Ensemble<'a>,
    means: HashMap<PauliProduct, f64>,
}

impl<'a> CovarianceCache<'a> {
    pub fn new(ens: Ensemble<'a>) -> Self {
        Self { ens, means: HashMap::new() }
    }

    pub fn mean(&mut self, p: &PauliProduct) -> f64 {
        let key = p.without_phase();
        if let Some(m) = self.means.get(&key) {
            return *m;
        }
        let m =
            if key.is_identity() { 1.0 } else { self.ens.iter().map(|(s, w)| w * pauli_expectation(s, &key)).sum() };
        self.means.insert(key, m);
        m
    }

    /// `⟨P_a P_b⟩ − ⟨P_a⟩⟨P_b⟩` for commuting `a`, `b`.
    pub fn covariance(&mut self, a: &PauliProduct, b: &PauliProduct) -> f64 {
        let prod = a.multiply(b).expect("same register");
        let sign = match prod.phase() {
            0 => 1.0,
            2 => -1.0,
            _ => panic!("covariance of anticommuting Paulis {a} and {b}"),
        };
        sign * self.mean(&prod) - self.mean(a) * self.mean(b)
    }
}
