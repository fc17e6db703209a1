use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliPolynomial, PauliProduct, PauliSum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I_POW: [Complex64; 4] =
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)];

/// Negative variance residual tolerated before clamping to zero.
pub const VARIANCE_TOL: f64 = 1e-10;

/// Amplitudes over the `2^n` computational basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveVector {
    pub n_qubits: usize,
    pub amplitudes: Vec<Complex64>,
    /// Position in its state family.
    pub label: usize,
    /// Eigenvalue when the state came from a diagonalization.
    pub energy: Option<f64>,
}

impl WaveVector {
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n_qubits {
            return Err(Error::DimensionMismatch(amplitudes.len(), 1 << n_qubits));
        }
        Ok(Self { n_qubits, amplitudes, label: 0, energy: None })
    }

    pub fn basis(n_qubits: usize, index: u64) -> Self {
        let mut a = vec![ZERO; 1 << n_qubits];
        a[index as usize] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amplitudes: a, label: 0, energy: None }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        for a in &mut self.amplitudes {
            *a /= n;
        }
        self
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Indices with `|amplitude| > tol`.
    pub fn support(&self, tol: f64) -> impl Iterator<Item = u64> + '_ {
        self.amplitudes.iter().enumerate().filter(move |(_, a)| a.norm() > tol).map(|(i, _)| i as u64)
    }

    fn check(&self, n_qubits: usize) -> Result<()> {
        if self.n_qubits != n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits, n_qubits));
        }
        Ok(())
    }
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Accumulates `coeff · P |v⟩` into `out`.
#[inline]
pub(crate) fn add_pauli_action(p: &PauliProduct, coeff: Complex64, v: &[Complex64], out: &mut [Complex64]) {
    for (b, a) in v.iter().enumerate() {
        if *a == ZERO {
            continue;
        }
        let (b2, k) = p.apply_to_basis(b as u64);
        out[b2 as usize] += coeff * I_POW[k as usize] * a;
    }
}

/// `op |v⟩` for a real Pauli polynomial.
pub fn apply_polynomial(op: &PauliPolynomial, v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; v.len()];
    for (p, c) in op.iter() {
        add_pauli_action(p, Complex64::new(*c, 0.0), v, &mut out);
    }
    out
}

/// `op |v⟩` for a complex Pauli sum.
pub fn apply_sum(op: &PauliSum, v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; v.len()];
    for (p, c) in op.iter() {
        add_pauli_action(p, *c, v, &mut out);
    }
    out
}

/// `⟨ψ|op|ψ⟩`.
pub fn expectation(state: &WaveVector, op: &PauliPolynomial) -> Result<f64> {
    state.check(op.n_qubits())?;
    let v = apply_polynomial(op, &state.amplitudes);
    Ok(inner(&state.amplitudes, &v).re)
}

/// Single-Pauli expectation without allocating.
pub fn pauli_expectation(state: &WaveVector, p: &PauliProduct) -> f64 {
    let a = &state.amplitudes;
    let mut acc = ZERO;
    for (b, amp) in a.iter().enumerate() {
        if *amp == ZERO {
            continue;
        }
        let (b2, k) = p.apply_to_basis(b as u64);
        acc += a[b2 as usize].conj() * I_POW[k as usize] * amp;
    }
    acc.re
}

fn clamp_variance(v: f64) -> Result<f64> {
    if v < -VARIANCE_TOL {
        return Err(Error::NegativeVariance(v));
    }
    Ok(v.max(0.0))
}

/// `⟨op²⟩ − ⟨op⟩²`, using `⟨op²⟩ = ‖op ψ‖²` for Hermitian `op`.
pub fn variance(state: &WaveVector, op: &PauliPolynomial) -> Result<f64> {
    state.check(op.n_qubits())?;
    let v = apply_polynomial(op, &state.amplitudes);
    let mean = inner(&state.amplitudes, &v).re;
    let second: f64 = v.iter().map(Complex64::norm_sqr).sum();
    clamp_variance(second - mean * mean)
}

/// `Tr(op² ρ) − Tr(op ρ)²` for `ρ = Σ w_i |ψ_i⟩⟨ψ_i|` with weights summing to one.
pub fn ensemble_variance(states: &[WaveVector], weights: &[f64], op: &PauliPolynomial) -> Result<f64> {
    if states.len() != weights.len() {
        return Err(Error::DimensionMismatch(states.len(), weights.len()));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| *w < 0.0) || (total - 1.0).abs() > 1e-10 {
        return Err(Error::Invalid(format!("ensemble weights must be nonnegative and sum to 1, got {total}")));
    }
    let mut mean = 0.0;
    let mut second = 0.0;
    for (s, w) in states.iter().zip(weights) {
        s.check(op.n_qubits())?;
        let v = apply_polynomial(op, &s.amplitudes);
        mean += w * inner(&s.amplitudes, &v).re;
        second += w * v.iter().map(Complex64::norm_sqr).sum::<f64>();
    }
    clamp_variance(second - mean * mean)
}

/// Uniform trace-one weights.
pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(n: usize, terms: &[(&str, f64)]) -> PauliPolynomial {
        PauliPolynomial::from_labels(n, terms).unwrap()
    }

    #[test]
    fn basic_expectations() {
        let s = WaveVector::basis(3, 0);
        assert_eq!(expectation(&s, &poly(3, &[("I", 1.0)])).unwrap(), 1.0);
        assert_eq!(expectation(&s, &poly(3, &[("Z0", 1.0)])).unwrap(), 1.0);
        assert_eq!(variance(&s, &poly(3, &[("X0", 1.0)])).unwrap(), 1.0);
        assert_eq!(variance(&s, &poly(3, &[("Z0 Z1", 2.0)])).unwrap(), 0.0);
        let one = WaveVector::basis(3, 0b010);
        assert_eq!(pauli_expectation(&one, &PauliProduct::parse("Z1", 3).unwrap()), -1.0);
    }

    #[test]
    fn y_action() {
        // Y|0⟩ = i|1⟩
        let s = WaveVector::basis(1, 0);
        let v = apply_polynomial(&poly(1, &[("Y0", 1.0)]), &s.amplitudes);
        assert_eq!(v[1], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn ensemble_two_point() {
        let a = WaveVector::basis(1, 0);
        let b = WaveVector::basis(1, 1);
        let z = poly(1, &[("Z0", 1.5)]);
        // eigenvalues ±1.5 with equal weights
        let v = ensemble_variance(&[a.clone(), b], &[0.5, 0.5], &z).unwrap();
        assert!((v - 9.0 / 4.0).abs() < 1e-14);
        assert_eq!(ensemble_variance(std::slice::from_ref(&a), &[1.0], &z).unwrap(), variance(&a, &z).unwrap());
        assert!(ensemble_variance(&[a], &[0.7], &z).is_err());
    }
}
