use nalgebra::DMatrix;
use num_complex::Complex64;

use super::wave::{apply_sum, WaveVector};
use crate::error::{Error, Result};
use crate::fermion::{FermionPolynomial, Ladder, Mapping};
use crate::pauli::PauliSum;

const ANTISYMMETRY_TOL: f64 = 1e-12;

/// Qubit image of `Σ_pq κ_pq a†_p a_q` for antisymmetric real `κ`.
pub fn one_body_generator(kappa: &DMatrix<f64>, mapping: Mapping) -> Result<PauliSum> {
    let n = kappa.nrows();
    if kappa.ncols() != n {
        return Err(Error::DimensionMismatch(kappa.nrows(), kappa.ncols()));
    }
    let defect = (kappa + kappa.transpose()).amax();
    if defect > ANTISYMMETRY_TOL {
        return Err(Error::NotAntisymmetric(defect));
    }
    let mut products = Vec::new();
    for p in 0..n {
        for q in 0..n {
            if p != q && kappa[(p, q)] != 0.0 {
                products.push((vec![Ladder::create(p), Ladder::annihilate(q)], kappa[(p, q)]));
            }
        }
    }
    Ok(mapping.encode_sum(&FermionPolynomial::from_products(n, products)?))
}

/// `exp(G) |ψ⟩` by a scaled Taylor series.
pub fn apply_exponential(generator: &PauliSum, state: &WaveVector) -> Result<WaveVector> {
    if generator.n_qubits() != state.n_qubits {
        return Err(Error::QubitMismatch(generator.n_qubits(), state.n_qubits));
    }
    let bound: f64 = generator.iter().map(|(_, c)| c.norm()).sum();
    let steps = (bound / 0.5).ceil().max(1.0) as usize;
    let scale = Complex64::new(1.0 / steps as f64, 0.0);
    let g = generator.scale(scale);
    let mut v = state.amplitudes.clone();
    for _ in 0..steps {
        let mut acc = v.clone();
        let mut term = v;
        for k in 1..60 {
            term = apply_sum(&g, &term);
            let inv = 1.0 / k as f64;
            let mut size = 0.0;
            for t in &mut term {
                *t *= inv;
                size += t.norm_sqr();
            }
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t;
            }
            if size.sqrt() < 1e-17 {
                break;
            }
        }
        v = acc;
    }
    Ok(WaveVector { amplitudes: v, energy: None, ..state.clone() })
}

/// Applies `exp(Σ_pq κ_pq a†_p a_q)` so that `a†_q ↦ Σ_p [exp κ]_pq a†_p`.
pub fn apply_one_body_rotation(state: &WaveVector, kappa: &DMatrix<f64>, mapping: Mapping) -> Result<WaveVector> {
    if kappa.nrows() != state.n_qubits {
        return Err(Error::ModeMismatch(kappa.nrows(), state.n_qubits));
    }
    apply_exponential(&one_body_generator(kappa, mapping)?, state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_generator_is_identity() {
        let s = WaveVector::basis(3, 0b011);
        let r = apply_one_body_rotation(&s, &DMatrix::zeros(3, 3), Mapping::Jw).unwrap();
        assert_eq!(r.amplitudes, s.amplitudes);
    }

    #[test]
    fn rejects_symmetric_generator() {
        let s = WaveVector::basis(2, 0b01);
        let k = DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.3, 0.0]);
        assert!(matches!(apply_one_body_rotation(&s, &k, Mapping::Jw), Err(Error::NotAntisymmetric(_))));
    }

    #[test]
    fn givens_rotation_of_one_particle() {
        // a†_0 ↦ cos θ a†_0 + sin θ a†_1 for κ_10 = θ.
        let theta = 0.4_f64;
        let k = DMatrix::from_row_slice(2, 2, &[0.0, -theta, theta, 0.0]);
        for mapping in [Mapping::Jw, Mapping::Bk] {
            let s = WaveVector::basis(2, mapping.basis_of(2, 0b01));
            let r = apply_one_body_rotation(&s, &k, mapping).unwrap();
            let a0 = r.amplitudes[mapping.basis_of(2, 0b01) as usize];
            let a1 = r.amplitudes[mapping.basis_of(2, 0b10) as usize];
            assert!((a0 - Complex64::new(theta.cos(), 0.0)).norm() < 1e-12, "{mapping:?}");
            assert!((a1 - Complex64::new(theta.sin(), 0.0)).norm() < 1e-12, "{mapping:?}");
        }
    }
}
