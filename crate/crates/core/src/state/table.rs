//! Expectation values of every phase-free Pauli product over an ensemble.

use std::ops::{Add, Sub};

use num_complex::Complex64;
use rayon::prelude::*;

use super::wave::WaveVector;
use crate::error::{Error, Result};
use crate::pauli::PauliProduct;

/// Largest register for which the full `4^n` table is stored.
pub const TABLE_MAX_QUBITS: usize = 11;

/// In-place unnormalized Walsh–Hadamard transform: `v'(s) = Σ_t (−1)^{s·t} v(t)`.
pub fn walsh_hadamard<T: Copy + Add<Output = T> + Sub<Output = T>>(v: &mut [T]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// `Σ_i w_i ⟨ψ_i|P|ψ_i⟩` for all `P`, indexed by `x | z << n`.
#[derive(Clone, Debug)]
pub struct PauliExpectations {
    n_qubits: usize,
    table: Vec<f64>,
}

impl PauliExpectations {
    pub fn new(states: &[WaveVector], weights: &[f64]) -> Result<Self> {
        let n = states.first().map_or(0, |s| s.n_qubits);
        if n > TABLE_MAX_QUBITS {
            return Err(Error::TooManyQubits { got: n, max: TABLE_MAX_QUBITS });
        }
        if states.len() != weights.len() {
            return Err(Error::DimensionMismatch(states.len(), weights.len()));
        }
        let dim = 1usize << n;
        // Row x holds ⟨X^x Z^z⟩ for every z; Y = iXZ adds i^{|x∧z|}.
        let rows: Vec<Vec<f64>> = (0..dim)
            .into_par_iter()
            .map(|x| {
                let mut acc = vec![0.0; dim];
                for (s, w) in states.iter().zip(weights) {
                    let a = &s.amplitudes;
                    let mut f: Vec<Complex64> = (0..dim).map(|b| a[b ^ x].conj() * a[b]).collect();
                    walsh_hadamard(&mut f);
                    for (z, v) in f.iter().enumerate() {
                        let re = match (x & z).count_ones() % 4 {
                            0 => v.re,
                            1 => -v.im,
                            2 => -v.re,
                            _ => v.im,
                        };
                        acc[z] += w * re;
                    }
                }
                acc
            })
            .collect();
        let mut table = vec![0.0; dim * dim];
        for (x, row) in rows.into_iter().enumerate() {
            for (z, v) in row.into_iter().enumerate() {
                table[x | z << n] = v;
            }
        }
        Ok(Self { n_qubits: n, table })
    }

    pub fn pure(state: &WaveVector) -> Result<Self> {
        Self::new(std::slice::from_ref(state), &[1.0])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Mean of the phase-free product with these bits.
    pub fn get_bits(&self, x: u64, z: u64) -> f64 {
        self.table[(x | z << self.n_qubits) as usize]
    }

    /// Mean of `p` including its phase; only the real part is returned.
    pub fn get(&self, p: &PauliProduct) -> f64 {
        let v = self.get_bits(p.x_bits(), p.z_bits());
        match p.phase() {
            0 => v,
            2 => -v,
            // an i-phased Hermitian-letter product has purely imaginary mean
            _ => 0.0,
        }
    }
}
