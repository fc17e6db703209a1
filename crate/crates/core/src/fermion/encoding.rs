//! Fermion-to-qubit encodings.
//!
//! Jordan–Wigner stores occupations directly. Bravyi–Kitaev uses the Fenwick-tree layout:
//! qubit `j` holds the parity of modes `(j & (j + 1)) ..= j`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::polynomial::{FermionPolynomial, Ladder};
use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliPolynomial, PauliProduct, PauliSum, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mapping {
    #[serde(alias = "jordan-wigner")]
    Jw,
    #[serde(alias = "bravyi-kitaev")]
    Bk,
}

impl Mapping {
    pub fn name(self) -> &'static str {
        match self {
            Mapping::Jw => "jw",
            Mapping::Bk => "bk",
        }
    }

    /// Qubit images of `γ_{2p} = a_p + a†_p` and `γ_{2p+1} = −i(a_p − a†_p)`.
    pub fn majorana_pair(self, n_modes: usize, p: usize) -> (PauliProduct, PauliProduct) {
        match self {
            Mapping::Jw => {
                let zs = (1u64 << p) - 1;
                (pauli(n_modes, 1 << p, zs), pauli(n_modes, 1 << p, zs | (1 << p)))
            }
            Mapping::Bk => {
                let sets = FenwickSets::new(n_modes, p);
                let xs = sets.update | (1 << p);
                (pauli(n_modes, xs, sets.parity), pauli(n_modes, xs, sets.remainder | (1 << p)))
            }
        }
    }

    /// Qubit image of Majorana operator `γ_j`.
    pub fn majorana_image(self, n_modes: usize, j: usize) -> PauliProduct {
        let (even, odd) = self.majorana_pair(n_modes, j / 2);
        if j.is_multiple_of(2) {
            even
        } else {
            odd
        }
    }

    /// Qubit image of a single ladder operator: `a = (γ_even + iγ_odd)/2`, `a† = (γ_even − iγ_odd)/2`.
    pub fn ladder_image(self, n_modes: usize, op: Ladder) -> PauliSum {
        let (even, odd) = self.majorana_pair(n_modes, op.mode as usize);
        let sign = if op.dagger { -1.0 } else { 1.0 };
        let mut s = PauliSum::new(n_modes);
        s.add(Complex64::new(0.5, 0.0), even);
        s.add(Complex64::new(0.0, 0.5 * sign), odd);
        s
    }

    /// Complex qubit image of an arbitrary (not necessarily Hermitian) fermion polynomial.
    pub fn encode_sum(self, op: &FermionPolynomial) -> PauliSum {
        let n = op.n_modes();
        let mut cache: BTreeMap<Ladder, PauliSum> = BTreeMap::new();
        let mut out = PauliSum::new(n);
        for (ops, c) in op.iter() {
            let mut term = PauliSum::identity(n);
            for l in ops {
                let img = cache.entry(*l).or_insert_with(|| self.ladder_image(n, *l));
                term = term.multiply(img).expect("same register");
            }
            out.add_sum(Complex64::new(*c, 0.0), &term);
        }
        out
    }

    /// Hermitian image; errors if an imaginary residual survives.
    pub fn encode(self, op: &FermionPolynomial) -> Result<PauliPolynomial> {
        if op.n_modes() > MAX_QUBITS {
            return Err(Error::TooManyQubits { got: op.n_modes(), max: MAX_QUBITS });
        }
        self.encode_sum(op).into_hermitian()
    }

    /// Occupation bit string of a computational basis state.
    pub fn occupation_of(self, n_modes: usize, basis: u64) -> u64 {
        match self {
            Mapping::Jw => basis,
            Mapping::Bk => {
                let mut occ = 0u64;
                for p in 0..n_modes {
                    let flip = FenwickSets::new(n_modes, p).flip;
                    let bit = ((basis >> p) & 1) ^ ((basis & flip).count_ones() as u64 & 1);
                    occ |= bit << p;
                }
                occ
            }
        }
    }

    /// Computational basis state encoding the given occupations.
    pub fn basis_of(self, n_modes: usize, occupation: u64) -> u64 {
        match self {
            Mapping::Jw => occupation,
            Mapping::Bk => {
                let mut b = 0u64;
                for j in 0..n_modes {
                    let lo = j & (j + 1);
                    let range = ((1u64 << (j + 1)) - 1) & !((1u64 << lo) - 1);
                    b |= ((occupation & range).count_ones() as u64 & 1) << j;
                }
                b
            }
        }
    }
}

fn pauli(n: usize, x: u64, z: u64) -> PauliProduct {
    // x and z masks use the letter convention: a qubit in both is Y.
    let mut p = PauliProduct::identity(n);
    for q in 0..n {
        let l = Letter::from_bits((x >> q) & 1 == 1, (z >> q) & 1 == 1);
        if l != Letter::I {
            p = p.with_letter(q, l);
        }
    }
    p
}

/// Update, parity, flip and remainder sets of mode `p` in the Fenwick layout.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FenwickSets {
    pub update: u64,
    pub parity: u64,
    pub flip: u64,
    pub remainder: u64,
}

impl FenwickSets {
    pub fn new(n: usize, p: usize) -> Self {
        let mut update = 0u64;
        let mut j = p | (p + 1);
        while j < n {
            update |= 1 << j;
            j |= j + 1;
        }
        let mut parity = 0u64;
        let mut k = p as i64 - 1;
        while k >= 0 {
            parity |= 1 << k;
            k = (k & (k + 1)) - 1;
        }
        let mut flip = 0u64;
        let start = (p & (p + 1)) as i64;
        let mut k = p as i64 - 1;
        while k >= start {
            flip |= 1 << k;
            k = (k & (k + 1)) - 1;
        }
        Self { update, parity, flip, remainder: parity & !flip }
    }
}

/// Jordan–Wigner image of a Hermitian fermion polynomial.
pub fn jordan_wigner(op: &FermionPolynomial) -> Result<PauliPolynomial> {
    Mapping::Jw.encode(op)
}

/// Bravyi–Kitaev image of a Hermitian fermion polynomial.
pub fn bravyi_kitaev(op: &FermionPolynomial) -> Result<PauliPolynomial> {
    Mapping::Bk.encode(op)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenwick_sets_for_four_modes() {
        let s = FenwickSets::new(4, 0);
        assert_eq!((s.update, s.parity, s.flip), (0b1010, 0, 0));
        let s = FenwickSets::new(4, 3);
        assert_eq!((s.update, s.parity, s.flip, s.remainder), (0, 0b0110, 0b0110, 0));
        let s = FenwickSets::new(4, 2);
        assert_eq!((s.update, s.parity, s.flip, s.remainder), (0b1000, 0b0010, 0, 0b0010));
    }

    #[test]
    fn number_operator_images() {
        for mapping in [Mapping::Jw, Mapping::Bk] {
            let n0 = mapping.encode(&FermionPolynomial::number(2, 0).unwrap()).unwrap();
            let expect = PauliPolynomial::from_labels(2, &[("I", 0.5), ("Z0", -0.5)]).unwrap();
            assert_eq!(n0, expect, "{mapping:?}");
        }
        let n2 = jordan_wigner(&FermionPolynomial::number(4, 2).unwrap()).unwrap();
        assert_eq!(n2, PauliPolynomial::from_labels(4, &[("I", 0.5), ("Z2", -0.5)]).unwrap());
    }

    #[test]
    fn identity_maps_to_identity() {
        let id = bravyi_kitaev(&FermionPolynomial::identity(5)).unwrap();
        assert_eq!(id, PauliPolynomial::constant(5, 1.0));
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let e = FermionPolynomial::excitation(3, 2, 0).unwrap();
        assert!(matches!(jordan_wigner(&e), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn bk_basis_roundtrip() {
        for n in 1..=9 {
            for occ in 0..(1u64 << n) {
                let b = Mapping::Bk.basis_of(n, occ);
                assert_eq!(Mapping::Bk.occupation_of(n, b), occ);
            }
        }
    }
}
