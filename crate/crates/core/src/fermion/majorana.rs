//! Majorana representation: `γ_{2p} = a_p + a†_p`, `γ_{2p+1} = −i(a_p − a†_p)`.
//!
//! Monomials are stored on strictly increasing index sets in the Hermitian
//! normalization `Γ_S = i^{k(k−1)/2} γ_{s_1} ⋯ γ_{s_k}`, so Hermitian operators have real
//! coefficients. With it, `n_p = (1 + Γ_{2p,2p+1}) / 2`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::polynomial::{normal_order_into, FermionPolynomial, Ladder};
use crate::error::{Error, Result};
use crate::pauli::{PauliPolynomial, PauliProduct, DEDUP_THRESHOLD, HERMITIAN_TOL};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn i_pow(k: usize) -> Complex64 {
    [ONE, I, -ONE, -I][k % 4]
}

/// Sorts a raw product of Majoranas, applying `γ_a γ_b = −γ_b γ_a` and `γ_a² = 1`.
/// Returns the sign and the strictly increasing index list.
pub(crate) fn canonicalize(raw: &[u16]) -> (f64, Vec<u16>) {
    let mut v = raw.to_vec();
    let mut sign = 1.0;
    // insertion sort counting transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    let mut out: Vec<u16> = Vec::with_capacity(v.len());
    for x in v {
        if out.last() == Some(&x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    (sign, out)
}

/// Real combination of Hermitian Majorana monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct MajoranaPolynomial {
    n_modes: usize,
    terms: BTreeMap<Vec<u16>, f64>,
}

impl MajoranaPolynomial {
    pub fn new(n_modes: usize) -> Self {
        Self { n_modes, terms: BTreeMap::new() }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u16>, &f64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, indices: &[u16]) -> f64 {
        self.terms.get(indices).copied().unwrap_or(0.0)
    }

    /// Adds `coeff · Γ_S`; `indices` must be strictly increasing.
    pub fn add_monomial(&mut self, coeff: f64, indices: &[u16]) -> Result<()> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(format!("indices not strictly increasing: {indices:?}")));
        }
        if let Some(&m) = indices.last() {
            if m as usize >= 2 * self.n_modes {
                return Err(Error::IndexOutOfRange { index: m as usize, len: 2 * self.n_modes });
            }
        }
        let e = self.terms.entry(indices.to_vec()).or_insert(0.0);
        *e += coeff;
        if e.abs() < DEDUP_THRESHOLD {
            self.terms.remove(indices);
        }
        Ok(())
    }

    /// Builds from raw complex products `c · γ_{i1} γ_{i2} ⋯` (any order).
    pub(crate) fn from_raw(n_modes: usize, raw: impl IntoIterator<Item = (Vec<u16>, Complex64)>) -> Result<Self> {
        let mut acc: BTreeMap<Vec<u16>, Complex64> = BTreeMap::new();
        for (idx, c) in raw {
            let (sign, sorted) = canonicalize(&idx);
            let k = sorted.len();
            // γ_S = i^{-k(k-1)/2} Γ_S
            let phase = i_pow((4 - (k * (k.saturating_sub(1)) / 2) % 4) % 4);
            *acc.entry(sorted).or_insert(Complex64::new(0.0, 0.0)) += c * sign * phase;
        }
        let mut out = Self::new(n_modes);
        for (k, c) in acc {
            if c.im.abs() > HERMITIAN_TOL {
                return Err(Error::NonHermitian(c.im.abs()));
            }
            if c.re.abs() >= DEDUP_THRESHOLD {
                out.terms.insert(k, c.re);
            }
        }
        Ok(out)
    }

    /// Jordan–Wigner image of `Γ_S` (with its sign); always Hermitian.
    pub fn monomial_pauli(n_modes: usize, indices: &[u16]) -> PauliProduct {
        let mut p = PauliProduct::identity(n_modes);
        for &g in indices {
            p = p.mul_unchecked(&majorana_pauli(n_modes, g as usize));
        }
        let k = indices.len();
        let m = (k * k.saturating_sub(1) / 2) as u8;
        p.with_phase((p.phase() + m) & 3)
    }

    pub fn jordan_wigner(&self) -> Result<PauliPolynomial> {
        let mut out = PauliPolynomial::new(self.n_modes);
        for (idx, c) in &self.terms {
            out.add_scaled(*c, &Self::monomial_pauli(self.n_modes, idx))?;
        }
        Ok(out)
    }

    /// Inverse substitution back to ladder operators.
    pub fn to_fermion(&self) -> Result<FermionPolynomial> {
        let mut acc: BTreeMap<Vec<Ladder>, Complex64> = BTreeMap::new();
        for (idx, c) in &self.terms {
            let k = idx.len();
            let base = Complex64::new(*c, 0.0) * i_pow(k * k.saturating_sub(1) / 2);
            // expand each γ into two ladder operators
            let mut partial: Vec<(Vec<Ladder>, Complex64)> = vec![(Vec::new(), base)];
            for &g in idx {
                let p = (g / 2) as usize;
                let choices: [(Ladder, Complex64); 2] = if g % 2 == 0 {
                    [(Ladder::annihilate(p), ONE), (Ladder::create(p), ONE)]
                } else {
                    [(Ladder::annihilate(p), -I), (Ladder::create(p), I)]
                };
                let mut next = Vec::with_capacity(partial.len() * 2);
                for (ops, c) in &partial {
                    for (l, f) in &choices {
                        let mut o = ops.clone();
                        o.push(*l);
                        next.push((o, c * f));
                    }
                }
                partial = next;
            }
            for (ops, c) in partial {
                normal_order_into(ops, c, &mut acc);
            }
        }
        FermionPolynomial::from_complex(self.n_modes, acc)
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }
}

/// JW image of a single Majorana operator: `Z_{<p} X_p` or `Z_{<p} Y_p`.
pub fn majorana_pauli(n_modes: usize, index: usize) -> PauliProduct {
    let p = index / 2;
    let z_string = (1u64 << p) - 1;
    let (x, z) = if index.is_multiple_of(2) { (1u64 << p, z_string) } else { (1u64 << p, z_string | (1 << p)) };
    PauliProduct::from_bits(n_modes, x, z).expect("mode within register")
}

/// Rewrites a Hermitian fermion polynomial as a real Majorana polynomial.
pub fn to_majorana(op: &FermionPolynomial) -> Result<MajoranaPolynomial> {
    let half = Complex64::new(0.5, 0.0);
    let mut raw: Vec<(Vec<u16>, Complex64)> = Vec::new();
    for (ops, c) in op.iter() {
        // a_p = (γ_{2p} + i γ_{2p+1})/2, a†_p = (γ_{2p} − i γ_{2p+1})/2
        let mut partial: Vec<(Vec<u16>, Complex64)> = vec![(Vec::new(), Complex64::new(*c, 0.0))];
        for l in ops {
            let even = 2 * l.mode;
            let odd_coeff = if l.dagger { -I * half } else { I * half };
            let mut next = Vec::with_capacity(partial.len() * 2);
            for (idx, c) in &partial {
                let mut a = idx.clone();
                a.push(even);
                next.push((a, c * half));
                let mut b = idx.clone();
                b.push(even + 1);
                next.push((b, c * odd_coeff));
            }
            partial = next;
        }
        raw.extend(partial);
    }
    MajoranaPolynomial::from_raw(op.n_modes(), raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::encoding::jordan_wigner;

    #[test]
    fn number_operator_in_majorana_form() {
        let m = to_majorana(&FermionPolynomial::number(3, 1).unwrap()).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.coefficient(&[]), 0.5);
        assert_eq!(m.coefficient(&[2, 3]), 0.5);
    }

    #[test]
    fn creation_plus_annihilation_is_gamma_even() {
        let mut op = FermionPolynomial::new(2);
        op.add_product(1.0, &[Ladder::annihilate(1)]).unwrap();
        op.add_product(1.0, &[Ladder::create(1)]).unwrap();
        let m = to_majorana(&op).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.coefficient(&[2]), 1.0);
    }

    #[test]
    fn pair_monomial_maps_to_z() {
        for p in 0..4u16 {
            let img = MajoranaPolynomial::monomial_pauli(4, &[2 * p, 2 * p + 1]);
            assert!(img.is_z_type());
            assert_eq!(img.weight(), 1);
            // Γ = iγγ = -Z_p
            assert_eq!(img.phase(), 2);
        }
    }

    #[test]
    fn roundtrip_through_ladders() {
        let mut op = FermionPolynomial::new(3);
        op.add_product(0.7, &[Ladder::create(0), Ladder::annihilate(2)]).unwrap();
        op.add_product(0.7, &[Ladder::create(2), Ladder::annihilate(0)]).unwrap();
        op.add_product(-0.3, &[Ladder::create(0), Ladder::create(1), Ladder::annihilate(0), Ladder::annihilate(1)])
            .unwrap();
        let m = to_majorana(&op).unwrap();
        assert_eq!(m.to_fermion().unwrap(), op);
        assert_eq!(m.jordan_wigner().unwrap(), jordan_wigner(&op).unwrap());
    }

    #[test]
    fn canonicalize_signs() {
        assert_eq!(canonicalize(&[1, 0]), (-1.0, vec![0, 1]));
        assert_eq!(canonicalize(&[2, 0, 2]), (-1.0, vec![0]));
        assert_eq!(canonicalize(&[3, 1, 2, 0]), (-1.0, vec![0, 1, 2, 3]));
    }
}
