use std::collections::BTreeMap;
use std::ops::{AddAssign, Mul, Neg};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::DEDUP_THRESHOLD;

/// A creation (`dagger = true`) or annihilation operator on one mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ladder {
    pub mode: u16,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Self { mode: mode as u16, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        Self { mode: mode as u16, dagger: false }
    }

    /// Canonical position: creators first, then ascending mode.
    fn rank(self) -> (u8, u16) {
        (if self.dagger { 0 } else { 1 }, self.mode)
    }
}

pub(crate) trait Coeff:
    Copy + AddAssign + Mul<Output = Self> + Neg<Output = Self> + From<f64> + PartialEq
{
    fn magnitude(self) -> f64;
}

impl Coeff for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Coeff for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Rewrites `coeff · ops` in normal order and accumulates the resulting terms into `out`.
///
/// Adjacent swaps of like operators cost a sign (and vanish on equal modes);
/// `a_p a†_q = δ_pq − a†_q a_p` produces the contraction term.
pub(crate) fn normal_order_into<T: Coeff>(ops: Vec<Ladder>, coeff: T, out: &mut BTreeMap<Vec<Ladder>, T>) {
    let mut stack = vec![(ops, coeff)];
    while let Some((mut ops, c)) = stack.pop() {
        let pos = ops.windows(2).position(|w| {
            let (a, b) = (w[0], w[1]);
            a.rank() > b.rank() || (a.dagger == b.dagger && a.mode == b.mode)
        });
        match pos {
            None => {
                *out.entry(ops).or_insert_with(|| T::from(0.0)) += c;
            }
            Some(i) => {
                let (a, b) = (ops[i], ops[i + 1]);
                if a.dagger == b.dagger {
                    if a.mode == b.mode {
                        continue;
                    }
                    ops.swap(i, i + 1);
                    stack.push((ops, -c));
                } else {
                    if a.mode == b.mode {
                        let mut contracted = ops.clone();
                        contracted.drain(i..i + 2);
                        stack.push((contracted, c));
                    }
                    ops.swap(i, i + 1);
                    stack.push((ops, -c));
                }
            }
        }
    }
}

fn prune<T: Coeff>(terms: &mut BTreeMap<Vec<Ladder>, T>) {
    terms.retain(|_, c| c.magnitude() >= DEDUP_THRESHOLD);
}

/// Real linear combination of normal-ordered products of ladder operators.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionPolynomial {
    n_modes: usize,
    terms: BTreeMap<Vec<Ladder>, f64>,
}

impl FermionPolynomial {
    pub fn new(n_modes: usize) -> Self {
        Self { n_modes, terms: BTreeMap::new() }
    }

    pub fn identity(n_modes: usize) -> Self {
        let mut p = Self::new(n_modes);
        p.terms.insert(Vec::new(), 1.0);
        p
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Adds `coeff · ops[0] ops[1] …` after normal ordering.
    pub fn add_product(&mut self, coeff: f64, ops: &[Ladder]) -> Result<()> {
        for op in ops {
            if op.mode as usize >= self.n_modes {
                return Err(Error::IndexOutOfRange { index: op.mode as usize, len: self.n_modes });
            }
        }
        normal_order_into(ops.to_vec(), coeff, &mut self.terms);
        prune(&mut self.terms);
        Ok(())
    }

    /// Sum of `coeff · ops` products, normal-ordered and merged once at the end.
    pub fn from_products(n_modes: usize, products: impl IntoIterator<Item = (Vec<Ladder>, f64)>) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (ops, c) in products {
            if let Some(op) = ops.iter().find(|o| o.mode as usize >= n_modes) {
                return Err(Error::IndexOutOfRange { index: op.mode as usize, len: n_modes });
            }
            normal_order_into(ops, c, &mut terms);
        }
        prune(&mut terms);
        Ok(Self { n_modes, terms })
    }

    /// One-electron excitation operator `a†_p a_q`.
    pub fn excitation(n_modes: usize, p: usize, q: usize) -> Result<Self> {
        let mut out = Self::new(n_modes);
        out.add_product(1.0, &[Ladder::create(p), Ladder::annihilate(q)])?;
        Ok(out)
    }

    pub fn number(n_modes: usize, p: usize) -> Result<Self> {
        Self::excitation(n_modes, p, p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<Ladder>, &f64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, ops: &[Ladder]) -> f64 {
        self.terms.get(ops).copied().unwrap_or(0.0)
    }

    pub fn constant(&self) -> f64 {
        self.coefficient(&[])
    }

    pub fn add(&mut self, scale: f64, other: &Self) -> Result<()> {
        if self.n_modes != other.n_modes {
            return Err(Error::ModeMismatch(self.n_modes, other.n_modes));
        }
        for (k, c) in &other.terms {
            *self.terms.entry(k.clone()).or_insert(0.0) += scale * c;
        }
        prune(&mut self.terms);
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        prune(&mut out.terms);
        out
    }

    /// Normal-ordered product `self · other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.n_modes != other.n_modes {
            return Err(Error::ModeMismatch(self.n_modes, other.n_modes));
        }
        let mut terms = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let mut ops = a.clone();
                ops.extend_from_slice(b);
                normal_order_into(ops, ca * cb, &mut terms);
            }
        }
        prune(&mut terms);
        Ok(Self { n_modes: self.n_modes, terms })
    }

    pub fn adjoint(&self) -> Self {
        let mut terms = BTreeMap::new();
        for (ops, c) in &self.terms {
            let rev: Vec<Ladder> = ops.iter().rev().map(|o| Ladder { mode: o.mode, dagger: !o.dagger }).collect();
            normal_order_into(rev, *c, &mut terms);
        }
        prune(&mut terms);
        Self { n_modes: self.n_modes, terms }
    }

    /// Largest coefficient of `self − self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut diff = self.clone();
        diff.add(-1.0, &self.adjoint()).expect("same modes");
        diff.terms.values().map(|c| c.abs()).fold(0.0, f64::max)
    }

    /// Largest number of ladder operators in any term.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub(crate) fn from_complex(n_modes: usize, terms: BTreeMap<Vec<Ladder>, Complex64>) -> Result<Self> {
        let mut out = Self::new(n_modes);
        for (k, c) in terms {
            if c.im.abs() > crate::pauli::HERMITIAN_TOL {
                return Err(Error::NonHermitian(c.im.abs()));
            }
            if c.re.abs() >= DEDUP_THRESHOLD {
                out.terms.insert(k, c.re);
            }
        }
        Ok(out)
    }
}
