use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::product::PauliProduct;
use crate::error::{Error, Result};

/// Coefficients with magnitude below this are dropped on merge.
pub const DEDUP_THRESHOLD: f64 = 1e-12;
/// Largest imaginary residual tolerated when folding into a real polynomial.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Real linear combination of phase-free Pauli products.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliPolynomial {
    n_qubits: usize,
    terms: BTreeMap<PauliProduct, f64>,
}

impl PauliPolynomial {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, terms: BTreeMap::new() }
    }

    pub fn constant(n_qubits: usize, value: f64) -> Self {
        let mut p = Self::new(n_qubits);
        p.add_term(value, PauliProduct::identity(n_qubits));
        p
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Adds `coeff · term`, folding the term's phase into the coefficient.
    ///
    /// A phase of `±i` leaves an imaginary coefficient, which a Hermitian polynomial
    /// cannot hold; that is an error unless the product is below [`HERMITIAN_TOL`].
    pub fn add_scaled(&mut self, coeff: f64, term: &PauliProduct) -> Result<()> {
        if term.n_qubits() != self.n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits, term.n_qubits()));
        }
        let folded = match term.phase() {
            0 => coeff,
            2 => -coeff,
            _ => {
                if coeff.abs() > HERMITIAN_TOL {
                    return Err(Error::NonHermitian(coeff.abs()));
                }
                return Ok(());
            }
        };
        self.add_term(folded, term.without_phase());
        Ok(())
    }

    /// Functional form of [`add_scaled`](Self::add_scaled).
    pub fn with_scaled(mut self, coeff: f64, term: &PauliProduct) -> Result<Self> {
        self.add_scaled(coeff, term)?;
        Ok(self)
    }

    pub(crate) fn add_term(&mut self, coeff: f64, key: PauliProduct) {
        debug_assert_eq!(key.phase(), 0);
        let e = self.terms.entry(key).or_insert(0.0);
        *e += coeff;
        if e.abs() < DEDUP_THRESHOLD {
            self.terms.remove(&key);
        }
    }

    pub fn add_polynomial(&mut self, scale: f64, other: &PauliPolynomial) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits, other.n_qubits));
        }
        for (k, c) in &other.terms {
            self.add_term(scale * c, *k);
        }
        Ok(())
    }

    pub fn coefficient(&self, p: &PauliProduct) -> f64 {
        self.terms.get(&p.without_phase()).copied().unwrap_or(0.0)
    }

    pub fn identity_coefficient(&self) -> f64 {
        self.coefficient(&PauliProduct::identity(self.n_qubits))
    }

    /// Terms in canonical order (identity first when present).
    pub fn iter(&self) -> impl Iterator<Item = (&PauliProduct, &f64)> {
        self.terms.iter()
    }

    /// Terms other than the identity.
    pub fn non_identity(&self) -> impl Iterator<Item = (&PauliProduct, &f64)> {
        self.terms.iter().filter(|(p, _)| !p.is_identity())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of non-identity Pauli products.
    pub fn n_paulis(&self) -> usize {
        self.non_identity().count()
    }

    pub fn to_sum(&self) -> PauliSum {
        let mut s = PauliSum::new(self.n_qubits);
        for (k, c) in &self.terms {
            s.add(Complex64::new(*c, 0.0), *k);
        }
        s
    }

    /// Builds from `(text, coeff)` pairs; see [`PauliProduct::parse`].
    pub fn from_labels(n_qubits: usize, terms: &[(&str, f64)]) -> Result<Self> {
        let mut p = Self::new(n_qubits);
        for (label, c) in terms {
            p.add_scaled(*c, &PauliProduct::parse(label, n_qubits)?)?;
        }
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PolynomialJson::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: PolynomialJson = serde_json::from_str(text)?;
        raw.try_into()
    }
}

/// `{term, coeff}` record of the JSON form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermJson {
    pub term: String,
    pub coeff: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub n_qubits: usize,
    pub terms: Vec<TermJson>,
}

impl From<&PauliPolynomial> for PolynomialJson {
    fn from(p: &PauliPolynomial) -> Self {
        Self { n_qubits: p.n_qubits, terms: p.iter().map(|(k, c)| TermJson { term: k.label(), coeff: *c }).collect() }
    }
}

impl TryFrom<PolynomialJson> for PauliPolynomial {
    type Error = Error;

    fn try_from(raw: PolynomialJson) -> Result<Self> {
        let mut p = PauliPolynomial::new(raw.n_qubits);
        for t in raw.terms {
            let key = PauliProduct::parse(&t.term, raw.n_qubits)?;
            if p.terms.insert(key, t.coeff).is_some() {
                return Err(Error::Invalid(format!("duplicate term {}", t.term)));
            }
        }
        Ok(p)
    }
}

impl Serialize for PauliPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PauliPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolynomialJson::deserialize(d)?;
        raw.try_into().map_err(serde::de::Error::custom)
    }
}

/// Complex linear combination of Pauli products, used for intermediate algebra
/// (fermion encodings, operator products) before Hermitization.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliProduct, Complex64>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, terms: BTreeMap::new() }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::scalar(n_qubits, Complex64::new(1.0, 0.0))
    }

    pub fn scalar(n_qubits: usize, c: Complex64) -> Self {
        let mut s = Self::new(n_qubits);
        s.add(c, PauliProduct::identity(n_qubits));
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Adds `c · p`, folding the phase of `p`.
    pub fn add(&mut self, c: Complex64, p: PauliProduct) {
        let c = c * p.phase_factor();
        let key = p.without_phase();
        let e = self.terms.entry(key).or_insert(Complex64::new(0.0, 0.0));
        *e += c;
        if e.norm() < DEDUP_THRESHOLD {
            self.terms.remove(&key);
        }
    }

    pub fn add_sum(&mut self, scale: Complex64, other: &PauliSum) {
        for (k, c) in &other.terms {
            self.add(scale * c, *k);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliProduct, &Complex64)> {
        self.terms.iter()
    }

    pub fn non_identity(&self) -> impl Iterator<Item = (&PauliProduct, &Complex64)> {
        self.terms.iter().filter(|(p, _)| !p.is_identity())
    }

    pub fn coefficient(&self, p: &PauliProduct) -> Complex64 {
        self.terms.get(&p.without_phase()).copied().unwrap_or_default()
    }

    pub fn identity_coefficient(&self) -> Complex64 {
        self.coefficient(&PauliProduct::identity(self.n_qubits))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of non-identity Pauli products.
    pub fn n_paulis(&self) -> usize {
        self.non_identity().count()
    }

    /// `(X − X†)/(2i)`: the imaginary coefficient parts as a real polynomial.
    pub fn antihermitian_part(&self) -> PauliPolynomial {
        let mut p = PauliPolynomial::new(self.n_qubits);
        for (k, c) in &self.terms {
            p.add_term(c.im, *k);
        }
        p
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut s = Self::new(self.n_qubits);
        for (k, v) in &self.terms {
            s.add(c * v, *k);
        }
        s
    }

    pub fn multiply(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits, other.n_qubits));
        }
        let mut acc: BTreeMap<PauliProduct, Complex64> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let p = a.mul_unchecked(b);
                *acc.entry(p.without_phase()).or_insert(Complex64::new(0.0, 0.0)) += ca * cb * p.phase_factor();
            }
        }
        acc.retain(|_, c| c.norm() >= DEDUP_THRESHOLD);
        Ok(PauliSum { n_qubits: self.n_qubits, terms: acc })
    }

    pub fn adjoint(&self) -> Self {
        Self { n_qubits: self.n_qubits, terms: self.terms.iter().map(|(k, c)| (*k, c.conj())).collect() }
    }

    /// `(X + X†)/2`; with phase-free Hermitian keys this keeps the real parts.
    pub fn hermitian_part(&self) -> PauliPolynomial {
        let mut p = PauliPolynomial::new(self.n_qubits);
        for (k, c) in &self.terms {
            p.add_term(c.re, *k);
        }
        p
    }

    /// Largest imaginary coefficient magnitude.
    pub fn max_imaginary(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    /// Real polynomial, or an error if any imaginary part exceeds [`HERMITIAN_TOL`].
    pub fn into_hermitian(self) -> Result<PauliPolynomial> {
        let im = self.max_imaginary();
        if im > HERMITIAN_TOL {
            return Err(Error::NonHermitian(im));
        }
        Ok(self.hermitian_part())
    }
}
