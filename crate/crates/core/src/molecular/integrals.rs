use std::io::BufRead;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial-orbital integrals in chemist notation: `two_body(p,q,r,s) = (pq|rs)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MolecularIntegrals {
    pub n_spatial: usize,
    pub n_electrons: usize,
    pub ms2: i32,
    /// Hartree.
    pub nuclear_repulsion: f64,
    pub one_body: DMatrix<f64>,
    two_body: Vec<f64>,
}

impl MolecularIntegrals {
    pub fn zeros(n_spatial: usize, n_electrons: usize) -> Self {
        Self {
            n_spatial,
            n_electrons,
            ms2: 0,
            nuclear_repulsion: 0.0,
            one_body: DMatrix::zeros(n_spatial, n_spatial),
            two_body: vec![0.0; n_spatial.pow(4)],
        }
    }

    pub fn n_modes(&self) -> usize {
        2 * self.n_spatial
    }

    #[inline]
    fn idx(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        let n = self.n_spatial;
        ((p * n + q) * n + r) * n + s
    }

    /// `(pq|rs)`.
    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.two_body[self.idx(p, q, r, s)]
    }

    /// Sets `(pq|rs)` and its seven real-orbital images.
    pub fn set_eri_symmetric(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            let i = self.idx(a, b, c, d);
            self.two_body[i] = v;
        }
    }

    pub fn set_eri(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        let i = self.idx(p, q, r, s);
        self.two_body[i] = v;
    }

    /// The `(pq),(rs)` supermatrix of size `n² × n²`.
    pub fn supermatrix(&self) -> DMatrix<f64> {
        let n = self.n_spatial;
        DMatrix::from_fn(n * n, n * n, |a, b| self.eri(a / n, a % n, b / n, b % n))
    }

    /// Largest violation of the one-body and 8-fold two-body symmetries.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n_spatial;
        let mut worst = (&self.one_body - self.one_body.transpose()).amax();
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.eri(p, q, r, s);
                        for w in [self.eri(q, p, r, s), self.eri(p, q, s, r), self.eri(r, s, p, q)] {
                            worst = worst.max((v - w).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    /// Hartree–Fock reference occupation: the lowest `n_electrons` spin-orbitals.
    pub fn hf_occupation(&self) -> u64 {
        (1u64 << self.n_electrons) - 1
    }

    pub fn from_fcidump<R: BufRead>(reader: R) -> Result<Self> {
        super::fcidump::parse_fcidump(reader)
    }

    pub fn from_fcidump_str(text: &str) -> Result<Self> {
        super::fcidump::parse_fcidump(text.as_bytes())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: IntegralsJson = serde_json::from_str(text)?;
        raw.try_into()
    }

    pub fn to_json(&self) -> IntegralsJson {
        let n = self.n_spatial;
        IntegralsJson {
            n_spatial: n,
            n_electrons: self.n_electrons,
            e_nuc: self.nuclear_repulsion,
            h: (0..n).map(|p| (0..n).map(|q| self.one_body[(p, q)]).collect()).collect(),
            g: (0..n)
                .map(|p| {
                    (0..n).map(|q| (0..n).map(|r| (0..n).map(|s| self.eri(p, q, r, s)).collect()).collect()).collect()
                })
                .collect(),
            convention: Convention::Chemist,
        }
    }

    /// Loads FCIDUMP or JSON, chosen by extension (`.json`) or leading `{`.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        if is_json {
            Self::from_json_str(&text)
        } else {
            Self::from_fcidump_str(&text)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// `g[p][q][r][s] = (pq|rs)`
    Chemist,
    /// `g[p][q][r][s] = ⟨pq|rs⟩ = (pr|qs)`
    Physicist,
}

/// JSON integral layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntegralsJson {
    pub n_spatial: usize,
    pub n_electrons: usize,
    #[serde(default)]
    pub e_nuc: f64,
    pub h: Vec<Vec<f64>>,
    pub g: Vec<Vec<Vec<Vec<f64>>>>,
    pub convention: Convention,
}

impl TryFrom<IntegralsJson> for MolecularIntegrals {
    type Error = Error;

    fn try_from(raw: IntegralsJson) -> Result<Self> {
        let n = raw.n_spatial;
        let bad = |what: &str| Error::Invalid(format!("integral JSON: {what} has wrong shape"));
        if raw.h.len() != n || raw.h.iter().any(|r| r.len() != n) {
            return Err(bad("h"));
        }
        if raw.g.len() != n
            || raw.g.iter().any(|a| a.len() != n || a.iter().any(|b| b.len() != n || b.iter().any(|c| c.len() != n)))
        {
            return Err(bad("g"));
        }
        let mut mi = MolecularIntegrals::zeros(n, raw.n_electrons);
        mi.nuclear_repulsion = raw.e_nuc;
        for p in 0..n {
            for q in 0..n {
                mi.one_body[(p, q)] = raw.h[p][q];
                for r in 0..n {
                    for s in 0..n {
                        let v = raw.g[p][q][r][s];
                        match raw.convention {
                            Convention::Chemist => mi.set_eri(p, q, r, s, v),
                            Convention::Physicist => mi.set_eri(p, r, q, s, v),
                        }
                    }
                }
            }
        }
        if raw.n_electrons > mi.n_modes() {
            return Err(Error::Invalid("more electrons than spin-orbitals".into()));
        }
        Ok(mi)
    }
}
