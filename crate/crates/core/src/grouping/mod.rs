//! Deterministic measurement planning over a Pauli table.
//!
//! A plan is a list of groups of mutually compatible Paulis. Each member carries the
//! fraction of its coefficient (in every observable) assigned to that group, so the
//! share of `c_{n,k}` in group `α` is `fraction · c_{n,k}`.

mod ics;
mod ima;
mod si;
mod variance;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::molecular::ObservableSet;
use crate::pauli::PauliProduct;

pub use ics::{ics_split, IcsOptions};
pub use ima::{ima_refine, ImaOptions};
pub use si::{default_weights, sorted_insertion};
pub use variance::{
    allocation_cost, group_variances, optimal_allocation, plan_cost, proxy_group_costs, CovarianceCache, Ensemble,
    ALLOCATION_FLOOR,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Compat {
    /// Full commutation.
    Fc,
    /// Qubit-wise commutation.
    Qwc,
}

impl Compat {
    pub fn compatible(self, a: &PauliProduct, b: &PauliProduct) -> bool {
        match self {
            Compat::Fc => a.commutes_unchecked(b),
            Compat::Qwc => a.qwc_unchecked(b),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Compat::Fc => "fc",
            Compat::Qwc => "qwc",
        }
    }
}

/// Which proxy cost a plan was optimized against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    Ground,
    Qse,
    Mc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    /// Indices into the observable set's Pauli table.
    pub paulis: Vec<usize>,
    /// Coefficient fraction of each member held by this group.
    pub fractions: Vec<f64>,
    /// Shot allocation `m_α`.
    pub m: f64,
}

impl Group {
    pub fn new(paulis: Vec<usize>) -> Self {
        let fractions = vec![1.0; paulis.len()];
        Self { paulis, fractions, m: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.paulis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paulis.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.paulis.contains(&k)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub cost_mode: Option<CostMode>,
    pub sweeps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementPlan {
    pub method: String,
    pub compat: Compat,
    pub groups: Vec<Group>,
    pub provenance: Provenance,
}

impl MeasurementPlan {
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn allocations(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.m).collect()
    }

    pub fn set_allocations(&mut self, m: &[f64]) {
        for (g, v) in self.groups.iter_mut().zip(m) {
            g.m = *v;
        }
    }

    /// Checks pairwise compatibility, coverage, and share conservation.
    pub fn validate(&self, set: &ObservableSet) -> Result<()> {
        let mut total = vec![0.0; set.n_p()];
        for g in &self.groups {
            if g.paulis.len() != g.fractions.len() {
                return Err(Error::DimensionMismatch(g.paulis.len(), g.fractions.len()));
            }
            for (x, &a) in g.paulis.iter().enumerate() {
                if a >= set.n_p() {
                    return Err(Error::IndexOutOfRange { index: a, len: set.n_p() });
                }
                total[a] += g.fractions[x];
                for &b in &g.paulis[x + 1..] {
                    if !self.compat.compatible(&set.pauli(a), &set.pauli(b)) {
                        return Err(Error::Invalid(format!(
                            "{} and {} are not {}-compatible",
                            set.pauli(a),
                            set.pauli(b),
                            self.compat.name()
                        )));
                    }
                }
            }
        }
        for (k, t) in total.iter().enumerate() {
            if *t == 0.0 {
                return Err(Error::Uncovered(set.pauli(k).label()));
            }
            if (t - 1.0).abs() > 1e-10 {
                return Err(Error::Invalid(format!("shares of {} sum to {t}", set.pauli(k))));
            }
        }
        Ok(())
    }

    pub fn to_json(&self, set: &ObservableSet) -> PlanJson {
        PlanJson {
            method: self.method.clone(),
            compat: self.compat,
            groups: self
                .groups
                .iter()
                .map(|g| GroupJson {
                    paulis: g.paulis.iter().map(|k| set.pauli(*k).label()).collect(),
                    shares: g
                        .paulis
                        .iter()
                        .zip(&g.fractions)
                        .flat_map(|(&k, &f)| {
                            set.members(k).iter().map(move |(n, c)| ShareJson {
                                n: *n as usize,
                                k,
                                c: f * c.re,
                                c_im: f * c.im,
                            })
                        })
                        .collect(),
                    m: g.m,
                })
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Rebuilds a plan; member fractions are recovered from the shares.
    pub fn from_json(raw: &PlanJson, set: &ObservableSet) -> Result<Self> {
        let mut groups = Vec::with_capacity(raw.groups.len());
        for g in &raw.groups {
            let mut paulis = Vec::with_capacity(g.paulis.len());
            let mut fractions = Vec::with_capacity(g.paulis.len());
            for label in &g.paulis {
                let p = PauliProduct::parse(label, set.n_qubits())?;
                let k = set.index_of(&p).ok_or_else(|| Error::Uncovered(label.clone()))?;
                let (n, c) = set.members(k)[0];
                let share = g
                    .shares
                    .iter()
                    .find(|s| s.k == k && s.n == n as usize)
                    .map(|s| Complex64::new(s.c, s.c_im))
                    .ok_or_else(|| Error::Invalid(format!("missing share for {label}")))?;
                paulis.push(k);
                fractions.push((share / c).re);
            }
            groups.push(Group { paulis, fractions, m: g.m });
        }
        Ok(Self { method: raw.method.clone(), compat: raw.compat, groups, provenance: raw.provenance.clone() })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShareJson {
    pub n: usize,
    pub k: usize,
    pub c: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub c_im: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupJson {
    pub paulis: Vec<String>,
    pub shares: Vec<ShareJson>,
    pub m: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanJson {
    pub method: String,
    pub compat: Compat,
    pub groups: Vec<GroupJson>,
    pub provenance: Provenance,
}
