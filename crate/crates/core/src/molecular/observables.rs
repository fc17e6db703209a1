use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{FermionPolynomial, Mapping};
use crate::pauli::{PauliPolynomial, PauliProduct, PauliSum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableKind {
    /// The bare Hamiltonian (ground-state and ensemble tasks).
    Hamiltonian,
    /// `O_I† H O_J`.
    HamiltonianDressed,
    /// `O_I† O_J`.
    Overlap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservableLabel {
    pub i: usize,
    pub j: usize,
    pub kind: ObservableKind,
}

/// How each `I ≤ J` matrix-element operator is turned into an observable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QseForm {
    /// The full operator with complex Pauli coefficients; its real and imaginary
    /// parts are estimated from the same outcomes.
    #[default]
    Complex,
    /// Only `(X + X†)/2`, with real coefficients.
    Hermitian,
}

/// Observables `A_n = Σ_k c_{n,k} P_k` with an inverted index from each non-identity
/// Pauli `P_k` to the observables containing it. Coefficients may be complex.
#[derive(Clone, Debug)]
pub struct ObservableSet {
    n_qubits: usize,
    observables: Vec<PauliSum>,
    labels: Vec<ObservableLabel>,
    paulis: Vec<PauliProduct>,
    members: Vec<Vec<(u32, Complex64)>>,
    lookup: HashMap<PauliProduct, usize>,
}

impl ObservableSet {
    pub fn new(observables: Vec<PauliSum>, labels: Vec<ObservableLabel>) -> Result<Self> {
        if observables.len() != labels.len() {
            return Err(Error::DimensionMismatch(observables.len(), labels.len()));
        }
        let n_qubits = observables.first().map_or(0, PauliSum::n_qubits);
        let mut index: BTreeMap<PauliProduct, Vec<(u32, Complex64)>> = BTreeMap::new();
        for (n, obs) in observables.iter().enumerate() {
            if obs.n_qubits() != n_qubits {
                return Err(Error::QubitMismatch(n_qubits, obs.n_qubits()));
            }
            for (p, c) in obs.non_identity() {
                index.entry(*p).or_default().push((n as u32, *c));
            }
        }
        let (paulis, members): (Vec<_>, Vec<_>) = index.into_iter().unzip();
        let lookup = paulis.iter().enumerate().map(|(k, p)| (*p, k)).collect();
        Ok(Self { n_qubits, observables, labels, paulis, members, lookup })
    }

    /// Single-observable set holding a Hamiltonian.
    pub fn single(h: &PauliPolynomial) -> Self {
        let label = ObservableLabel { i: 0, j: 0, kind: ObservableKind::Hamiltonian };
        Self::new(vec![h.to_sum()], vec![label]).expect("one observable")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// `N_op`.
    pub fn n_op(&self) -> usize {
        self.observables.len()
    }

    /// `N_P`: distinct non-identity Pauli products.
    pub fn n_p(&self) -> usize {
        self.paulis.len()
    }

    pub fn observables(&self) -> &[PauliSum] {
        &self.observables
    }

    pub fn observable(&self, n: usize) -> &PauliSum {
        &self.observables[n]
    }

    pub fn labels(&self) -> &[ObservableLabel] {
        &self.labels
    }

    /// Non-identity Paulis in canonical order; position is the Pauli index `k`.
    pub fn paulis(&self) -> &[PauliProduct] {
        &self.paulis
    }

    pub fn pauli(&self, k: usize) -> PauliProduct {
        self.paulis[k]
    }

    /// `(n, c_{n,k})` for every observable containing Pauli `k`.
    pub fn members(&self, k: usize) -> &[(u32, Complex64)] {
        &self.members[k]
    }

    pub fn index_of(&self, p: &PauliProduct) -> Option<usize> {
        self.lookup.get(&p.without_phase()).copied()
    }

    /// `Σ_n |c_{n,k}|`.
    pub fn total_weight(&self, k: usize) -> f64 {
        self.members[k].iter().map(|(_, c)| c.norm()).sum()
    }

    /// True when every coefficient is real.
    pub fn is_real(&self) -> bool {
        self.members.iter().flatten().all(|(_, c)| c.im == 0.0)
            && self.observables.iter().all(|o| o.identity_coefficient().im == 0.0)
    }

    /// Rebuilds observable `n` from the inverted index plus its identity coefficient.
    pub fn reconstruct(&self, n: usize) -> PauliSum {
        let mut out = PauliSum::scalar(self.n_qubits, self.observables[n].identity_coefficient());
        for (k, m) in self.members.iter().enumerate() {
            for &(i, c) in m {
                if i as usize == n {
                    out.add(c, self.paulis[k]);
                }
            }
        }
        out
    }
}

/// Labels in construction order: for each `I ≤ J`, the dressed then the overlap observable.
pub fn qse_labels(d: usize) -> Vec<ObservableLabel> {
    let mut out = Vec::with_capacity(d * (d + 1));
    for i in 0..d {
        for j in i..d {
            out.push(ObservableLabel { i, j, kind: ObservableKind::HamiltonianDressed });
            out.push(ObservableLabel { i, j, kind: ObservableKind::Overlap });
        }
    }
    out
}

/// `O_I† H O_J` and `O_I† O_J` for `I ≤ J`, mapped to qubits.
pub fn build_qse_observables(
    h: &FermionPolynomial,
    ops: &[FermionPolynomial],
    mapping: Mapping,
    form: QseForm,
) -> Result<ObservableSet> {
    let n = h.n_modes();
    if let Some(o) = ops.iter().find(|o| o.n_modes() != n) {
        return Err(Error::ModeMismatch(n, o.n_modes()));
    }
    let h_img = mapping.encode_sum(h);
    let images: Vec<PauliSum> = ops.iter().map(|o| mapping.encode_sum(o)).collect();
    let finish = |x: PauliSum| match form {
        QseForm::Complex => x,
        QseForm::Hermitian => x.hermitian_part().to_sum(),
    };
    let mut observables = Vec::with_capacity(ops.len() * (ops.len() + 1));
    for (i, oi) in images.iter().enumerate() {
        let oi_dag = oi.adjoint();
        let left = oi_dag.multiply(&h_img)?;
        for oj in &images[i..] {
            observables.push(finish(left.multiply(oj)?));
            observables.push(finish(oi_dag.multiply(oj)?));
        }
    }
    ObservableSet::new(observables, qse_labels(ops.len()))
}
