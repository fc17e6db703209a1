//! Molecular integrals, electronic Hamiltonians and QSE observables.

mod fcidump;
mod hamiltonian;
mod integrals;
mod observables;

pub use fcidump::{parse_fcidump, write_fcidump};
pub use hamiltonian::{
    build_cis_operators, build_electronic_hamiltonian, build_molecular_hamiltonian, cis_dimension, effective_one_body,
    spin_orbital,
};
pub use integrals::{Convention, IntegralsJson, MolecularIntegrals};
pub use observables::{build_qse_observables, qse_labels, ObservableKind, ObservableLabel, ObservableSet, QseForm};
