//! Exact N-qubit Pauli algebra on a symplectic `(x, z)` bit encoding.
//!
//! [`PauliProduct`] carries a phase `i^k`; [`PauliPolynomial`] is a real combination of
//! phase-free products (the form every Hermitian observable takes), and [`PauliSum`] is
//! the complex intermediate used while building observables.

mod polynomial;
mod product;

pub use polynomial::{PauliPolynomial, PauliSum, PolynomialJson, TermJson, DEDUP_THRESHOLD, HERMITIAN_TOL};
pub use product::{Letter, PauliProduct, MAX_QUBITS};
