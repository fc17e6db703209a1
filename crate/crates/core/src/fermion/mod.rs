//! Second-quantized operators, their Majorana form, and fermion-to-qubit encodings.
//!
//! Spin-orbitals are interleaved: spatial orbital `i` owns modes `2i` (alpha) and
//! `2i + 1` (beta).

mod encoding;
mod majorana;
mod polynomial;

pub use encoding::{bravyi_kitaev, jordan_wigner, Mapping};
pub use majorana::{majorana_pauli, to_majorana, MajoranaPolynomial};
pub use polynomial::{FermionPolynomial, Ladder};
