//! Measurement planning and required-shot metrics for excited-state variational
//! algorithms (quantum subspace expansion and multi-state contraction).

pub mod error;
pub mod fermion;
pub mod fragments;
pub mod grouping;
pub mod metrics;
pub mod molecular;
pub mod pauli;
pub mod shadows;
pub mod state;

pub use error::{Error, Result};
