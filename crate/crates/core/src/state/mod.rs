//! Exact and proxy wavefunctions, and expectation values over them.

mod eigen;
mod rotation;
mod table;
mod wave;

pub use eigen::{
    cisd_occupations, cisd_states, lowest_eigenstates, occupations_with_weight, SubspaceMatrix, DENSE_LIMIT, KRYLOV_TOL,
};
pub use rotation::{apply_exponential, apply_one_body_rotation, one_body_generator};
pub use table::{walsh_hadamard, PauliExpectations, TABLE_MAX_QUBITS};
pub(crate) use wave::inner;
pub use wave::{
    apply_polynomial, apply_sum, ensemble_variance, expectation, pauli_expectation, uniform_weights, variance,
    WaveVector, VARIANCE_TOL,
};

/// Exact states, their CISD proxies, and the ensemble weights over them.
#[derive(Clone, Debug)]
pub struct StateBundle {
    pub exact: Vec<WaveVector>,
    pub proxy: Vec<WaveVector>,
    pub weights: Vec<f64>,
}

impl StateBundle {
    pub fn new(exact: Vec<WaveVector>, proxy: Vec<WaveVector>) -> Self {
        let weights = uniform_weights(exact.len());
        Self { exact, proxy, weights }
    }

    pub fn n_states(&self) -> usize {
        self.exact.len()
    }
}
