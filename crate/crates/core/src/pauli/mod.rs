//! Symplectic Pauli strings and sparse Pauli sums.

mod string;
mod sum;

pub use string::{Pauli, PauliString, Phase, MAX_QUBITS, WORDS};
pub use sum::{ClipReport, PauliSum, HERMITIAN_TOL};

pub(crate) use sum::variance_from_amplitudes;
