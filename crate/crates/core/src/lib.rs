//! Sparse Pauli dynamics with a variational double bracket flow (vDBF) for
//! ground-state energy estimation of lattice Hamiltonians.
//!
//! The Hamiltonian is rotated in the Heisenberg picture by single Pauli strings drawn
//! from the flow generator `Σᵢ[H, Zᵢ]`, each by the angle that minimizes the reference
//! energy ⟨0|H|0⟩. Small coefficients are clipped after every rotation; the energy and
//! variance they carried are tracked so the result can be corrected and extrapolated.

pub mod analysis;
pub mod error;
pub mod flow;
pub mod models;
pub mod oracle;
pub mod pauli;
pub mod vdbf;

pub use error::{Error, Result};
pub use pauli::{Pauli, PauliString, PauliSum, Phase};
