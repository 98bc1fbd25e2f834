//! ClusterVQE laboratory.
//!
//! Exact Pauli algebra, a dense statevector simulator, Jordan–Wigner
//! front end for FCIDUMP integrals, mutual-information clustering, and four
//! variational engines (VQE, qubit-ADAPT-VQE, iQCC, ClusterVQE).

pub mod engines;
pub mod entanglement;
pub mod error;
pub mod fermion;
pub mod partition;
pub mod pauli;
pub mod statevec;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use pauli::{Letter, PauliSum, PauliWord};
pub use statevec::StateVector;
