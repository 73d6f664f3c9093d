//! Boundary-field quantum phase transitions in the transverse-field Ising
//! chain: a noiseless VQE pipeline with the Hamiltonian-variational ansatz,
//! an exact free-fermion solver, and tools to locate and classify the
//! transitions from energy curves.

pub mod analysis;
pub mod ansatz;
pub mod cli;
pub mod error;
pub mod exact;
pub mod fermion;
pub mod linalg;
pub mod model;
pub mod report;
pub mod statevector;
pub mod vqe;

pub use error::{Error, Result};
