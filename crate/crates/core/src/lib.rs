//! Desk-scale simulation of the quantum Rabi model (QRM) as realised with a
//! single trapped ion driven on its red and blue motional sidebands.
//!
//! The crate is organised bottom-up:
//!
//! - [`hilbert`]: the truncated qubit ⊗ Fock space, dense operators and states.
//! - [`hamiltonian`]: laboratory drive parameters, the effective QRM parameter
//!   map and every Hamiltonian builder (ion frame, bichromatic, QRM, limits).
//! - [`dynamics`]: propagation of states under static and driven Hamiltonians.
//! - [`spectral`]: ground states, parity analysis and adiabatic preparation.
//! - [`regimes`]: classification of the QRM parameter space.
//!
//! All frequencies are angular (rad/s) and ħ = 1.

pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod linalg;
pub mod regimes;
pub mod spectral;

pub use error::{QrmError, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
