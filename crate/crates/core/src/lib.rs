//! Grassmann phase-space methods for the Jaynes-Cummings model.

pub mod fermion_fock;
pub mod grassmann;
pub mod jc_reference;
pub mod observables;
pub mod phase_space;
pub mod solvers;

pub use num_complex::Complex64 as C64;
pub use observables::Observables;
