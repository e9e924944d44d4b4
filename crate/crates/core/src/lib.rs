//! Numerical laboratory for the random Landau Hamiltonian on a magnetic lattice.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod inertia;
pub mod measures;
pub mod model;
pub mod quadrature;
pub mod spectral;
pub mod stats;
pub mod topology;
pub mod verdict;
pub mod wegner;

pub use error::{LabError, Result};
