//! Electronic structure of the H3+ triangle in a minimal basis, solved on a
//! three-qubit register by a variance-driven contracted eigensolver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cqe;
pub mod diabatic;
pub mod error;
pub mod fci;
pub mod geometry;
pub mod hamiltonian;
pub mod integrals;
pub mod mex;
pub mod scalar;
pub mod scf;
pub mod simulator;
pub mod solver;
pub mod surfaces;

pub use error::{Error, Result};
pub use geometry::{Coordinate, MolecularGeometry, Symmetry};
pub use scalar::Real;

pub type Geometry = MolecularGeometry<f64>;
pub type Integrals = integrals::IntegralSet<f64>;
pub type Scf = scf::ScfResult<f64>;
pub type Hamiltonian = hamiltonian::MolecularHamiltonian<f64>;
