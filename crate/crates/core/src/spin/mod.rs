//! Spin operator algebra, tensor products and the dense Hermitian
//! eigensolver.

mod basis;
mod eigen;
mod matrix;
mod operators;

pub use basis::{BasisFactor, FactorKind, ProductBasis};
pub use eigen::{hermitian_eig, Eigensystem, MAX_DIM, MAX_SWEEPS};
pub use matrix::{embed, kron_compose, ComplexMatrix};
pub use operators::{spin_operators, Spin, SpinOperatorSet};
