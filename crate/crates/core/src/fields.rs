//! Discrete fields on a uniform box grid with Dirichlet boundary layer.

pub mod boundary;
pub mod energy;
pub mod field;
pub mod grid;
pub mod io;

pub use boundary::{boundary_hedgehog, boundary_near_constant, TiltPattern};
pub use energy::{dirichlet_integral, energy_harmonic, energy_ldg, norms, FieldNorms, LdgEnergy};
pub use field::{Field, FieldValue, MatField, ScalarField, SymField, TensorField};
pub use grid::GridSpec;
