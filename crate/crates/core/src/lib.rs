//! Landau-de Gennes Q-tensor minimization, its harmonic-map limit, and the
//! first-order asymptotics connecting the two.

pub mod asymptotics;
pub mod bulk;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod geometry;
pub mod params;
pub mod reduce;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use experiment::{BoundarySpec, ExperimentConfig};
pub use fields::{GridSpec, TensorField};
pub use params::MaterialParams;
pub use solver::{solve_harmonic, solve_ldg, SolveConfig, SolveResult, StopReason};
pub use tensor::{Mat3, QTensor, SymMatrix, Vec3};
