//! Factorization toolkit for planar anisotropic semilinear equations
//! `div(A∇u) = f(u)` with unit-determinant conductivity tensors.
//!
//! A solution is written as `u = T∘ω`, where `ω` is a quasiconformal map
//! agreed with `A` and `T` solves the weighted isotropic problem
//! `ΔT = J f(T)` on a canonical domain.

pub mod atlas;
pub mod coefficient;
pub mod conformal;
pub mod error;
pub mod exact;
pub mod field;
pub mod geometry;
pub mod nonlinearity;
pub mod quadrature;
pub mod solver;
pub mod tensor;
pub mod verify;

pub use coefficient::Coefficient;
pub use error::{Error, Result};
pub use geometry::{DomainDescriptor, Mat2, Rect, Vec2};
pub use quadrature::QuadratureSpec;
pub use tensor::{
    ellipticity_constant, mu_from_tensor, tensor_from_mu, volume_preserving_coefficient,
    ConductivityTensor, DilatationField, DilatationStructure, Sign, StructureTag, TensorEntries,
};
pub use atlas::{MapFamily, PlanarMap};
pub use conformal::{liouville_transplant, ConformalMap};
pub use field::{FnField, ScalarField, SharedField, SpaceTimeField};
pub use nonlinearity::Nonlinearity;
pub use exact::{catalog, keller_osserman_check, ExactSolution, KellerOsserman};
pub use solver::{compose, factorize, pullback_boundary, solve_dirichlet, DiskGridField, Scheme, SolveOptions, SolveStatus};
pub use verify::{convergence_order, strong_residual, GridSpec, ResidualReport};
