//! Dirichlet problems `ΔT = J f(T)` on disks and the factorization
//! pipeline `u = T∘ω`.

mod dirichlet;
mod grid;
mod pipeline;

pub use dirichlet::{solve_dirichlet, Scheme, SolveOptions, SolveOutcome};
pub use grid::{DiskGridField, GridHeader, SolveStatus};
pub use pipeline::{compose, factorize, pullback_boundary, ComposedField, Factorization};
