//! Numerical verification: residuals of the anisotropic, transplanted and
//! parabolic equations on uniform grids, weak-form checks against test
//! bumps, stream-function reconstruction and convergence orders.
//!
//! Point evaluations run in parallel; reports are assembled in grid-index
//! order so norms, argmax ties and dumps are reproducible.

mod grid;
mod report;
mod residual;
mod stream;
mod weak;

pub use grid::{GridSpec, SamplePoint, SingularSet};
pub use report::{convergence_order, OrderEstimate, ResidualReport, ResidualSample, WorstPoint};
pub use residual::{heat_residual, laplace_residual, strong_residual, HEAT_MIN_TIME};
pub use stream::{stream_function, LoopDefect, StreamFunction, LOOP_DEFECT_THRESHOLD};
pub use weak::{
    factorization_identity_check, weak_residual, IdentityDefect, TestBump, WeakResidual,
    AGREEMENT_TOLERANCE,
};
