use num_complex::Complex64;
use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("invalid tensor at {at}: {reason}")]
    InvalidTensor { at: Complex64, reason: String },

    #[error("degenerate dilatation: |mu| = {modulus} >= 1")]
    DegenerateDilatation { modulus: f64 },

    #[error("point {at} is outside the domain ({domain})")]
    OutsideDomain { at: Complex64, domain: String },

    #[error("point {at} is within {margin} of the boundary or a singularity")]
    TooCloseToBoundary { at: Complex64, margin: f64 },

    #[error("quadrature did not converge: estimated error {error_estimate:e} after {subdivisions} subdivisions")]
    QuadratureFailure {
        error_estimate: f64,
        subdivisions: usize,
    },

    #[error("degenerate derivative at {at}: |omega_z| = {modulus:e}")]
    DegenerateDerivative { at: Complex64, modulus: f64 },

    #[error("inverse map unavailable for the {0} family")]
    InverseUnavailable(String),

    #[error("unsupported dilatation structure: {0}")]
    UnsupportedStructure(String),

    #[error("map does not agree with the tensor at {at}: |mu_map - mu_tensor| = {mismatch:e}")]
    AgreementFailure { at: Complex64, mismatch: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("evaluation failed at {at}: {reason}")]
    Evaluation { at: Complex64, reason: String },

    #[error("iteration diverged after {iterations} iterations (residual {residual:e})")]
    Diverged { iterations: usize, residual: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("stream function loop defect {defect:e} exceeds {threshold:e}")]
    LoopDefect { defect: f64, threshold: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(format!("{what} = {value}")))
    }
}
