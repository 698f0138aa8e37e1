//! Scalar fields on the plane and in space-time.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Step for central-difference gradients of fields without an analytic one.
pub const GRADIENT_STEP: f64 = 1e-6;

/// An evaluable real field `u(z)`.
pub trait ScalarField: Send + Sync {
    fn eval(&self, z: Complex64) -> Result<f64>;

    /// Analytic gradient, when known.
    fn analytic_gradient(&self, _z: Complex64) -> Option<Result<Vec2>> {
        None
    }

    /// Gradient: analytic if available, else central differences.
    fn gradient(&self, z: Complex64) -> Result<Vec2> {
        if let Some(g) = self.analytic_gradient(z) {
            return g;
        }
        let h = GRADIENT_STEP;
        let dx = Complex64::new(h, 0.0);
        let dy = Complex64::new(0.0, h);
        Ok([
            (self.eval(z + dx)? - self.eval(z - dx)?) / (2.0 * h),
            (self.eval(z + dy)? - self.eval(z - dy)?) / (2.0 * h),
        ])
    }

    fn label(&self) -> String {
        "field".into()
    }
}

pub type SharedField = Arc<dyn ScalarField>;

type EvalFn = dyn Fn(Complex64) -> Result<f64> + Send + Sync;
type GradFn = dyn Fn(Complex64) -> Result<Vec2> + Send + Sync;

/// A field built from closures.
#[derive(Clone)]
pub struct FnField {
    eval: Arc<EvalFn>,
    grad: Option<Arc<GradFn>>,
    label: String,
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnField({})", self.label)
    }
}

impl FnField {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(Complex64) -> Result<f64> + Send + Sync + 'static,
    {
        FnField { eval: Arc::new(f), grad: None, label: label.into() }
    }

    /// Infallible closure; non-finite values become [`Error::Evaluation`].
    pub fn total<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(Complex64) -> f64 + Send + Sync + 'static,
    {
        Self::new(label, move |z| {
            let v = f(z);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Evaluation { at: z, reason: format!("value {v}") })
            }
        })
    }

    pub fn with_gradient<G>(mut self, g: G) -> Self
    where
        G: Fn(Complex64) -> Result<Vec2> + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn constant(value: f64) -> Self {
        Self::new(format!("const({value})"), move |_| Ok(value)).with_gradient(|_| Ok([0.0, 0.0]))
    }

    pub fn into_shared(self) -> SharedField {
        Arc::new(self)
    }
}

impl ScalarField for FnField {
    fn eval(&self, z: Complex64) -> Result<f64> {
        (self.eval)(z)
    }

    fn analytic_gradient(&self, z: Complex64) -> Option<Result<Vec2>> {
        self.grad.as_ref().map(|g| g(z))
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// An evaluable field `u(z, t)`.
pub trait SpaceTimeField: Send + Sync {
    fn eval(&self, z: Complex64, t: f64) -> Result<f64>;

    fn label(&self) -> String {
        "space-time field".into()
    }
}

type StFn = dyn Fn(Complex64, f64) -> Result<f64> + Send + Sync;

#[derive(Clone)]
pub struct FnSpaceTimeField {
    eval: Arc<StFn>,
    label: String,
}

impl FnSpaceTimeField {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(Complex64, f64) -> Result<f64> + Send + Sync + 'static,
    {
        FnSpaceTimeField { eval: Arc::new(f), label: label.into() }
    }
}

impl SpaceTimeField for FnSpaceTimeField {
    fn eval(&self, z: Complex64, t: f64) -> Result<f64> {
        (self.eval)(z, t)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_difference_gradient_of_quadratic() {
        let u = FnField::total("x2y", |z| z.re * z.re + 3.0 * z.im);
        let g = u.gradient(Complex64::new(0.5, -1.0)).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn analytic_gradient_preferred() {
        let u = FnField::total("x", |z| z.re).with_gradient(|_| Ok([42.0, 0.0]));
        assert_eq!(u.gradient(Complex64::new(0.0, 0.0)).unwrap(), [42.0, 0.0]);
    }

    #[test]
    fn non_finite_values_are_errors() {
        let u = FnField::total("log", |z| z.re.ln());
        assert!(u.eval(Complex64::new(-1.0, 0.0)).is_err());
    }
}
