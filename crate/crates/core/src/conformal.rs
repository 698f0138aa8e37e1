//! Conformal maps onto the unit disk and the Liouville transplant
//! `u = log(8|F'|² / (1 − |F|²)²)`, which turns any such map into a
//! solution of `Δu = e^u`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::DomainDescriptor;

/// Step for the complex central difference of user-supplied maps.
pub const CUSTOM_DERIVATIVE_STEP: f64 = 1e-6;

/// Below this modulus `F'` is treated as vanishing.
const CRITICAL_POINT_THRESHOLD: f64 = 1e-300;

type ComplexFn = dyn Fn(Complex64) -> Complex64 + Send + Sync;

#[derive(Clone)]
enum Kind {
    Identity,
    HalfplaneToDisk,
    PuncturedDisk { lambda: f64 },
    Annulus { r: f64 },
    Custom { f: Arc<ComplexFn>, label: String },
}

/// A conformal map `F` from a source domain into the unit disk.
#[derive(Clone)]
pub struct ConformalMap {
    kind: Kind,
    domain: DomainDescriptor,
}

impl fmt::Debug for ConformalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConformalMap({}, {})", self.label(), self.domain)
    }
}

/// `(w − 1)/(w + 1)`.
pub fn halfplane_to_disk(w: Complex64) -> Result<Complex64> {
    ConformalMap::halfplane_to_disk().eval(w)
}

/// `e^{−λw}`.
pub fn halfplane_to_punctured_disk(w: Complex64, lambda: f64) -> Result<Complex64> {
    ConformalMap::halfplane_to_punctured_disk(lambda)?.eval(w)
}

/// `(τ + 1)/(τ − 1)` with `τ = i·exp((π/log r)·i·log ω)`, principal branch.
pub fn annulus_to_disk(omega: Complex64, r: f64) -> Result<Complex64> {
    ConformalMap::annulus_to_disk(r)?.eval(omega)
}

impl ConformalMap {
    pub fn identity() -> Self {
        ConformalMap { kind: Kind::Identity, domain: DomainDescriptor::UnitDisk }
    }

    pub fn halfplane_to_disk() -> Self {
        ConformalMap { kind: Kind::HalfplaneToDisk, domain: DomainDescriptor::RightHalfPlane }
    }

    pub fn halfplane_to_punctured_disk(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} must be positive")));
        }
        Ok(ConformalMap { kind: Kind::PuncturedDisk { lambda }, domain: DomainDescriptor::RightHalfPlane })
    }

    /// The annulus `r < |ω| < 1` cut along the negative real axis.
    pub fn annulus_to_disk(r: f64) -> Result<Self> {
        let domain = DomainDescriptor::annulus(r)?;
        Ok(ConformalMap { kind: Kind::Annulus { r }, domain })
    }

    /// A user-supplied analytic map; `F'` by complex central differences.
    pub fn custom<F>(label: impl Into<String>, domain: DomainDescriptor, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        ConformalMap { kind: Kind::Custom { f: Arc::new(f), label: label.into() }, domain }
    }

    pub fn domain(&self) -> DomainDescriptor {
        self.domain
    }

    pub fn label(&self) -> String {
        match &self.kind {
            Kind::Identity => "identity".into(),
            Kind::HalfplaneToDisk => "halfplane-to-disk".into(),
            Kind::PuncturedDisk { lambda } => format!("halfplane-to-punctured-disk(lambda={lambda})"),
            Kind::Annulus { r } => format!("annulus-to-disk(r={r})"),
            Kind::Custom { label, .. } => label.clone(),
        }
    }

    fn check(&self, w: Complex64) -> Result<()> {
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::NonFinite(format!("w = {w}")));
        }
        if !self.domain.contains(w) {
            return Err(Error::OutsideDomain { at: w, domain: self.domain.to_string() });
        }
        Ok(())
    }

    fn annulus_tau(r: f64, w: Complex64) -> (Complex64, Complex64) {
        let c = Complex64::new(0.0, std::f64::consts::PI / r.ln());
        let tau = Complex64::i() * (c * w.ln()).exp();
        (tau, c)
    }

    fn raw(&self, w: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match &self.kind {
            Kind::Identity => w,
            Kind::HalfplaneToDisk => (w - one) / (w + one),
            Kind::PuncturedDisk { lambda } => (-*lambda * w).exp(),
            Kind::Annulus { r } => {
                let (tau, _) = Self::annulus_tau(*r, w);
                (tau + one) / (tau - one)
            }
            Kind::Custom { f, .. } => f(w),
        }
    }

    pub fn eval(&self, w: Complex64) -> Result<Complex64> {
        self.check(w)?;
        Ok(self.raw(w))
    }

    /// `F'(w)`: analytic for the built-in maps.
    pub fn derivative(&self, w: Complex64) -> Result<Complex64> {
        self.check(w)?;
        let one = Complex64::new(1.0, 0.0);
        Ok(match &self.kind {
            Kind::Identity => one,
            Kind::HalfplaneToDisk => 2.0 / ((w + one) * (w + one)),
            Kind::PuncturedDisk { lambda } => -*lambda * (-*lambda * w).exp(),
            Kind::Annulus { r } => {
                let (tau, c) = Self::annulus_tau(*r, w);
                let dtau = tau * c / w;
                -2.0 * dtau / ((tau - one) * (tau - one))
            }
            Kind::Custom { f, .. } => {
                let h = CUSTOM_DERIVATIVE_STEP;
                (f(w + h) - f(w - h)) / (2.0 * h)
            }
        })
    }
}

/// The blow-up solution `log(8|F'|²/(1 − |F|²)²)` of `Δu = e^u`.
#[derive(Debug, Clone)]
pub struct LiouvilleField {
    map: ConformalMap,
}

pub fn liouville_transplant(map: ConformalMap) -> LiouvilleField {
    LiouvilleField { map }
}

impl LiouvilleField {
    pub fn map(&self) -> &ConformalMap {
        &self.map
    }
}

impl ScalarField for LiouvilleField {
    fn eval(&self, z: Complex64) -> Result<f64> {
        let f = self.map.eval(z)?;
        let df = self.map.derivative(z)?;
        let m = f.norm_sqr();
        if !(m < 1.0) {
            return Err(Error::Evaluation { at: z, reason: format!("|F| = {} is not below 1", m.sqrt()) });
        }
        let d = df.norm();
        if d < CRITICAL_POINT_THRESHOLD || !d.is_finite() {
            return Err(Error::DegenerateDerivative { at: z, modulus: d });
        }
        // log 8 + 2 log|F'| − 2 log(1 − |F|²), written to avoid overflow.
        Ok(8f64.ln() + 2.0 * d.ln() - 2.0 * (-m).ln_1p())
    }

    fn label(&self) -> String {
        format!("liouville({})", self.map.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn halfplane_values() {
        assert_eq!(halfplane_to_disk(c(1.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!((halfplane_to_disk(c(3.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        let near = halfplane_to_disk(c(1e-9, 2.0)).unwrap().norm();
        assert!(near < 1.0 && near > 1.0 - 1e-8);
        assert!(halfplane_to_disk(c(-1.0, 0.0)).is_err());
    }

    #[test]
    fn punctured_values() {
        let v = halfplane_to_punctured_disk(c(1.0, 0.0), 1.0).unwrap();
        assert!((v.re - (-1f64).exp()).abs() < 1e-15);
        let v = halfplane_to_punctured_disk(c(1.0, PI / 2.0), 2.0).unwrap();
        assert!((v - c(-(-2f64).exp(), 0.0)).norm() < 1e-15);
        assert!(halfplane_to_punctured_disk(c(1e-10, 0.3), 1.0).unwrap().norm() > 1.0 - 1e-9);
    }

    #[test]
    fn annulus_values() {
        let f = annulus_to_disk(c(0.5, 0.0), 0.25).unwrap();
        assert!(f.norm() < 1e-15);
        for w in [c(0.3, 0.2), c(-0.4, 0.3), c(0.0, -0.9), c(0.26, 0.0)] {
            assert!(annulus_to_disk(w, 0.25).unwrap().norm() < 1.0);
        }
        assert!(annulus_to_disk(c(0.999_999, 0.0), 0.25).unwrap().norm() > 0.999);
        assert!(annulus_to_disk(c(0.250_001, 0.0), 0.25).unwrap().norm() > 0.999);
        assert!(annulus_to_disk(c(0.1, 0.0), 0.25).is_err());
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let maps = [
            (ConformalMap::halfplane_to_disk(), c(0.7, 0.4)),
            (ConformalMap::halfplane_to_punctured_disk(1.5).unwrap(), c(0.7, -0.4)),
            (ConformalMap::annulus_to_disk(0.25).unwrap(), c(0.3, 0.45)),
        ];
        for (m, w) in maps {
            let h = 1e-6;
            let fd = (m.eval(w + h).unwrap() - m.eval(w - h).unwrap()) / (2.0 * h);
            assert!((fd - m.derivative(w).unwrap()).norm() < 1e-7, "{}", m.label());
        }
    }

    #[test]
    fn transplant_of_identity() {
        let u = liouville_transplant(ConformalMap::identity());
        for z in [c(0.0, 0.0), c(0.3, -0.5), c(0.7, 0.1)] {
            let expected = (8.0 / (1.0 - z.norm_sqr()).powi(2)).ln();
            assert!((u.eval(z).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn transplant_of_halfplane_maps() {
        let u = liouville_transplant(ConformalMap::halfplane_to_disk());
        for z in [c(1.0, 0.0), c(0.3, 2.0), c(2.5, -1.0)] {
            assert!((u.eval(z).unwrap() - (2f64.ln() - 2.0 * z.re.ln())).abs() < 1e-13);
        }
        let lambda = 1.3;
        let u = liouville_transplant(ConformalMap::halfplane_to_punctured_disk(lambda).unwrap());
        for z in [c(1.0, 0.0), c(0.3, 2.0)] {
            let x = z.re;
            let expected =
                (8.0 * lambda * lambda).ln() - 2.0 * lambda * x - 2.0 * (1.0 - (-2.0 * lambda * x).exp()).ln();
            assert!((u.eval(z).unwrap() - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn custom_map_uses_differences() {
        let m = ConformalMap::custom("half", DomainDescriptor::UnitDisk, |w| 0.5 * w);
        assert!((m.derivative(c(0.1, 0.1)).unwrap() - c(0.5, 0.0)).norm() < 1e-9);
        let sq = ConformalMap::custom("square", DomainDescriptor::UnitDisk, |w| w * w);
        let u = liouville_transplant(sq);
        assert!(matches!(u.eval(c(0.0, 0.0)), Err(Error::DegenerateDerivative { .. })));
    }
}
