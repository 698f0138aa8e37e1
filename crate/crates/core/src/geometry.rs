//! Small fixed-size linear algebra and domain descriptors.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plane vector `(x, y)`.
pub type Vec2 = [f64; 2];

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Real 2×2 matrix stored row-major: `[[m00, m01], [m10, m11]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Mat2([[m00, m01], [m10, m11]])
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.0[0][0], self.0[1][0], self.0[0][1], self.0[1][1])
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &other.0;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    /// Inverse; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(
            self.0[1][1] / d,
            -self.0[0][1] / d,
            -self.0[1][0] / d,
            self.0[0][0] / d,
        ))
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        m
    }

    /// Real Jacobian matrix of a map from its Wirtinger derivatives.
    ///
    /// Rows are `(a_x, a_y)` and `(b_x, b_y)` for `ω = a + i b`.
    pub fn from_wirtinger(w_z: Complex64, w_zbar: Complex64) -> Mat2 {
        let wx = w_z + w_zbar;
        let wy = Complex64::i() * (w_z - w_zbar);
        Mat2::new(wx.re, wy.re, wx.im, wy.im)
    }

    /// Wirtinger derivatives `(ω_z, ω_z̄)` of the map with this Jacobian.
    pub fn to_wirtinger(&self) -> (Complex64, Complex64) {
        let wx = Complex64::new(self.0[0][0], self.0[1][0]);
        let wy = Complex64::new(self.0[0][1], self.0[1][1]);
        let i = Complex64::i();
        (0.5 * (wx - i * wy), 0.5 * (wx + i * wy))
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn square(center: Complex64, half: f64) -> Self {
        Rect::new(center.re - half, center.re + half, center.im - half, center.im + half)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Shape of a planar domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainDescriptor {
    UnitDisk,
    /// Disk `|z - center| < radius`.
    Disk { center: [f64; 2], radius: f64 },
    /// Annulus `inner < |z| < 1`.
    Annulus { inner: f64 },
    RightHalfPlane,
    UpperHalfPlane,
    Plane,
    /// `0 < |z| < 1`.
    PuncturedDisk,
    /// Preimage `{z : |ω(z) - center| < radius}` of a disk under the map
    /// that a factorization builds. Only meaningful together with that map.
    MappedDisk { center: [f64; 2], radius: f64 },
}

impl DomainDescriptor {
    pub fn disk(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!("disk radius {radius} must be positive")));
        }
        Ok(DomainDescriptor::Disk { center: [center.re, center.im], radius })
    }

    pub fn annulus(inner: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "annulus inner radius {inner} must lie in (0, 1)"
            )));
        }
        Ok(DomainDescriptor::Annulus { inner })
    }

    /// Distance from `z` to the boundary, or a negative value outside.
    ///
    /// Returns `None` for [`DomainDescriptor::MappedDisk`], whose shape depends
    /// on a map.
    pub fn boundary_distance(&self, z: Complex64) -> Option<f64> {
        let r = z.norm();
        Some(match *self {
            DomainDescriptor::UnitDisk => 1.0 - r,
            DomainDescriptor::Disk { center, radius } => {
                radius - (z - Complex64::new(center[0], center[1])).norm()
            }
            DomainDescriptor::Annulus { inner } => (1.0 - r).min(r - inner),
            DomainDescriptor::RightHalfPlane => z.re,
            DomainDescriptor::UpperHalfPlane => z.im,
            DomainDescriptor::Plane => f64::INFINITY,
            DomainDescriptor::PuncturedDisk => (1.0 - r).min(r),
            DomainDescriptor::MappedDisk { .. } => return None,
        })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.boundary_distance(z).is_some_and(|d| d > 0.0)
    }

    /// A rectangle enclosing the domain, if it is bounded.
    pub fn bounding_box(&self) -> Option<Rect> {
        match *self {
            DomainDescriptor::UnitDisk
            | DomainDescriptor::Annulus { .. }
            | DomainDescriptor::PuncturedDisk => Some(Rect::new(-1.0, 1.0, -1.0, 1.0)),
            DomainDescriptor::Disk { center, radius } => {
                Some(Rect::square(Complex64::new(center[0], center[1]), radius))
            }
            _ => None,
        }
    }
}

impl fmt::Display for DomainDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainDescriptor::UnitDisk => write!(f, "unit disk"),
            DomainDescriptor::Disk { center, radius } => {
                write!(f, "disk(center=({}, {}), radius={})", center[0], center[1], radius)
            }
            DomainDescriptor::Annulus { inner } => write!(f, "annulus({inner} < |z| < 1)"),
            DomainDescriptor::RightHalfPlane => write!(f, "right half-plane"),
            DomainDescriptor::UpperHalfPlane => write!(f, "upper half-plane"),
            DomainDescriptor::Plane => write!(f, "plane"),
            DomainDescriptor::PuncturedDisk => write!(f, "punctured unit disk"),
            DomainDescriptor::MappedDisk { center, radius } => write!(
                f,
                "preimage of disk(center=({}, {}), radius={})",
                center[0], center[1], radius
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wirtinger_round_trip() {
        let m = Mat2::new(1.0, 0.0, 2.0, 1.0);
        let (wz, wzb) = m.to_wirtinger();
        assert!((wz - Complex64::new(1.0, 1.0)).norm() < 1e-15);
        assert!((wzb - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!(Mat2::from_wirtinger(wz, wzb).max_abs_diff(&m) < 1e-15);
    }

    #[test]
    fn inverse_of_shear() {
        let m = Mat2::new(1.0, 0.0, 2.0, 1.0);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).max_abs_diff(&Mat2::IDENTITY) < 1e-15);
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).inverse().is_none());
    }

    #[test]
    fn annulus_rejects_bad_radius() {
        assert!(DomainDescriptor::annulus(0.0).is_err());
        assert!(DomainDescriptor::annulus(1.0).is_err());
        assert!(DomainDescriptor::annulus(0.25).is_ok());
    }

    #[test]
    fn boundary_distances() {
        let z = Complex64::new(0.5, 0.0);
        assert_eq!(DomainDescriptor::UnitDisk.boundary_distance(z), Some(0.5));
        let ann = DomainDescriptor::annulus(0.25).unwrap();
        assert_eq!(ann.boundary_distance(z), Some(0.25));
        assert!(!DomainDescriptor::PuncturedDisk.contains(Complex64::new(0.0, 0.0)));
        assert!(DomainDescriptor::RightHalfPlane.contains(Complex64::new(0.1, -4.0)));
        assert!(!DomainDescriptor::RightHalfPlane.contains(Complex64::new(-0.1, 0.0)));
    }
}
