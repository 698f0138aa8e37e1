//! Explicit quasiconformal maps with prescribed dilatation.
//!
//! Four families have closed-form or one-dimensional-quadrature solutions of
//! the Beltrami equation `ω_z̄ = μ ω_z`:
//!
//! * radial, `μ = k(|z|) z/z̄`:
//!   `ω(z) = (z/|z|) exp(−∫_{|z|}^1 (1+k)/(1−k) dτ/τ)`, a self-map of the unit disk
//!   with `ω(0) = 0`, `ω(1) = 1`;
//! * the logarithmic spiral `ω(z) = z e^{2i log|z|}` (radial with `k ≡ ½(1+i)`);
//! * `x`-only, `μ = μ(x)`: `ω(z) = φ(x) + iy`, `φ(x) = ∫₀ˣ (1+μ)/(1−μ) dt`;
//! * `y`-only, `μ = ν(y)`: `g(z) = x + iψ(y)`, `ψ(y) = ∫₀^y (1−ν)/(1+ν) dt`.
//!
//! Jacobians are analytic (from the Wirtinger derivatives); the numeric
//! differentiation helpers at the bottom exist to check them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficient::Coefficient;
use crate::error::{Error, Result};
use crate::geometry::{DomainDescriptor, Mat2};
use crate::quadrature::{integrate_with_breaks, QuadratureSpec};
use crate::tensor::{phase_squared, spiral_coefficient, DilatationField, DilatationStructure};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Below this modulus the radial maps return 0.
const ORIGIN_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapFamily {
    Identity,
    Radial,
    Horizontal,
    Vertical,
    LogSpiral,
}

impl std::fmt::Display for MapFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MapFamily::Identity => "identity",
            MapFamily::Radial => "radial",
            MapFamily::Horizontal => "horizontal",
            MapFamily::Vertical => "vertical",
            MapFamily::LogSpiral => "log-spiral",
        })
    }
}

#[derive(Debug, Clone)]
enum MapKind {
    Identity,
    Radial { k: Coefficient, volume_preserving: bool },
    LogSpiral,
    Horizontal { mu: Coefficient, volume_preserving: bool, bound: f64 },
    Vertical { nu: Coefficient, bound: f64 },
}

/// An orientation-preserving planar map with analytic Jacobian.
#[derive(Debug, Clone)]
pub struct PlanarMap {
    kind: MapKind,
    domain: DomainDescriptor,
    quad: QuadratureSpec,
}

#[inline]
fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn radial_integrand(k: Complex64) -> Complex64 {
    (one() + k) / (one() - k)
}

fn check_coefficient_value(v: Complex64, at: f64) -> Result<()> {
    let m = v.norm();
    if !m.is_finite() {
        return Err(Error::NonFinite(format!("coefficient at t = {at}")));
    }
    if m >= 1.0 {
        return Err(Error::DegenerateDilatation { modulus: m });
    }
    Ok(())
}

/// Identity map of the plane.
pub fn identity_map() -> PlanarMap {
    PlanarMap { kind: MapKind::Identity, domain: DomainDescriptor::Plane, quad: QuadratureSpec::default() }
}

/// Radial map of the unit disk with coefficient `k(τ)`, `τ ∈ (0, 1]`.
pub fn radial_map(k: Coefficient, quad: QuadratureSpec) -> Result<PlanarMap> {
    let field = DilatationField::radial(k.clone())?;
    let volume_preserving = field.is_volume_preserving();
    Ok(PlanarMap {
        kind: MapKind::Radial { k, volume_preserving },
        domain: DomainDescriptor::UnitDisk,
        quad,
    })
}

/// `x`-only map of the plane, `ω(0) = 0`, `ω(i) = i`.
pub fn horizontal_map(mu: Coefficient, quad: QuadratureSpec) -> Result<PlanarMap> {
    let field = DilatationField::horizontal(mu.clone())?;
    Ok(PlanarMap {
        kind: MapKind::Horizontal {
            mu,
            volume_preserving: field.is_volume_preserving(),
            bound: field.bound(),
        },
        domain: DomainDescriptor::Plane,
        quad,
    })
}

/// `y`-only map `g(z) = x + iψ(y)` of the plane.
pub fn vertical_map(nu: Coefficient, quad: QuadratureSpec) -> Result<PlanarMap> {
    let field = DilatationField::vertical(nu.clone())?;
    Ok(PlanarMap {
        kind: MapKind::Vertical { nu, bound: field.bound() },
        domain: DomainDescriptor::Plane,
        quad,
    })
}

/// `ω(z) = z e^{2i log|z|}` on the unit disk.
pub fn log_spiral_map() -> PlanarMap {
    PlanarMap { kind: MapKind::LogSpiral, domain: DomainDescriptor::UnitDisk, quad: QuadratureSpec::default() }
}

/// Build the atlas map agreed with a structured dilatation field.
pub fn map_for_dilatation(field: &DilatationField, quad: QuadratureSpec) -> Result<PlanarMap> {
    match field.structure() {
        DilatationStructure::Constant(c) if *c == Complex64::new(0.0, 0.0) => Ok(identity_map()),
        DilatationStructure::Constant(c) => horizontal_map(Coefficient::constant(*c), quad),
        DilatationStructure::Radial(k) => radial_map(k.clone(), quad),
        DilatationStructure::LogSpiral => Ok(log_spiral_map()),
        DilatationStructure::Horizontal(mu) => horizontal_map(mu.clone(), quad),
        DilatationStructure::Vertical(nu) => vertical_map(nu.clone(), quad),
        DilatationStructure::General(_) => Err(Error::UnsupportedStructure(
            "no explicit map for a general two-variable dilatation".into(),
        )),
    }
}

impl PlanarMap {
    /// Restrict or extend the declared domain (e.g. an annulus for a radial map).
    pub fn with_domain(mut self, domain: DomainDescriptor) -> Self {
        self.domain = domain;
        self
    }

    pub fn family(&self) -> MapFamily {
        match self.kind {
            MapKind::Identity => MapFamily::Identity,
            MapKind::Radial { .. } => MapFamily::Radial,
            MapKind::LogSpiral => MapFamily::LogSpiral,
            MapKind::Horizontal { .. } => MapFamily::Horizontal,
            MapKind::Vertical { .. } => MapFamily::Vertical,
        }
    }

    pub fn domain(&self) -> DomainDescriptor {
        self.domain
    }

    /// True when `J_ω ≡ 1`.
    pub fn is_volume_preserving(&self) -> bool {
        match &self.kind {
            MapKind::Identity | MapKind::LogSpiral => true,
            MapKind::Radial { volume_preserving, .. } => *volume_preserving,
            MapKind::Horizontal { volume_preserving, .. } => *volume_preserving,
            MapKind::Vertical { nu, .. } => DilatationField::vertical(nu.clone())
                .map(|f| f.is_volume_preserving())
                .unwrap_or(false),
        }
    }

    /// Points where the map is not differentiable (the origin for radial maps).
    pub fn singular_points(&self) -> Vec<Complex64> {
        match self.kind {
            MapKind::Radial { .. } | MapKind::LogSpiral => vec![Complex64::new(0.0, 0.0)],
            _ => Vec::new(),
        }
    }

    fn check_radial_domain(&self, z: Complex64) -> Result<f64> {
        let r = z.norm();
        if !r.is_finite() {
            return Err(Error::NonFinite(format!("z = {z}")));
        }
        if r > 1.0 + 1e-12 {
            return Err(Error::OutsideDomain { at: z, domain: self.domain.to_string() });
        }
        Ok(r)
    }

    /// `∫_ρ^1 (1+k)/(1−k) dτ/τ`, integrated in `s = log τ`.
    fn radial_exponent(&self, k: &Coefficient, rho: f64) -> Result<Complex64> {
        if let Some(c) = k.as_constant() {
            check_coefficient_value(c, rho)?;
            return Ok(radial_integrand(c) * (-rho.ln()));
        }
        let breaks: Vec<f64> =
            k.breakpoints().iter().filter(|&&t| t > 0.0 && t < 1.0).map(|t| t.ln()).collect();
        integrate_with_breaks(
            |s| {
                let t = s.exp();
                let kv = k.eval(t);
                check_coefficient_value(kv, t)?;
                Ok(radial_integrand(kv))
            },
            rho.ln(),
            0.0,
            &breaks,
            &self.quad,
        )
    }

    /// `φ(x) = ∫₀ˣ (1+μ)/(1−μ) dt`.
    fn horizontal_primitive(&self, mu: &Coefficient, x: f64) -> Result<Complex64> {
        if x == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if let Some(c) = mu.as_constant() {
            check_coefficient_value(c, x)?;
            return Ok(radial_integrand(c) * x);
        }
        integrate_with_breaks(
            |t| {
                let m = mu.eval(t);
                check_coefficient_value(m, t)?;
                Ok(radial_integrand(m))
            },
            0.0,
            x,
            mu.breakpoints(),
            &self.quad,
        )
    }

    /// `ψ(y) = ∫₀^y (1−ν)/(1+ν) dt`.
    fn vertical_primitive(&self, nu: &Coefficient, y: f64) -> Result<Complex64> {
        let integrand = |v: Complex64| (one() - v) / (one() + v);
        if y == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if let Some(c) = nu.as_constant() {
            check_coefficient_value(c, y)?;
            return Ok(integrand(c) * y);
        }
        integrate_with_breaks(
            |t| {
                let v = nu.eval(t);
                check_coefficient_value(v, t)?;
                Ok(integrand(v))
            },
            0.0,
            y,
            nu.breakpoints(),
            &self.quad,
        )
    }

    /// Evaluate `ω(z)`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite(format!("z = {z}")));
        }
        match &self.kind {
            MapKind::Identity => Ok(z),
            MapKind::Radial { k, .. } => {
                let r = self.check_radial_domain(z)?;
                if r < ORIGIN_CUTOFF {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let e = self.radial_exponent(k, r)?;
                Ok(z / r * (-e).exp())
            }
            MapKind::LogSpiral => {
                let r = z.norm();
                if r < ORIGIN_CUTOFF {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                Ok(z * Complex64::new(0.0, 2.0 * r.ln()).exp())
            }
            MapKind::Horizontal { mu, .. } => {
                let phi = self.horizontal_primitive(mu, z.re)?;
                Ok(phi + Complex64::new(0.0, z.im))
            }
            MapKind::Vertical { nu, .. } => {
                let psi = self.vertical_primitive(nu, z.im)?;
                Ok(Complex64::new(z.re, 0.0) + Complex64::i() * psi)
            }
        }
    }

    /// Wirtinger derivatives `(ω_z, ω_z̄)` at `z`.
    pub fn wirtinger(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        match &self.kind {
            MapKind::Identity => Ok((one(), Complex64::new(0.0, 0.0))),
            MapKind::Radial { k, .. } => {
                let r = self.check_radial_domain(z)?;
                if r < ORIGIN_CUTOFF {
                    return Err(Error::TooCloseToBoundary { at: z, margin: ORIGIN_CUTOFF });
                }
                let w = self.eval(z)?;
                let kv = k.eval(r);
                let wz = w / ((one() - kv) * z);
                let wzb = kv * w / ((one() - kv) * z.conj());
                Ok((wz, wzb))
            }
            MapKind::LogSpiral => {
                let r = z.norm();
                if r < ORIGIN_CUTOFF {
                    return Err(Error::TooCloseToBoundary { at: z, margin: ORIGIN_CUTOFF });
                }
                let w = self.eval(z)?;
                let k = spiral_coefficient();
                Ok((w / ((one() - k) * z), k * w / ((one() - k) * z.conj())))
            }
            MapKind::Horizontal { mu, .. } => {
                let m = mu.eval(z.re);
                check_coefficient_value(m, z.re)?;
                Ok((one() / (one() - m), m / (one() - m)))
            }
            MapKind::Vertical { nu, .. } => {
                let v = nu.eval(z.im);
                check_coefficient_value(v, z.im)?;
                Ok((one() / (one() + v), v / (one() + v)))
            }
        }
    }

    /// Real Jacobian matrix `D_ω(z)` with rows `(a_x, a_y)`, `(b_x, b_y)`.
    pub fn jacobian(&self, z: Complex64) -> Result<Mat2> {
        let (wz, wzb) = self.wirtinger(z)?;
        Ok(Mat2::from_wirtinger(wz, wzb))
    }

    /// `J_ω(z) = |ω_z|² − |ω_z̄|²`, in the closed forms of each family.
    pub fn jacobian_det(&self, z: Complex64) -> Result<f64> {
        match &self.kind {
            MapKind::Identity | MapKind::LogSpiral => Ok(1.0),
            MapKind::Radial { k, .. } => {
                let r = self.check_radial_domain(z)?;
                if r < ORIGIN_CUTOFF {
                    return Err(Error::TooCloseToBoundary { at: z, margin: ORIGIN_CUTOFF });
                }
                let kv = k.eval(r);
                let w = self.eval(z)?;
                Ok((1.0 - kv.norm_sqr()) / (one() - kv).norm_sqr() * w.norm_sqr() / (r * r))
            }
            MapKind::Horizontal { mu, .. } => {
                let m = mu.eval(z.re);
                Ok((1.0 - m.norm_sqr()) / (one() - m).norm_sqr())
            }
            MapKind::Vertical { nu, .. } => {
                let v = nu.eval(z.im);
                Ok((1.0 - v.norm_sqr()) / (one() + v).norm_sqr())
            }
        }
    }

    /// The dilatation the family is built to realize.
    pub fn dilatation(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            MapKind::Identity => Complex64::new(0.0, 0.0),
            MapKind::Radial { k, .. } => k.eval(z.norm()) * phase_squared(z),
            MapKind::LogSpiral => spiral_coefficient() * phase_squared(z),
            MapKind::Horizontal { mu, .. } => mu.eval(z.re),
            MapKind::Vertical { nu, .. } => nu.eval(z.im),
        }
    }

    /// Whether [`PlanarMap::inverse`] is available.
    pub fn has_inverse(&self) -> bool {
        match &self.kind {
            MapKind::Radial { volume_preserving, .. } => *volume_preserving,
            _ => true,
        }
    }

    /// `ω⁻¹(w)`.
    ///
    /// Closed form for the identity, spiral and volume-preserving radial and
    /// `x`-only maps; a safeguarded Newton solve on the monotone real part of
    /// the primitive for general `x`-only and `y`-only maps.
    pub fn inverse(&self, w: Complex64) -> Result<Complex64> {
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::NonFinite(format!("w = {w}")));
        }
        match &self.kind {
            MapKind::Identity => Ok(w),
            MapKind::LogSpiral => {
                let r = w.norm();
                if r < ORIGIN_CUTOFF {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                Ok(w * Complex64::new(0.0, -2.0 * r.ln()).exp())
            }
            MapKind::Radial { k, volume_preserving } => {
                if !volume_preserving {
                    return Err(Error::InverseUnavailable("non-volume-preserving radial".into()));
                }
                let r = self.check_radial_domain(w)?;
                if r < ORIGIN_CUTOFF {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                // |ω(z)| = |z| here, so ω(z) = z e^{−i Im I(|z|)}.
                let e = self.radial_exponent(k, r)?;
                Ok(w * Complex64::new(0.0, e.im).exp())
            }
            MapKind::Horizontal { mu, volume_preserving, bound } => {
                let x = if *volume_preserving {
                    w.re
                } else {
                    let target = w.re;
                    solve_monotone(
                        |x| {
                            let m = mu.eval(x);
                            Ok((self.horizontal_primitive(mu, x)?.re, radial_integrand(m).re))
                        },
                        target,
                        *bound,
                    )?
                };
                let phi = self.horizontal_primitive(mu, x)?;
                Ok(Complex64::new(x, w.im - phi.im))
            }
            MapKind::Vertical { nu, bound } => {
                let target = w.im;
                let y = solve_monotone(
                    |y| {
                        let v = nu.eval(y);
                        Ok((self.vertical_primitive(nu, y)?.re, ((one() - v) / (one() + v)).re))
                    },
                    target,
                    *bound,
                )?;
                let psi = self.vertical_primitive(nu, y)?;
                Ok(Complex64::new(w.re + psi.im, y))
            }
        }
    }
}

/// Solve `F(t) = target` for increasing `F` with `F(0) = 0` and slope in
/// `[(1−b)/(1+b), (1+b)/(1−b)]`. `eval` returns `(F(t), F'(t))`.
fn solve_monotone<F>(eval: F, target: f64, bound: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let slope_lo = (1.0 - bound) / (1.0 + bound);
    let slope_hi = (1.0 + bound) / (1.0 - bound);
    let (mut lo, mut hi) = {
        let a = target / slope_lo;
        let b = target / slope_hi;
        (a.min(b), a.max(b))
    };
    let tol = 1e-14 * (1.0 + target.abs());
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (f, df) = eval(t)?;
        let r = f - target;
        if r.abs() <= tol {
            return Ok(t);
        }
        if r > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let newton = t - r / df;
        t = if df > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-15 * (1.0 + t.abs()) {
            return Ok(t);
        }
    }
    Ok(t)
}

/// Minimum distance from `z` to the domain boundary and the map's singular points.
fn clearance(map: &PlanarMap, z: Complex64) -> f64 {
    let boundary = map.domain().boundary_distance(z).unwrap_or(f64::INFINITY);
    map.singular_points().iter().map(|p| (z - p).norm()).fold(boundary, f64::min)
}

/// Central-difference approximation of `D_ω(z)`.
pub fn numeric_jacobian(map: &PlanarMap, z: Complex64, h: f64) -> Result<Mat2> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step {h} must be positive")));
    }
    if clearance(map, z) <= h {
        return Err(Error::TooCloseToBoundary { at: z, margin: h });
    }
    let dx = Complex64::new(h, 0.0);
    let dy = Complex64::new(0.0, h);
    let wx = (map.eval(z + dx)? - map.eval(z - dx)?) / (2.0 * h);
    let wy = (map.eval(z + dy)? - map.eval(z - dy)?) / (2.0 * h);
    Ok(Mat2::new(wx.re, wy.re, wx.im, wy.im))
}

/// `ω_z̄ / ω_z` from central differences.
pub fn numeric_dilatation(map: &PlanarMap, z: Complex64, h: f64) -> Result<Complex64> {
    let (wz, wzb) = numeric_jacobian(map, z, h)?.to_wirtinger();
    let m = wz.norm();
    if m < 1e-12 {
        return Err(Error::DegenerateDerivative { at: z, modulus: m });
    }
    Ok(wzb / wz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{volume_preserving_coefficient, Sign};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn vp_radial(nu: f64) -> PlanarMap {
        let k = volume_preserving_coefficient(nu, Sign::Plus).unwrap();
        radial_map(Coefficient::constant(k), QuadratureSpec::default()).unwrap()
    }

    #[test]
    fn zero_radial_coefficient_is_identity() {
        // Non-constant flag forces the quadrature route.
        let k = Coefficient::from_fn("zero", |_| c(0.0, 0.0));
        let m = radial_map(k, QuadratureSpec::default()).unwrap();
        for z in [c(0.5, 0.0), c(0.1, -0.3), c(-0.7, 0.2)] {
            assert!((m.eval(z).unwrap() - z).norm() < 1e-12);
        }
        assert_eq!(m.eval(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn real_constant_radial_cubes_modulus() {
        let quad = Coefficient::from_fn("half", |_| c(0.5, 0.0));
        let m = radial_map(quad, QuadratureSpec::default()).unwrap();
        let w = m.eval(c(0.5, 0.0)).unwrap();
        assert!((w.norm() - 0.125).abs() < 1e-12);
        let closed = radial_map(Coefficient::real_constant(0.5), QuadratureSpec::default()).unwrap();
        for z in [c(0.3, 0.4), c(-0.2, 0.1), c(0.9, 0.0)] {
            assert!((closed.eval(z).unwrap() - m.eval(z).unwrap()).norm() < 1e-12);
            assert!((m.eval(z).unwrap().norm() - z.norm().powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_normalizations() {
        let nu = Coefficient::from_real_fn("sin", |t| 0.5 * (4.0 * t).sin());
        let k = nu.volume_preserving(Sign::Minus, (0.0, 1.0)).unwrap();
        let m = radial_map(k, QuadratureSpec::default()).unwrap();
        assert!((m.eval(c(1.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-10);
        assert_eq!(m.eval(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!(m.is_volume_preserving());
    }

    #[test]
    fn spiral_as_radial_and_closed_form_agree() {
        let radial = vp_radial(FRAC_1_SQRT_2);
        let spiral = log_spiral_map();
        for z in [c(0.5, 0.0), c(0.3, 0.4), c(-0.6, -0.1)] {
            let a = radial.eval(z).unwrap();
            let b = spiral.eval(z).unwrap();
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
            assert!((a.norm() - z.norm()).abs() < 1e-12);
            assert!((radial.jacobian_det(z).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spiral_values() {
        let m = log_spiral_map();
        assert!((m.eval(c(1.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let r = (-PI / 2.0).exp();
        let w = m.eval(c(r, 0.0)).unwrap();
        assert!((w - c(-r, 0.0)).norm() < 1e-15);
        let z = c(0.3, -0.45);
        assert!((m.eval(z).unwrap().norm() - z.norm()).abs() < 1e-15);
        assert!((m.inverse(m.eval(z).unwrap()).unwrap() - z).norm() < 1e-15);
    }

    #[test]
    fn spiral_numeric_jacobian_and_dilatation() {
        let m = log_spiral_map();
        let d = numeric_jacobian(&m, c(0.5, 0.0), 1e-4).unwrap();
        assert!((d.det() - 1.0).abs() < 1e-6);
        let z = c(0.3, 0.4);
        let mu = numeric_dilatation(&m, z, 1e-5).unwrap();
        let expected = c(0.5, 0.5) * z / z.conj();
        assert!((mu - expected).norm() < 1e-4);
        let analytic = m.jacobian(z).unwrap();
        assert!(analytic.max_abs_diff(&numeric_jacobian(&m, z, 1e-5).unwrap()) < 1e-8);
    }

    #[test]
    fn radial_numeric_dilatation() {
        let m = vp_radial(FRAC_1_SQRT_2);
        let mu = numeric_dilatation(&m, c(0.5, 0.0), 1e-5).unwrap();
        assert!((mu - c(0.5, 0.5)).norm() < 1e-4);
    }

    #[test]
    fn horizontal_constant_example() {
        let m = horizontal_map(Coefficient::constant(c(0.5, 0.5)), QuadratureSpec::default()).unwrap();
        for z in [c(0.3, 0.2), c(-1.0, 2.0), c(1.5, -0.7)] {
            let expected = c(z.re, z.im + 2.0 * z.re);
            assert!((m.eval(z).unwrap() - expected).norm() < 1e-14);
            assert!((m.inverse(expected).unwrap() - z).norm() < 1e-14);
        }
        let d = numeric_jacobian(&m, c(0.4, 0.1), 1e-5).unwrap();
        assert!(d.max_abs_diff(&Mat2::new(1.0, 0.0, 2.0, 1.0)) < 1e-9);
        assert!(m.jacobian(c(0.4, 0.1)).unwrap().max_abs_diff(&Mat2::new(1.0, 0.0, 2.0, 1.0)) < 1e-15);
        assert_eq!(m.eval(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert_eq!(m.eval(c(0.0, 1.0)).unwrap(), c(0.0, 1.0));
    }

    #[test]
    fn horizontal_volume_preserving_profile() {
        let nu = Coefficient::from_real_fn("nu", |x| 0.6 * x.cos());
        let mu = nu.volume_preserving(Sign::Plus, (-8.0, 8.0)).unwrap();
        let m = horizontal_map(mu, QuadratureSpec::default()).unwrap();
        assert!(m.is_volume_preserving());
        let q = QuadratureSpec::default();
        for z in [c(0.7, 0.1), c(-1.3, 0.4), c(2.0, -1.0)] {
            let w = m.eval(z).unwrap();
            assert!((w.re - z.re).abs() < 1e-10);
            // Im ω = y + ∫₀ˣ 2ν/√(1−ν²)
            let shear = crate::quadrature::integrate_real(
                |t| {
                    let v = 0.6 * t.cos();
                    Ok(2.0 * v / (1.0 - v * v).sqrt())
                },
                0.0,
                z.re,
                &q,
            )
            .unwrap();
            assert!((w.im - (z.im + shear)).abs() < 1e-9);
            let d = numeric_jacobian(&m, z, 1e-4).unwrap();
            assert!((d.det() - 1.0).abs() < 1e-6);
            assert!((m.inverse(w).unwrap() - z).norm() < 1e-10);
        }
    }

    #[test]
    fn horizontal_general_inverse() {
        let mu = Coefficient::from_fn("mu", |x| c(0.3 * x.sin(), 0.2));
        let m = horizontal_map(mu, QuadratureSpec::default()).unwrap();
        assert!(!m.is_volume_preserving());
        for z in [c(0.5, 0.5), c(-2.0, 0.3), c(3.0, -1.0)] {
            let w = m.eval(z).unwrap();
            assert!((m.inverse(w).unwrap() - z).norm() < 1e-9);
            let mu_num = numeric_dilatation(&m, z, 1e-5).unwrap();
            assert!((mu_num - m.dilatation(z)).norm() < 1e-4);
        }
    }

    #[test]
    fn vertical_constant_real() {
        let m = vertical_map(Coefficient::real_constant(0.4), QuadratureSpec::default()).unwrap();
        let z = c(0.3, 1.5);
        let w = m.eval(z).unwrap();
        assert!((w - c(0.3, 1.5 * 0.6 / 1.4)).norm() < 1e-14);
        assert!((m.inverse(w).unwrap() - z).norm() < 1e-13);
    }

    #[test]
    fn vertical_matches_rotated_horizontal() {
        // ω = A∘g∘A⁻¹ with A(ζ) = iζ and μ(z) = −ν(−iz).
        let nu = c(-0.5, -0.5);
        let g = vertical_map(Coefficient::constant(nu), QuadratureSpec::default()).unwrap();
        let omega = horizontal_map(Coefficient::constant(-nu), QuadratureSpec::default()).unwrap();
        for z in [c(0.2, 0.7), c(-1.1, 0.4), c(0.0, -2.0)] {
            let direct = g.eval(z).unwrap();
            let via_rotation = -Complex64::i() * omega.eval(Complex64::i() * z).unwrap();
            assert!((direct - via_rotation).norm() < 1e-14);
            assert!((direct - c(z.re - 2.0 * z.im, z.im)).norm() < 1e-14);
            let mu_num = numeric_dilatation(&g, z, 1e-5).unwrap();
            assert!((mu_num - nu).norm() < 1e-4);
        }
    }

    #[test]
    fn vertical_variable_inverse() {
        let nu = Coefficient::from_fn("nu", |y| c(0.4 * (2.0 * y).cos(), -0.1));
        let g = vertical_map(nu, QuadratureSpec::default()).unwrap();
        for z in [c(0.1, 0.9), c(-0.5, -1.3)] {
            let w = g.eval(z).unwrap();
            assert!((g.inverse(w).unwrap() - z).norm() < 1e-9);
            assert!((g.jacobian_det(z).unwrap() - numeric_jacobian(&g, z, 1e-4).unwrap().det()).abs() < 1e-7);
        }
    }

    #[test]
    fn identity_numeric_jacobian() {
        let d = numeric_jacobian(&identity_map(), c(0.3, 0.2), 1e-5).unwrap();
        assert!(d.max_abs_diff(&Mat2::IDENTITY) < 1e-10);
        assert!(numeric_dilatation(&identity_map(), c(0.3, 0.2), 1e-5).unwrap().norm() < 1e-10);
    }

    #[test]
    fn boundary_margin_enforced() {
        let m = log_spiral_map();
        assert!(matches!(
            numeric_jacobian(&m, c(1e-6, 0.0), 1e-5),
            Err(Error::TooCloseToBoundary { .. })
        ));
        assert!(matches!(
            numeric_jacobian(&m, c(0.99999, 0.0), 1e-4),
            Err(Error::TooCloseToBoundary { .. })
        ));
    }

    #[test]
    fn non_volume_preserving_radial_has_no_inverse() {
        let m = radial_map(Coefficient::real_constant(0.5), QuadratureSpec::default()).unwrap();
        assert!(!m.has_inverse());
        assert!(matches!(m.inverse(c(0.1, 0.0)), Err(Error::InverseUnavailable(_))));
    }

    #[test]
    fn degenerate_coefficient_rejected() {
        assert!(radial_map(Coefficient::real_constant(1.0), QuadratureSpec::default()).is_err());
        assert!(horizontal_map(Coefficient::constant(c(0.0, 1.2)), QuadratureSpec::default()).is_err());
    }
}
