use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atlas::{numeric_dilatation, PlanarMap};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{dot, Rect, Vec2};
use crate::nonlinearity::Nonlinearity;
use crate::tensor::ConductivityTensor;

use super::grid::GridSpec;

/// Largest tolerated `|μ_map − μ_tensor|` before the identity check aborts.
pub const AGREEMENT_TOLERANCE: f64 = 1e-3;

/// The test function `(1 − |s|²)³`, `s = (z − center)/radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestBump {
    pub center: [f64; 2],
    pub radius: f64,
}

impl TestBump {
    pub fn new(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("bump radius {radius} must be positive")));
        }
        Ok(TestBump { center: [center.re, center.im], radius })
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(self.center[0], self.center[1])
    }

    fn scaled(&self, z: Complex64) -> Complex64 {
        (z - self.center()) / self.radius
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        let m = 1.0 - self.scaled(z).norm_sqr();
        if m > 0.0 {
            m * m * m
        } else {
            0.0
        }
    }

    pub fn gradient(&self, z: Complex64) -> Vec2 {
        let s = self.scaled(z);
        let m = 1.0 - s.norm_sqr();
        if m > 0.0 {
            let k = -6.0 * m * m / self.radius;
            [k * s.re, k * s.im]
        } else {
            [0.0, 0.0]
        }
    }

    pub fn support_rect(&self) -> Rect {
        Rect::square(self.center(), self.radius)
    }

    /// `count` bumps with centers uniform in `centers` and radii uniform in
    /// `radii`, keeping only those `accept` admits. Deterministic in `seed`.
    pub fn random<F>(centers: Rect, radii: (f64, f64), count: usize, seed: u64, accept: F) -> Result<Vec<Self>>
    where
        F: Fn(&TestBump) -> bool,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut tries = 0;
        while out.len() < count {
            tries += 1;
            if tries > 10_000 * count.max(1) {
                return Err(Error::InvalidParameter("could not place the requested bumps".into()));
            }
            let c = Complex64::new(rng.random_range(centers.x0..centers.x1), rng.random_range(centers.y0..centers.y1));
            let r = if radii.1 > radii.0 { rng.random_range(radii.0..radii.1) } else { radii.0 };
            let b = TestBump::new(c, r)?;
            if accept(&b) {
                out.push(b);
            }
        }
        Ok(out)
    }
}

/// Midpoint sum over an `nx × ny` cell partition of `rect`, in row order.
fn midpoint_sum<F>(rect: Rect, nx: usize, ny: usize, integrand: F) -> Result<(f64, f64)>
where
    F: Fn(Complex64) -> Result<f64> + Sync,
{
    let dx = (rect.x1 - rect.x0) / nx as f64;
    let dy = (rect.y1 - rect.y0) / ny as f64;
    let rows: Vec<(f64, f64)> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let y = rect.y0 + (j as f64 + 0.5) * dy;
            let mut sum = 0.0;
            let mut abs = 0.0;
            for i in 0..nx {
                let v = integrand(Complex64::new(rect.x0 + (i as f64 + 0.5) * dx, y))?;
                sum += v;
                abs += v.abs();
            }
            Ok((sum, abs))
        })
        .collect::<Result<_>>()?;
    let (sum, abs) = rows.iter().fold((0.0, 0.0), |acc, r| (acc.0 + r.0, acc.1 + r.1));
    Ok((sum * dx * dy, abs * dx * dy))
}

fn cells(len: f64, h: f64) -> usize {
    ((len / h).ceil() as usize).max(1)
}

fn check_support(bump: &TestBump, grid: &GridSpec) -> Result<()> {
    if let Some(d) = grid.domain().boundary_distance(bump.center()) {
        if d <= bump.radius {
            return Err(Error::OutsideDomain {
                at: bump.center(),
                domain: format!("{} (bump radius {})", grid.domain(), bump.radius),
            });
        }
    }
    Ok(())
}

/// `W(φ) = ∫⟨A∇u, ∇φ⟩ + ∫ f(u) φ` for one bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakResidual {
    pub bump: TestBump,
    pub value: f64,
    /// `∫|⟨A∇u, ∇φ⟩| + ∫|f(u) φ|`.
    pub scale: f64,
}

impl WeakResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value.abs() / self.scale
        } else {
            self.value.abs()
        }
    }
}

/// Weak-form residual of `div(A∇u) = f(u)` against each bump, by midpoint
/// quadrature at spacing `grid.h()` over the bump's bounding square.
///
/// Finitely many bumps are a sampled check of the weak formulation, not a
/// proof of it.
pub fn weak_residual(
    u: &dyn ScalarField,
    a: &ConductivityTensor,
    f: Nonlinearity,
    bumps: &[TestBump],
    grid: &GridSpec,
) -> Result<Vec<WeakResidual>> {
    bumps
        .iter()
        .map(|bump| {
            check_support(bump, grid)?;
            let rect = bump.support_rect();
            let n = cells(2.0 * bump.radius, grid.h());
            let integrand = |z: Complex64| -> Result<(f64, f64)> {
                let phi = bump.eval(z);
                if phi == 0.0 {
                    return Ok((0.0, 0.0));
                }
                let flux = a.at(z)?.apply(u.gradient(z)?);
                let source = f.eval(u.eval(z)?) * phi;
                Ok((dot(flux, bump.gradient(z)), source))
            };
            let (stiff, stiff_abs) = midpoint_sum(rect, n, n, |z| integrand(z).map(|v| v.0))?;
            let (load, load_abs) = midpoint_sum(rect, n, n, |z| integrand(z).map(|v| v.1))?;
            Ok(WeakResidual { bump: *bump, value: stiff + load, scale: stiff_abs + load_abs })
        })
        .collect()
}

/// Both sides of `∫⟨A∇(T∘ω), ∇φ⟩ = ∫⟨D_ω⁻¹∇T(ω), ∇φ⟩ J_ω` for one bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityDefect {
    pub bump: TestBump,
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
    /// `∫|⟨A∇(T∘ω), ∇φ⟩|`.
    pub scale: f64,
}

impl IdentityDefect {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.defect / self.scale
        } else {
            self.defect
        }
    }
}

fn check_agreement(map: &PlanarMap, a: &ConductivityTensor, bump: &TestBump) -> Result<()> {
    let c = bump.center();
    for i in -1..=1 {
        for j in -1..=1 {
            let z = c + Complex64::new(i as f64, j as f64) * (0.5 * bump.radius);
            if map.singular_points().iter().any(|p| (z - p).norm() < 1e-3) {
                continue;
            }
            let mu_map = numeric_dilatation(map, z, 1e-5)?;
            let mu_a = a.mu_at(z)?;
            let mismatch = (mu_map - mu_a).norm();
            if mismatch > AGREEMENT_TOLERANCE {
                return Err(Error::AgreementFailure { at: z, mismatch });
            }
        }
    }
    Ok(())
}

/// Bounding box of `ω(rect)` from samples of the rectangle's boundary
/// (the exact corners included).
fn image_bounding_box(map: &PlanarMap, rect: Rect) -> Result<Rect> {
    const PER_SIDE: usize = 256;
    let mut pts = vec![
        Complex64::new(rect.x0, rect.y0),
        Complex64::new(rect.x1, rect.y0),
        Complex64::new(rect.x0, rect.y1),
        Complex64::new(rect.x1, rect.y1),
    ];
    for k in 1..PER_SIDE {
        let t = k as f64 / PER_SIDE as f64;
        let x = rect.x0 + (rect.x1 - rect.x0) * t;
        let y = rect.y0 + (rect.y1 - rect.y0) * t;
        pts.extend([
            Complex64::new(x, rect.y0),
            Complex64::new(x, rect.y1),
            Complex64::new(rect.x0, y),
            Complex64::new(rect.x1, y),
        ]);
    }
    let mut b = Rect::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in pts {
        let w = map.eval(z)?;
        b.x0 = b.x0.min(w.re);
        b.x1 = b.x1.max(w.re);
        b.y0 = b.y0.min(w.im);
        b.y1 = b.y1.max(w.im);
    }
    Ok(b)
}

/// Check the weak chain-rule identity for each bump.
///
/// The left side is integrated over the bump's square in the `z`-plane. The
/// right side is integrated in the `w`-plane after the change of variables
/// `w = ω(z)`, `dm_w = J_ω dm_z`, over the bounding box of the image, using
/// the inverse map; the two quadratures therefore share no nodes unless `ω`
/// is the identity.
pub fn factorization_identity_check(
    t: &dyn ScalarField,
    map: &PlanarMap,
    a: &ConductivityTensor,
    bumps: &[TestBump],
    grid: &GridSpec,
) -> Result<Vec<IdentityDefect>> {
    if !map.has_inverse() {
        return Err(Error::InverseUnavailable(map.family().to_string()));
    }
    bumps
        .iter()
        .map(|bump| {
            check_support(bump, grid)?;
            if map.singular_points().iter().any(|p| (p - bump.center()).norm() <= bump.radius) {
                return Err(Error::TooCloseToBoundary { at: bump.center(), margin: bump.radius });
            }
            check_agreement(map, a, bump)?;
            let rect = bump.support_rect();
            let n = cells(2.0 * bump.radius, grid.h());
            let (lhs, scale) = midpoint_sum(rect, n, n, |z| {
                if bump.eval(z) == 0.0 {
                    return Ok(0.0);
                }
                let d = map.jacobian(z)?;
                let grad_t = t.gradient(map.eval(z)?)?;
                let grad_u = d.transpose().apply(grad_t);
                Ok(dot(a.at(z)?.apply(grad_u), bump.gradient(z)))
            })?;
            let image = image_bounding_box(map, rect)?;
            let nx = cells(image.x1 - image.x0, grid.h());
            let ny = cells(image.y1 - image.y0, grid.h());
            let (rhs, _) = midpoint_sum(image, nx, ny, |w| {
                let z = map.inverse(w)?;
                if bump.eval(z) == 0.0 {
                    return Ok(0.0);
                }
                let d_inv = map.jacobian(z)?.inverse().ok_or(Error::DegenerateDerivative { at: z, modulus: 0.0 })?;
                Ok(dot(d_inv.apply(t.gradient(w)?), bump.gradient(z)))
            })?;
            Ok(IdentityDefect { bump: *bump, lhs, rhs, defect: (lhs - rhs).abs(), scale })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::identity_map;
    use crate::exact::lb_disk_field;
    use crate::field::FnField;
    use crate::geometry::DomainDescriptor;

    fn disk_grid(h: f64) -> GridSpec {
        GridSpec::new(DomainDescriptor::UnitDisk, h, 0.1).unwrap()
    }

    #[test]
    fn bump_gradient_matches_differences() {
        let b = TestBump::new(Complex64::new(0.1, -0.2), 0.3).unwrap();
        let z = Complex64::new(0.2, -0.1);
        let h = 1e-6;
        let gx = (b.eval(z + h) - b.eval(z - h)) / (2.0 * h);
        let gy = (b.eval(z + Complex64::new(0.0, h)) - b.eval(z - Complex64::new(0.0, h))) / (2.0 * h);
        let g = b.gradient(z);
        assert!((g[0] - gx).abs() < 1e-8 && (g[1] - gy).abs() < 1e-8);
        assert_eq!(b.gradient(Complex64::new(0.5, 0.5)), [0.0, 0.0]);
    }

    #[test]
    fn random_bumps_are_reproducible() {
        let rect = Rect::new(-0.5, 0.5, -0.5, 0.5);
        let a = TestBump::random(rect, (0.05, 0.2), 5, 7, |_| true).unwrap();
        let b = TestBump::random(rect, (0.05, 0.2), 5, 7, |_| true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_field_has_zero_weak_residual() {
        let u = FnField::constant(2.0);
        let bumps = [TestBump::new(Complex64::new(0.1, 0.1), 0.3).unwrap()];
        let w = weak_residual(&u, &ConductivityTensor::identity(), Nonlinearity::Zero, &bumps, &disk_grid(1.0 / 64.0)).unwrap();
        assert_eq!(w[0].value, 0.0);
    }

    #[test]
    fn lb_disk_weak_residual_small() {
        let u = lb_disk_field();
        let bumps = TestBump::random(Rect::new(-0.5, 0.5, -0.5, 0.5), (0.1, 0.25), 4, 1, |_| true).unwrap();
        let w = weak_residual(u.as_ref(), &ConductivityTensor::identity(), Nonlinearity::Exp, &bumps, &disk_grid(1.0 / 256.0)).unwrap();
        for r in w {
            assert!(r.relative() < 1e-4, "{r:?}");
        }
    }

    #[test]
    fn support_outside_domain_rejected() {
        let u = FnField::constant(0.0);
        let bumps = [TestBump::new(Complex64::new(0.9, 0.0), 0.2).unwrap()];
        assert!(weak_residual(&u, &ConductivityTensor::identity(), Nonlinearity::Zero, &bumps, &disk_grid(0.05)).is_err());
    }

    #[test]
    fn identity_map_defect_is_exactly_zero() {
        let t = lb_disk_field();
        let bumps = [TestBump::new(Complex64::new(0.2, 0.1), 0.3).unwrap()];
        let d = factorization_identity_check(t.as_ref(), &identity_map(), &ConductivityTensor::identity(), &bumps, &disk_grid(1.0 / 64.0)).unwrap();
        assert_eq!(d[0].defect, 0.0);
        assert!(d[0].scale > 0.0);
    }

    #[test]
    fn disagreeing_tensor_rejected() {
        let t = lb_disk_field();
        let bumps = [TestBump::new(Complex64::new(0.2, 0.1), 0.3).unwrap()];
        let err = factorization_identity_check(t.as_ref(), &identity_map(), &ConductivityTensor::log_spiral(), &bumps, &disk_grid(1.0 / 64.0))
            .unwrap_err();
        assert!(matches!(err, Error::AgreementFailure { .. }));
    }
}
