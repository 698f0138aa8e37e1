use std::sync::Arc;

use num_complex::Complex64;

use crate::atlas::{map_for_dilatation, MapFamily, PlanarMap};
use crate::error::{Error, Result};
use crate::field::{FnField, ScalarField, SharedField};
use crate::geometry::{DomainDescriptor, Vec2};
use crate::nonlinearity::Nonlinearity;
use crate::quadrature::QuadratureSpec;
use crate::tensor::ConductivityTensor;

use super::dirichlet::{solve_dirichlet, SolveOptions, SolveOutcome};
use super::grid::{DiskGridField, SolveStatus};

/// Largest tolerated gap between the tensor's dilatation and its declared
/// structure at the spot checks of [`factorize`].
const STRUCTURE_TOLERANCE: f64 = 1e-8;

/// `u = T∘ω`.
#[derive(Clone)]
pub struct ComposedField {
    t: SharedField,
    map: PlanarMap,
}

impl ComposedField {
    pub fn outer(&self) -> &SharedField {
        &self.t
    }

    pub fn map(&self) -> &PlanarMap {
        &self.map
    }
}

impl std::fmt::Debug for ComposedField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ComposedField({} ∘ {})", self.t.label(), self.map.family())
    }
}

impl ScalarField for ComposedField {
    fn eval(&self, z: Complex64) -> Result<f64> {
        self.t.eval(self.map.eval(z)?)
    }

    /// Chain rule `∇u = Dωᵀ ∇T(ω)`.
    fn analytic_gradient(&self, z: Complex64) -> Option<Result<Vec2>> {
        Some((|| {
            let w = self.map.eval(z)?;
            let d = self.map.jacobian(z)?;
            Ok(d.transpose().apply(self.t.gradient(w)?))
        })())
    }

    fn label(&self) -> String {
        format!("{} ∘ {}", self.t.label(), self.map.family())
    }
}

pub fn compose(t: SharedField, map: PlanarMap) -> ComposedField {
    ComposedField { t, map }
}

/// `ψ = φ∘ω⁻¹`, defined wherever the inverse is.
pub fn pullback_boundary(phi: SharedField, map: &PlanarMap) -> Result<FnField> {
    if !map.has_inverse() {
        return Err(Error::InverseUnavailable(format!("{} map", map.family())));
    }
    let m = map.clone();
    let label = format!("{} ∘ {}⁻¹", phi.label(), map.family());
    Ok(FnField::new(label, move |w| phi.eval(m.inverse(w)?)))
}

/// Output of [`factorize`].
#[derive(Debug, Clone)]
pub struct Factorization {
    pub map: PlanarMap,
    pub t: DiskGridField,
    pub u: ComposedField,
    pub status: SolveStatus,
    pub history: Vec<f64>,
    pub monotone: bool,
}

/// The disk in the `w`-plane that `ω` carries `Ω` onto.
fn canonical_disk(map: &PlanarMap, omega: DomainDescriptor) -> Result<(Complex64, f64)> {
    match omega {
        DomainDescriptor::MappedDisk { center, radius } => Ok((Complex64::new(center[0], center[1]), radius)),
        DomainDescriptor::UnitDisk | DomainDescriptor::Disk { .. } => {
            let (c, r) = match omega {
                DomainDescriptor::Disk { center, radius } => (Complex64::new(center[0], center[1]), radius),
                _ => (Complex64::new(0.0, 0.0), 1.0),
            };
            match map.family() {
                MapFamily::Identity => Ok((c, r)),
                MapFamily::Radial | MapFamily::LogSpiral if c == Complex64::new(0.0, 0.0) => {
                    if !map.is_volume_preserving() {
                        return Err(Error::InverseUnavailable(
                            "radial map without volume preservation".into(),
                        ));
                    }
                    // |ω(z)| = |z|, so centered disks are invariant.
                    Ok((c, r))
                }
                fam => Err(Error::InvalidParameter(format!(
                    "the {fam} map does not carry {omega} onto a disk; pass a mapped-disk domain"
                ))),
            }
        }
        other => Err(Error::InvalidParameter(format!("factorization needs a disk-like domain, got {other}"))),
    }
}

fn check_structure(a: &ConductivityTensor, map: &PlanarMap, center: Complex64, rho: f64) -> Result<()> {
    let field = a.dilatation().expect("checked by caller");
    for k in 0..8 {
        let w = center + Complex64::from_polar(0.5 * rho, k as f64 * std::f64::consts::FRAC_PI_4);
        let z = map.inverse(w)?;
        if map.singular_points().iter().any(|p| (z - p).norm() < 1e-6) {
            continue;
        }
        let mismatch = (a.mu_at(z)? - field.eval(z)).norm();
        if mismatch > STRUCTURE_TOLERANCE {
            return Err(Error::AgreementFailure { at: z, mismatch });
        }
    }
    Ok(())
}

/// Solve `div(A∇u) = f(u)` in `Ω` with `u = φ` on `∂Ω` as `u = T∘ω`.
///
/// `A` must carry a declared dilatation structure with an atlas map. `Ω` is
/// a disk centered at the origin for radial families (any disk for the
/// identity) or a [`DomainDescriptor::MappedDisk`], the preimage of a disk
/// under `ω`; the disk in `opts` is replaced by the one `Ω` determines.
/// `J = 1/J_ω(ω⁻¹(w))`, taken as 1 for volume-preserving maps.
pub fn factorize(
    a: &ConductivityTensor,
    omega: DomainDescriptor,
    f: Nonlinearity,
    phi: SharedField,
    opts: &SolveOptions,
) -> Result<Factorization> {
    let field = a
        .dilatation()
        .ok_or_else(|| Error::UnsupportedStructure(format!("tensor '{}' declares no dilatation structure", a.label())))?;
    let map = map_for_dilatation(field, QuadratureSpec::default())?.with_domain(omega);
    if !map.has_inverse() {
        return Err(Error::InverseUnavailable(format!("{} map", map.family())));
    }
    let (center, rho) = canonical_disk(&map, omega)?;
    check_structure(a, &map, center, rho)?;
    let opts = SolveOptions { rho, center: [center.re, center.im], ..*opts };

    let weight: FnField = if map.is_volume_preserving() {
        FnField::constant(1.0)
    } else {
        let m = map.clone();
        FnField::new("1/J(ω⁻¹)", move |w| Ok(1.0 / m.jacobian_det(m.inverse(w)?)?))
    };
    let psi = pullback_boundary(phi, &map)?.into_shared();
    let SolveOutcome { field: t, status, history, monotone } = solve_dirichlet(&weight, f, psi, &opts)?;
    let u = compose(Arc::new(t.clone()), map.clone());
    Ok(Factorization { map, t, u, status, history, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{identity_map, log_spiral_map};
    use crate::exact::{lb_disk, lb_disk_field};
    use crate::tensor::TensorEntries;

    #[test]
    fn compose_with_spiral_preserves_modulus() {
        let u = compose(lb_disk_field(), log_spiral_map());
        for z in [Complex64::new(0.3, 0.4), Complex64::new(-0.7, 0.1)] {
            assert!((u.eval(z).unwrap() - lb_disk(z).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn compose_with_identity_is_identity() {
        let u = compose(lb_disk_field(), identity_map());
        let z = Complex64::new(0.2, -0.5);
        assert_eq!(u.eval(z).unwrap(), lb_disk(z).unwrap());
        assert_eq!(u.gradient(z).unwrap(), lb_disk_field().gradient(z).unwrap());
    }

    #[test]
    fn pullback_through_spiral_keeps_modulus() {
        let phi = FnField::total("abs", |z| z.norm()).into_shared();
        let psi = pullback_boundary(phi, &log_spiral_map()).unwrap();
        let w = Complex64::from_polar(0.9, 1.3);
        assert!((psi.eval(w).unwrap() - 0.9).abs() < 1e-14);
    }

    #[test]
    fn identity_factorization_matches_direct_solve() {
        let phi = FnField::new("lb", lb_disk).into_shared();
        let opts = SolveOptions::default().with_h(1.0 / 16.0);
        let omega = DomainDescriptor::disk(Complex64::new(0.0, 0.0), 0.9).unwrap();
        let fac = factorize(&ConductivityTensor::identity(), omega, Nonlinearity::Exp, phi.clone(), &opts).unwrap();
        let direct = solve_dirichlet(&FnField::constant(1.0), Nonlinearity::Exp, phi, &opts.with_rho(0.9)).unwrap();
        assert_eq!(fac.t.active_points(), direct.field.active_points());
    }

    #[test]
    fn general_tensor_rejected() {
        let a = ConductivityTensor::from_fn("x-dependent", |z| TensorEntries::new(1.0, 0.0, 1.0 + 0.0 * z.re));
        let phi = FnField::constant(0.0).into_shared();
        let err = factorize(&a, DomainDescriptor::UnitDisk, Nonlinearity::Zero, phi, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::UnsupportedStructure(_)));
    }

    #[test]
    fn constant_tensor_needs_mapped_disk() {
        let a = ConductivityTensor::constant(TensorEntries::new(1.0, -2.0, 5.0)).unwrap();
        let phi = FnField::constant(0.0).into_shared();
        assert!(factorize(&a, DomainDescriptor::UnitDisk, Nonlinearity::Zero, phi, &SolveOptions::default()).is_err());
    }
}
