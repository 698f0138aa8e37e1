use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ScalarField, SpaceTimeField};
use crate::nonlinearity::Nonlinearity;
use crate::tensor::{ConductivityTensor, TensorEntries};

use super::grid::{GridSpec, SamplePoint};
use super::report::{ResidualReport, ResidualSample};

/// Earliest time at which heat residuals are taken.
pub const HEAT_MIN_TIME: f64 = 0.1;

/// Offsets of the 3×3 stencil, row-major from the south-west corner.
const STENCIL: [(f64, f64); 9] =
    [(-1.0, -1.0), (0.0, -1.0), (1.0, -1.0), (-1.0, 0.0), (0.0, 0.0), (1.0, 0.0), (-1.0, 1.0), (0.0, 1.0), (1.0, 1.0)];
const SW: usize = 0;
const S: usize = 1;
const SE: usize = 2;
const W: usize = 3;
const C: usize = 4;
const E: usize = 5;
const NW: usize = 6;
const N: usize = 7;
const NE: usize = 8;

fn face(a: &TensorEntries, b: &TensorEntries) -> TensorEntries {
    TensorEntries::new(0.5 * (a.a11 + b.a11), 0.5 * (a.a12 + b.a12), 0.5 * (a.a22 + b.a22))
}

/// Conservative divergence of `A∇u` at the stencil center.
///
/// `A` is averaged from the node values onto the four faces; the normal
/// derivative at a face is a two-point difference and the tangential one a
/// four-point average. With `A = I` this is exactly the 5-point Laplacian.
/// `a` holds the tensor at `[C, E, W, N, S]`.
fn flux_divergence(u: &[f64; 9], a: &[TensorEntries; 5], h: f64) -> f64 {
    let [ac, ae, aw, an, as_] = a;
    let (fe, fw, fn_, fs) = (face(ac, ae), face(ac, aw), face(ac, an), face(ac, as_));

    let ux_e = (u[E] - u[C]) / h;
    let uy_e = (u[N] + u[NE] - u[S] - u[SE]) / (4.0 * h);
    let ux_w = (u[C] - u[W]) / h;
    let uy_w = (u[NW] + u[N] - u[SW] - u[S]) / (4.0 * h);
    let uy_n = (u[N] - u[C]) / h;
    let ux_n = (u[E] + u[NE] - u[W] - u[NW]) / (4.0 * h);
    let uy_s = (u[C] - u[S]) / h;
    let ux_s = (u[E] + u[SE] - u[W] - u[SW]) / (4.0 * h);

    let flux_e = fe.a11 * ux_e + fe.a12 * uy_e;
    let flux_w = fw.a11 * ux_w + fw.a12 * uy_w;
    let flux_n = fn_.a12 * ux_n + fn_.a22 * uy_n;
    let flux_s = fs.a12 * ux_s + fs.a22 * uy_s;
    (flux_e - flux_w) / h + (flux_n - flux_s) / h
}

fn stencil_values<F>(z: Complex64, h: f64, mut eval: F) -> Result<[f64; 9]>
where
    F: FnMut(Complex64) -> Result<f64>,
{
    let mut u = [0.0; 9];
    for (k, (dx, dy)) in STENCIL.iter().enumerate() {
        u[k] = eval(z + Complex64::new(dx * h, dy * h))?;
    }
    Ok(u)
}

fn tensor_values(a: &ConductivityTensor, z: Complex64, h: f64) -> Result<[TensorEntries; 5]> {
    let at = |dx: f64, dy: f64| a.at(z + Complex64::new(dx * h, dy * h));
    Ok([at(0.0, 0.0)?, at(1.0, 0.0)?, at(-1.0, 0.0)?, at(0.0, 1.0)?, at(0.0, -1.0)?])
}

fn checked(z: Complex64, r: f64) -> Result<ResidualSample> {
    if !r.is_finite() {
        return Err(Error::Evaluation { at: z, reason: format!("non-finite residual {r}") });
    }
    Ok(ResidualSample { x: z.re, y: z.im, value: r })
}

fn collect<F>(points: &[SamplePoint], f: F) -> Result<Vec<ResidualSample>>
where
    F: Fn(&SamplePoint) -> Result<ResidualSample> + Sync,
{
    // Ordered collect keeps the report independent of scheduling.
    points.par_iter().map(&f).collect()
}

/// `D_h(A∇u) − f(u)` at every grid sample.
pub fn strong_residual(
    u: &dyn ScalarField,
    a: &ConductivityTensor,
    f: Nonlinearity,
    grid: &GridSpec,
) -> Result<ResidualReport> {
    let h = grid.h();
    let points = grid.sample_points();
    let samples = collect(&points, |p| {
        let vals = stencil_values(p.z, h, |z| u.eval(z))?;
        let at = tensor_values(a, p.z, h)?;
        checked(p.z, flux_divergence(&vals, &at, h) - f.eval(vals[C]))
    })?;
    ResidualReport::from_samples(format!("{}|{}", u.label(), a.label()), h, grid.margin(), samples)
}

/// `Δ_h T − J f(T)` with the 5-point Laplacian.
pub fn laplace_residual(
    t: &dyn ScalarField,
    j: &dyn ScalarField,
    f: Nonlinearity,
    grid: &GridSpec,
) -> Result<ResidualReport> {
    let h = grid.h();
    let points = grid.sample_points();
    let identity = [TensorEntries::IDENTITY; 5];
    let samples = collect(&points, |p| {
        let vals = stencil_values(p.z, h, |z| t.eval(z))?;
        let weight = j.eval(p.z)?;
        checked(p.z, flux_divergence(&vals, &identity, h) - weight * f.eval(vals[C]))
    })?;
    ResidualReport::from_samples(format!("laplace|{}", t.label()), h, grid.margin(), samples)
}

/// `(u(t+Δt) − u(t−Δt))/(2Δt) − a² D_h(A∇u) − f(u)` with `Δt = h`, over all
/// grid samples at each time in `times` (time-major order).
pub fn heat_residual(
    u: &dyn SpaceTimeField,
    a_tensor: &ConductivityTensor,
    a: f64,
    f: Nonlinearity,
    grid: &GridSpec,
    times: &[f64],
) -> Result<ResidualReport> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("heat residual needs at least one time".into()));
    }
    if let Some(t) = times.iter().find(|&&t| !(t >= HEAT_MIN_TIME)) {
        return Err(Error::InvalidParameter(format!("time {t} is below the margin {HEAT_MIN_TIME}")));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("diffusivity a = {a} must be positive")));
    }
    let h = grid.h();
    let dt = h;
    let points = grid.sample_points();
    let mut samples = Vec::with_capacity(points.len() * times.len());
    for &t in times {
        samples.extend(collect(&points, |p| {
            let vals = stencil_values(p.z, h, |z| u.eval(z, t))?;
            let at = tensor_values(a_tensor, p.z, h)?;
            let ut = (u.eval(p.z, t + dt)? - u.eval(p.z, t - dt)?) / (2.0 * dt);
            checked(p.z, ut - a * a * flux_divergence(&vals, &at, h) - f.eval(vals[C]))
        })?);
    }
    ResidualReport::from_samples(format!("heat|{}|{}", u.label(), a_tensor.label()), h, grid.margin(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{heat_kernel, lb_disk_field, HeatKernel};
    use crate::field::{FnField, FnSpaceTimeField};
    use crate::geometry::{DomainDescriptor, Rect};
    use crate::tensor::tensor_from_mu;

    fn disk_grid(h: f64) -> GridSpec {
        GridSpec::new(DomainDescriptor::UnitDisk, h, (2.0 * h).max(0.1)).unwrap()
    }

    #[test]
    fn zero_field_has_zero_residual() {
        let u = FnField::constant(0.0);
        let r = strong_residual(&u, &ConductivityTensor::log_spiral(), Nonlinearity::Zero, &disk_grid(1.0 / 16.0));
        // The spiral tensor is undefined at the origin; keep away from it.
        assert!(r.is_err());
        let g = disk_grid(1.0 / 16.0).with_singular(super::super::SingularSet::Point(Complex64::new(0.0, 0.0)));
        let r = strong_residual(&u, &ConductivityTensor::log_spiral(), Nonlinearity::Zero, &g).unwrap();
        assert_eq!(r.linf, 0.0);
    }

    #[test]
    fn affine_fields_exact_for_constant_tensors() {
        let a = ConductivityTensor::constant(TensorEntries::new(1.0, -2.0, 5.0)).unwrap();
        let u = FnField::total("affine", |z| 0.3 + 1.7 * z.re - 2.9 * z.im);
        // Exact up to rounding, which grows like eps·|u|/h².
        let r = strong_residual(&u, &a, Nonlinearity::Zero, &disk_grid(1.0 / 8.0)).unwrap();
        assert!(r.linf <= 1e-12, "{}", r.linf);
    }

    #[test]
    fn identity_tensor_matches_laplacian() {
        let a = ConductivityTensor::from_fn("mu=0", |_| tensor_from_mu(Complex64::new(0.0, 0.0)).unwrap());
        let u = lb_disk_field();
        let one = FnField::constant(1.0);
        let g = disk_grid(1.0 / 32.0);
        let s = strong_residual(u.as_ref(), &a, Nonlinearity::Exp, &g).unwrap();
        let l = laplace_residual(u.as_ref(), &one, Nonlinearity::Exp, &g).unwrap();
        for (x, y) in s.residuals.iter().zip(&l.residuals) {
            assert!((x.value - y.value).abs() <= 1e-14 * x.value.abs().max(1.0));
        }
    }

    #[test]
    fn harmonic_quadratic_is_exact() {
        let u = FnField::total("re z^2", |z| z.re * z.re - z.im * z.im);
        let r = laplace_residual(&u, &FnField::constant(1.0), Nonlinearity::Zero, &disk_grid(1.0 / 16.0)).unwrap();
        assert!(r.linf < 1e-11, "{}", r.linf);
    }

    #[test]
    fn lb_disk_identity_second_order() {
        let u = lb_disk_field();
        let reports: Vec<_> = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]
            .iter()
            .map(|&h| strong_residual(u.as_ref(), &ConductivityTensor::identity(), Nonlinearity::Exp, &disk_grid(h)).unwrap())
            .collect();
        let est = super::super::convergence_order(&reports).unwrap();
        assert!((1.8..=2.2).contains(&est.order), "order {}", est.order);
    }

    #[test]
    fn constant_heat_field_has_zero_residual() {
        let u = FnSpaceTimeField::new("one", |_, _| Ok(1.0));
        let g = GridSpec::new(DomainDescriptor::Plane, 0.125, 0.25)
            .unwrap()
            .with_window(Rect::new(-1.0, 1.0, -1.0, 1.0))
            .unwrap();
        let r = heat_residual(&u, &ConductivityTensor::identity(), 1.0, Nonlinearity::Zero, &g, &[0.5]).unwrap();
        assert_eq!(r.linf, 0.0);
        assert!(heat_residual(&u, &ConductivityTensor::identity(), 1.0, Nonlinearity::Zero, &g, &[0.05]).is_err());
    }

    #[test]
    fn heat_kernel_residual_decays() {
        let g = GridSpec::new(DomainDescriptor::Plane, 1.0 / 16.0, 0.125)
            .unwrap()
            .with_window(Rect::new(-1.0, 1.0, -1.0, 1.0))
            .unwrap();
        let k = HeatKernel { a: 1.0 };
        assert!((k.eval(Complex64::new(0.0, 0.0), 1.0).unwrap() - heat_kernel(Complex64::new(0.0, 0.0), 1.0, 1.0).unwrap()).abs() == 0.0);
        let r1 = heat_residual(&k, &ConductivityTensor::identity(), 1.0, Nonlinearity::Zero, &g, &[0.5, 1.0]).unwrap();
        let r2 = heat_residual(&k, &ConductivityTensor::identity(), 1.0, Nonlinearity::Zero, &g.with_h(1.0 / 32.0).unwrap(), &[0.5, 1.0]).unwrap();
        let ratio = r1.linf / r2.linf;
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }
}
