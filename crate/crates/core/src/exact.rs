//! Closed-form solutions of `div(A∇u) = f(u)` and of the heat equation,
//! each paired with the tensors it solves for.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficient::Coefficient;
use crate::error::{Error, Result};
use crate::field::{FnField, ScalarField, SharedField, SpaceTimeField};
use crate::geometry::{DomainDescriptor, Rect, Vec2};
use crate::nonlinearity::Nonlinearity;
use crate::quadrature::{integrate, integrate_with_breaks, QuadratureSpec};
use crate::tensor::{ConductivityTensor, DilatationField, Sign, TensorEntries};
use crate::verify::{GridSpec, SingularSet};

fn outside(z: Complex64, domain: &str) -> Error {
    Error::OutsideDomain { at: z, domain: domain.into() }
}

/// `log(8/(1 − |z|²)²)` on the unit disk.
pub fn lb_disk(z: Complex64) -> Result<f64> {
    let m = z.norm_sqr();
    if !(m < 1.0) {
        return Err(outside(z, "unit disk"));
    }
    Ok(8f64.ln() - 2.0 * (-m).ln_1p())
}

fn lb_disk_gradient(z: Complex64) -> Result<Vec2> {
    let m = z.norm_sqr();
    if !(m < 1.0) {
        return Err(outside(z, "unit disk"));
    }
    let s = 4.0 / (1.0 - m);
    Ok([s * z.re, s * z.im])
}

/// `log(2π² / (|z|² log²r · sin²(π log|z| / log r)))` on `r < |z| < 1`.
pub fn lb_annulus(z: Complex64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("annulus radius r = {r} must lie in (0, 1)")));
    }
    let rho = z.norm();
    if !(rho > r && rho < 1.0) {
        return Err(outside(z, &format!("annulus({r} < |z| < 1)")));
    }
    let lr = r.ln();
    let s = (PI * rho.ln() / lr).sin();
    Ok((2.0 * PI * PI).ln() - 2.0 * rho.ln() - 2.0 * lr.abs().ln() - 2.0 * s.abs().ln())
}

/// `log(2 / (|z|² log²|z|))` on `0 < |z| < 1`.
pub fn lb_punctured_disk(z: Complex64) -> Result<f64> {
    let rho = z.norm();
    if !(rho > 0.0 && rho < 1.0) {
        return Err(outside(z, "punctured unit disk"));
    }
    Ok(2f64.ln() - 2.0 * rho.ln() - 2.0 * rho.ln().abs().ln())
}

/// The two boundary blow-up solutions on the right half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HalfplaneVariant {
    /// `log(2/x²)`.
    LogTwoOverXSquared,
    /// `log 8λ² − 2λx − 2 log(1 − e^{−2λx})`.
    Lambda { lambda: f64 },
}

pub fn halfplane_blowup(z: Complex64, variant: HalfplaneVariant) -> Result<f64> {
    let x = z.re;
    if !(x > 0.0) {
        return Err(outside(z, "right half-plane"));
    }
    match variant {
        HalfplaneVariant::LogTwoOverXSquared => Ok(2f64.ln() - 2.0 * x.ln()),
        HalfplaneVariant::Lambda { lambda } => {
            if !(lambda > 0.0) {
                return Err(Error::InvalidParameter(format!("lambda = {lambda} must be positive")));
            }
            Ok((8.0 * lambda * lambda).ln() - 2.0 * lambda * x - 2.0 * (-(-2.0 * lambda * x).exp()).ln_1p())
        }
    }
}

fn halfplane_gradient(z: Complex64, variant: HalfplaneVariant) -> Result<Vec2> {
    let x = z.re;
    if !(x > 0.0) {
        return Err(outside(z, "right half-plane"));
    }
    let ux = match variant {
        HalfplaneVariant::LogTwoOverXSquared => -2.0 / x,
        HalfplaneVariant::Lambda { lambda } => {
            let e = (-2.0 * lambda * x).exp();
            -2.0 * lambda - 4.0 * lambda * e / (1.0 - e)
        }
    };
    Ok([ux, 0.0])
}

/// `(4πa²t)⁻¹ exp(−|z|²/(4a²t))`.
pub fn heat_kernel(z: Complex64, t: f64, a: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("time t = {t} must be positive")));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("diffusivity a = {a} must be positive")));
    }
    let s = 4.0 * a * a * t;
    Ok((-z.norm_sqr() / s).exp() / (PI * s))
}

/// The heat kernel as a space-time field.
#[derive(Debug, Clone, Copy)]
pub struct HeatKernel {
    pub a: f64,
}

impl SpaceTimeField for HeatKernel {
    fn eval(&self, z: Complex64, t: f64) -> Result<f64> {
        heat_kernel(z, t, self.a)
    }

    fn label(&self) -> String {
        format!("heat-kernel(a={})", self.a)
    }
}

/// Solution of `div(A∇u) = u^q` with a dead zone below the free boundary
/// `y = φ(x)`:
///
/// `u = γ (y − φ(x))^{2/(1−q)}` for `y > φ(x)`, `u = 0` otherwise, with
/// `γ = ((1−q)²/(2(1+q)))^{1/(1−q)}` and `φ(x) = ∓∫₀ˣ 2ν/√(1−ν²) dt`.
///
/// The tensor is generated by the `x`-only dilatation `ν² ± iν√(1−ν²)`
/// with the same sign `±`; with this convention `φ' = a12`.
#[derive(Debug, Clone)]
pub struct DeadZoneSolution {
    nu: Coefficient,
    q: f64,
    sign: Sign,
    gamma: f64,
    exponent: f64,
    quad: QuadratureSpec,
}

impl DeadZoneSolution {
    pub fn new(nu: Coefficient, q: f64, sign: Sign) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("q = {q} must lie in (0, 1)")));
        }
        // Validates |ν| < 1 on the sampling window.
        DilatationField::horizontal_volume_preserving(&nu, sign)?;
        let gamma = ((1.0 - q).powi(2) / (2.0 * (1.0 + q))).powf(1.0 / (1.0 - q));
        Ok(DeadZoneSolution {
            nu,
            q,
            sign,
            gamma,
            exponent: 2.0 / (1.0 - q),
            quad: QuadratureSpec::default(),
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        Nonlinearity::Power { q: self.q }
    }

    fn slope(&self, x: f64) -> f64 {
        let v = self.nu.eval(x).re;
        -self.sign.value() * 2.0 * v / (1.0 - v * v).sqrt()
    }

    /// The free boundary `φ(x)`.
    pub fn free_boundary(&self, x: f64) -> Result<f64> {
        if let Some(c) = self.nu.as_constant() {
            let v = c.re;
            return Ok(-self.sign.value() * 2.0 * v / (1.0 - v * v).sqrt() * x);
        }
        let v = integrate_with_breaks(
            |t| Ok(Complex64::new(self.slope(t), 0.0)),
            0.0,
            x,
            self.nu.breakpoints(),
            &self.quad,
        )?;
        Ok(v.re)
    }

    pub fn eval(&self, z: Complex64) -> Result<f64> {
        let d = z.im - self.free_boundary(z.re)?;
        Ok(if d > 0.0 { self.gamma * d.powf(self.exponent) } else { 0.0 })
    }

    pub fn gradient(&self, z: Complex64) -> Result<Vec2> {
        let d = z.im - self.free_boundary(z.re)?;
        if d <= 0.0 {
            return Ok([0.0, 0.0]);
        }
        let uy = self.gamma * self.exponent * d.powf(self.exponent - 1.0);
        Ok([-self.slope(z.re) * uy, uy])
    }

    /// The agreed tensor: generated by `ν² ± iν√(1−ν²)` as an `x`-only field.
    pub fn tensor(&self) -> Result<ConductivityTensor> {
        Ok(ConductivityTensor::from_dilatation(DilatationField::horizontal_volume_preserving(
            &self.nu, self.sign,
        )?))
    }
}

impl ScalarField for DeadZoneSolution {
    fn eval(&self, z: Complex64) -> Result<f64> {
        DeadZoneSolution::eval(self, z)
    }

    fn analytic_gradient(&self, z: Complex64) -> Option<Result<Vec2>> {
        Some(self.gradient(z))
    }

    fn label(&self) -> String {
        format!("dead-zone(q={}, sign={})", self.q, self.sign)
    }
}

/// Verdict of [`keller_osserman_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum KellerOsserman {
    Satisfied { ratios: Vec<f64> },
    Violated { ratios: Vec<f64> },
    Inconclusive { reason: String },
}

/// Truncation points for the outer integral.
pub const KO_SCHEDULE: [f64; 5] = [10.0, 20.0, 40.0, 80.0, 160.0];
/// Increment ratio below which the tail is taken to decay geometrically.
pub const KO_DECAY_RATIO: f64 = 0.75;
/// Increment ratio above which the tail is taken to stall.
pub const KO_STALL_RATIO: f64 = 0.95;

/// Numerical test of `∫_{t0}^∞ (∫₀ᵗ f)^{−1/2} dt < ∞`.
///
/// `f` is any growth function, e.g. `|t| Nonlinearity::Exp.eval(t)` or a
/// monomial `t^p`. The outer integral is truncated at each `T` of
/// [`KO_SCHEDULE`]; the ratios of successive increments decide the verdict.
pub fn keller_osserman_check<F: Fn(f64) -> f64>(f: F, t0: f64) -> KellerOsserman {
    if !(t0 > 0.0 && t0 < KO_SCHEDULE[0]) {
        return KellerOsserman::Inconclusive { reason: format!("t0 = {t0} outside (0, 10)") };
    }
    let top = KO_SCHEDULE[KO_SCHEDULE.len() - 1];
    let mut prev = f(t0);
    for i in 0..=2000 {
        let t = t0 + (top - t0) * i as f64 / 2000.0;
        let v = f(t);
        if !(v > 0.0) || !v.is_finite() {
            return KellerOsserman::Inconclusive { reason: format!("f({t}) = {v} is not positive") };
        }
        if v < prev {
            return KellerOsserman::Inconclusive { reason: format!("f decreases near t = {t}") };
        }
        prev = v;
    }

    let spec = QuadratureSpec { abs_tol: 1e-12, rel_tol: 1e-12, max_subdivisions: 4000 };
    let inner = |t: f64| -> Result<f64> {
        Ok(integrate(|s| Ok(Complex64::new(f(s), 0.0)), 0.0, t, &spec)?.re)
    };
    let outer = |a: f64, b: f64| -> Result<f64> {
        Ok(integrate(|t| Ok(Complex64::new(inner(t)?.powf(-0.5), 0.0)), a, b, &spec)?.re)
    };
    let mut increments = Vec::new();
    let mut a = t0;
    for &b in &KO_SCHEDULE {
        match outer(a, b) {
            Ok(v) => increments.push(v),
            Err(e) => return KellerOsserman::Inconclusive { reason: e.to_string() },
        }
        a = b;
    }
    // The first increment covers [t0, 10] and is not part of the doubling.
    let ratios: Vec<f64> = increments[1..].windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().all(|&r| r <= KO_DECAY_RATIO) {
        KellerOsserman::Satisfied { ratios }
    } else if ratios.last().is_some_and(|&r| r >= KO_STALL_RATIO) {
        KellerOsserman::Violated { ratios }
    } else {
        KellerOsserman::Inconclusive { reason: format!("increment ratios {ratios:?}") }
    }
}

/// Which equation a catalog entry solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationTag {
    LbExp,
    PowerQ,
    Heat,
    Linear,
}

/// A catalog entry: a closed-form steady solution, the tensors it solves
/// `div(A∇u) = f(u)` for, and a grid on which to check it.
#[derive(Clone)]
pub struct ExactSolution {
    pub id: String,
    pub field: SharedField,
    pub equation: EquationTag,
    pub nonlinearity: Nonlinearity,
    pub domain: DomainDescriptor,
    /// Admissible tensors, labelled.
    pub tensors: Vec<(String, ConductivityTensor)>,
    pub blow_up: bool,
    /// Residual-check grid at spacing `h` (the sampling window and singular
    /// sets are part of the entry).
    grid: Arc<dyn Fn(f64) -> Result<GridSpec> + Send + Sync>,
}

impl std::fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExactSolution")
            .field("id", &self.id)
            .field("equation", &self.equation)
            .field("domain", &self.domain)
            .field("tensors", &self.tensors.iter().map(|t| &t.0).collect::<Vec<_>>())
            .finish()
    }
}

impl ExactSolution {
    pub fn grid(&self, h: f64) -> Result<GridSpec> {
        (self.grid)(h)
    }
}

/// Radial tensor generated by the volume-preserving coefficient of constant `ν`.
pub fn radial_volume_preserving_tensor(nu: f64, sign: Sign) -> Result<ConductivityTensor> {
    Ok(ConductivityTensor::from_dilatation(DilatationField::radial_volume_preserving(
        &Coefficient::real_constant(nu),
        sign,
    )?))
}

/// Tensors solved by the radially symmetric blow-up solutions.
fn radial_family() -> Result<Vec<(String, ConductivityTensor)>> {
    Ok(vec![
        ("identity".into(), ConductivityTensor::identity()),
        ("spiral".into(), ConductivityTensor::log_spiral()),
        ("radial:0.3".into(), radial_volume_preserving_tensor(0.3, Sign::Minus)?),
    ])
}

/// Tensors solved by functions of `x` alone that blow up at `x = 0`.
fn horizontal_family() -> Result<Vec<(String, ConductivityTensor)>> {
    let profile = Coefficient::from_real_fn("0.5 sin x", |x| 0.5 * x.sin());
    Ok(vec![
        ("identity".into(), ConductivityTensor::identity()),
        ("const:1,-2,5".into(), ConductivityTensor::constant(TensorEntries::new(1.0, -2.0, 5.0))?),
        (
            "horizontal:0.7071".into(),
            ConductivityTensor::from_dilatation(DilatationField::horizontal_volume_preserving(
                &Coefficient::real_constant(std::f64::consts::FRAC_1_SQRT_2),
                Sign::Plus,
            )?),
        ),
        (
            "horizontal:0.5sin".into(),
            ConductivityTensor::from_dilatation(DilatationField::horizontal_volume_preserving(
                &profile,
                Sign::Plus,
            )?),
        ),
    ])
}

pub fn lb_disk_field() -> SharedField {
    Arc::new(FnField::new("lb-disk", lb_disk).with_gradient(lb_disk_gradient))
}

pub fn lb_annulus_field(r: f64) -> SharedField {
    Arc::new(FnField::new(format!("lb-annulus(r={r})"), move |z| lb_annulus(z, r)))
}

pub fn lb_punctured_disk_field() -> SharedField {
    Arc::new(FnField::new("lb-punctured-disk", lb_punctured_disk))
}

pub fn halfplane_field(variant: HalfplaneVariant) -> SharedField {
    Arc::new(
        FnField::new(format!("halfplane({variant:?})"), move |z| halfplane_blowup(z, variant))
            .with_gradient(move |z| halfplane_gradient(z, variant)),
    )
}

/// Radius of the annulus solution in the default catalog.
pub const CATALOG_ANNULUS_R: f64 = 0.25;

pub fn lb_disk_entry() -> Result<ExactSolution> {
    Ok(ExactSolution {
        id: "lb-disk".into(),
        field: lb_disk_field(),
        equation: EquationTag::LbExp,
        nonlinearity: Nonlinearity::Exp,
        domain: DomainDescriptor::UnitDisk,
        tensors: radial_family()?,
        blow_up: true,
        grid: Arc::new(|h| {
            GridSpec::new(DomainDescriptor::UnitDisk, h, 0.1)
                .map(|g| g.with_singular(SingularSet::Point(Complex64::new(0.0, 0.0))))
        }),
    })
}

pub fn lb_annulus_entry(r: f64) -> Result<ExactSolution> {
    let domain = DomainDescriptor::annulus(r)?;
    Ok(ExactSolution {
        id: "lb-annulus".into(),
        field: lb_annulus_field(r),
        equation: EquationTag::LbExp,
        nonlinearity: Nonlinearity::Exp,
        domain,
        tensors: radial_family()?,
        blow_up: true,
        grid: Arc::new(move |h| GridSpec::new(domain, h, 0.05)),
    })
}

pub fn lb_punctured_disk_entry() -> Result<ExactSolution> {
    Ok(ExactSolution {
        id: "lb-punctured-disk".into(),
        field: lb_punctured_disk_field(),
        equation: EquationTag::LbExp,
        nonlinearity: Nonlinearity::Exp,
        domain: DomainDescriptor::PuncturedDisk,
        tensors: radial_family()?,
        blow_up: true,
        grid: Arc::new(|h| GridSpec::new(DomainDescriptor::PuncturedDisk, h, 0.1)),
    })
}

pub fn halfplane_entry(variant: HalfplaneVariant) -> Result<ExactSolution> {
    let id = match variant {
        HalfplaneVariant::LogTwoOverXSquared => "halfplane-log",
        HalfplaneVariant::Lambda { .. } => "halfplane-lambda",
    };
    Ok(ExactSolution {
        id: id.into(),
        field: halfplane_field(variant),
        equation: EquationTag::LbExp,
        nonlinearity: Nonlinearity::Exp,
        domain: DomainDescriptor::RightHalfPlane,
        tensors: horizontal_family()?,
        blow_up: true,
        grid: Arc::new(|h| {
            // 1/8 sits on every dyadic lattice, so refinements sample the same
            // closest column; the residual there grows like x⁻⁴.
            GridSpec::new(DomainDescriptor::RightHalfPlane, h, 0.125)
                .and_then(|g| g.with_window(Rect::new(0.0, 2.0, -1.0, 1.0)))
        }),
    })
}

/// Dead-zone entry for constant `ν` and sign `+`.
pub fn dead_zone_entry(q: f64, nu: Coefficient) -> Result<ExactSolution> {
    let sol = DeadZoneSolution::new(nu, q, Sign::Plus)?;
    let tensor = sol.tensor()?;
    let boundary = sol.clone();
    let sol = Arc::new(sol);
    Ok(ExactSolution {
        id: "dead-zone".into(),
        field: sol.clone(),
        equation: EquationTag::PowerQ,
        nonlinearity: sol.nonlinearity(),
        domain: DomainDescriptor::Plane,
        tensors: vec![("dead-zone".into(), tensor)],
        blow_up: false,
        grid: Arc::new(move |h| {
            let b = boundary.clone();
            GridSpec::new(DomainDescriptor::Plane, h, 0.1)
                .and_then(|g| g.with_window(Rect::new(-1.0, 1.0, -1.0, 1.0)))
                .map(|g| {
                    g.with_singular(SingularSet::Graph(Arc::new(move |x| {
                        b.free_boundary(x).unwrap_or(f64::NAN)
                    })))
                })
        }),
    })
}

/// All steady catalog entries with their default parameters.
pub fn catalog() -> Result<Vec<ExactSolution>> {
    Ok(vec![
        lb_disk_entry()?,
        lb_annulus_entry(CATALOG_ANNULUS_R)?,
        lb_punctured_disk_entry()?,
        halfplane_entry(HalfplaneVariant::LogTwoOverXSquared)?,
        halfplane_entry(HalfplaneVariant::Lambda { lambda: 1.0 })?,
        dead_zone_entry(0.5, Coefficient::real_constant(std::f64::consts::FRAC_1_SQRT_2))?,
    ])
}
