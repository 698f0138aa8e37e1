//! Conductivity tensors with unit determinant and their complex dilatations.
//!
//! A symmetric tensor `A = [[a11, a12], [a12, a22]]` with `det A = 1`
//! corresponds one-to-one with a Beltrami coefficient `μ`, `|μ| < 1`:
//!
//! ```text
//! μ = (a22 − a11 − 2i·a12) / det(I + A)
//!
//! a11 = |1 − μ|² / (1 − |μ|²)
//! a12 = −2 Im μ  / (1 − |μ|²)
//! a22 = |1 + μ|² / (1 − |μ|²)
//! ```
//!
//! The largest eigenvalue of `A` equals `K = (1 + |μ|)/(1 − |μ|)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficient::Coefficient;
use crate::error::{ensure_finite, Error, Result};
use crate::geometry::{Mat2, Vec2};

/// Relative tolerance on `det A = 1` for user-supplied tensors.
pub const DET_TOLERANCE: f64 = 1e-9;

/// Choice of `±` in the volume-preserving coefficient `ν² ± iν√(1−ν²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// The three independent entries of a symmetric 2×2 tensor at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensorEntries {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl TensorEntries {
    pub const IDENTITY: TensorEntries = TensorEntries { a11: 1.0, a12: 0.0, a22: 1.0 };

    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        TensorEntries { a11, a12, a22 }
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn matrix(&self) -> Mat2 {
        Mat2::new(self.a11, self.a12, self.a12, self.a22)
    }

    #[inline]
    pub fn apply(&self, v: Vec2) -> Vec2 {
        [self.a11 * v[0] + self.a12 * v[1], self.a12 * v[0] + self.a22 * v[1]]
    }

    /// Eigenvalues `(λ−, λ+)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_trace = 0.5 * (self.a11 + self.a22);
        let half_gap = (0.25 * (self.a11 - self.a22).powi(2) + self.a12 * self.a12).sqrt();
        (half_trace - half_gap, half_trace + half_gap)
    }

    /// Ellipticity constant `K = max(λ+, 1/λ−)`.
    pub fn ellipticity(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        hi.max(1.0 / lo)
    }

    pub fn max_abs_diff(&self, other: &TensorEntries) -> f64 {
        (self.a11 - other.a11)
            .abs()
            .max((self.a12 - other.a12).abs())
            .max((self.a22 - other.a22).abs())
    }

    /// Check finiteness, `a11 > 0` and `det = 1` within [`DET_TOLERANCE`].
    pub fn validate(&self, at: Complex64) -> Result<()> {
        let invalid = |reason: String| Err(Error::InvalidTensor { at, reason });
        if !(self.a11.is_finite() && self.a12.is_finite() && self.a22.is_finite()) {
            return invalid(format!("non-finite entries {self:?}"));
        }
        if self.a11 <= 0.0 {
            return invalid(format!("a11 = {} must be positive", self.a11));
        }
        let det = self.det();
        let scale = (self.a11 * self.a22).abs().max(1.0);
        if (det - 1.0).abs() > DET_TOLERANCE * scale {
            return invalid(format!("det = {det} differs from 1"));
        }
        Ok(())
    }
}

impl fmt::Display for TensorEntries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a11={:.17e} a12={:.17e} a22={:.17e}", self.a11, self.a12, self.a22)
    }
}

/// Complex dilatation of a tensor at one point.
pub fn mu_from_tensor(a: &TensorEntries) -> Result<Complex64> {
    ensure_finite(a.a11, "a11")?;
    ensure_finite(a.a12, "a12")?;
    ensure_finite(a.a22, "a22")?;
    // det(I + A) = 1 + tr A + det A; for unit-determinant input use 2 + tr A,
    // which avoids the cancellation in det A when the entries are large.
    let det_a = a.det();
    let unit = (det_a - 1.0).abs() <= DET_TOLERANCE * (a.a11 * a.a22).abs().max(1.0);
    let det_ipa = if unit { Dd::from(2.0).add(a.a11).add(a.a22) } else { Dd::from(1.0 + a.a11 + a.a22 + det_a) };
    if !(det_ipa.hi > 0.0) {
        return Err(Error::InvalidTensor {
            at: Complex64::new(f64::NAN, f64::NAN),
            reason: format!("det(I + A) = {} is not positive", det_ipa.hi),
        });
    }
    // Near |μ| = 1 the map μ ↦ A amplifies an ulp of μ by 1/(1 − |μ|)², so μ is
    // formed in double-double and rounded once; a round trip then recovers μ.
    let re = Dd::from(a.a22).add(-a.a11).div(det_ipa);
    let im = Dd::from(-2.0 * a.a12).div(det_ipa);
    Ok(Complex64::new(re, im))
}

/// Unevaluated sum `hi + lo` carrying about 106 bits.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }
}

impl Dd {
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn add(self, x: f64) -> Dd {
        let s = Dd::two_sum(self.hi, x);
        Dd::two_sum(s.hi, s.lo + self.lo)
    }

    fn add_dd(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        Dd::two_sum(s.hi, s.lo + self.lo + o.lo)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::two_sum(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    /// Quotient rounded to the nearest double (up to a last-bit tie).
    fn div(self, d: Dd) -> f64 {
        let q1 = self.hi / d.hi;
        let r = self.add_dd(d.mul(Dd::from(q1)).neg());
        let q2 = r.hi / d.hi;
        let r = r.add_dd(d.mul(Dd::from(q2)).neg());
        q1 + (q2 + r.hi / d.hi)
    }
}

/// Unit-determinant tensor generated by a dilatation `|μ| < 1`.
pub fn tensor_from_mu(mu: Complex64) -> Result<TensorEntries> {
    let m2 = mu.norm_sqr();
    if !m2.is_finite() {
        return Err(Error::NonFinite(format!("mu = {mu}")));
    }
    if m2 >= 1.0 {
        return Err(Error::DegenerateDilatation { modulus: m2.sqrt() });
    }
    // 1 − |μ|² cancels near the circle; keep it and the numerators exact-ish.
    let sq = |x: f64| Dd::from(x).mul(Dd::from(x));
    let denom = Dd::from(1.0).add_dd(sq(mu.re).neg()).add_dd(sq(mu.im).neg());
    let (one_minus, one_plus) = (Dd::from(1.0).add(-mu.re), Dd::from(1.0).add(mu.re));
    let minus = one_minus.mul(one_minus).add_dd(sq(mu.im));
    let plus = one_plus.mul(one_plus).add_dd(sq(mu.im));
    Ok(TensorEntries {
        a11: minus.div(denom),
        a12: Dd::from(-2.0 * mu.im).div(denom),
        a22: plus.div(denom),
    })
}

/// `K = (1 + |μ|)/(1 − |μ|)`.
pub fn ellipticity_constant(mu: Complex64) -> Result<f64> {
    let m = mu.norm();
    if !m.is_finite() {
        return Err(Error::NonFinite(format!("mu = {mu}")));
    }
    if m >= 1.0 {
        return Err(Error::DegenerateDilatation { modulus: m });
    }
    Ok((1.0 + m) / (1.0 - m))
}

/// `k = ν² ± iν√(1 − ν²)`, which satisfies `Re k = |k|²`.
pub fn volume_preserving_coefficient(nu: f64, sign: Sign) -> Result<Complex64> {
    ensure_finite(nu, "nu")?;
    if nu.abs() >= 1.0 {
        return Err(Error::DegenerateDilatation { modulus: nu.abs() });
    }
    Ok(Complex64::new(nu * nu, sign.value() * nu * (1.0 - nu * nu).sqrt()))
}

/// Structure tag of a dilatation field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructureTag {
    General,
    Radial,
    XOnly,
    YOnly,
    Constant,
}

type PointFn<T> = dyn Fn(Complex64) -> T + Send + Sync;

/// How a dilatation depends on the point.
#[derive(Clone)]
pub enum DilatationStructure {
    Constant(Complex64),
    /// `μ(z) = k(|z|)·z/z̄`.
    Radial(Coefficient),
    /// The logarithmic spiral, `μ(z) = ½(1+i)·z/z̄`.
    LogSpiral,
    /// `μ(z) = μ(Re z)`.
    Horizontal(Coefficient),
    /// `μ(z) = ν(Im z)`.
    Vertical(Coefficient),
    General(Arc<PointFn<Complex64>>),
}

impl fmt::Debug for DilatationStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DilatationStructure::Constant(c) => write!(f, "Constant({c})"),
            DilatationStructure::Radial(k) => write!(f, "Radial({})", k.label()),
            DilatationStructure::LogSpiral => write!(f, "LogSpiral"),
            DilatationStructure::Horizontal(m) => write!(f, "Horizontal({})", m.label()),
            DilatationStructure::Vertical(n) => write!(f, "Vertical({})", n.label()),
            DilatationStructure::General(_) => write!(f, "General(..)"),
        }
    }
}

/// `½(1 + i)`, the constant radial coefficient of the logarithmic spiral.
pub fn spiral_coefficient() -> Complex64 {
    Complex64::new(0.5, 0.5)
}

/// `z/z̄` with the value 1 at the origin.
#[inline]
pub(crate) fn phase_squared(z: Complex64) -> Complex64 {
    let r2 = z.norm_sqr();
    if r2 == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        z * z / r2
    }
}

/// A complex dilatation field with a sampled bound `sup |μ| ≤ bound < 1`.
#[derive(Debug, Clone)]
pub struct DilatationField {
    structure: DilatationStructure,
    bound: f64,
}

/// Sampling window for bounds of `x`-only and `y`-only coefficients.
const LINE_SAMPLE_RANGE: (f64, f64) = (-8.0, 8.0);

impl DilatationField {
    fn checked(structure: DilatationStructure, bound: f64) -> Result<Self> {
        if !bound.is_finite() {
            return Err(Error::NonFinite(format!("dilatation bound {bound}")));
        }
        if bound >= 1.0 {
            return Err(Error::DegenerateDilatation { modulus: bound });
        }
        Ok(DilatationField { structure, bound })
    }

    pub fn constant(mu: Complex64) -> Result<Self> {
        Self::checked(DilatationStructure::Constant(mu), mu.norm())
    }

    /// `μ(z) = k(|z|) z/z̄`; the bound is sampled on `[0, 1]`.
    pub fn radial(k: Coefficient) -> Result<Self> {
        let bound = k.sup_norm(0.0, 1.0, 4001);
        Self::checked(DilatationStructure::Radial(k), bound)
    }

    /// Radial field with the volume-preserving coefficient built from `ν`.
    pub fn radial_volume_preserving(nu: &Coefficient, sign: Sign) -> Result<Self> {
        Self::radial(nu.volume_preserving(sign, (0.0, 1.0))?)
    }

    pub fn log_spiral() -> Self {
        DilatationField {
            structure: DilatationStructure::LogSpiral,
            bound: spiral_coefficient().norm(),
        }
    }

    pub fn horizontal(mu: Coefficient) -> Result<Self> {
        let bound = mu.sup_norm(LINE_SAMPLE_RANGE.0, LINE_SAMPLE_RANGE.1, 4001);
        Self::checked(DilatationStructure::Horizontal(mu), bound)
    }

    pub fn horizontal_volume_preserving(nu: &Coefficient, sign: Sign) -> Result<Self> {
        Self::horizontal(nu.volume_preserving(sign, LINE_SAMPLE_RANGE)?)
    }

    pub fn vertical(nu: Coefficient) -> Result<Self> {
        let bound = nu.sup_norm(LINE_SAMPLE_RANGE.0, LINE_SAMPLE_RANGE.1, 4001);
        Self::checked(DilatationStructure::Vertical(nu), bound)
    }

    /// Arbitrary field with a caller-asserted bound.
    pub fn general<F>(f: F, bound: f64) -> Result<Self>
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        Self::checked(DilatationStructure::General(Arc::new(f)), bound)
    }

    pub fn structure(&self) -> &DilatationStructure {
        &self.structure
    }

    pub fn tag(&self) -> StructureTag {
        match self.structure {
            DilatationStructure::Constant(_) => StructureTag::Constant,
            DilatationStructure::Radial(_) | DilatationStructure::LogSpiral => StructureTag::Radial,
            DilatationStructure::Horizontal(_) => StructureTag::XOnly,
            DilatationStructure::Vertical(_) => StructureTag::YOnly,
            DilatationStructure::General(_) => StructureTag::General,
        }
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Ellipticity constant implied by the sampled bound.
    pub fn ellipticity_constant(&self) -> Result<f64> {
        ellipticity_constant(Complex64::new(self.bound, 0.0))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match &self.structure {
            DilatationStructure::Constant(c) => *c,
            DilatationStructure::Radial(k) => k.eval(z.norm()) * phase_squared(z),
            DilatationStructure::LogSpiral => spiral_coefficient() * phase_squared(z),
            DilatationStructure::Horizontal(m) => m.eval(z.re),
            DilatationStructure::Vertical(n) => n.eval(z.im),
            DilatationStructure::General(f) => f(z),
        }
    }

    /// True when the generated map has unit Jacobian (`Re μ = |μ|²` pointwise
    /// for the line and radial families), checked on samples.
    pub fn is_volume_preserving(&self) -> bool {
        let check = |c: &Coefficient, a: f64, b: f64| {
            let pts = (0..=400).map(|i| a + (b - a) * i as f64 / 400.0);
            let extra = c.breakpoints().iter().copied();
            pts.chain(extra).all(|t| {
                let k = c.eval(t);
                (k.re - k.norm_sqr()).abs() <= 1e-12
            })
        };
        match &self.structure {
            DilatationStructure::Constant(c) => (c.re - c.norm_sqr()).abs() <= 1e-12,
            DilatationStructure::LogSpiral => true,
            DilatationStructure::Radial(k) => check(k, 0.0, 1.0),
            DilatationStructure::Horizontal(m) => {
                check(m, LINE_SAMPLE_RANGE.0, LINE_SAMPLE_RANGE.1)
            }
            // y-only maps g = x + iψ(y) have J = (1−|ν|²)/|1+ν|²,
            // which is 1 exactly when Re ν = −|ν|².
            DilatationStructure::Vertical(n) => {
                let pts = (0..=400).map(|i| -8.0 + 16.0 * i as f64 / 400.0);
                pts.chain(n.breakpoints().iter().copied()).all(|t| {
                    let v = n.eval(t);
                    (v.re + v.norm_sqr()).abs() <= 1e-12
                })
            }
            DilatationStructure::General(_) => false,
        }
    }
}

/// A field `z ↦ A(z)` of symmetric unit-determinant tensors.
#[derive(Clone)]
pub struct ConductivityTensor {
    eval: Arc<PointFn<TensorEntries>>,
    dilatation: Option<DilatationField>,
    label: String,
}

impl fmt::Debug for ConductivityTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConductivityTensor")
            .field("label", &self.label)
            .field("dilatation", &self.dilatation)
            .finish()
    }
}

impl ConductivityTensor {
    pub fn identity() -> Self {
        ConductivityTensor {
            eval: Arc::new(|_| TensorEntries::IDENTITY),
            dilatation: Some(DilatationField {
                structure: DilatationStructure::Constant(Complex64::new(0.0, 0.0)),
                bound: 0.0,
            }),
            label: "identity".into(),
        }
    }

    /// Constant tensor; rejected unless `det = 1` and `a11 > 0`.
    pub fn constant(entries: TensorEntries) -> Result<Self> {
        entries.validate(Complex64::new(0.0, 0.0))?;
        let mu = mu_from_tensor(&entries)?;
        Ok(ConductivityTensor {
            eval: Arc::new(move |_| entries),
            dilatation: Some(DilatationField::constant(mu)?),
            label: format!("const({}, {}, {})", entries.a11, entries.a12, entries.a22),
        })
    }

    /// Tensor given by an arbitrary evaluator; validated at each evaluation.
    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(Complex64) -> TensorEntries + Send + Sync + 'static,
    {
        ConductivityTensor { eval: Arc::new(f), dilatation: None, label: label.into() }
    }

    /// Tensor generated by a dilatation field; keeps its structure.
    pub fn from_dilatation(field: DilatationField) -> Self {
        let mu = field.clone();
        let label = format!("from-mu({:?})", field.structure());
        ConductivityTensor {
            eval: Arc::new(move |z| {
                tensor_from_mu(mu.eval(z)).unwrap_or(TensorEntries::new(f64::NAN, f64::NAN, f64::NAN))
            }),
            dilatation: Some(field),
            label,
        }
    }

    /// The log-spiral tensor `A_sp` written out in Cartesian entries
    /// (`a11 = 3 − 2s`, `a22 = 3 + 2s`, `a12 = −2t` with
    /// `s = (x²−y²−2xy)/r²`, `t = (x²−y²+2xy)/r²`).
    pub fn log_spiral() -> Self {
        ConductivityTensor {
            eval: Arc::new(|z: Complex64| {
                let (x, y) = (z.re, z.im);
                let r2 = x * x + y * y;
                if r2 == 0.0 {
                    return TensorEntries::new(f64::NAN, f64::NAN, f64::NAN);
                }
                let s = (x * x - y * y - 2.0 * x * y) / r2;
                let t = (x * x - y * y + 2.0 * x * y) / r2;
                TensorEntries::new(3.0 - 2.0 * s, -2.0 * t, 3.0 + 2.0 * s)
            }),
            dilatation: Some(DilatationField::log_spiral()),
            label: "spiral".into(),
        }
    }

    /// Attach a declared dilatation structure to an evaluator-built tensor.
    pub fn with_dilatation(mut self, field: DilatationField) -> Self {
        self.dilatation = Some(field);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dilatation(&self) -> Option<&DilatationField> {
        self.dilatation.as_ref()
    }

    /// Entries at `z` without validation.
    #[inline]
    pub fn raw(&self, z: Complex64) -> TensorEntries {
        (self.eval)(z)
    }

    /// Entries at `z`, validated.
    pub fn at(&self, z: Complex64) -> Result<TensorEntries> {
        let a = (self.eval)(z);
        a.validate(z)?;
        Ok(a)
    }

    /// Dilatation at `z`, computed from the entries.
    pub fn mu_at(&self, z: Complex64) -> Result<Complex64> {
        let a = self.at(z)?;
        mu_from_tensor(&a).map_err(|e| match e {
            Error::InvalidTensor { reason, .. } => Error::InvalidTensor { at: z, reason },
            other => other,
        })
    }
}
