//! Adaptive Gauss–Kronrod (7/15) quadrature for complex-valued integrands.
//!
//! Global adaptive bisection: the panel with the largest error estimate is
//! split until the summed estimate meets `max(abs_tol, rel_tol·|I|)`.
//! Known breakpoints (jumps or kinks of piecewise coefficients) are used as
//! initial panel edges, so panels never straddle them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5] and the center.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { abs_tol: 1e-10, rel_tol: 1e-10, max_subdivisions: 4000 }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F>(f: &F, a: f64, b: f64) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx)? + f(center + dx)?;
        kronrod += pair * w;
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::NonFinite(format!("integrand on [{a}, {b}]")));
    }
    Ok((value, error))
}

/// Integrate `f` over `[a, b]` (either orientation).
pub fn integrate<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    integrate_with_breaks(f, a, b, &[], spec)
}

/// Integrate `f` over `[a, b]`, starting from panels split at `breaks`.
pub fn integrate_with_breaks<F>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite(format!("integration limits [{a}, {b}]")));
    }
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut edges = vec![lo];
    let mut interior: Vec<f64> = breaks.iter().copied().filter(|&t| t > lo && t < hi).collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    edges.extend(interior);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        let (value, error) = gauss_kronrod(&f, w[0], w[1])?;
        total += value;
        total_err += error;
        heap.push(Panel { a: w[0], b: w[1], value, error });
    }

    let mut subdivisions = 0;
    while total_err > spec.abs_tol.max(spec.rel_tol * total.norm()) {
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::QuadratureFailure { error_estimate: total_err, subdivisions });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel can no longer be split in floating point.
            return Err(Error::QuadratureFailure { error_estimate: total_err, subdivisions });
        }
        let (v1, e1) = gauss_kronrod(&f, worst.a, mid)?;
        let (v2, e2) = gauss_kronrod(&f, mid, worst.b)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        subdivisions += 1;
    }
    // Re-sum to shed the drift of the incremental updates.
    let total: Complex64 = heap.iter().map(|p| p.value).sum();
    Ok(total * sign)
}

/// Real-valued convenience wrapper around [`integrate_with_breaks`].
pub fn integrate_real<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    integrate(|t| f(t).map(|v| Complex64::new(v, 0.0)), a, b, spec).map(|c| c.re)
}
