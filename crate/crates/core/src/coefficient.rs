//! One-variable complex coefficients `t ↦ c(t)`.
//!
//! These parameterize every explicit map family: the radial coefficient
//! `k(|z|)`, the `x`-only dilatation `μ(x)`, the `y`-only dilatation `ν(y)`,
//! and the real profiles `ν(t)` behind volume-preserving coefficients.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{volume_preserving_coefficient, Sign};

type CoefFn = dyn Fn(f64) -> Complex64 + Send + Sync;

/// A measurable coefficient of one real variable, with optional breakpoints
/// (jumps or kinks) that quadrature should not straddle.
#[derive(Clone)]
pub struct Coefficient {
    eval: Arc<CoefFn>,
    breakpoints: Arc<[f64]>,
    constant: Option<Complex64>,
    label: String,
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coefficient")
            .field("label", &self.label)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl Coefficient {
    pub fn constant(value: Complex64) -> Self {
        Coefficient {
            eval: Arc::new(move |_| value),
            breakpoints: Arc::from(Vec::new()),
            constant: Some(value),
            label: format!("const({value})"),
        }
    }

    pub fn real_constant(value: f64) -> Self {
        Self::constant(Complex64::new(value, 0.0))
    }

    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Coefficient {
            eval: Arc::new(f),
            breakpoints: Arc::from(Vec::new()),
            constant: None,
            label: label.into(),
        }
    }

    pub fn from_real_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_fn(label, move |t| Complex64::new(f(t), 0.0))
    }

    pub fn with_breakpoints(mut self, mut breaks: Vec<f64>) -> Self {
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        self.breakpoints = Arc::from(breaks);
        self
    }

    /// Piecewise-constant real profile: `values[i]` on `[edges[i], edges[i+1])`,
    /// extended by the end values outside.
    pub fn piecewise_constant(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if edges.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::InvalidParameter(
                "piecewise-constant coefficient needs len(edges) = len(values) + 1".into(),
            ));
        }
        if edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("piecewise edges must increase".into()));
        }
        let e = edges.clone();
        let f = move |t: f64| {
            let idx = e[1..e.len() - 1].partition_point(|&x| x <= t);
            Complex64::new(values[idx], 0.0)
        };
        Ok(Self::from_fn("piecewise-constant", f).with_breakpoints(edges))
    }

    /// Piecewise-linear real profile through the nodes `(ts[i], vs[i])`,
    /// constant beyond the first and last node.
    pub fn piecewise_linear(ts: Vec<f64>, vs: Vec<f64>) -> Result<Self> {
        if ts.len() != vs.len() || ts.is_empty() {
            return Err(Error::InvalidParameter(
                "table coefficient needs matching, non-empty columns".into(),
            ));
        }
        if ts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("table abscissae must increase".into()));
        }
        if ts.iter().chain(vs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("table coefficient entry".into()));
        }
        let nodes = ts.clone();
        let f = move |t: f64| {
            let n = nodes.len();
            let v = if t <= nodes[0] {
                vs[0]
            } else if t >= nodes[n - 1] {
                vs[n - 1]
            } else {
                let i = nodes.partition_point(|&x| x <= t) - 1;
                let s = (t - nodes[i]) / (nodes[i + 1] - nodes[i]);
                vs[i] + s * (vs[i + 1] - vs[i])
            };
            Complex64::new(v, 0.0)
        };
        Ok(Self::from_fn("table", f).with_breakpoints(ts))
    }

    /// Read a piecewise-linear table from a two-column CSV file (`t,value`).
    /// Lines starting with `#` and a non-numeric header line are skipped.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidParameter(format!("cannot read table {}: {e}", path.display()))
        })?;
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Option<(f64, f64)> = match cols.as_slice() {
                [t, v] => t.parse().ok().zip(v.parse().ok()),
                _ => None,
            };
            match parsed {
                Some((t, v)) => {
                    ts.push(t);
                    vs.push(v);
                }
                None if ts.is_empty() && lineno == 0 => continue,
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "{}:{}: expected `t,value`",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        let mut c = Self::piecewise_linear(ts, vs)?;
        c.label = format!("table:{}", path.display());
        Ok(c)
    }

    /// The volume-preserving coefficient `ν² ± iν√(1−ν²)` built pointwise
    /// from this (real) profile. Fails if the sampled profile reaches `|ν| ≥ 1`.
    pub fn volume_preserving(&self, sign: Sign, range: (f64, f64)) -> Result<Self> {
        let bound = self.sup_norm(range.0, range.1, 2001);
        if bound >= 1.0 {
            return Err(Error::DegenerateDilatation { modulus: bound });
        }
        if let Some(c) = self.constant {
            return Ok(Self::constant(volume_preserving_coefficient(c.re, sign)?));
        }
        let nu = self.eval.clone();
        let mut out = Self::from_fn(format!("vp[{}]({})", sign, self.label), move |t| {
            let v = nu(t).re;
            let s = (1.0 - v * v).max(0.0).sqrt();
            Complex64::new(v * v, sign.value() * v * s)
        });
        out.breakpoints = self.breakpoints.clone();
        Ok(out)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> Complex64 {
        (self.eval)(t)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn as_constant(&self) -> Option<Complex64> {
        self.constant
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Sampled `sup |c(t)|` over `[a, b]` (breakpoints included as samples).
    pub fn sup_norm(&self, a: f64, b: f64, samples: usize) -> f64 {
        if let Some(c) = self.constant {
            return c.norm();
        }
        let n = samples.max(2);
        let grid = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64);
        let nearby = self
            .breakpoints
            .iter()
            .flat_map(|&t| [t, t - 1e-12 * (1.0 + t.abs()), t + 1e-12 * (1.0 + t.abs())])
            .filter(|&t| t >= a && t <= b);
        grid.chain(nearby).map(|t| self.eval(t).norm()).fold(0.0, f64::max)
    }
}
