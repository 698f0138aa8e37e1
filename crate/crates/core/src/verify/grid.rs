use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{DomainDescriptor, Rect};

/// A set the residual sample keeps away from (by the grid margin).
#[derive(Clone)]
pub enum SingularSet {
    Point(Complex64),
    /// The graph `y = g(x)`; distance is measured vertically.
    Graph(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for SingularSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SingularSet::Point(p) => write!(f, "Point({p})"),
            SingularSet::Graph(_) => write!(f, "Graph(..)"),
        }
    }
}

impl SingularSet {
    fn distance(&self, z: Complex64) -> f64 {
        match self {
            SingularSet::Point(p) => (z - p).norm(),
            SingularSet::Graph(g) => (z.im - g(z.re)).abs(),
        }
    }
}

/// A uniform lattice `{(i h, j h)}` restricted to the nodes at least
/// `margin` away from the domain boundary and every singular set.
///
/// Nodes sit at integer multiples of `h`, so dyadic refinements are nested.
#[derive(Debug, Clone)]
pub struct GridSpec {
    domain: DomainDescriptor,
    h: f64,
    margin: f64,
    window: Option<Rect>,
    singular: Vec<SingularSet>,
}

/// A sampled node and its lattice indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub i: i64,
    pub j: i64,
    pub z: Complex64,
}

impl GridSpec {
    /// Requires `h > 0` and `margin ≥ 2h`. Bounded domains use their bounding
    /// box as the sampling window; unbounded ones need [`GridSpec::with_window`].
    pub fn new(domain: DomainDescriptor, h: f64, margin: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid spacing h = {h} must be positive")));
        }
        if !(margin >= 2.0 * h) {
            return Err(Error::InvalidParameter(format!(
                "margin {margin} must be at least 2h = {}",
                2.0 * h
            )));
        }
        Ok(GridSpec { domain, h, margin, window: domain.bounding_box(), singular: Vec::new() })
    }

    pub fn with_window(mut self, window: Rect) -> Result<Self> {
        if !(window.x1 > window.x0 && window.y1 > window.y0) {
            return Err(Error::InvalidParameter(format!("empty sampling window {window:?}")));
        }
        self.window = Some(window);
        Ok(self)
    }

    pub fn with_singular(mut self, set: SingularSet) -> Self {
        self.singular.push(set);
        self
    }

    /// Same grid at another spacing.
    pub fn with_h(&self, h: f64) -> Result<Self> {
        let mut g = GridSpec::new(self.domain, h, self.margin)?;
        g.window = self.window;
        g.singular = self.singular.clone();
        Ok(g)
    }

    /// Same grid with another margin (still at least `2h`).
    pub fn with_margin(&self, margin: f64) -> Result<Self> {
        let mut g = GridSpec::new(self.domain, self.h, margin)?;
        g.window = self.window;
        g.singular = self.singular.clone();
        Ok(g)
    }

    pub fn domain(&self) -> DomainDescriptor {
        self.domain
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn window(&self) -> Result<Rect> {
        self.window.ok_or_else(|| {
            Error::InvalidParameter(format!("the {} needs an explicit sampling window", self.domain))
        })
    }

    pub fn singular_sets(&self) -> &[SingularSet] {
        &self.singular
    }

    /// Whether `z` clears the boundary and singular sets by `margin`.
    pub fn accepts(&self, z: Complex64) -> bool {
        let boundary_ok = self.domain.boundary_distance(z).is_none_or(|d| d >= self.margin);
        boundary_ok && self.singular.iter().all(|s| s.distance(z) >= self.margin)
    }

    /// Lattice index range `[lo, hi]` covering `[a, b]`.
    pub(crate) fn index_range(&self, a: f64, b: f64) -> (i64, i64) {
        ((a / self.h).ceil() as i64, (b / self.h).floor() as i64)
    }

    /// Accepted nodes in row-major order (`j` outer, `i` inner).
    pub fn sample_points(&self) -> Vec<SamplePoint> {
        let Ok(w) = self.window() else { return Vec::new() };
        let (i0, i1) = self.index_range(w.x0, w.x1);
        let (j0, j1) = self.index_range(w.y0, w.y1);
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                let z = Complex64::new(i as f64 * self.h, j as f64 * self.h);
                if self.accepts(z) {
                    out.push(SamplePoint { i, j, z });
                }
            }
        }
        out
    }
}
