use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, SharedField};

/// Nodes closer than this fraction of `h` to the circle are boundary nodes.
pub(crate) const BOUNDARY_SNAP: f64 = 1e-3;

/// How an iteration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Diverged,
}

/// The square lattice `center + (i − m, j − m)·h`, `0 ≤ i, j ≤ 2m`, with
/// `m = ⌈ρ/h⌉ + 1`, so it covers the closed disk with one spare ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DiskLattice {
    pub h: f64,
    pub rho: f64,
    pub center: Complex64,
    pub m: usize,
}

impl DiskLattice {
    pub fn new(h: f64, rho: f64, center: Complex64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid spacing h = {h} must be positive")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("disk radius {rho} must be positive")));
        }
        if h > rho {
            return Err(Error::InvalidParameter(format!("h = {h} exceeds the disk radius {rho}")));
        }
        Ok(DiskLattice { h, rho, center, m: (rho / h).ceil() as usize + 1 })
    }

    pub fn side(&self) -> usize {
        2 * self.m + 1
    }

    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        self.center + Complex64::new((i as f64 - self.m as f64) * self.h, (j as f64 - self.m as f64) * self.h)
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.side() + i
    }

    pub fn is_active(&self, w: Complex64) -> bool {
        (w - self.center).norm() < self.rho - BOUNDARY_SNAP * self.h
    }

    /// Closest point of the circle to `w` (the east pole for the center).
    pub fn project(&self, w: Complex64) -> Complex64 {
        let d = w - self.center;
        let r = d.norm();
        if r == 0.0 {
            self.center + self.rho
        } else {
            self.center + d * (self.rho / r)
        }
    }
}

/// A grid function on a disk of radius `ρ ≤ 1` with bilinear interpolation.
///
/// Active nodes (strictly inside, by more than `10⁻³h`) carry the solution;
/// all other nodes hold `ψ` at their radial projection onto the circle.
#[derive(Clone)]
pub struct DiskGridField {
    pub(crate) lattice: DiskLattice,
    pub(crate) values: Vec<f64>,
    pub(crate) active: Vec<bool>,
    pub(crate) boundary: SharedField,
    pub(crate) iterations: usize,
    pub(crate) residual: f64,
    pub(crate) status: SolveStatus,
}

impl std::fmt::Debug for DiskGridField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiskGridField")
            .field("h", &self.lattice.h)
            .field("rho", &self.lattice.rho)
            .field("center", &self.lattice.center)
            .field("iterations", &self.iterations)
            .field("residual", &self.residual)
            .field("status", &self.status)
            .finish()
    }
}

/// Metadata written ahead of a grid dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub h: f64,
    pub rho: f64,
    pub center: [f64; 2],
    pub mask: String,
    pub active_points: usize,
    pub iterations: usize,
    pub final_residual: f64,
    pub status: SolveStatus,
}

impl DiskGridField {
    pub fn h(&self) -> f64 {
        self.lattice.h
    }

    pub fn rho(&self) -> f64 {
        self.lattice.rho
    }

    pub fn center(&self) -> Complex64 {
        self.lattice.center
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn final_residual(&self) -> f64 {
        self.residual
    }

    pub fn status(&self) -> SolveStatus {
        self.status
    }

    /// The boundary data on the circle.
    pub fn boundary(&self) -> &SharedField {
        &self.boundary
    }

    /// Active nodes and their values, row-major.
    pub fn active_points(&self) -> Vec<(Complex64, f64)> {
        let n = self.lattice.side();
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let k = self.lattice.idx(i, j);
                if self.active[k] {
                    out.push((self.lattice.node(i, j), self.values[k]));
                }
            }
        }
        out
    }

    pub fn header(&self) -> GridHeader {
        GridHeader {
            h: self.lattice.h,
            rho: self.lattice.rho,
            center: [self.lattice.center.re, self.lattice.center.im],
            mask: "active iff |w - center| < rho - 1e-3 h; other nodes hold psi at the radial projection".into(),
            active_points: self.active.iter().filter(|&&a| a).count(),
            iterations: self.iterations,
            final_residual: self.residual,
            status: self.status,
        }
    }

    pub fn header_json(&self) -> String {
        serde_json::to_string_pretty(&self.header()).expect("header serializes")
    }

    /// `x,y,value` rows for the active nodes.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,y,value")?;
        for (w, v) in self.active_points() {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", w.re, w.im, v)?;
        }
        Ok(())
    }
}

impl ScalarField for DiskGridField {
    fn eval(&self, w: Complex64) -> Result<f64> {
        let lat = &self.lattice;
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::NonFinite(format!("w = {w}")));
        }
        if (w - lat.center).norm() > lat.rho * (1.0 + 1e-12) {
            return Err(Error::OutsideDomain {
                at: w,
                domain: format!("disk(center={}, radius={})", lat.center, lat.rho),
            });
        }
        let fx = (w.re - lat.center.re) / lat.h + lat.m as f64;
        let fy = (w.im - lat.center.im) / lat.h + lat.m as f64;
        let top = (lat.side() - 2) as f64;
        let i = fx.floor().clamp(0.0, top) as usize;
        let j = fy.floor().clamp(0.0, top) as usize;
        let (s, t) = (fx - i as f64, fy - j as f64);
        let v = |a: usize, b: usize| self.values[lat.idx(a, b)];
        Ok((1.0 - s) * (1.0 - t) * v(i, j) + s * (1.0 - t) * v(i + 1, j) + (1.0 - s) * t * v(i, j + 1) + s * t * v(i + 1, j + 1))
    }

    fn label(&self) -> String {
        format!("disk-grid(h={}, rho={})", self.lattice.h, self.lattice.rho)
    }
}
