use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{Rect, Vec2};
use crate::tensor::ConductivityTensor;

use super::grid::GridSpec;

/// Relative loop defect above which `u` is rejected as non-homogeneous.
pub const LOOP_DEFECT_THRESHOLD: f64 = 1e-3;

/// Number of random loops checked by [`stream_function`].
const LOOPS: usize = 10;

/// Circulation of `H A ∇u` around one lattice rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopDefect {
    pub rect: Rect,
    pub defect: f64,
    /// `max|H A ∇u| · perimeter`.
    pub scale: f64,
}

impl LoopDefect {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.defect / self.scale
        } else {
            self.defect
        }
    }
}

/// A grid-backed conjugate `v` with `∇v = H A ∇u`, `H = [[0, −1], [1, 0]]`,
/// normalized by `v(base) = 0`; bilinear between nodes.
#[derive(Debug, Clone)]
pub struct StreamFunction {
    h: f64,
    i0: i64,
    j0: i64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
    field: Vec<Vec2>,
    base: Complex64,
    loops: Vec<LoopDefect>,
}

impl StreamFunction {
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn base(&self) -> Complex64 {
        self.base
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Node coordinates and values, row-major.
    pub fn nodes(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        (0..self.ny).flat_map(move |j| {
            (0..self.nx).map(move |i| {
                let z = Complex64::new((self.i0 + i as i64) as f64 * self.h, (self.j0 + j as i64) as f64 * self.h);
                (z, self.values[self.idx(i, j)])
            })
        })
    }

    pub fn loop_defects(&self) -> &[LoopDefect] {
        &self.loops
    }

    pub fn max_relative_loop_defect(&self) -> f64 {
        self.loops.iter().map(LoopDefect::relative).fold(0.0, f64::max)
    }

    fn snap(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x / self.h).round() as i64 - self.i0).clamp(0, self.nx as i64 - 1) as usize;
        let j = ((y / self.h).round() as i64 - self.j0).clamp(0, self.ny as i64 - 1) as usize;
        (i, j)
    }

    /// Trapezoid circulation around the lattice rectangle nearest `rect`.
    pub fn loop_defect(&self, rect: Rect) -> LoopDefect {
        let (ia, ja) = self.snap(rect.x0, rect.y0);
        let (ib, jb) = self.snap(rect.x1, rect.y1);
        let g = |i: usize, j: usize| self.field[self.idx(i, j)];
        let h = self.h;
        let mut circ = 0.0;
        let mut gmax: f64 = 0.0;
        for i in ia..ib {
            circ += 0.5 * h * (g(i, ja)[0] + g(i + 1, ja)[0]);
            circ -= 0.5 * h * (g(i, jb)[0] + g(i + 1, jb)[0]);
        }
        for j in ja..jb {
            circ += 0.5 * h * (g(ib, j)[1] + g(ib, j + 1)[1]);
            circ -= 0.5 * h * (g(ia, j)[1] + g(ia, j + 1)[1]);
        }
        for j in ja..=jb {
            for i in ia..=ib {
                let v = g(i, j);
                gmax = gmax.max(v[0].hypot(v[1]));
            }
        }
        let snapped = Rect::new(
            (self.i0 + ia as i64) as f64 * h,
            (self.i0 + ib as i64) as f64 * h,
            (self.j0 + ja as i64) as f64 * h,
            (self.j0 + jb as i64) as f64 * h,
        );
        let perimeter = 2.0 * ((ib - ia) + (jb - ja)) as f64 * h;
        LoopDefect { rect: snapped, defect: circ.abs(), scale: gmax * perimeter }
    }
}

impl ScalarField for StreamFunction {
    fn eval(&self, z: Complex64) -> Result<f64> {
        let fx = z.re / self.h - self.i0 as f64;
        let fy = z.im / self.h - self.j0 as f64;
        let tol = 1e-9;
        if fx < -tol || fy < -tol || fx > (self.nx - 1) as f64 + tol || fy > (self.ny - 1) as f64 + tol {
            return Err(Error::OutsideDomain { at: z, domain: "stream-function grid".into() });
        }
        let i = (fx.floor().max(0.0) as usize).min(self.nx.saturating_sub(2));
        let j = (fy.floor().max(0.0) as usize).min(self.ny.saturating_sub(2));
        let (s, t) = (fx - i as f64, fy - j as f64);
        let v = |a: usize, b: usize| self.values[self.idx(a, b)];
        Ok((1.0 - s) * (1.0 - t) * v(i, j) + s * (1.0 - t) * v(i + 1, j) + (1.0 - s) * t * v(i, j + 1) + s * t * v(i + 1, j + 1))
    }

    fn label(&self) -> String {
        "stream-function".into()
    }
}

/// Reconstruct `v` with `∇v = H A ∇u` on the lattice covering the grid's
/// window by trapezoid integration: along the base row first, then up and
/// down each column.
///
/// The window must lie in the domain and be simply connected with `u`
/// homogeneous there; both are checked through the circulation around 10
/// random lattice rectangles (seeded by `seed`), which fails with
/// [`Error::LoopDefect`] above [`LOOP_DEFECT_THRESHOLD`] relative.
pub fn stream_function(
    u: &dyn ScalarField,
    a: &ConductivityTensor,
    grid: &GridSpec,
    base: Complex64,
    seed: u64,
) -> Result<StreamFunction> {
    let w = grid.window()?;
    let h = grid.h();
    let (i0, i1) = grid.index_range(w.x0, w.x1);
    let (j0, j1) = grid.index_range(w.y0, w.y1);
    if i1 <= i0 || j1 <= j0 {
        return Err(Error::InvalidParameter("stream-function window holds no lattice cell".into()));
    }
    let nx = (i1 - i0 + 1) as usize;
    let ny = (j1 - j0 + 1) as usize;
    let node = |i: usize, j: usize| Complex64::new((i0 + i as i64) as f64 * h, (j0 + j as i64) as f64 * h);

    let field: Vec<Vec2> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let z = node(k % nx, k / nx);
            if grid.domain().boundary_distance(z).is_some_and(|d| d <= 0.0) {
                return Err(Error::OutsideDomain { at: z, domain: grid.domain().to_string() });
            }
            let flux = a.at(z)?.apply(u.gradient(z)?);
            Ok([-flux[1], flux[0]])
        })
        .collect::<Result<_>>()?;

    let mut sf = StreamFunction {
        h,
        i0,
        j0,
        nx,
        ny,
        values: vec![0.0; nx * ny],
        field,
        base,
        loops: Vec::new(),
    };
    if !w.contains(base) {
        return Err(Error::OutsideDomain { at: base, domain: format!("window {w:?}") });
    }
    let (ib, jb) = sf.snap(base.re, base.im);
    sf.base = node(ib, jb);

    let g = |sf: &StreamFunction, i: usize, j: usize| sf.field[sf.idx(i, j)];
    for i in ib + 1..nx {
        let k = sf.idx(i, jb);
        sf.values[k] = sf.values[k - 1] + 0.5 * h * (g(&sf, i - 1, jb)[0] + g(&sf, i, jb)[0]);
    }
    for i in (0..ib).rev() {
        let k = sf.idx(i, jb);
        sf.values[k] = sf.values[k + 1] - 0.5 * h * (g(&sf, i + 1, jb)[0] + g(&sf, i, jb)[0]);
    }
    for i in 0..nx {
        for j in jb + 1..ny {
            let k = sf.idx(i, j);
            sf.values[k] = sf.values[k - nx] + 0.5 * h * (g(&sf, i, j - 1)[1] + g(&sf, i, j)[1]);
        }
        for j in (0..jb).rev() {
            let k = sf.idx(i, j);
            sf.values[k] = sf.values[k + nx] - 0.5 * h * (g(&sf, i, j + 1)[1] + g(&sf, i, j)[1]);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loops: Vec<LoopDefect> = (0..LOOPS)
        .map(|_| {
            let mut xs = [rng.random_range(w.x0..w.x1), rng.random_range(w.x0..w.x1)];
            let mut ys = [rng.random_range(w.y0..w.y1), rng.random_range(w.y0..w.y1)];
            xs.sort_by(f64::total_cmp);
            ys.sort_by(f64::total_cmp);
            sf.loop_defect(Rect::new(xs[0], xs[1], ys[0], ys[1]))
        })
        .collect();
    sf.loops = loops;
    if let Some(worst) = sf.loops.iter().max_by(|a, b| a.relative().total_cmp(&b.relative())) {
        if worst.relative() > LOOP_DEFECT_THRESHOLD {
            return Err(Error::LoopDefect { defect: worst.relative(), threshold: LOOP_DEFECT_THRESHOLD });
        }
    }
    Ok(sf)
}
