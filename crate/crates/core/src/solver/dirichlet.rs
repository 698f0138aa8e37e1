use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, SharedField};
use crate::nonlinearity::Nonlinearity;

use super::grid::{DiskGridField, DiskLattice, SolveStatus};

/// Consecutive residual increases that count as divergence.
const DIVERGENCE_RUN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Picard,
    Newton,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Picard => "picard",
            Scheme::Newton => "newton",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "picard" => Ok(Scheme::Picard),
            "newton" => Ok(Scheme::Newton),
            _ => Err(Error::InvalidParameter(format!("unknown scheme '{s}' (picard|newton)"))),
        }
    }
}

/// Options for [`solve_dirichlet`]. The disk is `|w − center| < rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub scheme: Scheme,
    /// Picard step `T ← T + θ(T* − T)`; unused by Newton.
    pub relaxation: f64,
    pub max_iterations: usize,
    /// Bound on `‖Δ_h T − J f(T)‖∞` over active nodes.
    pub tolerance: f64,
    pub h: f64,
    pub rho: f64,
    pub center: [f64; 2],
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            scheme: Scheme::Picard,
            relaxation: 0.8,
            max_iterations: 5000,
            tolerance: 1e-6,
            h: 1.0 / 64.0,
            rho: 1.0,
            center: [0.0, 0.0],
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance {} must be positive", self.tolerance)));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter("max iterations must be at least 1".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::InvalidParameter(format!("relaxation {} must lie in (0, 1]", self.relaxation)));
        }
        DiskLattice::new(self.h, self.rho, self.center())?;
        Ok(())
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(self.center[0], self.center[1])
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }
}

/// Result of a solve, including non-converged ones.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    /// The final iterate, or the best one when the iteration did not converge.
    pub field: DiskGridField,
    pub status: SolveStatus,
    /// `‖Δ_h T − J f(T)‖∞` after each iterate, starting with the initial guess.
    pub history: Vec<f64>,
    /// Whether every iterate was pointwise `≤` its predecessor.
    pub monotone: bool,
}

impl SolveOutcome {
    /// The field, or [`Error::Diverged`]. Hitting the iteration cap is not an
    /// error; check [`DiskGridField::status`].
    pub fn into_result(self) -> Result<DiskGridField> {
        match self.status {
            SolveStatus::Diverged => Err(Error::Diverged {
                iterations: self.field.iterations,
                residual: self.field.residual,
            }),
            _ => Ok(self.field),
        }
    }
}

/// The discrete operator `(Δ_h T)_p = (M T)_p + b_p` on active nodes with
/// Shortley–Weller arms at the circle.
struct System {
    lattice: DiskLattice,
    /// Unknown number of each lattice node, if active.
    unknown: Vec<Option<usize>>,
    nodes: Vec<Complex64>,
    off_diagonal: Vec<Triplet<usize, usize, f64>>,
    diagonal: Vec<f64>,
    b: Vec<f64>,
    boundary_values: Vec<f64>,
}

impl System {
    fn assemble(lattice: DiskLattice, psi: &dyn ScalarField) -> Result<Self> {
        let n = lattice.side();
        let mut unknown = vec![None; n * n];
        let mut nodes = Vec::new();
        let mut boundary_values = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let w = lattice.node(i, j);
                let k = lattice.idx(i, j);
                if lattice.is_active(w) {
                    unknown[k] = Some(nodes.len());
                    nodes.push(w);
                } else {
                    boundary_values[k] = psi.eval(lattice.project(w))?;
                }
            }
        }
        if nodes.is_empty() {
            return Err(Error::InvalidParameter("the disk holds no interior grid node".into()));
        }
        let h = lattice.h;
        let rho2 = lattice.rho * lattice.rho;
        let mut off_diagonal = Vec::new();
        let mut diagonal = vec![0.0; nodes.len()];
        let mut b = vec![0.0; nodes.len()];
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let Some(row) = unknown[lattice.idx(i, j)] else { continue };
                let w = nodes[row];
                let d = w - lattice.center;
                // (neighbor, unit direction, offset along the axis, offset across it)
                let arms = [
                    (lattice.idx(i + 1, j), Complex64::new(1.0, 0.0), d.re, d.im),
                    (lattice.idx(i - 1, j), Complex64::new(-1.0, 0.0), -d.re, d.im),
                    (lattice.idx(i, j + 1), Complex64::new(0.0, 1.0), d.im, d.re),
                    (lattice.idx(i, j - 1), Complex64::new(0.0, -1.0), -d.im, d.re),
                ];
                let mut len = [h; 4];
                let mut target: [std::result::Result<usize, f64>; 4] = [Ok(0); 4];
                for (a, &(nb, dir, along, across)) in arms.iter().enumerate() {
                    match unknown[nb] {
                        Some(col) => target[a] = Ok(col),
                        None => {
                            let t = -along + (rho2 - across * across).max(0.0).sqrt();
                            len[a] = t;
                            target[a] = Err(psi.eval(lattice.project(w + dir * t))?);
                        }
                    }
                }
                let [he, hw, hn, hs] = len;
                let coef = [
                    2.0 / (he * (he + hw)),
                    2.0 / (hw * (he + hw)),
                    2.0 / (hn * (hn + hs)),
                    2.0 / (hs * (hn + hs)),
                ];
                diagonal[row] = -2.0 / (he * hw) - 2.0 / (hn * hs);
                for a in 0..4 {
                    match target[a] {
                        Ok(col) => off_diagonal.push(Triplet::new(row, col, coef[a])),
                        Err(value) => b[row] += coef[a] * value,
                    }
                }
            }
        }
        Ok(System { lattice, unknown, nodes, off_diagonal, diagonal, b, boundary_values })
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    /// `M T + b`.
    fn laplacian(&self, t: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.diagonal.iter().zip(t).zip(&self.b).map(|((d, x), b)| d * x + b).collect();
        for tr in &self.off_diagonal {
            out[tr.row] += tr.val * t[tr.col];
        }
        out
    }

    /// LU of `M − diag(shift)`.
    fn factor(&self, shift: &[f64]) -> Result<Lu<usize, f64>> {
        let n = self.len();
        let mut trips = self.off_diagonal.clone();
        trips.extend((0..n).map(|k| Triplet::new(k, k, self.diagonal[k] - shift[k])));
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        m.sp_lu().map_err(|e| Error::LinearSolve(format!("{e:?}")))
    }

    fn solve(lu: &Lu<usize, f64>, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        lu.solve_in_place(x.as_mut());
        let out: Vec<f64> = (0..rhs.len()).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("non-finite solution".into()));
        }
        Ok(out)
    }

    fn into_field(self, t: &[f64], psi: SharedField, iterations: usize, residual: f64, status: SolveStatus) -> DiskGridField {
        let mut values = self.boundary_values;
        let mut active = vec![false; values.len()];
        for (k, u) in self.unknown.iter().enumerate() {
            if let Some(u) = *u {
                values[k] = t[u];
                active[k] = true;
            }
        }
        DiskGridField { lattice: self.lattice, values, active, boundary: psi, iterations, residual, status }
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `Δ_h T − J f(T)`.
fn residual(sys: &System, weight: &[f64], f: Nonlinearity, t: &[f64]) -> Vec<f64> {
    let mut r = sys.laplacian(t);
    for k in 0..r.len() {
        r[k] -= weight[k] * f.eval(t[k]);
    }
    r
}

/// Solve `ΔT = J f(T)` in the disk of `opts` with `T = ψ` on its circle.
///
/// Both schemes start from the discrete harmonic extension of `ψ`. Picard
/// solves `(Δ_h − c)T* = J f(T_n) − c T_n` with `c = max J f′(T₀)` and takes
/// `T_{n+1} = T_n + θ(T* − T_n)`; for nondecreasing convex `f` and `J ≥ 0`
/// the iterates then decrease pointwise. Newton re-factors at every step and
/// halves the step until the residual drops.
///
/// Divergence (10 consecutive residual increases) is reported in the
/// outcome, as is hitting the iteration cap; the field is then the iterate
/// with the smallest residual.
pub fn solve_dirichlet(weight: &dyn ScalarField, f: Nonlinearity, psi: SharedField, opts: &SolveOptions) -> Result<SolveOutcome> {
    opts.validate()?;
    let lattice = DiskLattice::new(opts.h, opts.rho, opts.center())?;
    let sys = System::assemble(lattice, psi.as_ref())?;
    let n = sys.len();
    let weight: Vec<f64> = sys
        .nodes
        .iter()
        .map(|&w| {
            let j = weight.eval(w)?;
            if !(j >= 0.0 && j.is_finite()) {
                return Err(Error::Evaluation { at: w, reason: format!("weight J = {j} must be finite and nonnegative") });
            }
            Ok(j)
        })
        .collect::<Result<_>>()?;

    let lu0 = sys.factor(&vec![0.0; n])?;
    let neg_b: Vec<f64> = sys.b.iter().map(|b| -b).collect();
    let mut t = System::solve(&lu0, &neg_b)?;
    let mut r = sup_norm(&residual(&sys, &weight, f, &t));
    let mut history = vec![r];
    if f.is_zero() || weight.iter().all(|&j| j == 0.0) || r <= opts.tolerance {
        return Ok(SolveOutcome { field: sys.into_field(&t, psi, 0, r, SolveStatus::Converged), status: SolveStatus::Converged, history, monotone: true });
    }

    let picard_lu = match opts.scheme {
        Scheme::Picard => {
            let c = t
                .iter()
                .zip(&weight)
                .map(|(&x, &j)| j * f.derivative(x))
                .filter(|v| v.is_finite())
                .fold(0.0, f64::max);
            Some((c, sys.factor(&vec![c; n])?))
        }
        Scheme::Newton => None,
    };

    let mut best = (r, t.clone());
    let mut monotone = true;
    let mut rising = 0;
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let step = || -> Result<(Vec<f64>, Option<f64>)> {
            match &picard_lu {
                Some((c, lu)) => {
                    let rhs: Vec<f64> = (0..n).map(|k| weight[k] * f.eval(t[k]) - c * t[k] - sys.b[k]).collect();
                    let star = System::solve(lu, &rhs)?;
                    let theta = opts.relaxation;
                    Ok((t.iter().zip(&star).map(|(a, s)| a + theta * (s - a)).collect(), None))
                }
                None => {
                    let res = residual(&sys, &weight, f, &t);
                    let jac: Vec<f64> = (0..n).map(|k| weight[k] * f.derivative(t[k])).collect();
                    let lu = sys.factor(&jac)?;
                    let neg: Vec<f64> = res.iter().map(|v| -v).collect();
                    let delta = System::solve(&lu, &neg)?;
                    let mut step = 1.0;
                    loop {
                        let trial: Vec<f64> = t.iter().zip(&delta).map(|(a, d)| a + step * d).collect();
                        let rt = sup_norm(&residual(&sys, &weight, f, &trial));
                        if (rt.is_finite() && rt < r) || step < 1.0 / 1024.0 {
                            return Ok((trial, Some(rt)));
                        }
                        step *= 0.5;
                    }
                }
            }
        };
        // Overflow in f or a singular step ends the run like divergence.
        let Ok((next, known)) = step() else {
            status = SolveStatus::Diverged;
            break;
        };
        let r_next = known.unwrap_or_else(|| sup_norm(&residual(&sys, &weight, f, &next)));
        if next.iter().zip(&t).any(|(a, b)| *a > b + 1e-12 * (1.0 + b.abs())) {
            monotone = false;
        }
        t = next;
        history.push(r_next);
        if !r_next.is_finite() {
            status = SolveStatus::Diverged;
            break;
        }
        rising = if r_next > r { rising + 1 } else { 0 };
        r = r_next;
        if r < best.0 {
            best = (r, t.clone());
        }
        if r <= opts.tolerance {
            status = SolveStatus::Converged;
            break;
        }
        if rising >= DIVERGENCE_RUN {
            status = SolveStatus::Diverged;
            break;
        }
    }
    let (r_out, t_out) = if status == SolveStatus::Converged { (r, t) } else { best };
    Ok(SolveOutcome { field: sys.into_field(&t_out, psi, iterations, r_out, status), status, history, monotone })
}
