use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstPoint {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// Norms of a residual over a grid sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub problem_id: String,
    pub h: f64,
    pub margin: f64,
    pub samples: usize,
    pub linf: f64,
    /// Discrete `L²`: `sqrt(h² Σ r²)`.
    pub l2: f64,
    pub worst_points: Vec<WorstPoint>,
    pub order: Option<f64>,
    pub order_warning: Option<String>,
    #[serde(skip)]
    pub residuals: Vec<ResidualSample>,
}

/// How many offenders a report keeps.
const WORST_KEPT: usize = 5;

impl ResidualReport {
    /// Build from residual samples given in grid-index order.
    pub(crate) fn from_samples(
        problem_id: String,
        h: f64,
        margin: f64,
        residuals: Vec<ResidualSample>,
    ) -> Result<Self> {
        if residuals.is_empty() {
            return Err(Error::InvalidParameter(format!("no sample points for {problem_id}")));
        }
        let mut linf: f64 = 0.0;
        let mut sum_sq = 0.0;
        for s in &residuals {
            linf = linf.max(s.value.abs());
            sum_sq += s.value * s.value;
        }
        let mut order: Vec<usize> = (0..residuals.len()).collect();
        // Stable: ties keep grid-index order.
        order.sort_by(|&a, &b| residuals[b].value.abs().total_cmp(&residuals[a].value.abs()));
        let worst_points = order
            .iter()
            .take(WORST_KEPT)
            .map(|&k| {
                let s = residuals[k];
                WorstPoint { x: s.x, y: s.y, value: s.value }
            })
            .collect();
        Ok(ResidualReport {
            problem_id,
            h,
            margin,
            samples: residuals.len(),
            linf,
            l2: (h * h * sum_sq).sqrt(),
            worst_points,
            order: None,
            order_warning: None,
            residuals,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `x,y,value` residual rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,y,value")?;
        for s in &self.residuals {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", s.x, s.y, s.value)?;
        }
        Ok(())
    }
}

/// Least-squares slope of `log L∞` against `log h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub order: f64,
    pub warning: Option<String>,
}

pub fn convergence_order(reports: &[ResidualReport]) -> Result<OrderEstimate> {
    if reports.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "an order estimate needs at least 3 refinements, got {}",
            reports.len()
        )));
    }
    let mut pts: Vec<(f64, f64)> = reports.iter().map(|r| (r.h, r.linf)).collect();
    if pts.iter().any(|&(h, e)| !(h > 0.0) || !(e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidParameter("order estimate needs positive finite h and L∞".into()));
    }
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let n = pts.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(h, e)| (h.ln(), e.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("refinements share one spacing".into()));
    }
    let order = sxy / sxx;
    let monotone = pts.windows(2).all(|w| w[1].1 < w[0].1);
    let warning = (!monotone).then(|| "residuals do not decrease monotonically under refinement".to_string());
    Ok(OrderEstimate { order, warning })
}
