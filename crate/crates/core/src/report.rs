//! Solver outcomes and per-iteration traces.

use std::fmt;
use std::io::Write;

use faer::{Mat, MatRef};
use serde::Serialize;

use crate::error::Result;
use crate::linalg::max_abs;
use crate::model::Gain;

/// Relative threshold below which an entry of `K` counts as zero.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;

/// Which update produced an iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Newton,
    Fallback,
    Ista,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Newton => "newton",
            Direction::Fallback => "fallback",
            Direction::Ista => "ista",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The min-norm subgradient fell below tolerance.
    Converged,
    MaxIterations,
    /// No direction produced an acceptable step.
    Stalled,
    TimeBudget,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max_iterations",
            Termination::Stalled => "stalled",
            Termination::TimeBudget => "time_budget",
        })
    }
}

/// One line of the iteration trace. Row 0 is the starting point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub time_s: f64,
    #[serde(rename = "objective_F")]
    pub objective_f: f64,
    #[serde(rename = "objective_J")]
    pub objective_j: f64,
    pub penalty_g: f64,
    pub nnz: usize,
    pub active_set_size: usize,
    pub step_alpha: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub gain: Gain,
    pub objective_f: f64,
    pub objective_j: f64,
    pub penalty_g: f64,
    /// Max-norm of the min-norm subgradient at the returned gain.
    pub optimality: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Vec<TraceRow>,
    pub lyapunov_solves: usize,
    /// Retained rank of Θ at each Newton iteration.
    pub theta_ranks: Vec<usize>,
    pub fallback_steps: usize,
}

impl SolveReport {
    pub fn nnz(&self) -> usize {
        nnz(self.gain.k())
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        write_trace_csv(&self.trace, out)
    }
}

/// Entries with `|K_ij| > 1e-9·max|K|`.
pub fn nnz(k: MatRef<'_, f64>) -> usize {
    support(k).len()
}

/// Row-major list of the nonzero coordinates of `K`.
pub fn support(k: MatRef<'_, f64>) -> Vec<(usize, usize)> {
    let cut = SUPPORT_THRESHOLD * max_abs(k);
    let mut out = Vec::new();
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            let v = k[(i, j)].abs();
            if v > cut && v > 0.0 {
                out.push((i, j));
            }
        }
    }
    out
}

/// `K` with every entry at or below the support threshold set to zero.
pub fn truncate(k: MatRef<'_, f64>) -> Mat<f64> {
    let cut = SUPPORT_THRESHOLD * max_abs(k);
    Mat::from_fn(k.nrows(), k.ncols(), |i, j| if k[(i, j)].abs() > cut { k[(i, j)] } else { 0.0 })
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| crate::Error::Invalid(format!("trace write: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_ignores_roundoff() {
        let k = faer::mat![[1.0, 1e-12, 0.0], [0.0, -2.0, 3e-9]];
        assert_eq!(support(k.as_ref()), vec![(0, 0), (1, 1), (1, 2)]);
        assert_eq!(nnz(Mat::<f64>::zeros(2, 2).as_ref()), 0);
    }

    #[test]
    fn trace_header() {
        let row = TraceRow {
            iter: 0,
            time_s: 0.0,
            objective_f: 1.0,
            objective_j: 1.0,
            penalty_g: 0.0,
            nnz: 3,
            active_set_size: 3,
            step_alpha: 0.0,
            direction: Direction::Newton,
        };
        let mut buf = Vec::new();
        write_trace_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "iter,time_s,objective_F,objective_J,penalty_g,nnz,active_set_size,step_alpha,direction\n"
        ));
        assert!(text.trim_end().ends_with(",newton"));
    }
}
