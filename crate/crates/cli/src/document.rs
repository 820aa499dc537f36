//! Machine-readable reports. Every field is present on every exit path;
//! fields that could not be computed are `null`.

use std::path::Path;

use faer::MatRef;
use serde::Serialize;

use sparse_lqr::SolveReport;

use crate::error::{CliError, CliResult};

fn rows(k: MatRef<'_, f64>) -> Vec<Vec<f64>> {
    (0..k.nrows()).map(|i| (0..k.ncols()).map(|j| k[(i, j)]).collect()).collect()
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GainDocument {
    pub command: String,
    pub status: String,
    pub error: Option<String>,
    pub solver: Option<String>,
    pub termination: Option<String>,
    pub lambda: Option<f64>,
    #[serde(rename = "objective_F")]
    pub objective_f: Option<f64>,
    #[serde(rename = "objective_J")]
    pub objective_j: Option<f64>,
    pub penalty_g: Option<f64>,
    pub nnz: Option<usize>,
    pub nnz_fraction: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_time_s: Option<f64>,
    pub optimality: Option<f64>,
    pub lyapunov_solves: Option<usize>,
    pub fallback_steps: Option<usize>,
    pub stability_margin: Option<f64>,
    pub care_residual: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<Vec<Vec<f64>>>,
}

impl GainDocument {
    pub fn failed(command: &str, error: &CliError) -> Self {
        Self {
            command: command.into(),
            status: "error".into(),
            error: Some(error.to_string()),
            ..Self::default()
        }
    }

    pub fn from_report(command: &str, solver: &str, report: &SolveReport, wall_time_s: f64) -> Self {
        let k = report.gain.k();
        let total = (k.nrows() * k.ncols()).max(1) as f64;
        Self {
            command: command.into(),
            status: "ok".into(),
            error: None,
            solver: Some(solver.into()),
            termination: Some(report.termination.to_string()),
            lambda: None,
            objective_f: Some(report.objective_f),
            objective_j: Some(report.objective_j),
            penalty_g: Some(report.penalty_g),
            nnz: Some(report.nnz()),
            nnz_fraction: Some(report.nnz() as f64 / total),
            iterations: Some(report.iterations),
            wall_time_s: Some(wall_time_s),
            optimality: Some(report.optimality),
            lyapunov_solves: Some(report.lyapunov_solves),
            fallback_steps: Some(report.fallback_steps),
            stability_margin: Some(report.gain.stability_margin()),
            care_residual: None,
            k: Some(rows(k)),
        }
    }

    pub fn with_gain(mut self, k: MatRef<'_, f64>) -> Self {
        self.k = Some(rows(k));
        self
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SweepDocument {
    pub command: String,
    pub status: String,
    pub error: Option<String>,
    pub j_lqr: Option<f64>,
    pub rows: Option<usize>,
    pub failed_rows: Option<usize>,
    pub warm_start: Option<bool>,
    pub polish: Option<bool>,
    pub wall_time_s: Option<f64>,
    pub table: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BenchSolverSummary {
    pub solver: String,
    pub termination: Option<String>,
    #[serde(rename = "final_F")]
    pub final_f: Option<f64>,
    pub iterations: Option<usize>,
    pub time_s: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BenchDocument {
    pub command: String,
    pub status: String,
    pub error: Option<String>,
    pub lambda: Option<f64>,
    #[serde(rename = "F0")]
    pub f0: Option<f64>,
    /// Best objective found by any solver; gaps are measured against it.
    pub f_star: Option<f64>,
    pub solvers: Vec<BenchSolverSummary>,
    pub table: Option<String>,
}

pub fn write_json<T: Serialize>(doc: &T, path: &Path) -> CliResult<()> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| CliError::Output(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
