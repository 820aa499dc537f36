//! Solver comparison from a shared starting gain.

use serde::Serialize;

use sparse_lqr::newton_cd::initialize;
use sparse_lqr::{ista_solve, solve, CostSpec, Plant, SolveReport, SolverOptions};

use crate::error::{CliError, CliResult};
use crate::SolverKind;

#[derive(Debug, Clone)]
pub struct BenchSeries {
    pub solver: SolverKind,
    pub report: Result<SolveReport, String>,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    /// `F` at the shared starting gain.
    pub f0: f64,
    /// Best `F` found by any solver.
    pub f_star: f64,
    pub series: Vec<BenchSeries>,
}

/// One `(solver, time, F − f*)` sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSample {
    pub solver: String,
    pub iter: usize,
    pub time_s: f64,
    #[serde(rename = "objective_F")]
    pub objective_f: f64,
    pub gap: f64,
    pub f_star: f64,
}

impl BenchOutcome {
    /// First trace time at which `solver` reached `F ≤ f* + rel·|f*|`.
    pub fn time_to_reach(&self, solver: SolverKind, rel: f64) -> Option<f64> {
        let target = self.f_star + rel * self.f_star.abs();
        let series = self.series.iter().find(|s| s.solver == solver)?;
        let report = series.report.as_ref().ok()?;
        report.trace.iter().find(|r| r.objective_f <= target).map(|r| r.time_s)
    }

    pub fn samples(&self) -> Vec<BenchSample> {
        let mut out = Vec::new();
        for s in &self.series {
            if let Ok(report) = &s.report {
                for row in &report.trace {
                    out.push(BenchSample {
                        solver: s.solver.to_string(),
                        iter: row.iter,
                        time_s: row.time_s,
                        objective_f: row.objective_f,
                        gap: row.objective_f - self.f_star,
                        f_star: self.f_star,
                    });
                }
            }
        }
        out
    }
}

/// Runs each solver in turn from the soft-thresholded LQR gain.
pub fn run_bench(
    plant: &Plant,
    cost: &CostSpec,
    solvers: &[SolverKind],
    options: &SolverOptions,
) -> CliResult<BenchOutcome> {
    if solvers.is_empty() {
        return Err(CliError::Usage("no solvers selected".into()));
    }
    let k0 = initialize(plant, cost)?;
    let f0 = sparse_lqr::objective::evaluate(plant, cost, k0.k()).j + sparse_lqr::objective::penalty(cost, k0.k());
    let mut series = Vec::new();
    for &solver in solvers {
        let report = match solver {
            SolverKind::NewtonCd => solve(plant, cost, Some(k0.k()), options),
            SolverKind::Ista => ista_solve(plant, cost, Some(k0.k()), options),
        };
        if let Err(e) = &report {
            log::warn!("{solver}: {e}");
        }
        series.push(BenchSeries {
            solver,
            report: report.map_err(|e| e.to_string()),
        });
    }
    let f_star = series
        .iter()
        .filter_map(|s| s.report.as_ref().ok())
        .flat_map(|r| r.trace.iter().map(|t| t.objective_f))
        .fold(f0, f64::min);
    Ok(BenchOutcome { f0, f_star, series })
}

pub fn write_bench_csv<W: std::io::Write>(samples: &[BenchSample], out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s).map_err(|e| CliError::Output(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
