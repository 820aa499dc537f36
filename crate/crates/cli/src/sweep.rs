//! Regularization paths: ℓ1 solve plus optional polishing per λ.

use std::time::Instant;

use faer::{Mat, MatRef};
use serde::Serialize;

use sparse_lqr::kernels::lqr_synthesize;
use sparse_lqr::report::{nnz, support, truncate};
use sparse_lqr::{ista_solve, polish, solve, CostSpec, Plant, SolveReport, SolverOptions};

use crate::error::{CliError, CliResult};
use crate::SolverKind;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub count: usize,
    pub polish_each: bool,
    pub warm_start: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.lambda_min > 0.0 && self.lambda_min.is_finite() && self.lambda_max.is_finite()) {
            return Err(CliError::Usage("λ bounds must be positive and finite".into()));
        }
        if self.count > 1 && !(self.lambda_min < self.lambda_max) {
            return Err(CliError::Usage("--lambda-min must be below --lambda-max".into()));
        }
        if self.count == 0 {
            return Err(CliError::Usage("--count must be at least 1".into()));
        }
        Ok(())
    }

    /// Log-spaced values from `lambda_max` down to `lambda_min`.
    pub fn lambdas(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lambda_max];
        }
        let (lo, hi) = (self.lambda_min.ln(), self.lambda_max.ln());
        let last = (self.count - 1) as f64;
        (0..self.count).map(|i| (hi - (hi - lo) * i as f64 / last).exp()).collect()
    }
}

/// One row of the sweep table. Failed rows carry NaN metrics and the error
/// in `status`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub nnz: usize,
    pub nnz_fraction: f64,
    /// `J` of the ℓ1 solution.
    pub j_l1: f64,
    /// `J` after polishing (equal to `j_l1` without polishing).
    pub j_polished: f64,
    /// `J_polished / J_LQR − 1`.
    pub performance_gap: f64,
    pub iterations: usize,
    pub time_s: f64,
    pub status: String,
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub l1: SolveReport,
    pub polished: Option<SolveReport>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub j_lqr: f64,
    pub rows: Vec<SweepRow>,
    /// Full reports per row; `None` where the ℓ1 solve failed.
    pub runs: Vec<Option<SweepRun>>,
}

/// `Λ = λ·weights`, keeping infinite weights infinite at `λ = 0`.
pub fn scaled_weights(weights: MatRef<'_, f64>, lambda: f64) -> Mat<f64> {
    Mat::from_fn(weights.nrows(), weights.ncols(), |i, j| {
        let w = weights[(i, j)];
        if w.is_infinite() {
            w
        } else {
            w * lambda
        }
    })
}

pub fn run_sweep(
    plant: &Plant,
    cost: &CostSpec,
    weights: MatRef<'_, f64>,
    spec: &SweepSpec,
    solver: SolverKind,
    options: &SolverOptions,
) -> CliResult<SweepOutcome> {
    spec.validate()?;
    let unregularized = cost.with_uniform_lambda(0.0);
    let (lqr, _) = lqr_synthesize(plant, &unregularized)?;
    let j_lqr = sparse_lqr::objective::evaluate(plant, &unregularized, lqr.k()).j;
    let total = (plant.m() * plant.n()) as f64;
    let mut warm: Option<Mat<f64>> = None;
    let mut rows = Vec::new();
    let mut runs = Vec::new();

    for lambda in spec.lambdas() {
        let clock = Instant::now();
        let cost_l = cost.with_lambda(scaled_weights(weights, lambda))?;
        let start = if spec.warm_start { warm.as_ref().map(|k| k.as_ref()) } else { None };
        let result = match solver {
            SolverKind::NewtonCd => solve(plant, &cost_l, start, options),
            SolverKind::Ista => ista_solve(plant, &cost_l, start, options),
        };
        let l1 = match result {
            Ok(r) => r,
            Err(e) => {
                log::warn!("λ = {lambda:.4e}: {e}");
                rows.push(SweepRow {
                    lambda,
                    nnz: 0,
                    nnz_fraction: f64::NAN,
                    j_l1: f64::NAN,
                    j_polished: f64::NAN,
                    performance_gap: f64::NAN,
                    iterations: 0,
                    time_s: clock.elapsed().as_secs_f64(),
                    status: format!("error: {e}"),
                });
                runs.push(None);
                continue;
            }
        };
        let mut status = l1.termination.to_string();
        let mut iterations = l1.iterations;
        let polished = if spec.polish_each {
            let start = truncate(l1.gain.k());
            let pattern = support(start.as_ref());
            match polish(plant, &unregularized, &pattern, start.as_ref(), options) {
                Ok(p) => {
                    iterations += p.iterations;
                    Some(p)
                }
                Err(e) => {
                    log::warn!("λ = {lambda:.4e}: polishing failed: {e}");
                    status = format!("{status}; polish error: {e}");
                    None
                }
            }
        } else {
            None
        };
        let k_final = polished.as_ref().map_or(l1.gain.k(), |p| p.gain.k());
        let count = nnz(k_final);
        let j_polished = polished.as_ref().map_or(l1.objective_j, |p| p.objective_j);
        rows.push(SweepRow {
            lambda,
            nnz: count,
            nnz_fraction: count as f64 / total,
            j_l1: l1.objective_j,
            j_polished,
            performance_gap: j_polished / j_lqr - 1.0,
            iterations,
            time_s: clock.elapsed().as_secs_f64(),
            status,
        });
        warm = Some(l1.gain.k().to_owned());
        runs.push(Some(SweepRun { l1, polished }));
    }
    Ok(SweepOutcome { j_lqr, rows, runs })
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Output(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambdas_descend_log_spaced() {
        let spec = SweepSpec {
            lambda_min: 1e-2,
            lambda_max: 1e2,
            count: 5,
            polish_each: true,
            warm_start: true,
        };
        let l = spec.lambdas();
        assert_eq!(l.len(), 5);
        for (got, want) in l.iter().zip([1e2, 1e1, 1.0, 1e-1, 1e-2]) {
            assert!((got / want - 1.0).abs() < 1e-12);
        }
        let single = SweepSpec { count: 1, ..spec.clone() };
        assert_eq!(single.lambdas(), vec![1e2]);
        assert!(SweepSpec { count: 0, ..spec.clone() }.validate().is_err());
        assert!(SweepSpec {
            lambda_min: 5.0,
            lambda_max: 1.0,
            ..spec
        }
        .validate()
        .is_err());
    }

    #[test]
    fn pinned_weights_survive_zero_lambda() {
        let w = faer::mat![[1.0, f64::INFINITY]];
        let s = scaled_weights(w.as_ref(), 0.0);
        assert_eq!(s[(0, 0)], 0.0);
        assert!(s[(0, 1)].is_infinite());
    }
}
