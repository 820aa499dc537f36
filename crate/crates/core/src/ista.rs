//! Proximal-gradient baseline: `K⁺ = S_{sΛ}(K − s·∇J(K))` with backtracking.

use std::time::Instant;

use faer::{Mat, MatRef};

use crate::error::Result;
use crate::linalg::soft_threshold;
use crate::model::{CostSpec, Gain, Plant};
use crate::newton_cd::{optimality, starting_point, SolverOptions, Start};
use crate::objective::{evaluate, penalty, Evaluation};
use crate::report::{nnz, Direction, SolveReport, Termination, TraceRow};

/// Largest step tried; each iteration starts from twice the previous one.
const MAX_STEP: f64 = 1.0;

pub fn prox_gradient(k: MatRef<'_, f64>, grad: MatRef<'_, f64>, lambda: MatRef<'_, f64>, s: f64) -> Mat<f64> {
    Mat::from_fn(k.nrows(), k.ncols(), |i, j| {
        let l = lambda[(i, j)];
        if l.is_infinite() {
            0.0
        } else {
            soft_threshold(k[(i, j)] - s * grad[(i, j)], s * l)
        }
    })
}

#[derive(Debug)]
pub struct IstaStep {
    pub step: f64,
    pub k: Mat<f64>,
    pub eval: Evaluation,
    pub objective_f: f64,
    pub penalty_g: f64,
    pub trials: usize,
}

/// One backtracking proximal-gradient step from `s0`, accepting the first
/// stable `K⁺` with `F(K⁺) ≤ F(K) − (σ/s)·‖K⁺ − K‖²_F`.
pub fn ista_step(
    plant: &Plant,
    cost: &CostSpec,
    k: MatRef<'_, f64>,
    grad: MatRef<'_, f64>,
    objective_f: f64,
    s0: f64,
    options: &SolverOptions,
) -> Option<IstaStep> {
    let mut s = s0;
    for trial in 1..=options.max_backtracks + 1 {
        let cand = prox_gradient(k, grad, cost.lambda(), s);
        let moved = (&cand - k).norm_l2();
        if moved == 0.0 {
            return None;
        }
        let eval = evaluate(plant, cost, cand.as_ref());
        if eval.stable() {
            let g = penalty(cost, cand.as_ref());
            let f = eval.j + g;
            if f <= objective_f - options.armijo / s * moved * moved {
                return Some(IstaStep {
                    step: s,
                    k: cand,
                    eval,
                    objective_f: f,
                    penalty_g: g,
                    trials: trial,
                });
            }
        }
        s *= options.backtrack;
    }
    None
}

/// Proximal gradient with the same starting point, stopping rule and trace
/// format as [`crate::newton_cd::solve`].
pub fn ista_solve(
    plant: &Plant,
    cost: &CostSpec,
    k0: Option<MatRef<'_, f64>>,
    options: &SolverOptions,
) -> Result<SolveReport> {
    let clock = Instant::now();
    let Start {
        mut k,
        mut eval,
        mut lyapunov_solves,
    } = starting_point(plant, cost, k0, options)?;
    let lambda = cost.lambda();
    let mut g = penalty(cost, k.as_ref());
    let mut f = eval.j + g;
    let mut trace = vec![TraceRow {
        iter: 0,
        time_s: clock.elapsed().as_secs_f64(),
        objective_f: f,
        objective_j: eval.j,
        penalty_g: g,
        nnz: nnz(k.as_ref()),
        active_set_size: 0,
        step_alpha: 0.0,
        direction: Direction::Ista,
    }];
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    let mut s = MAX_STEP;

    for t in 1..=options.max_iter {
        let data = eval.require()?;
        if optimality(k.as_ref(), data.grad.as_ref(), lambda) <= options.tol * (1.0 + f.abs()) {
            termination = Termination::Converged;
            break;
        }
        if options.time_budget.is_some_and(|b| clock.elapsed() >= b) {
            termination = Termination::TimeBudget;
            break;
        }
        let Some(step) = ista_step(plant, cost, k.as_ref(), data.grad.as_ref(), f, s, options) else {
            termination = Termination::Stalled;
            break;
        };
        lyapunov_solves += 2 * step.trials;
        s = (2.0 * step.step).min(MAX_STEP);
        iterations = t;
        k = step.k;
        eval = step.eval;
        g = step.penalty_g;
        f = step.objective_f;
        trace.push(TraceRow {
            iter: t,
            time_s: clock.elapsed().as_secs_f64(),
            objective_f: f,
            objective_j: eval.j,
            penalty_g: g,
            nnz: nnz(k.as_ref()),
            active_set_size: 0,
            step_alpha: step.step,
            direction: Direction::Ista,
        });
    }
    let data = eval.require()?;
    let opt = optimality(k.as_ref(), data.grad.as_ref(), lambda);
    if termination == Termination::MaxIterations && opt <= options.tol * (1.0 + f.abs()) {
        termination = Termination::Converged;
    }
    let margin = -eval.max_real_eig;
    Ok(SolveReport {
        gain: Gain::with_margin(k, margin),
        objective_f: f,
        objective_j: eval.j,
        penalty_g: g,
        optimality: opt,
        iterations,
        termination,
        trace,
        lyapunov_solves,
        theta_ranks: Vec::new(),
        fallback_steps: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prox_respects_pins() {
        let k = faer::mat![[1.0, 2.0]];
        let g = faer::mat![[1.0, 1.0]];
        let lam = faer::mat![[0.5, f64::INFINITY]];
        let out = prox_gradient(k.as_ref(), g.as_ref(), lam.as_ref(), 0.5);
        assert_eq!(out[(0, 0)], 0.25);
        assert_eq!(out[(0, 1)], 0.0);
    }
}
