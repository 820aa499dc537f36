use faer::{Mat, MatRef};

use super::SolverOptions;
use crate::error::{Error, Result};
use crate::linalg::inner;
use crate::model::{CostSpec, Plant};
use crate::objective::{evaluate, penalty, Evaluation};

/// An accepted step `K + α·D`.
#[derive(Debug)]
pub struct Step {
    pub alpha: f64,
    pub k: Mat<f64>,
    pub eval: Evaluation,
    pub objective_f: f64,
    pub penalty_g: f64,
    /// Objective evaluations spent, including rejected trials.
    pub trials: usize,
}

/// Armijo backtracking `F(K + αD) ≤ F(K) + σ·α·Δ` with
/// `Δ = tr(∇Jᵀ·D) + g(K + D) − g(K)`; unstable trials are rejected.
///
/// Returns `Ok(None)` when `D` is not a descent direction or no step length
/// is accepted within the backtracking budget.
pub fn line_search(
    plant: &Plant,
    cost: &CostSpec,
    k: MatRef<'_, f64>,
    grad: MatRef<'_, f64>,
    objective_f: f64,
    d: MatRef<'_, f64>,
    options: &SolverOptions,
) -> Result<Option<Step>> {
    if d.norm_max() == 0.0 {
        return Err(Error::Invalid("line search along a zero direction".into()));
    }
    let g_k = penalty(cost, k);
    let full = k + d;
    let delta = inner(grad, d) + penalty(cost, full.as_ref()) - g_k;
    if !(delta < 0.0) {
        log::debug!("direction is not a descent direction (Δ = {delta:e})");
        return Ok(None);
    }
    let mut alpha = 1.0;
    for trial in 1..=options.max_backtracks + 1 {
        let cand = if alpha == 1.0 { full.clone() } else { k + d * faer::Scale(alpha) };
        let eval = evaluate(plant, cost, cand.as_ref());
        if eval.stable() {
            let g = penalty(cost, cand.as_ref());
            let f = eval.j + g;
            if f <= objective_f + options.armijo * alpha * delta {
                return Ok(Some(Step {
                    alpha,
                    k: cand,
                    eval,
                    objective_f: f,
                    penalty_g: g,
                    trials: trial,
                }));
            }
        }
        alpha *= options.backtrack;
    }
    Ok(None)
}
