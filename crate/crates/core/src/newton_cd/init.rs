//! Starting points: soft-thresholded LQR and stabilization by deflation.

use faer::{Mat, MatRef};

use super::{solve, SolverOptions};
use crate::error::{Error, Result};
use crate::kernels::{lqr_synthesize, max_real_eig};
use crate::linalg::soft_threshold;
use crate::model::{CostSpec, Gain, Plant};
use crate::objective::{evaluate, penalty};

const MAX_HALVINGS: usize = 60;
const MAX_DEFLATION_ROUNDS: usize = 50;
const MAX_NON_IMPROVING: usize = 10;
const DEFLATION_INNER_ITERS: usize = 5;

fn shrink(k: MatRef<'_, f64>, lambda: MatRef<'_, f64>, alpha: f64) -> Mat<f64> {
    Mat::from_fn(k.nrows(), k.ncols(), |i, j| {
        let t = lambda[(i, j)];
        if t.is_infinite() {
            0.0
        } else {
            soft_threshold(k[(i, j)], alpha * t)
        }
    })
}

/// `K⁰ = S_{αΛ}(K_LQR)` for the largest `α ∈ {1, ½, ¼, …}` that stays
/// stabilizing without raising `F` above `F(K_LQR)`.
///
/// Pinned entries (`Λ_ij = ∞`) are zero in every candidate; if none is
/// acceptable the result is only guaranteed to be the least-shrunk candidate
/// and may need [`deflate_and_stabilize`].
pub fn initialize(plant: &Plant, cost: &CostSpec) -> Result<Gain> {
    let (lqr, _) = lqr_synthesize(plant, cost)?;
    let k_lqr = lqr.into_matrix();
    let lambda = cost.lambda();
    let has_pins = lambda.col_iter().any(|c| c.iter().any(|v| v.is_infinite()));
    let f_lqr = if has_pins {
        f64::INFINITY
    } else {
        evaluate(plant, cost, k_lqr.as_ref()).j + penalty(cost, k_lqr.as_ref())
    };
    let mut alpha = 1.0;
    let mut last = k_lqr.clone();
    for _ in 0..=MAX_HALVINGS {
        let cand = shrink(k_lqr.as_ref(), lambda, alpha);
        let eval = evaluate(plant, cost, cand.as_ref());
        if eval.stable() && eval.j + penalty(cost, cand.as_ref()) <= f_lqr {
            log::debug!("initial point: α = {alpha}");
            return Ok(Gain::with_margin(cand, -eval.max_real_eig));
        }
        last = cand;
        alpha *= 0.5;
    }
    if has_pins {
        return Ok(Gain::new(plant, last));
    }
    Ok(Gain::new(plant, k_lqr))
}

/// Drives an unstable `K` to a stabilizing one by repeatedly optimizing on
/// the shifted plant `A − ν·I`, `ν = max Re λ(A + BK) + margin`.
///
/// `margin` defaults to `0.1·(1 + |max Re λ|)`. Fails when ten consecutive
/// rounds do not improve the spectral abscissa, or after fifty rounds.
pub fn deflate_and_stabilize(
    plant: &Plant,
    cost: &CostSpec,
    k0: MatRef<'_, f64>,
    margin: Option<f64>,
    options: &SolverOptions,
) -> Result<(Gain, usize)> {
    let mut k = k0.to_owned();
    let mut abscissa = max_real_eig(plant.closed_loop(k.as_ref()).as_ref());
    let mut best = abscissa;
    let mut stale = 0;
    let inner = SolverOptions {
        max_iter: DEFLATION_INNER_ITERS,
        time_budget: None,
        ..options.clone()
    };
    for round in 1..=MAX_DEFLATION_ROUNDS {
        if abscissa < 0.0 {
            return Ok((Gain::with_margin(k, -abscissa), round - 1));
        }
        if !abscissa.is_finite() {
            return Err(Error::Stabilization("closed-loop spectrum is not finite".into()));
        }
        let nu = abscissa + margin.unwrap_or(0.1 * (1.0 + abscissa.abs()));
        let shifted = plant.shifted(nu);
        let report = solve(&shifted, cost, Some(k.as_ref()), &inner)?;
        k = report.gain.into_matrix();
        abscissa = max_real_eig(plant.closed_loop(k.as_ref()).as_ref());
        log::debug!("deflation round {round}: ν = {nu:.4e}, max Re λ = {abscissa:.4e}");
        if abscissa < best - 1e-12 * (1.0 + best.abs()) {
            best = abscissa;
            stale = 0;
        } else {
            stale += 1;
            if stale >= MAX_NON_IMPROVING {
                return Err(Error::Stabilization(format!(
                    "spectral abscissa stuck at {best:.4e} after {round} rounds"
                )));
            }
        }
    }
    if abscissa < 0.0 {
        return Ok((Gain::with_margin(k, -abscissa), MAX_DEFLATION_ROUNDS));
    }
    Err(Error::Stabilization(format!(
        "no stabilizing gain after {MAX_DEFLATION_ROUNDS} rounds (max Re λ = {abscissa:.4e})"
    )))
}
