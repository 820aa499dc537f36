//! Newton coordinate descent for `min J(K) + Σ Λ_ij |K_ij|`.
//!
//! Each outer iteration builds a second-order model of `J` around `K`,
//! minimizes model + penalty over the active set by cyclic coordinate
//! descent (using [`cache::CoordinateCache`] for O(r·n) updates), and
//! line-searches along both that direction and a diagonal-Hessian
//! proximal step, keeping the better one.

pub mod active;
pub mod cache;
pub mod init;
pub mod inner;
pub mod line_search;
pub mod polish;

use std::time::{Duration, Instant};

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::model::{validate, CostSpec, Gain, Plant};
use crate::objective::{evaluate, penalty, Evaluation};
use crate::report::{nnz, Direction, SolveReport, Termination, TraceRow};

pub use active::{active_set, optimality, ActiveSet};
pub use cache::{build_spectral_cache, CoordinateCache, SpectralCache};
pub use init::{deflate_and_stabilize, initialize};
pub use inner::{coordinate_step, fallback_direction, inner_solve, InnerStats};
pub use line_search::{line_search, Step};
pub use polish::polish;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stop when the min-norm subgradient is below `tol·(1 + |F|)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative Frobenius truncation tolerance for the factors of Θ.
    pub theta_tol: f64,
    /// Armijo constant σ.
    pub armijo: f64,
    /// Backtracking factor β.
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Inner sweeps stop once `‖ΔD‖_F < inner_tol·(1 + ‖D‖_F)`.
    pub inner_tol: f64,
    /// Bounds applied to the diagonal curvature of the fallback direction.
    pub fallback_clamp: (f64, f64),
    pub deflation_margin: Option<f64>,
    pub time_budget: Option<Duration>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 100,
            theta_tol: crate::kernels::DEFAULT_THETA_TOL,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            inner_tol: 1e-2,
            fallback_clamp: (1e-2, 1e4),
            deflation_margin: None,
            time_budget: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Invalid(format!("solver option {what}")));
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if !(self.theta_tol > 0.0 && self.theta_tol < 1.0) {
            return bad("theta_tol must lie in (0, 1)");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo must lie in (0, 1)");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack must lie in (0, 1)");
        }
        if !(self.inner_tol > 0.0) {
            return bad("inner_tol must be positive");
        }
        let (lo, hi) = self.fallback_clamp;
        if !(lo > 0.0 && lo <= hi) {
            return bad("fallback_clamp must satisfy 0 < lo ≤ hi");
        }
        if matches!(self.deflation_margin, Some(v) if !(v > 0.0)) {
            return bad("deflation_margin must be positive");
        }
        Ok(())
    }
}

/// Evaluations cost two Lyapunov solves each.
const SOLVES_PER_EVAL: usize = 2;

pub(crate) struct Start {
    pub k: Mat<f64>,
    pub eval: Evaluation,
    pub lyapunov_solves: usize,
}

/// Resolves the starting gain: `k0` as given, stabilized by deflation if
/// needed, or the soft-thresholded LQR gain.
pub(crate) fn starting_point(
    plant: &Plant,
    cost: &CostSpec,
    k0: Option<MatRef<'_, f64>>,
    options: &SolverOptions,
) -> Result<Start> {
    options.validate()?;
    validate(plant, cost).into_result()?;
    let k = match k0 {
        Some(k) => {
            if k.nrows() != plant.m() || k.ncols() != plant.n() {
                return Err(Error::Dimension {
                    field: "K0".into(),
                    expected: format!("{}×{}", plant.m(), plant.n()),
                    found: format!("{}×{}", k.nrows(), k.ncols()),
                });
            }
            k.to_owned()
        }
        None => initialize(plant, cost)?.into_matrix(),
    };
    let mut eval = evaluate(plant, cost, k.as_ref());
    let mut solves = SOLVES_PER_EVAL;
    let k = if eval.stable() {
        k
    } else {
        log::info!("starting gain is not stabilizing (max Re λ = {:.3e}); deflating", eval.max_real_eig);
        let (gain, rounds) = deflate_and_stabilize(plant, cost, k.as_ref(), options.deflation_margin, options)?;
        log::info!("stabilized after {rounds} deflation rounds");
        eval = evaluate(plant, cost, gain.k());
        solves += SOLVES_PER_EVAL;
        if !eval.stable() {
            return Err(Error::Stabilization("deflated gain lost stability".into()));
        }
        gain.into_matrix()
    };
    Ok(Start {
        k,
        eval,
        lyapunov_solves: solves,
    })
}

/// Runs Newton coordinate descent from `k0`, or from [`initialize`] when
/// `k0` is `None`.
pub fn solve(
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
        direction: Direction::Newton,
    }];
    let mut theta_ranks = Vec::new();
    let mut fallback_steps = 0;
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    for t in 1..=options.max_iter {
        let data = eval.require()?;
        let opt = optimality(k.as_ref(), data.grad.as_ref(), lambda);
        if opt <= options.tol * (1.0 + f.abs()) {
            termination = Termination::Converged;
            break;
        }
        if options.time_budget.is_some_and(|b| clock.elapsed() >= b) {
            termination = Termination::TimeBudget;
            break;
        }
        let active = active_set(k.as_ref(), data.grad.as_ref(), lambda);

        let mut newton_dir = None;
        let curvature: Vec<f64> = match build_spectral_cache(plant, cost, &eval, options.theta_tol) {
            Ok(SpectralCache { theta, mut coords }) => {
                theta_ranks.push(theta.rank);
                let curv: Vec<f64> = active.coords().iter().map(|&(i, j)| coords.curvature(i, j)).collect();
                let sweeps = t.div_ceil(3);
                let stats = inner_solve(&mut coords, k.as_ref(), lambda, &active, &curv, sweeps, options.inner_tol);
                log::trace!("iteration {t}: rank {} sweeps {} skipped {}", theta.rank, stats.sweeps, stats.skipped);
                let d = coords.into_direction();
                if d.norm_max() > 0.0 {
                    newton_dir = Some(d);
                }
                curv
            }
            Err(e) => {
                log::warn!("iteration {t}: Newton direction unavailable ({e}); using fallback only");
                let l = &data.l;
                active.coords().iter().map(|&(i, j)| 2.0 * cost.r()[(i, i)] * l[(j, j)]).collect()
            }
        };
        let fallback =
            fallback_direction(k.as_ref(), data.grad.as_ref(), lambda, &active, &curvature, options.fallback_clamp);

        let mut best: Option<(Step, Direction)> = None;
        let candidates = [(newton_dir, Direction::Newton), (Some(fallback), Direction::Fallback)];
        for (dir, kind) in candidates {
            let Some(d) = dir else { continue };
            if d.norm_max() == 0.0 {
                continue;
            }
            let step = line_search(plant, cost, k.as_ref(), data.grad.as_ref(), f, d.as_ref(), options)?;
            if let Some(step) = step {
                lyapunov_solves += SOLVES_PER_EVAL * step.trials;
                if best.as_ref().is_none_or(|(b, _)| step.objective_f < b.objective_f) {
                    best = Some((step, kind));
                }
            } else {
                lyapunov_solves += SOLVES_PER_EVAL * (options.max_backtracks + 1);
            }
        }
        let Some((step, kind)) = best else {
            termination = Termination::Stalled;
            break;
        };
        debug_assert!(step.objective_f <= f, "objective increased");
        if kind == Direction::Fallback {
            fallback_steps += 1;
        }
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
            active_set_size: active.len(),
            step_alpha: step.alpha,
            direction: kind,
        });
        log::debug!(
            "iter {t}: F = {f:.10e} ({kind}, α = {}), |A| = {}, nnz = {}",
            step.alpha,
            active.len(),
            nnz(k.as_ref())
        );
    }
    if termination == Termination::MaxIterations {
        let data = eval.require()?;
        if optimality(k.as_ref(), data.grad.as_ref(), lambda) <= options.tol * (1.0 + f.abs()) {
            termination = Termination::Converged;
        }
    }
    let data = eval.require()?;
    let opt = optimality(k.as_ref(), data.grad.as_ref(), lambda);
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
        theta_ranks,
        fallback_steps,
    })
}
