//! Coordinate descent on the Newton model and the diagonal fallback.

use faer::{Mat, MatRef};

use super::active::ActiveSet;
use super::cache::CoordinateCache;
use crate::linalg::soft_threshold;

/// Minimizer of `½·a·μ² + b·μ + λ·|c + μ|`; `λ = ∞` returns `−c`.
pub fn coordinate_step(a: f64, b: f64, c: f64, lambda: f64) -> f64 {
    if lambda.is_infinite() {
        return -c;
    }
    -c + soft_threshold(c - b / a, lambda / a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerStats {
    pub sweeps: usize,
    /// Coordinates left untouched because their curvature was not positive.
    pub skipped: usize,
    /// `‖ΔD‖_F / (1 + ‖D‖_F)` over the last sweep.
    pub last_relative_change: f64,
}

/// Cyclic coordinate descent over `active`, leaving the direction in the cache.
///
/// Stops after `max_sweeps` or once a sweep changes `D` by less than
/// `rel_tol·(1 + ‖D‖_F)`. `curvature[idx]` is the precomputed `a` for
/// `active.coords()[idx]`.
pub fn inner_solve(
    cache: &mut CoordinateCache,
    k: MatRef<'_, f64>,
    lambda: MatRef<'_, f64>,
    active: &ActiveSet,
    curvature: &[f64],
    max_sweeps: usize,
    rel_tol: f64,
) -> InnerStats {
    let mut stats = InnerStats {
        sweeps: 0,
        skipped: 0,
        last_relative_change: f64::INFINITY,
    };
    while stats.sweeps < max_sweeps {
        stats.sweeps += 1;
        stats.skipped = 0;
        let mut change = 0.0;
        for (idx, &(i, j)) in active.coords().iter().enumerate() {
            let a = curvature[idx];
            if !(a > 0.0) {
                stats.skipped += 1;
                continue;
            }
            let b = cache.slope(i, j);
            let c = k[(i, j)] + cache.direction()[(i, j)];
            let mu = coordinate_step(a, b, c, lambda[(i, j)]);
            if mu != 0.0 && mu.is_finite() {
                cache.apply(i, j, mu);
                change += mu * mu;
            }
        }
        let norm = cache.direction().norm_l2();
        stats.last_relative_change = if norm > 0.0 { change.sqrt() / (1.0 + norm) } else { 0.0 };
        if stats.last_relative_change < rel_tol {
            break;
        }
    }
    stats
}

/// Proximal step with a diagonal Hessian: `a` clamped to `[lo, hi]`.
pub fn fallback_direction(
    k: MatRef<'_, f64>,
    grad: MatRef<'_, f64>,
    lambda: MatRef<'_, f64>,
    active: &ActiveSet,
    curvature: &[f64],
    clamp: (f64, f64),
) -> Mat<f64> {
    let mut d = Mat::zeros(k.nrows(), k.ncols());
    for (idx, &(i, j)) in active.coords().iter().enumerate() {
        let a = if curvature[idx].is_nan() { clamp.0 } else { curvature[idx].clamp(clamp.0, clamp.1) };
        d[(i, j)] = coordinate_step(a, grad[(i, j)], k[(i, j)], lambda[(i, j)]);
    }
    d
}
