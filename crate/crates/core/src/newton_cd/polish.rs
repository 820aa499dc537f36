use faer::MatRef;

use super::{solve, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{CostSpec, Plant};
use crate::report::SolveReport;

/// Minimizes `J` over gains supported on `pattern`, starting from `k_start`.
///
/// Equivalent to solving with `Λ = 0` on the pattern and `∞` elsewhere, so
/// the result never leaves the pattern and `J` never increases.
pub fn polish(
    plant: &Plant,
    cost: &CostSpec,
    pattern: &[(usize, usize)],
    k_start: MatRef<'_, f64>,
    options: &SolverOptions,
) -> Result<SolveReport> {
    let (m, n) = (plant.m(), plant.n());
    if let Some(&(i, j)) = pattern.iter().find(|&&(i, j)| i >= m || j >= n) {
        return Err(Error::Invalid(format!("pattern entry ({i}, {j}) outside {m}×{n}")));
    }
    let pinned = cost.with_pattern(pattern);
    for i in 0..m {
        for j in 0..n {
            if k_start[(i, j)] != 0.0 && pinned.lambda()[(i, j)].is_infinite() {
                return Err(Error::Invalid(format!(
                    "starting gain has K[{i}][{j}] ≠ 0 outside the pattern"
                )));
            }
        }
    }
    solve(plant, &pinned, Some(k_start), options)
}
