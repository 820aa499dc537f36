//! Stabilizing solution of the continuous algebraic Riccati equation
//! `AᵀP + PA − PBR⁻¹BᵀP + Q = 0` and the LQR gain `K = −R⁻¹BᵀP`.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef};

use super::eig::{max_real_eig, Eigendecomposition};
use super::lyapunov::{solve_lyapunov_with, Side};
use crate::error::{Error, Result};
use crate::linalg::{imag_residue, symmetrize};
use crate::model::{CostSpec, Gain, Plant};

/// `‖AᵀP + PA − PBR⁻¹BᵀP + Q‖_F`.
pub fn care_residual(plant: &Plant, cost: &CostSpec, p: MatRef<'_, f64>) -> f64 {
    let (a, b) = (plant.a(), plant.b());
    let r_inv_bt = cost.r().partial_piv_lu().solve(b.transpose());
    let atp = a.transpose() * p;
    let pb = p * b;
    let quad = &pb * &r_inv_bt * p;
    let mut res = cost.q().to_owned() - &quad;
    let n = plant.n();
    for j in 0..n {
        for i in 0..n {
            res[(i, j)] += atp[(i, j)] + atp[(j, i)];
        }
    }
    res.norm_l2()
}

/// Classical LQR synthesis: the stable invariant subspace of the Hamiltonian
/// `[[A, −BR⁻¹Bᵀ], [−Q, −Aᵀ]]` gives `P = X₂X₁⁻¹`, then Newton–Kleinman
/// steps polish the residual.
pub fn lqr_synthesize(plant: &Plant, cost: &CostSpec) -> Result<(Gain, Mat<f64>)> {
    let n = plant.n();
    let (a, b) = (plant.a(), plant.b());
    let r_lu = cost.r().partial_piv_lu();
    let r_inv_bt = r_lu.solve(b.transpose());
    let gain_of = |p: &Mat<f64>| -> Mat<f64> { (&r_inv_bt * p) * faer::Scale(-1.0) };

    let mut p = match hamiltonian_solution(plant, cost, r_inv_bt.as_ref()) {
        Ok(p) => p,
        Err(err) => {
            if max_real_eig(a) < 0.0 {
                // open loop already stable: Kleinman from K = 0
                let zero = Mat::<f64>::zeros(plant.m(), n);
                observability_solve(plant, cost, &zero)?
            } else {
                return Err(err);
            }
        }
    };

    let q_scale = cost.q().norm_l2().max(f64::MIN_POSITIVE);
    let mut residual = care_residual(plant, cost, p.as_ref());
    for _ in 0..30 {
        if residual <= 1e-14 * q_scale {
            break;
        }
        let k = gain_of(&p);
        let candidate = match observability_solve(plant, cost, &k) {
            Ok(c) => c,
            Err(_) => break,
        };
        let cand_res = care_residual(plant, cost, candidate.as_ref());
        if !(cand_res < residual) {
            break;
        }
        p = candidate;
        residual = cand_res;
    }

    let k = gain_of(&p);
    let acl = a + b * &k;
    let max_re = max_real_eig(acl.as_ref());
    if !(max_re < 0.0) {
        return Err(Error::Synthesis(format!(
            "closed loop not Hurwitz (max real eigenvalue {max_re:e})"
        )));
    }
    if !p.norm_max().is_finite() {
        return Err(Error::Synthesis("Riccati solution is not finite".into()));
    }
    Ok((Gain::with_margin(k, -max_re), p))
}

fn hamiltonian_solution(plant: &Plant, cost: &CostSpec, r_inv_bt: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let n = plant.n();
    let a = plant.a();
    let g = plant.b() * r_inv_bt;
    let h = Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => a[(i, j)],
        (true, false) => -g[(i, j - n)],
        (false, true) => -cost.q()[(i - n, j)],
        (false, false) => -a[(j - n, i - n)],
    });
    let evd = h.eigen().map_err(|_| Error::Synthesis("Hamiltonian eigenvalue iteration failed".into()))?;
    let s = evd.S().column_vector();
    let stable: Vec<usize> = (0..2 * n).filter(|&k| s[k].re < 0.0).collect();
    if stable.len() != n {
        return Err(Error::Synthesis(format!(
            "Hamiltonian has {} stable eigenvalues, expected {n}",
            stable.len()
        )));
    }
    let u = evd.U();
    let x1 = Mat::from_fn(n, n, |i, j| u[(i, stable[j])]);
    let x2 = Mat::from_fn(n, n, |i, j| u[(n + i, stable[j])]);
    // P = X₂·X₁⁻¹, i.e. X₁ᵀ·Pᵀ = X₂ᵀ
    let pt = x1.transpose().partial_piv_lu().solve(x2.transpose());
    let pc = pt.transpose().to_owned();
    if imag_residue(pc.as_ref()) > 1e-6 {
        log::warn!("Riccati solution has imaginary residue {:e}", imag_residue(pc.as_ref()));
    }
    let mut p = Mat::from_fn(n, n, |i, j| pc[(i, j)].re);
    if !p.norm_max().is_finite() {
        return Err(Error::Synthesis("stable invariant subspace is degenerate".into()));
    }
    symmetrize(&mut p);
    Ok(p)
}

/// Cost-to-go `P` for a given gain: `(A+BK)ᵀP + P(A+BK) + Q + KᵀRK = 0`.
fn observability_solve(plant: &Plant, cost: &CostSpec, k: &Mat<f64>) -> Result<Mat<f64>> {
    let acl = plant.closed_loop(k.as_ref());
    let c = cost.q() + k.transpose() * cost.r() * k;
    let eig = Eigendecomposition::new(acl.as_ref()).ok();
    Ok(solve_lyapunov_with(eig.as_ref(), acl.as_ref(), c.as_ref(), Side::Adjoint)?.z)
}
