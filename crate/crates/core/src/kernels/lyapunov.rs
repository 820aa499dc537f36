//! Continuous Lyapunov equations `M·Z + Z·Mᵀ + C = 0`.
//!
//! The fast route diagonalizes `M` once and solves entrywise in the
//! eigenbasis. Ill-conditioned eigenbases fall back to the Kronecker system
//! for small `n` and to the matrix-sign-function iteration otherwise.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, MatRef};

use super::eig::{max_real_eig, Eigendecomposition};
use crate::error::{Error, Result};
use crate::linalg::{symmetrize, to_complex};

/// Largest `n` accepted by the `n² × n²` Kronecker oracle.
pub const ORACLE_MAX_N: usize = 64;

/// Which of the two Lyapunov equations attached to `M` to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `M·Z + Z·Mᵀ + C = 0` (controllability form).
    Direct,
    /// `Mᵀ·Z + Z·M + C = 0` (observability form).
    Adjoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovMethod {
    Spectral,
    Kronecker,
    SignIteration,
}

#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    pub z: Mat<f64>,
    pub method: LyapunovMethod,
}

impl LyapunovSolution {
    /// True when the spectral route was rejected and a fallback was used.
    pub fn used_fallback(&self) -> bool {
        self.method != LyapunovMethod::Spectral
    }
}

/// `‖M·Z + Z·Mᵀ + C‖_F` (or the adjoint form).
pub fn lyapunov_residual(m: MatRef<'_, f64>, z: MatRef<'_, f64>, c: MatRef<'_, f64>, side: Side) -> f64 {
    residual_matrix(m, z, c, side).norm_l2()
}

fn residual_matrix(m: MatRef<'_, f64>, z: MatRef<'_, f64>, c: MatRef<'_, f64>, side: Side) -> Mat<f64> {
    let mz = match side {
        Side::Direct => m * z,
        Side::Adjoint => m.transpose() * z,
    };
    let mut r = c.to_owned();
    let n = r.nrows();
    for j in 0..n {
        for i in 0..n {
            r[(i, j)] += mz[(i, j)] + mz[(j, i)];
        }
    }
    r
}

/// Solves `M·Z + Z·Mᵀ + C = 0` for Hurwitz `M`.
pub fn solve_lyapunov(m: MatRef<'_, f64>, c: MatRef<'_, f64>) -> Result<LyapunovSolution> {
    check_square(m, c)?;
    let eig = Eigendecomposition::new(m).ok();
    solve_lyapunov_with(eig.as_ref(), m, c, Side::Direct)
}

/// Lyapunov solve reusing a precomputed eigendecomposition of `M`.
pub fn solve_lyapunov_with(
    eig: Option<&Eigendecomposition>,
    m: MatRef<'_, f64>,
    c: MatRef<'_, f64>,
    side: Side,
) -> Result<LyapunovSolution> {
    check_square(m, c)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(LyapunovSolution {
            z: Mat::zeros(0, 0),
            method: LyapunovMethod::Spectral,
        });
    }
    let max_real = match eig {
        Some(e) => e.max_real(),
        None => max_real_eig(m),
    };
    if !(max_real < 0.0) {
        return Err(Error::Unstable { max_real });
    }
    if let Some(e) = eig.filter(|e| e.is_well_conditioned()) {
        let mut z = spectral(e, c, side);
        let res = residual_matrix(m, z.as_ref(), c, side);
        let dz = spectral(e, res.as_ref(), side);
        z += &dz;
        symmetrize(&mut z);
        return Ok(LyapunovSolution {
            z,
            method: LyapunovMethod::Spectral,
        });
    }
    let cond = eig.map(|e| e.condition_estimate).unwrap_or(f64::INFINITY);
    log::warn!("Lyapunov: eigenbasis condition {cond:e}, using fallback solver (n = {n})");
    let mt;
    let m_eff = match side {
        Side::Direct => m,
        Side::Adjoint => {
            mt = m.transpose().to_owned();
            mt.as_ref()
        }
    };
    if n <= ORACLE_MAX_N {
        Ok(LyapunovSolution {
            z: kronecker(m_eff, c)?,
            method: LyapunovMethod::Kronecker,
        })
    } else {
        Ok(LyapunovSolution {
            z: sign_iteration(m_eff, c)?,
            method: LyapunovMethod::SignIteration,
        })
    }
}

fn check_square(m: MatRef<'_, f64>, c: MatRef<'_, f64>) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n || c.nrows() != n || c.ncols() != n {
        return Err(Error::Dimension {
            field: "lyapunov".into(),
            expected: format!("{n}x{n}"),
            found: format!("M {}x{}, C {}x{}", m.nrows(), m.ncols(), c.nrows(), c.ncols()),
        });
    }
    Ok(())
}

/// Entrywise solve in the eigenbasis: `Z = V·((V⁻¹·C·V⁻ᵀ) ∘ Θ)·Vᵀ` with
/// `Θ_ij = −1/(s_i + s_j)`.
fn spectral(e: &Eigendecomposition, c: MatRef<'_, f64>, side: Side) -> Mat<f64> {
    let n = e.dim();
    let cc = to_complex(c);
    let (v, v_inv) = match side {
        Side::Direct => (e.u.as_ref(), e.u_inv.as_ref()),
        Side::Adjoint => (e.u_inv.transpose(), e.u.transpose()),
    };
    let mut ct = v_inv * &cc * v_inv.transpose();
    for j in 0..n {
        for i in 0..n {
            ct[(i, j)] = -ct[(i, j)] / (e.s[i] + e.s[j]);
        }
    }
    let z = v * &ct * v.transpose();
    let mut out = Mat::from_fn(n, n, |i, j| z[(i, j)].re);
    symmetrize(&mut out);
    out
}

/// Direct solve of `(I⊗M + M⊗I)·vec(Z) = −vec(C)`; `n ≤ 64` only.
pub fn solve_lyapunov_oracle(m: MatRef<'_, f64>, c: MatRef<'_, f64>) -> Result<Mat<f64>> {
    check_square(m, c)?;
    let n = m.nrows();
    if n > ORACLE_MAX_N {
        return Err(Error::OracleTooLarge {
            n,
            limit: ORACLE_MAX_N,
        });
    }
    let max_real = max_real_eig(m);
    if !(max_real < 0.0) {
        return Err(Error::Unstable { max_real });
    }
    kronecker(m, c)
}

fn kronecker(m: MatRef<'_, f64>, c: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let n = m.nrows();
    let nn = n * n;
    let mut big = Mat::<f64>::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            for k in 0..n {
                big[(row, k + j * n)] += m[(i, k)];
                big[(row, i + k * n)] += m[(j, k)];
            }
        }
    }
    let rhs = Mat::from_fn(nn, 1, |p, _| -c[(p % n, p / n)]);
    let sol = big.partial_piv_lu().solve(&rhs);
    let mut z = Mat::from_fn(n, n, |i, j| sol[(i + j * n, 0)]);
    if !z.norm_max().is_finite() {
        return Err(Error::Unstable { max_real: max_real_eig(m) });
    }
    symmetrize(&mut z);
    Ok(z)
}

/// Matrix-sign-function Newton iteration; valid for any Hurwitz `M`,
/// diagonalizable or not.
pub fn solve_lyapunov_sign(m: MatRef<'_, f64>, c: MatRef<'_, f64>) -> Result<Mat<f64>> {
    check_square(m, c)?;
    let max_real = max_real_eig(m);
    if !(max_real < 0.0) {
        return Err(Error::Unstable { max_real });
    }
    sign_iteration(m, c)
}

fn sign_iteration(m: MatRef<'_, f64>, c: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let n = m.nrows();
    let mut a = m.to_owned();
    let mut cur = c.to_owned();
    for _ in 0..100 {
        let a_inv = a.partial_piv_lu().inverse();
        let next_c = (&cur + &a_inv * &cur * a_inv.transpose()) * faer::Scale(0.5);
        let next_a = (&a + &a_inv) * faer::Scale(0.5);
        let change = (&next_a - &a).norm_l2();
        a = next_a;
        cur = next_c;
        if !a.norm_max().is_finite() {
            break;
        }
        if change <= 1e-13 * a.norm_l2() {
            let mut z = cur * faer::Scale(0.5);
            symmetrize(&mut z);
            return Ok(z);
        }
    }
    log::warn!("sign iteration did not converge for n = {n}");
    Err(Error::IllConditioned {
        condition: f64::INFINITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> Mat<f64> {
        Mat::from_fn(v.len(), v.len(), |i, j| if i == j { v[i] } else { 0.0 })
    }

    #[test]
    fn negative_identity_gives_half() {
        let m = diag(&[-1.0, -1.0]);
        let c = diag(&[1.0, 1.0]);
        let z = solve_lyapunov(m.as_ref(), c.as_ref()).unwrap().z;
        assert!((&z - diag(&[0.5, 0.5])).norm_l2() < 1e-14);
        let zo = solve_lyapunov_oracle(m.as_ref(), c.as_ref()).unwrap();
        assert!((&zo - diag(&[0.5, 0.5])).norm_l2() < 1e-14);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let m = Mat::from_fn(3, 3, |i, j| if i == j { -1.0 - i as f64 } else { 0.2 });
        let c = Mat::<f64>::zeros(3, 3);
        let z = solve_lyapunov(m.as_ref(), c.as_ref()).unwrap().z;
        assert_eq!(z.norm_max(), 0.0);
    }

    #[test]
    fn oracle_upper_triangular_case() {
        let m = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => -1.0,
            (0, 1) => 1.0,
            (1, 1) => -2.0,
            _ => 0.0,
        });
        let c = diag(&[1.0, 1.0]);
        let z = solve_lyapunov_oracle(m.as_ref(), c.as_ref()).unwrap();
        assert!(lyapunov_residual(m.as_ref(), z.as_ref(), c.as_ref(), Side::Direct) <= 1e-12);
        // Z = [[7/12, 1/12], [1/12, 1/4]] by hand
        assert!((z[(0, 0)] - 7.0 / 12.0).abs() < 1e-14);
        assert!((z[(0, 1)] - 1.0 / 12.0).abs() < 1e-14);
        assert!((z[(1, 1)] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn unstable_is_rejected() {
        let m = diag(&[0.5, -1.0]);
        let c = diag(&[1.0, 1.0]);
        assert!(matches!(solve_lyapunov(m.as_ref(), c.as_ref()), Err(Error::Unstable { .. })));
        assert!(matches!(solve_lyapunov_oracle(m.as_ref(), c.as_ref()), Err(Error::Unstable { .. })));
        assert!(matches!(solve_lyapunov_sign(m.as_ref(), c.as_ref()), Err(Error::Unstable { .. })));
    }

    #[test]
    fn oracle_refuses_large_n() {
        let m = diag(&vec![-1.0; ORACLE_MAX_N + 1]);
        let c = diag(&vec![1.0; ORACLE_MAX_N + 1]);
        assert!(matches!(
            solve_lyapunov_oracle(m.as_ref(), c.as_ref()),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn defective_matrix_uses_fallback() {
        // Jordan block: not diagonalizable.
        let m = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => -1.0,
            (0, 1) => 1.0,
            _ => 0.0,
        });
        let c = diag(&[1.0, 1.0]);
        let sol = solve_lyapunov(m.as_ref(), c.as_ref()).unwrap();
        assert!(lyapunov_residual(m.as_ref(), sol.z.as_ref(), c.as_ref(), Side::Direct) <= 1e-10);
        let zs = solve_lyapunov_sign(m.as_ref(), c.as_ref()).unwrap();
        assert!((&zs - &sol.z).norm_l2() <= 1e-10);
    }

    #[test]
    fn adjoint_side_matches_transpose() {
        let m = Mat::from_fn(4, 4, |i, j| {
            if i == j {
                -1.0 - 0.5 * i as f64
            } else {
                0.3 * ((i + 2 * j) % 3) as f64 - 0.2
            }
        });
        let c = Mat::from_fn(4, 4, |i, j| 1.0 / (1.0 + (i + j) as f64));
        let eig = Eigendecomposition::new(m.as_ref()).unwrap();
        let adj = solve_lyapunov_with(Some(&eig), m.as_ref(), c.as_ref(), Side::Adjoint).unwrap();
        let mt = m.transpose().to_owned();
        let direct = solve_lyapunov_oracle(mt.as_ref(), c.as_ref()).unwrap();
        assert!((&adj.z - &direct).norm_l2() <= 1e-12 * direct.norm_l2());
        let sign = solve_lyapunov_sign(mt.as_ref(), c.as_ref()).unwrap();
        assert!((&sign - &direct).norm_l2() <= 1e-10 * direct.norm_l2());
    }
}
