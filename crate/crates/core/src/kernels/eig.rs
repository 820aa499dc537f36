use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};

/// Condition estimates above this make the spectral route unreliable.
pub const CONDITION_LIMIT: f64 = 1e12;

/// `M = U·diag(S)·U⁻¹` for a real square matrix. Conjugate eigenvalues
/// are exact conjugates with conjugate eigenvectors, and real eigenvalues
/// have real eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigendecomposition {
    pub u: Mat<c64>,
    pub s: Vec<c64>,
    /// `partner[i]` is the index of `conj(s_i)` (`i` itself when real).
    pub partner: Vec<usize>,
    pub u_inv: Mat<c64>,
    /// `‖U‖_F·‖U⁻¹‖_F`, an upper bound on the 2-norm condition number.
    pub condition_estimate: f64,
}

impl Eigendecomposition {
    pub fn new(m: MatRef<'_, f64>) -> Result<Self> {
        assert_eq!(m.nrows(), m.ncols(), "eigendecomposition needs a square matrix");
        let n = m.nrows();
        if n == 0 {
            return Ok(Self {
                u: Mat::zeros(0, 0),
                s: Vec::new(),
                partner: Vec::new(),
                u_inv: Mat::zeros(0, 0),
                condition_estimate: 1.0,
            });
        }
        if !m.norm_max().is_finite() {
            return Err(Error::EigenFailure);
        }
        let evd = m.eigen().map_err(|_| Error::EigenFailure)?;
        let mut u = evd.U().to_owned();
        let mut s: Vec<c64> = evd.S().column_vector().iter().copied().collect();
        let scale = m.norm_l2().max(f64::MIN_POSITIVE);
        repair_eigenvectors(m, &s, &mut u, scale)?;
        let partner = conjugate_partners(&s).ok_or(Error::EigenFailure)?;
        for (a, &b) in partner.iter().enumerate() {
            if a == b {
                s[a].im = 0.0;
                // rotate the eigenvector onto the real axis
                let pivot = (0..n).map(|i| u[(i, a)]).fold(c64::new(0.0, 0.0), |acc, z| {
                    if z.norm() > acc.norm() { z } else { acc }
                });
                let phase = if pivot.norm() > 0.0 { pivot.conj() * pivot.norm().recip() } else { c64::new(1.0, 0.0) };
                for i in 0..n {
                    u[(i, a)] = c64::new((u[(i, a)] * phase).re, 0.0);
                }
            } else if s[a].im > 0.0 {
                s[b] = s[a].conj();
                for i in 0..n {
                    u[(i, b)] = u[(i, a)].conj();
                }
            }
        }
        let mc = crate::linalg::to_complex(m);
        let worst = (0..n).map(|j| column_residual(&mc, &u, s[j], j)).fold(0.0, f64::max);
        if !(worst <= RESIDUAL_LIMIT * scale) {
            return Err(Error::EigenFailure);
        }
        let u_inv = u.partial_piv_lu().inverse();
        let mut condition_estimate = u.norm_l2() * u_inv.norm_l2();
        if !condition_estimate.is_finite() {
            condition_estimate = f64::INFINITY;
        }
        Ok(Self {
            u,
            s,
            partner,
            u_inv,
            condition_estimate,
        })
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }

    pub fn max_real(&self) -> f64 {
        self.s.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_well_conditioned(&self) -> bool {
        self.condition_estimate <= CONDITION_LIMIT
    }

    /// `‖M·U − U·diag(S)‖_F`.
    pub fn residual(&self, m: MatRef<'_, f64>) -> f64 {
        let mc = crate::linalg::to_complex(m);
        let mut r = &mc * &self.u;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                r[(i, j)] -= self.u[(i, j)] * self.s[j];
            }
        }
        r.norm_l2()
    }
}

const RESIDUAL_LIMIT: f64 = 1e-9;

/// `‖M·u_j − s·u_j‖ / ‖u_j‖`.
fn column_residual(m: &Mat<c64>, u: &Mat<c64>, s: c64, j: usize) -> f64 {
    let col = u.col(j);
    let r = m * col - col * faer::Scale(s);
    r.norm_l2() / col.norm_l2().max(f64::MIN_POSITIVE)
}

/// The dense eigensolver can return wrong vectors for repeated eigenvalues.
/// Such columns are replaced, together with every eigenvalue in the same
/// cluster, by an orthonormal basis of the numerical null space of `M − s·I`.
fn repair_eigenvectors(m: MatRef<'_, f64>, s: &[c64], u: &mut Mat<c64>, scale: f64) -> Result<()> {
    let n = s.len();
    let mc = crate::linalg::to_complex(m);
    let mut done = vec![false; n];
    for j in 0..n {
        if done[j] || s[j].im < 0.0 || column_residual(&mc, u, s[j], j) <= RESIDUAL_LIMIT * scale {
            continue;
        }
        let cluster: Vec<usize> = (0..n)
            .filter(|&k| s[k].im >= 0.0 && (s[k] - s[j]).norm() <= 1e-6 * scale)
            .collect();
        let center = cluster.iter().map(|&k| s[k]).sum::<c64>() * (cluster.len() as f64).recip();
        let basis: Mat<c64> = if cluster.iter().all(|&k| s[k].im == 0.0) {
            let shifted = Mat::from_fn(n, n, |a, b| m[(a, b)] - if a == b { center.re } else { 0.0 });
            let svd = shifted.svd().map_err(|_| Error::EigenFailure)?;
            crate::linalg::to_complex(svd.V())
        } else {
            let shifted = Mat::from_fn(n, n, |a, b| mc[(a, b)] - if a == b { center } else { c64::new(0.0, 0.0) });
            let svd = shifted.svd().map_err(|_| Error::EigenFailure)?;
            svd.V().to_owned()
        };
        // singular values come out nonincreasing: the null space is at the end
        for (slot, &k) in cluster.iter().enumerate() {
            let src = n - cluster.len() + slot;
            for i in 0..n {
                u[(i, k)] = basis[(i, src)];
            }
            done[k] = true;
        }
    }
    Ok(())
}

/// Pairs each eigenvalue with its conjugate: exactly real entries pair
/// with themselves, every `Im > 0` entry with the nearest unpaired
/// `Im < 0` one. `None` if the spectrum is not closed under conjugation.
pub fn conjugate_partners(s: &[c64]) -> Option<Vec<usize>> {
    let n = s.len();
    let mut partner: Vec<Option<usize>> = vec![None; n];
    for a in 0..n {
        if s[a].im == 0.0 {
            partner[a] = Some(a);
        }
    }
    for a in 0..n {
        if !(s[a].im > 0.0) {
            continue;
        }
        let target = s[a].conj();
        let b = (0..n)
            .filter(|&b| s[b].im < 0.0 && partner[b].is_none())
            .min_by(|&x, &y| (s[x] - target).norm().total_cmp(&(s[y] - target).norm()))?;
        if (s[b] - target).norm() > 1e-8 * (1.0 + s[a].norm()) {
            return None;
        }
        partner[a] = Some(b);
        partner[b] = Some(a);
    }
    partner.into_iter().collect()
}

/// Largest real part over the spectrum of `m`; `+∞` if the eigenvalue
/// iteration fails or the input is not finite.
pub fn max_real_eig(m: MatRef<'_, f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    if !m.norm_max().is_finite() {
        return f64::INFINITY;
    }
    match m.eigenvalues() {
        Ok(ev) => ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max),
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_real_of_negative_identity() {
        let m = Mat::<f64>::from_fn(3, 3, |i, j| if i == j { -1.0 } else { 0.0 });
        assert!((max_real_eig(m.as_ref()) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn max_real_of_rotation_is_zero() {
        let m = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => 1.0,
            (1, 0) => -1.0,
            _ => 0.0,
        });
        assert!(max_real_eig(m.as_ref()).abs() < 1e-12);
    }

    #[test]
    fn conjugate_pairs_are_exact() {
        let m = Mat::from_fn(6, 6, |i, j| ((i * 5 + j * 11) % 7) as f64 * 0.4 - if i == j { 1.5 } else { 0.0 });
        let e = Eigendecomposition::new(m.as_ref()).unwrap();
        assert!(e.residual(m.as_ref()) <= 1e-8 * m.norm_l2());
        for (a, &b) in e.partner.iter().enumerate() {
            assert_eq!(e.partner[b], a);
            assert_eq!(e.s[b], e.s[a].conj());
            for i in 0..6 {
                assert_eq!(e.u[(i, b)], e.u[(i, a)].conj());
            }
        }
        assert!(e.partner.iter().enumerate().any(|(a, &b)| a != b), "test matrix should have a complex pair");
    }

    #[test]
    fn repeated_complex_pair_has_independent_vectors() {
        // two identical, decoupled damped oscillators
        let mut m = Mat::<f64>::zeros(4, 4);
        for b in [0, 2] {
            m[(b, b)] = -0.2;
            m[(b, b + 1)] = 1.0;
            m[(b + 1, b)] = -1.0;
            m[(b + 1, b + 1)] = -0.2;
        }
        let e = Eigendecomposition::new(m.as_ref()).unwrap();
        assert!(e.residual(m.as_ref()) <= 1e-10);
        assert!(e.is_well_conditioned());
        let z = crate::kernels::solve_lyapunov(m.as_ref(), Mat::<f64>::identity(4, 4).as_ref()).unwrap().z;
        let oracle = crate::kernels::solve_lyapunov_oracle(m.as_ref(), Mat::<f64>::identity(4, 4).as_ref()).unwrap();
        assert!((&z - &oracle).norm_l2() <= 1e-12 * oracle.norm_l2());
    }

    #[test]
    fn unpaired_spectrum_is_rejected() {
        assert!(conjugate_partners(&[c64::new(-1.0, 1.0)]).is_none());
        assert_eq!(conjugate_partners(&[c64::new(-1.0, 1.0), c64::new(-2.0, 0.0), c64::new(-1.0, -1.0)]), Some(vec![2, 1, 0]));
    }

    #[test]
    fn decomposition_reconstructs() {
        let m = Mat::from_fn(5, 5, |i, j| {
            ((i * 7 + j * 3) % 5) as f64 * 0.3 - if i == j { 2.0 } else { 0.0 }
        });
        let e = Eigendecomposition::new(m.as_ref()).unwrap();
        assert!(e.residual(m.as_ref()) <= 1e-8 * m.norm_l2());
        let id = &e.u * &e.u_inv;
        let err = (0..5)
            .flat_map(|i| (0..5).map(move |j| (i, j)))
            .map(|(i, j)| (id[(i, j)] - if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) }).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-6 * e.condition_estimate);
    }
}
