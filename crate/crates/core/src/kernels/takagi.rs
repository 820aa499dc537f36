//! Symmetric low-rank factorization `Θ ≈ Σ_k w_k·x_k·x_kᵀ` (plain
//! transpose, `w_k = ±1`) of the Cauchy matrix `Θ_ij = −1/(s_i + s_j)`
//! built from the spectrum of a real stable matrix.
//!
//! Θ is complex symmetric, but conjugating it only permutes the conjugate
//! eigenvalue pairs, so `T·Θ·Tᵀ` is real symmetric for the unitary `T` that
//! mixes each pair as `(1/√2)·[[1, 1], [i, −i]]`. Its eigenvectors `q_k`
//! give `x_k = √|μ_k|·Tᴴ·q_k`, which satisfy `conj(x_k) = P·x_k` for the
//! pair permutation `P`; this is what makes `U·diag(x_k)·U⁻¹` real.

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::kernels::eig::conjugate_partners;

pub const DEFAULT_THETA_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ThetaFactors {
    /// `n × r`; column `k` is `√|μ_k|·Tᴴ·q_k`.
    pub x: Mat<c64>,
    /// Sign `w_k` of each retained eigenvalue `μ_k`.
    pub signs: Vec<f64>,
    pub rank: usize,
    pub tolerance_used: f64,
    /// All singular values `|μ_k|` of Θ, descending.
    pub singular_values: Vec<f64>,
}

impl ThetaFactors {
    /// `‖X·diag(w)·Xᵀ − Θ‖_F / ‖Θ‖_F`.
    pub fn reconstruction_error(&self, theta: &Mat<c64>) -> f64 {
        let weighted = Mat::from_fn(self.x.nrows(), self.rank, |i, k| self.x[(i, k)] * self.signs[k]);
        let xxt = &weighted * self.x.transpose();
        (&xxt - theta).norm_l2() / theta.norm_l2()
    }
}

/// `Θ_ij = −1/(s_i + s_j)`.
pub fn cauchy_theta(s: &[c64]) -> Mat<c64> {
    let n = s.len();
    Mat::from_fn(n, n, |i, j| -(s[i] + s[j]).inv())
}

/// Factors Θ for eigenvalues `s` (all with negative real part, closed under
/// conjugation), keeping the smallest rank whose discarded tail satisfies
/// `‖Θ − X·diag(w)·Xᵀ‖_F ≤ tolerance·‖Θ‖_F`.
pub fn takagi_factor(s: &[c64], tolerance: f64) -> Result<ThetaFactors> {
    let n = s.len();
    if n == 0 {
        return Ok(ThetaFactors {
            x: Mat::zeros(0, 0),
            signs: Vec::new(),
            rank: 0,
            tolerance_used: tolerance,
            singular_values: Vec::new(),
        });
    }
    let scale = s.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut gap = f64::INFINITY;
    for i in 0..n {
        if !(s[i].re < 0.0) {
            return Err(Error::Unstable { max_real: s[i].re });
        }
        for j in i..n {
            gap = gap.min((s[i] + s[j]).norm());
        }
    }
    if gap < 1e-14 * scale {
        return Err(Error::NearSingularTheta { gap });
    }
    let partner = conjugate_partners(s).ok_or(Error::EigenFailure)?;

    // T is sparse: row a has entries in columns a and partner(a).
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let t_row = |a: usize| -> [(usize, c64); 2] {
        let b = partner[a];
        if a == b {
            [(a, c64::new(1.0, 0.0)), (a, c64::new(0.0, 0.0))]
        } else if a < b {
            [(a, c64::new(h, 0.0)), (b, c64::new(h, 0.0))]
        } else {
            // the second row of the pair block: [i, −i] over (b, a)
            [(b, c64::new(0.0, h)), (a, c64::new(0.0, -h))]
        }
    };
    let theta = cauchy_theta(s);
    let real = Mat::from_fn(n, n, |a, c| {
        let mut acc = c64::new(0.0, 0.0);
        for (p, tp) in t_row(a) {
            for (q, tq) in t_row(c) {
                acc += tp * theta[(p, q)] * tq;
            }
        }
        acc.re
    });
    let evd = real
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::EigenFailure)?;
    let vals = evd.S().column_vector();
    let vecs = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[y].abs().total_cmp(&vals[x].abs()));
    let sigma: Vec<f64> = order.iter().map(|&k| vals[k].abs()).collect();

    let total: f64 = sigma.iter().map(|v| v * v).sum();
    let budget = (tolerance * tolerance) * total;
    let mut tail = 0.0;
    let mut rank = n;
    while rank > 0 {
        let next = tail + sigma[rank - 1] * sigma[rank - 1];
        if next > budget {
            break;
        }
        tail = next;
        rank -= 1;
    }
    let rank = rank.max(1);

    // x_k = √|μ_k|·Tᴴ·q_k
    let mut x = Mat::<c64>::zeros(n, rank);
    for (k, &col) in order.iter().take(rank).enumerate() {
        let w = sigma[k].sqrt();
        for a in 0..n {
            for (p, tp) in t_row(a) {
                x[(p, k)] += tp.conj() * (vecs[(a, col)] * w);
            }
        }
    }
    let signs = order.iter().take(rank).map(|&k| if vals[k] < 0.0 { -1.0 } else { 1.0 }).collect();
    Ok(ThetaFactors {
        x,
        signs,
        rank,
        tolerance_used: tolerance,
        singular_values: sigma,
    })
}
