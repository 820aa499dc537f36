//! Cached products for O(r·n) coordinate updates of the Newton model.
//!
//! With `A + BK = U·diag(s)·U⁻¹`, `Θ = Σ_k w_k·x_k·x_kᵀ` and
//! `X_k = U·diag(x_k)·U⁻¹` (real, see the Θ factorization), the fixed
//! products are
//!
//! ```text
//! Φ⁰ = L·E        Φ¹_k = X_k·L      Φ²_k = X_k·B
//! Φ³_k = L·X_kᵀ·E                   Φ⁴_k = Bᵀ·X_kᵀ·E
//! ```
//!
//! and the running products, updated after each change of `D`, are
//!
//! ```text
//! Ψ⁰ = R·D   Ψ¹_k = Dᵀ·Φ⁴_k   Ψ²_k = D·Φ¹_k   Ψ³_k = D·Φ³_k   Ψ⁴_k = D·Φ²_k
//! ```
//!
//! so that the slope of coordinate `(i, j)` is
//!
//! ```text
//! b = 2·[Φ⁰_ji + (Ψ⁰·L)_ij]
//!   + 2·Σ_k w_k·[(Φ¹_k·Ψ¹_k)_ji + (Φ⁴_k·Ψ²_k)_ij + (Φ²_k·Ψ³_k)_ji + (Φ³_k·Ψ⁴_k)_ji]
//! ```
//!
//! The weight `w_k` is folded into the stored Φ¹_k and Φ²_k, each of which
//! meets exactly one of Φ³_k, Φ⁴_k in every product.
//!
//! Keeping `D` on the left of the running products makes them m-row
//! matrices, so every update touches O(r·(n + m)) entries and the n×n
//! products never need to be stored. Tensors keep the rank index `k`
//! innermost: a sum over `k` of a matrix-product entry is one contiguous
//! dot product.

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::kernels::{takagi_factor, Eigendecomposition, ThetaFactors};
use crate::model::{CostSpec, Plant};
use crate::objective::Evaluation;

#[derive(Debug, Clone)]
pub struct CoordinateCache {
    n: usize,
    m: usize,
    r: usize,
    l: Mat<f64>,
    r_mat: Mat<f64>,
    /// `L·E`, n×m.
    phi0: Mat<f64>,
    /// Φ¹ (n×n), `[row][col][k]`; likewise Φ² (n×m), Φ³ (n×m), Φ⁴ (m×m).
    phi1: Vec<f64>,
    phi2: Vec<f64>,
    phi3: Vec<f64>,
    phi4: Vec<f64>,
    /// Ψ⁰ (m×n), row-major.
    psi0: Vec<f64>,
    /// Ψ¹ (n×m), `[row][col][k]`.
    psi1: Vec<f64>,
    /// Ψ² (m×n), `[col][row][k]`. Both are indexed by the state coordinate
    /// first so the sweep streams them contiguously.
    psi2: Vec<f64>,
    /// Ψ³, Ψ⁴ (m×m), `[col][row][k]`.
    psi3: Vec<f64>,
    psi4: Vec<f64>,
    d: Mat<f64>,
    /// Largest imaginary part dropped from the Φ tensors, relative to
    /// their largest entry.
    residue: f64,
}

/// Everything built once per outer iteration.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    pub theta: ThetaFactors,
    pub coords: CoordinateCache,
}

/// Eigendecomposition of the closed loop, Takagi factors of Θ and the Φ
/// products with `D = 0`.
pub fn build_spectral_cache(
    plant: &Plant,
    cost: &CostSpec,
    eval: &Evaluation,
    theta_tol: f64,
) -> Result<SpectralCache> {
    let data = eval.require()?;
    let eig = data.eig.as_ref().ok_or(Error::EigenFailure)?;
    if !eig.is_well_conditioned() {
        return Err(Error::IllConditioned {
            condition: eig.condition_estimate,
        });
    }
    let theta = takagi_factor(&eig.s, theta_tol)?;
    let coords = CoordinateCache::new(plant, cost, data.l.as_ref(), data.e.as_ref(), eig, &theta);
    Ok(SpectralCache { theta, coords })
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    // Independent accumulators keep the loop throughput-bound.
    let mut acc = [0.0f64; 4];
    let xs = x.chunks_exact(4);
    let ys = y.chunks_exact(4);
    let (xr, yr) = (xs.remainder(), ys.remainder());
    for (a, b) in xs.zip(ys) {
        for t in 0..4 {
            acc[t] += a[t] * b[t];
        }
    }
    for (a, b) in xr.iter().zip(yr) {
        acc[0] += a * b;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

#[inline]
fn axpy(y: &mut [f64], mu: f64, x: &[f64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += mu * b;
    }
}

/// `Σ_c row(c)·col(c)` over blocks of `r` entries, where `col` is stored as
/// `stride`-spaced blocks.
#[inline]
fn dot_strided(row: &[f64], col: &[f64], start: usize, stride: usize, count: usize, r: usize) -> f64 {
    let mut acc = 0.0;
    for c in 0..count {
        let off = start + c * stride;
        acc += dot(&row[c * r..(c + 1) * r], &col[off..off + r]);
    }
    acc
}

impl CoordinateCache {
    fn new(
        plant: &Plant,
        cost: &CostSpec,
        l: MatRef<'_, f64>,
        e: MatRef<'_, f64>,
        eig: &Eigendecomposition,
        theta: &ThetaFactors,
    ) -> Self {
        let n = plant.n();
        let m = plant.m();
        let r = theta.rank;
        let cplx = crate::linalg::to_complex;
        let u = &eig.u;
        let u_inv = &eig.u_inv;
        let g_l = u_inv * cplx(l); // U⁻¹·L
        let g_b = u_inv * cplx(plant.b()); // U⁻¹·B
        let h_e = u.transpose() * cplx(e); // Uᵀ·E
        let l_uit = cplx(l) * u_inv.transpose(); // L·U⁻ᵀ
        let bt_uit = cplx(plant.b().transpose()) * u_inv.transpose(); // Bᵀ·U⁻ᵀ
        let xt = theta.x.transpose().to_owned(); // r×n
        let mut residue = 0.0f64;
        let mut largest = 0.0f64;

        // w_k^p·Σ_l left(a,l)·x_k(l)·right(l,c) laid out [a][c][k]: for each
        // row `a`, Xᵀ·diag(left(a,:))·right is r×cols, column-major.
        let mut stack = |left: &Mat<c64>, right: &Mat<c64>, weighted: bool| -> Vec<f64> {
            let rows = left.nrows();
            let cols = right.ncols();
            let mut out = Vec::with_capacity(rows * cols * r);
            let mut scaled = Mat::<c64>::zeros(r, n);
            for a in 0..rows {
                for l_idx in 0..n {
                    let w = left[(a, l_idx)];
                    for k in 0..r {
                        scaled[(k, l_idx)] = xt[(k, l_idx)] * w;
                    }
                }
                let prod = &scaled * right;
                for c in 0..cols {
                    for (k, z) in prod.col(c).iter().enumerate() {
                        residue = residue.max(z.im.abs());
                        largest = largest.max(z.re.abs());
                        out.push(if weighted { z.re * theta.signs[k] } else { z.re });
                    }
                }
            }
            out
        };
        let phi1 = stack(u, &g_l, true);
        let phi2 = stack(u, &g_b, true);
        let phi3 = stack(&l_uit, &h_e, false);
        let phi4 = stack(&bt_uit, &h_e, false);
        let phi0 = l * e;
        let residue = if largest > 0.0 { residue / largest } else { residue };

        Self {
            n,
            m,
            r,
            l: l.to_owned(),
            r_mat: cost.r().to_owned(),
            phi0,
            phi1,
            phi2,
            phi3,
            phi4,
            psi0: vec![0.0; m * n],
            psi1: vec![0.0; n * m * r],
            psi2: vec![0.0; m * n * r],
            psi3: vec![0.0; m * m * r],
            psi4: vec![0.0; m * m * r],
            d: Mat::zeros(m, n),
            residue,
        }
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    /// Imaginary residue discarded when the Φ tensors were made real;
    /// round-off sized for a well-conditioned eigenbasis.
    pub fn residue(&self) -> f64 {
        self.residue
    }

    /// Current Newton direction `D`.
    pub fn direction(&self) -> MatRef<'_, f64> {
        self.d.as_ref()
    }

    pub fn into_direction(self) -> Mat<f64> {
        self.d
    }

    /// Approximate heap footprint in bytes.
    pub fn memory_bytes(&self) -> usize {
        let tensors = self.phi1.len()
            + self.phi2.len()
            + self.phi3.len()
            + self.phi4.len()
            + self.psi1.len()
            + self.psi2.len()
            + self.psi3.len()
            + self.psi4.len();
        (tensors + self.psi0.len()) * std::mem::size_of::<f64>()
    }

    #[inline]
    fn block(v: &[f64], idx: usize, r: usize) -> &[f64] {
        &v[idx * r..(idx + 1) * r]
    }

    pub fn phi0(&self) -> MatRef<'_, f64> {
        self.phi0.as_ref()
    }
    /// `(Φ¹_k)_{row,col}`, including the weight `w_k` (as does Φ²).
    pub fn phi1(&self, k: usize, row: usize, col: usize) -> f64 {
        self.phi1[(row * self.n + col) * self.r + k]
    }
    pub fn phi2(&self, k: usize, row: usize, col: usize) -> f64 {
        self.phi2[(row * self.m + col) * self.r + k]
    }
    pub fn phi3(&self, k: usize, row: usize, col: usize) -> f64 {
        self.phi3[(row * self.m + col) * self.r + k]
    }
    pub fn phi4(&self, k: usize, row: usize, col: usize) -> f64 {
        self.phi4[(row * self.m + col) * self.r + k]
    }

    /// `a = vec(e_ie_jᵀ)ᵀ∇²J vec(e_ie_jᵀ)`.
    pub fn curvature(&self, i: usize, j: usize) -> f64 {
        let (n, m, r) = (self.n, self.m, self.r);
        let d4 = Self::block(&self.phi4, i * m + i, r);
        let d1 = Self::block(&self.phi1, j * n + j, r);
        let p3 = Self::block(&self.phi3, j * m + i, r);
        let p2 = Self::block(&self.phi2, j * m + i, r);
        2.0 * self.r_mat[(i, i)] * self.l[(j, j)] + 4.0 * (dot(d4, d1) + dot(p3, p2))
    }

    fn psi0_l(&self, i: usize, j: usize) -> f64 {
        let n = self.n;
        let row = &self.psi0[i * n..(i + 1) * n];
        row.iter().zip(self.l.col(j).iter()).map(|(a, b)| a * b).sum()
    }

    /// `b = ∂/∂μ J̃_K(D + μ·e_ie_jᵀ)` at `μ = 0`.
    pub fn slope(&self, i: usize, j: usize) -> f64 {
        let (n, m, r) = (self.n, self.m, self.r);
        let t1 = dot_strided(&self.phi1[j * n * r..(j + 1) * n * r], &self.psi1, i * r, m * r, n, r);
        let t2 = dot(&self.phi4[i * m * r..(i + 1) * m * r], &self.psi2[j * m * r..(j + 1) * m * r]);
        let t3 = dot(&self.phi2[j * m * r..(j + 1) * m * r], &self.psi3[i * m * r..(i + 1) * m * r]);
        let t4 = dot(&self.phi3[j * m * r..(j + 1) * m * r], &self.psi4[i * m * r..(i + 1) * m * r]);
        2.0 * (self.phi0[(j, i)] + self.psi0_l(i, j)) + 2.0 * (t1 + t2 + t3 + t4)
    }

    /// `(a, b, c)` of the one-dimensional model
    /// `½·a·μ² + b·μ + λ·|c + μ|` for coordinate `(i, j)`.
    pub fn coordinate_quad(&self, k: MatRef<'_, f64>, i: usize, j: usize) -> (f64, f64, f64) {
        (self.curvature(i, j), self.slope(i, j), k[(i, j)] + self.d[(i, j)])
    }

    /// `D_ij += μ` with the matching row updates of every Ψ.
    pub fn apply(&mut self, i: usize, j: usize, mu: f64) {
        if mu == 0.0 {
            return;
        }
        let (n, m, r) = (self.n, self.m, self.r);
        self.d[(i, j)] += mu;
        for ip in 0..m {
            self.psi0[ip * n + j] += mu * self.r_mat[(ip, i)];
        }
        // Ψ¹ row j += μ·Φ⁴ row i (contiguous)
        axpy(
            &mut self.psi1[j * m * r..(j + 1) * m * r],
            mu,
            &self.phi4[i * m * r..(i + 1) * m * r],
        );
        // Ψ² row i += μ·Φ¹ row j
        for b in 0..n {
            let dst = (b * m + i) * r;
            axpy(&mut self.psi2[dst..dst + r], mu, Self::block(&self.phi1, j * n + b, r));
        }
        // Ψ³ row i += μ·Φ³ row j;  Ψ⁴ row i += μ·Φ² row j
        for c in 0..m {
            let dst = (c * m + i) * r;
            axpy(&mut self.psi3[dst..dst + r], mu, Self::block(&self.phi3, j * m + c, r));
            axpy(&mut self.psi4[dst..dst + r], mu, Self::block(&self.phi2, j * m + c, r));
        }
    }

    /// `J̃_K(D) = 2·tr(L·E·D) + tr(L·Dᵀ·R·D) + 2·Σ_k w_k·[tr(Ψ³_k·Ψ⁴_k) + tr(Ψ¹_k·Ψ²_k)]`
    /// from the current caches; O(r·n·m).
    pub fn model_value(&self) -> f64 {
        let (n, m, r) = (self.n, self.m, self.r);
        let mut lin = 0.0;
        let mut quad_r = 0.0;
        for i in 0..m {
            for j in 0..n {
                let dij = self.d[(i, j)];
                if dij != 0.0 {
                    lin += self.phi0[(j, i)] * dij;
                    quad_r += self.psi0_l(i, j) * dij;
                }
            }
        }
        let mut coupled = 0.0;
        for a in 0..m {
            for c in 0..m {
                // Ψ³(a,c)·Ψ⁴(c,a)
                coupled += dot(Self::block(&self.psi3, c * m + a, r), Self::block(&self.psi4, a * m + c, r));
            }
        }
        for b in 0..n {
            for c in 0..m {
                // Ψ¹(b,c)·Ψ²(c,b)
                coupled += dot(Self::block(&self.psi1, b * m + c, r), Self::block(&self.psi2, b * m + c, r));
            }
        }
        2.0 * lin + quad_r + 2.0 * coupled
    }

    /// Largest relative Frobenius gap between each cached Ψ and the same
    /// product recomputed from the current `D`. O(r·n²·m); diagnostic.
    pub fn refresh_error(&self) -> f64 {
        let (n, m, r) = (self.n, self.m, self.r);
        let d = &self.d;
        let rel = |num: f64, den: f64| if den > 0.0 { num.sqrt() / den.sqrt() } else { num.sqrt() };

        let fresh0 = &self.r_mat * d;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..m {
            for j in 0..n {
                let diff = self.psi0[i * n + j] - fresh0[(i, j)];
                num += diff * diff;
                den += fresh0[(i, j)] * fresh0[(i, j)];
            }
        }
        let mut worst = rel(num, den);

        for k in 0..r {
            let mut acc = [(0.0, 0.0); 4];
            for b in 0..n {
                for c in 0..m {
                    // Ψ¹(b,c) = Σ_e D(e,b)·Φ⁴(e,c)
                    let mut f = 0.0;
                    for e in 0..m {
                        f += self.phi4(k, e, c) * d[(e, b)];
                    }
                    let got = self.psi1[(b * m + c) * r + k];
                    acc[0].0 += (got - f).powi(2);
                    acc[0].1 += f * f;
                    // Ψ²(c,b) = Σ_e D(c,e)·Φ¹(e,b)
                    let mut f = 0.0;
                    for e in 0..n {
                        f += self.phi1(k, e, b) * d[(c, e)];
                    }
                    let got = self.psi2[(b * m + c) * r + k];
                    acc[1].0 += (got - f).powi(2);
                    acc[1].1 += f * f;
                }
            }
            for a in 0..m {
                for c in 0..m {
                    // Ψ³(a,c) = Σ_e D(a,e)·Φ³(e,c);  Ψ⁴ likewise with Φ²
                    let (mut f3, mut f4) = (0.0, 0.0);
                    for e in 0..n {
                        f3 += self.phi3(k, e, c) * d[(a, e)];
                        f4 += self.phi2(k, e, c) * d[(a, e)];
                    }
                    let idx = (c * m + a) * r + k;
                    acc[2].0 += (self.psi3[idx] - f3).powi(2);
                    acc[2].1 += f3 * f3;
                    acc[3].0 += (self.psi4[idx] - f4).powi(2);
                    acc[3].1 += f4 * f4;
                }
            }
            for (nn, dd) in acc {
                worst = worst.max(rel(nn, dd));
            }
        }
        worst
    }
}
