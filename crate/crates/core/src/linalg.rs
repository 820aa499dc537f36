//! Small dense helpers shared by the kernels and solvers.

use faer::{c64, Mat, MatRef};

pub fn to_complex(m: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

pub fn real_part(m: MatRef<'_, c64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

/// Largest imaginary magnitude relative to the largest entry magnitude.
pub fn imag_residue(m: MatRef<'_, c64>) -> f64 {
    let mut im = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            im = im.max(z.im.abs());
            scale = scale.max(z.norm());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        im / scale
    }
}

/// Replaces `m` by `(m + mᵀ)/2`.
pub fn symmetrize(m: &mut Mat<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `tr(A·B)` without forming the product.
pub fn trace_of_product(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

pub fn trace(m: MatRef<'_, f64>) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Frobenius inner product `Σ A_ij B_ij`.
pub fn inner(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * b[(i, j)];
        }
    }
    s
}

pub fn max_abs(m: MatRef<'_, f64>) -> f64 {
    let mut v = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            v = v.max(m[(i, j)].abs());
        }
    }
    v
}

/// Relative asymmetry `‖M − Mᵀ‖_F / ‖M‖_F` (zero for the zero matrix).
pub fn asymmetry(m: MatRef<'_, f64>) -> f64 {
    let scale = m.norm_l2();
    if scale == 0.0 {
        return 0.0;
    }
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let d = m[(i, j)] - m[(j, i)];
            s += d * d;
        }
    }
    s.sqrt() / scale
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: MatRef<'_, f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut s = m.to_owned();
    symmetrize(&mut s);
    s.self_adjoint_eigenvalues(faer::Side::Lower)
        .unwrap_or_else(|_| vec![f64::NAN; m.nrows()])
}

/// Soft-thresholding `sign(x)·max(|x| − t, 0)`; `t = ∞` gives zero.
#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}
