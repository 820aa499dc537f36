//! LQR cost, gradient, Hessian inner products and the quadratic model,
//! computed directly from Lyapunov solves.
//!
//! These are the solver's function/gradient evaluator and the reference
//! that the cached coordinate-descent path is checked against.

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::kernels::{solve_lyapunov_with, Eigendecomposition, Side};
use crate::linalg::{inner, trace_of_product};
use crate::model::{CostSpec, Plant};

/// Lyapunov data at a stabilizing gain.
#[derive(Debug, Clone)]
pub struct Stationary {
    /// `A + B·K`.
    pub closed_loop: Mat<f64>,
    /// Eigendecomposition of the closed loop, when it could be computed.
    pub eig: Option<Eigendecomposition>,
    /// `(A+BK)L + L(A+BK)ᵀ + W = 0`.
    pub l: Mat<f64>,
    /// `(A+BK)ᵀP + P(A+BK) + Q + KᵀRK = 0`.
    pub p: Mat<f64>,
    /// `P·B + Kᵀ·R`.
    pub e: Mat<f64>,
    /// `∇J = 2·Eᵀ·L`.
    pub grad: Mat<f64>,
}

/// `J(K)` and, when `A + B·K` is Hurwitz, everything needed to build
/// gradients and Newton models at `K`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// LQR cost; `+∞` when unstable.
    pub j: f64,
    pub max_real_eig: f64,
    data: Option<Box<Stationary>>,
}

impl Evaluation {
    pub fn stable(&self) -> bool {
        self.data.is_some()
    }

    pub fn data(&self) -> Option<&Stationary> {
        self.data.as_deref()
    }

    pub fn require(&self) -> Result<&Stationary> {
        self.data().ok_or(Error::Unstable {
            max_real: self.max_real_eig,
        })
    }

    pub fn grad(&self) -> Option<&Mat<f64>> {
        self.data().map(|d| &d.grad)
    }

    fn unstable(max_real: f64) -> Self {
        Self {
            j: f64::INFINITY,
            max_real_eig: max_real,
            data: None,
        }
    }
}

/// Evaluates `J(K) = tr(P·W)` with its Lyapunov solutions and gradient.
pub fn evaluate(plant: &Plant, cost: &CostSpec, k: MatRef<'_, f64>) -> Evaluation {
    let closed_loop = plant.closed_loop(k);
    if !closed_loop.norm_max().is_finite() {
        return Evaluation::unstable(f64::INFINITY);
    }
    let eig = Eigendecomposition::new(closed_loop.as_ref()).ok();
    let max_real = match &eig {
        Some(e) => e.max_real(),
        None => crate::kernels::max_real_eig(closed_loop.as_ref()),
    };
    if !(max_real < 0.0) {
        return Evaluation::unstable(max_real);
    }
    let state_cost = cost.q() + k.transpose() * cost.r() * k;
    let solved = solve_lyapunov_with(eig.as_ref(), closed_loop.as_ref(), plant.w(), Side::Direct).and_then(|l| {
        solve_lyapunov_with(eig.as_ref(), closed_loop.as_ref(), state_cost.as_ref(), Side::Adjoint).map(|p| (l.z, p.z))
    });
    let (l, p) = match solved {
        Ok(v) => v,
        Err(e) => {
            log::warn!("treating K as unstable: {e}");
            return Evaluation::unstable(max_real);
        }
    };
    let e = &p * plant.b() + k.transpose() * cost.r();
    let grad = (e.transpose() * &l) * faer::Scale(2.0);
    let j = trace_of_product(p.as_ref(), plant.w());
    if !j.is_finite() {
        return Evaluation::unstable(max_real);
    }
    Evaluation {
        j,
        max_real_eig: max_real,
        data: Some(Box::new(Stationary {
            closed_loop,
            eig,
            l,
            p,
            e,
            grad,
        })),
    }
}

/// `tr(L·(Q + KᵀRK))`, the second expression of the cost.
pub fn cost_via_gramian(cost: &CostSpec, k: MatRef<'_, f64>, data: &Stationary) -> f64 {
    let state_cost = cost.q() + k.transpose() * cost.r() * k;
    trace_of_product(data.l.as_ref(), state_cost.as_ref())
}

/// `g(K) = Σ Λ_ij |K_ij|` with `∞·0 = 0`.
pub fn penalty(cost: &CostSpec, k: MatRef<'_, f64>) -> f64 {
    let lam = cost.lambda();
    let mut g = 0.0;
    for j in 0..k.ncols() {
        for i in 0..k.nrows() {
            let kij = k[(i, j)];
            if kij != 0.0 {
                g += lam[(i, j)] * kij.abs();
            }
        }
    }
    g
}

/// Directional derivatives `(L̃, P̃)` of `L` and `P` along `D`.
pub fn second_order_terms(plant: &Plant, data: &Stationary, d: MatRef<'_, f64>) -> Result<(Mat<f64>, Mat<f64>)> {
    let bdl = plant.b() * d * &data.l;
    let c_l = &bdl + bdl.transpose();
    let ed = &data.e * d;
    let c_p = &ed + ed.transpose();
    let eig = data.eig.as_ref();
    let m = data.closed_loop.as_ref();
    let lt = solve_lyapunov_with(eig, m, c_l.as_ref(), Side::Direct)?.z;
    let pt = solve_lyapunov_with(eig, m, c_p.as_ref(), Side::Adjoint)?.z;
    Ok((lt, pt))
}

/// Hessian-vector product `∇²J(K)[D] = 2(BᵀP̃ + R·D)·L + 2·Eᵀ·L̃` (an m×n
/// matrix).
pub fn hessian_product(plant: &Plant, cost: &CostSpec, data: &Stationary, d: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let (lt, pt) = second_order_terms(plant, data, d)?;
    let left = (plant.b().transpose() * &pt + cost.r() * d) * &data.l;
    let right = data.e.transpose() * &lt;
    Ok((left + right) * faer::Scale(2.0))
}

/// `vec(D)ᵀ·∇²J(K)·vec(D) = 2·tr[(L̃·E + L·(P̃·B + Dᵀ·R))·D]`.
pub fn hessian_inner(plant: &Plant, cost: &CostSpec, eval: &Evaluation, d: MatRef<'_, f64>) -> Result<f64> {
    let data = eval.require()?;
    let hd = hessian_product(plant, cost, data, d)?;
    Ok(inner(hd.as_ref(), d))
}

/// Second-order model `J̃_K(D) = tr(∇Jᵀ·D) + ½·vec(D)ᵀ∇²J vec(D)`.
pub fn quadratic_model(plant: &Plant, cost: &CostSpec, eval: &Evaluation, d: MatRef<'_, f64>) -> Result<f64> {
    let data = eval.require()?;
    let lin = inner(data.grad.as_ref(), d);
    Ok(lin + 0.5 * hessian_inner(plant, cost, eval, d)?)
}

/// The same model written as `2tr(LED) + tr(L̃ED) + tr(LP̃BD) + tr(LDᵀRD)`.
pub fn quadratic_model_four_term(
    plant: &Plant,
    cost: &CostSpec,
    eval: &Evaluation,
    d: MatRef<'_, f64>,
) -> Result<f64> {
    let data = eval.require()?;
    let (lt, pt) = second_order_terms(plant, data, d)?;
    let ed = &data.e * d;
    let t1 = 2.0 * trace_of_product(data.l.as_ref(), ed.as_ref());
    let t2 = trace_of_product(lt.as_ref(), ed.as_ref());
    let bd = plant.b() * d;
    let t3 = trace_of_product((&data.l * &pt).as_ref(), bd.as_ref());
    let rd = cost.r() * d;
    let t4 = trace_of_product((&data.l * d.transpose()).as_ref(), rd.as_ref());
    Ok(t1 + t2 + t3 + t4)
}
