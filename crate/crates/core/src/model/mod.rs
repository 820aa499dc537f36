//! Problem data: plant, cost weights, feedback gains, validation, benchmark
//! generators and the on-disk problem format.

mod generators;
mod problem;

pub use generators::{mass_spring, random_network, NetworkGraph};
pub use problem::{read_matrix_csv, read_problem, write_matrix_csv, write_problem, ProblemFile};

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::kernels::max_real_eig;
use crate::linalg::{asymmetry, sym_eigenvalues};

/// Open-loop system `ẋ = A·x + B·u` driven by noise with covariance `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    a: Mat<f64>,
    b: Mat<f64>,
    w: Mat<f64>,
}

impl Plant {
    pub fn new(a: Mat<f64>, b: Mat<f64>, w: Mat<f64>) -> Result<Self> {
        let n = a.nrows();
        expect_dims("A", &a, n, n)?;
        expect_dims("B", &b, n, b.ncols())?;
        expect_dims("W", &w, n, n)?;
        Ok(Self { a, b, w })
    }

    pub fn a(&self) -> MatRef<'_, f64> {
        self.a.as_ref()
    }
    pub fn b(&self) -> MatRef<'_, f64> {
        self.b.as_ref()
    }
    pub fn w(&self) -> MatRef<'_, f64> {
        self.w.as_ref()
    }
    /// Number of states.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    /// Number of inputs.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// `A + B·K`.
    pub fn closed_loop(&self, k: MatRef<'_, f64>) -> Mat<f64> {
        &self.a + &self.b * k
    }

    /// The same plant with `A` replaced by `A − ν·I`.
    pub fn shifted(&self, nu: f64) -> Plant {
        let mut a = self.a.clone();
        for i in 0..self.n() {
            a[(i, i)] -= nu;
        }
        Plant {
            a,
            b: self.b.clone(),
            w: self.w.clone(),
        }
    }
}

/// Quadratic weights `Q`, `R` and the entrywise ℓ1 weights `Λ`.
///
/// `Λ_ij = ∞` pins `K_ij` to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    q: Mat<f64>,
    r: Mat<f64>,
    lambda: Mat<f64>,
}

impl CostSpec {
    pub fn new(q: Mat<f64>, r: Mat<f64>, lambda: Mat<f64>) -> Result<Self> {
        let n = q.nrows();
        let m = r.nrows();
        expect_dims("Q", &q, n, n)?;
        expect_dims("R", &r, m, m)?;
        expect_dims("Lambda", &lambda, m, n)?;
        Ok(Self { q, r, lambda })
    }

    /// `Λ = 0`: plain LQR cost.
    pub fn unregularized(q: Mat<f64>, r: Mat<f64>) -> Result<Self> {
        let lambda = Mat::zeros(r.nrows(), q.nrows());
        Self::new(q, r, lambda)
    }

    pub fn q(&self) -> MatRef<'_, f64> {
        self.q.as_ref()
    }
    pub fn r(&self) -> MatRef<'_, f64> {
        self.r.as_ref()
    }
    pub fn lambda(&self) -> MatRef<'_, f64> {
        self.lambda.as_ref()
    }

    pub fn with_lambda(&self, lambda: Mat<f64>) -> Result<Self> {
        Self::new(self.q.clone(), self.r.clone(), lambda)
    }

    /// Uniform weights `Λ = λ·1`.
    pub fn with_uniform_lambda(&self, value: f64) -> Self {
        let lambda = Mat::from_fn(self.r.nrows(), self.q.nrows(), |_, _| value);
        Self {
            q: self.q.clone(),
            r: self.r.clone(),
            lambda,
        }
    }

    /// Fixed-pattern weights: `0` on `pattern`, `∞` elsewhere.
    pub fn with_pattern(&self, pattern: &[(usize, usize)]) -> Self {
        let mut lambda = Mat::from_fn(self.r.nrows(), self.q.nrows(), |_, _| f64::INFINITY);
        for &(i, j) in pattern {
            lambda[(i, j)] = 0.0;
        }
        Self {
            q: self.q.clone(),
            r: self.r.clone(),
            lambda,
        }
    }
}

/// A feedback gain `K` with its cached closed-loop stability margin
/// `−max Re λ(A + B·K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gain {
    k: Mat<f64>,
    stability_margin: f64,
}

impl Gain {
    pub fn new(plant: &Plant, k: Mat<f64>) -> Self {
        let margin = -max_real_eig(plant.closed_loop(k.as_ref()).as_ref());
        Self {
            k,
            stability_margin: margin,
        }
    }

    /// Builds a gain whose margin has already been measured.
    pub(crate) fn with_margin(k: Mat<f64>, stability_margin: f64) -> Self {
        Self { k, stability_margin }
    }

    pub fn zeros(plant: &Plant) -> Self {
        Self::new(plant, Mat::zeros(plant.m(), plant.n()))
    }

    pub fn k(&self) -> MatRef<'_, f64> {
        self.k.as_ref()
    }

    pub fn into_matrix(self) -> Mat<f64> {
        self.k
    }

    pub fn stability_margin(&self) -> f64 {
        self.stability_margin
    }

    pub fn is_stabilizing(&self) -> bool {
        self.stability_margin > 0.0
    }
}

/// Violated invariants found by [`validate`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.issues.iter().any(|s| s.contains(needle))
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Invalid(self.issues.join("; ")))
        }
    }
}

const SYM_TOL: f64 = 1e-10;

/// Checks every semantic invariant of a problem without modifying it.
pub fn validate(plant: &Plant, cost: &CostSpec) -> ValidationReport {
    let mut issues = Vec::new();
    let n = plant.n();
    let m = plant.m();
    if cost.q.nrows() != n {
        issues.push(format!("Q has {} rows, expected {n}", cost.q.nrows()));
    }
    if cost.r.nrows() != m {
        issues.push(format!("R has {} rows, expected {m}", cost.r.nrows()));
    }
    if cost.lambda.nrows() != m || cost.lambda.ncols() != n {
        issues.push(format!(
            "Lambda is {}x{}, expected {m}x{n}",
            cost.lambda.nrows(),
            cost.lambda.ncols()
        ));
    }
    for (name, mat) in [("A", &plant.a), ("B", &plant.b), ("W", &plant.w), ("Q", &cost.q), ("R", &cost.r)] {
        if !mat.norm_max().is_finite() && (mat.nrows() * mat.ncols() > 0) {
            issues.push(format!("{name} has non-finite entries"));
        }
    }
    check_psd("W", plant.w(), false, &mut issues);
    check_psd("Q", cost.q(), false, &mut issues);
    check_psd("R", cost.r(), true, &mut issues);
    let mut negative = false;
    let mut nan = false;
    for j in 0..cost.lambda.ncols() {
        for i in 0..cost.lambda.nrows() {
            let v = cost.lambda[(i, j)];
            nan |= v.is_nan();
            negative |= v < 0.0;
        }
    }
    if negative {
        issues.push("Lambda has negative entries".into());
    }
    if nan {
        issues.push("Lambda has NaN entries".into());
    }
    ValidationReport { issues }
}

fn check_psd(name: &str, m: MatRef<'_, f64>, strict: bool, issues: &mut Vec<String>) {
    if m.nrows() == 0 || !m.norm_max().is_finite() {
        return;
    }
    if asymmetry(m) > SYM_TOL {
        issues.push(format!("{name} not symmetric"));
        return;
    }
    let ev = sym_eigenvalues(m);
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = m.norm_l2();
    if strict {
        if !(min > 0.0) {
            issues.push(format!("{name} not positive definite (min eigenvalue {min:e})"));
        }
    } else if !(min >= -SYM_TOL * scale) {
        issues.push(format!("{name} not positive semidefinite (min eigenvalue {min:e})"));
    }
}

fn expect_dims(field: &str, m: &Mat<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::Dimension {
            field: field.into(),
            expected: format!("{rows}x{cols}"),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_problem_is_valid() {
        let (p, c) = mass_spring(4, 10.0).unwrap();
        assert!(validate(&p, &c).is_valid());
    }

    #[test]
    fn zero_r_reported() {
        let (p, c) = mass_spring(2, 10.0).unwrap();
        let bad = CostSpec::new(c.q().to_owned(), Mat::zeros(2, 2), c.lambda().to_owned()).unwrap();
        let report = validate(&p, &bad);
        assert!(report.contains("R not positive definite"), "{report:?}");
    }

    #[test]
    fn asymmetric_w_reported() {
        let (p, c) = mass_spring(2, 10.0).unwrap();
        let mut w = p.w().to_owned();
        w[(0, 1)] = 0.3;
        let bad = Plant::new(p.a().to_owned(), p.b().to_owned(), w).unwrap();
        let report = validate(&bad, &c);
        assert!(report.contains("W not symmetric"), "{report:?}");
    }

    #[test]
    fn negative_lambda_reported() {
        let (p, c) = mass_spring(2, 10.0).unwrap();
        let bad = c.with_uniform_lambda(-1.0);
        assert!(validate(&p, &bad).contains("Lambda has negative entries"));
        assert!(validate(&p, &c.with_uniform_lambda(f64::INFINITY)).is_valid());
    }

    #[test]
    fn wrong_b_rows_named() {
        let err = Plant::new(Mat::zeros(3, 3), Mat::zeros(2, 1), Mat::zeros(3, 3)).unwrap_err();
        assert!(err.to_string().contains("B"), "{err}");
    }

    #[test]
    fn shifted_plant_moves_spectrum() {
        let (p, _) = mass_spring(3, 10.0).unwrap();
        let s = p.shifted(0.25);
        assert!((max_real_eig(s.a()) + 0.25).abs() < 1e-8);
    }
}
