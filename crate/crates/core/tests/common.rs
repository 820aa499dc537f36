#![allow(dead_code)]

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_lqr::kernels::lqr_synthesize;
use sparse_lqr::{CostSpec, Plant};

pub fn random_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat<f64> {
    Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn spd(rng: &mut ChaCha8Rng, n: usize) -> Mat<f64> {
    let g = random_mat(rng, n, n);
    let mut s = &g * g.transpose();
    for i in 0..n {
        s[(i, i)] += 0.5;
    }
    s
}

/// A random plant with SPD weights and a stabilizing gain near the LQR one.
pub fn random_problem(seed: u64, n: usize, m: usize) -> (Plant, CostSpec, Mat<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_mat(&mut rng, n, n);
    let b = random_mat(&mut rng, n, m);
    let w = spd(&mut rng, n);
    let q = spd(&mut rng, n);
    let r = spd(&mut rng, m);
    let plant = Plant::new(a, b, w).unwrap();
    let cost = CostSpec::unregularized(q, r).unwrap();
    let (gain, _) = lqr_synthesize(&plant, &cost).unwrap();
    let k = gain.k() + random_mat(&mut rng, m, n) * faer::Scale(0.05);
    (plant, cost, k)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// A random plant whose open loop is Hurwitz (so `K = 0` is feasible).
pub fn hurwitz_problem(seed: u64, n: usize, m: usize) -> (Plant, CostSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = random_mat(&mut rng, n, n);
    let shift = sparse_lqr::kernels::max_real_eig(a.as_ref()) + 0.5;
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let b = random_mat(&mut rng, n, m);
    let w = spd(&mut rng, n);
    let q = spd(&mut rng, n);
    let r = spd(&mut rng, m);
    (Plant::new(a, b, w).unwrap(), CostSpec::unregularized(q, r).unwrap())
}

/// Every row of a trace is no worse than the one before it.
pub fn assert_monotone(trace: &[sparse_lqr::TraceRow]) {
    for w in trace.windows(2) {
        assert!(
            w[1].objective_f <= w[0].objective_f,
            "F increased at iteration {}: {} -> {}",
            w[1].iter,
            w[0].objective_f,
            w[1].objective_f
        );
    }
}
