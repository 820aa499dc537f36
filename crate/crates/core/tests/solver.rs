mod common;

use common::{assert_monotone, hurwitz_problem, random_problem, rel};
use faer::linalg::solvers::Solve;
use faer::Mat;
use sparse_lqr::kernels::{lqr_synthesize, max_real_eig, solve_lyapunov_oracle};
use sparse_lqr::model::mass_spring;
use sparse_lqr::newton_cd::{
    active_set, build_spectral_cache, deflate_and_stabilize, fallback_direction, initialize, inner_solve,
    line_search, optimality,
};
use sparse_lqr::objective::{evaluate, hessian_product, penalty, quadratic_model};
use sparse_lqr::{ista_solve, polish, solve, CostSpec, Error, Plant, SolverOptions, Termination};

fn scalar(a: f64) -> (Plant, CostSpec) {
    let plant = Plant::new(faer::mat![[a]], faer::mat![[1.0]], faer::mat![[1.0]]).unwrap();
    (plant, CostSpec::unregularized(faer::mat![[1.0]], faer::mat![[1.0]]).unwrap())
}

fn frob_rel(a: faer::MatRef<'_, f64>, b: faer::MatRef<'_, f64>) -> f64 {
    (a - b).norm_l2() / b.norm_l2()
}

#[test]
fn unregularized_solve_recovers_lqr_from_zero() {
    for seed in 0..3 {
        let (plant, cost) = hurwitz_problem(seed, 6, 3);
        let (lqr, _) = lqr_synthesize(&plant, &cost).unwrap();
        let k0 = Mat::zeros(3, 6);
        let report = solve(&plant, &cost, Some(k0.as_ref()), &SolverOptions::default()).unwrap();
        assert_eq!(report.termination, Termination::Converged);
        assert!(frob_rel(report.gain.k(), lqr.k()) <= 1e-4, "seed {seed}");
        assert_monotone(&report.trace);
    }
}

#[test]
fn unregularized_mass_spring_from_deflated_start() {
    let (plant, cost) = mass_spring(5, 10.0).unwrap();
    let (lqr, _) = lqr_synthesize(&plant, &cost).unwrap();
    let k0 = Mat::zeros(5, 10);
    let report = solve(&plant, &cost, Some(k0.as_ref()), &SolverOptions::default()).unwrap();
    assert!(report.converged());
    assert!(frob_rel(report.gain.k(), lqr.k()) <= 1e-4);
}

#[test]
fn huge_penalty_keeps_zero_gain() {
    let (plant, cost) = hurwitz_problem(7, 5, 2);
    let cost = cost.with_uniform_lambda(1e6);
    let k0 = Mat::zeros(2, 5);
    let grad0 = evaluate(&plant, &cost, k0.as_ref()).grad().unwrap().clone();
    assert!(grad0.norm_max() <= 1e6);
    let report = solve(&plant, &cost, Some(k0.as_ref()), &SolverOptions::default()).unwrap();
    assert!(report.converged());
    assert!(report.iterations <= 1);
    assert_eq!(report.nnz(), 0);
}

#[test]
fn mass_spring_mid_penalty_converges() {
    let (plant, cost) = mass_spring(50, 10.0).unwrap();
    let cost = cost.with_uniform_lambda(0.3);
    let options = SolverOptions::default();
    let report = solve(&plant, &cost, None, &options).unwrap();
    assert!(report.converged(), "{}", report.termination);
    assert!(report.iterations <= 100);
    assert!(report.optimality <= options.tol * (1.0 + report.objective_f.abs()));
    assert_monotone(&report.trace);
    assert!(report.gain.is_stabilizing());
    assert!(report.nnz() < 50 * 100);

    // active-set soundness: zero coordinates satisfy |∇J_ij| ≤ Λ_ij + tol
    let eval = evaluate(&plant, &cost, report.gain.k());
    let grad = eval.grad().unwrap();
    let tol = options.tol * (1.0 + report.objective_f.abs());
    for i in 0..50 {
        for j in 0..100 {
            if report.gain.k()[(i, j)] == 0.0 {
                assert!(grad[(i, j)].abs() <= 0.3 + tol);
            }
        }
    }
}

#[test]
fn every_iterate_is_stabilizing() {
    let (plant, cost) = mass_spring(10, 10.0).unwrap();
    let cost = cost.with_uniform_lambda(1.0);
    let report = solve(&plant, &cost, None, &SolverOptions::default()).unwrap();
    assert_monotone(&report.trace);
    assert!(report.trace.iter().all(|r| r.objective_j.is_finite()));
    assert!(report.gain.stability_margin() > 0.0);
}

#[test]
fn initialization_rules() {
    let (plant, cost) = mass_spring(10, 10.0).unwrap();
    let (lqr, _) = lqr_synthesize(&plant, &cost).unwrap();
    assert_eq!(initialize(&plant, &cost).unwrap().k(), lqr.k());

    let heavy = cost.with_uniform_lambda(1e3);
    let k0 = initialize(&plant, &heavy).unwrap();
    assert!(k0.is_stabilizing());
    let f = |k: faer::MatRef<'_, f64>| evaluate(&plant, &heavy, k).j + penalty(&heavy, k);
    assert!(f(k0.k()) <= f(lqr.k()));
    // entries shrunk past zero are exactly zero
    for i in 0..10 {
        for j in 0..20 {
            if lqr.k()[(i, j)].abs() <= 1e-300 {
                assert_eq!(k0.k()[(i, j)], 0.0);
            }
        }
    }
}

#[test]
fn deflation_cases() {
    let options = SolverOptions::default();
    let (plant, cost) = scalar(-1.0);
    let (gain, rounds) = deflate_and_stabilize(&plant, &cost, faer::mat![[0.0]].as_ref(), None, &options).unwrap();
    assert_eq!(rounds, 0);
    assert_eq!(gain.k()[(0, 0)], 0.0);

    let (plant, cost) = scalar(1.0);
    let (gain, _) = deflate_and_stabilize(&plant, &cost, faer::mat![[0.0]].as_ref(), None, &options).unwrap();
    assert!(gain.k()[(0, 0)] < -1.0);

    for n in [5, 10] {
        let (plant, cost) = mass_spring(n, 10.0).unwrap();
        let k0 = Mat::zeros(n, 2 * n);
        let (gain, rounds) = deflate_and_stabilize(&plant, &cost, k0.as_ref(), None, &options).unwrap();
        assert!(rounds >= 1);
        assert!(max_real_eig(plant.closed_loop(gain.k()).as_ref()) < 0.0);
    }
}

#[test]
fn deflation_reports_uncontrollable_instability() {
    let plant = Plant::new(faer::mat![[1.0]], faer::mat![[0.0]], faer::mat![[1.0]]).unwrap();
    let cost = CostSpec::unregularized(faer::mat![[1.0]], faer::mat![[1.0]]).unwrap();
    let err = deflate_and_stabilize(&plant, &cost, faer::mat![[0.0]].as_ref(), None, &SolverOptions::default());
    assert!(matches!(err, Err(Error::Stabilization(_))), "{err:?}");
}

#[test]
fn line_search_cases() {
    let options = SolverOptions::default();
    let (plant, cost) = scalar(-1.0);
    let k = faer::mat![[0.0]];
    let eval = evaluate(&plant, &cost, k.as_ref());
    let grad = eval.grad().unwrap().clone();
    let f0 = eval.j;

    let tiny = &grad * faer::Scale(-1e-3);
    let step = line_search(&plant, &cost, k.as_ref(), grad.as_ref(), f0, tiny.as_ref(), &options)
        .unwrap()
        .unwrap();
    assert_eq!(step.alpha, 1.0);
    assert!(step.objective_f < f0);

    // from k = −2 the slope is negative, so d = 4 descends, but the full
    // step lands on k + d = 2 where a + b·(k + d) = 1 > 0
    let k_low = faer::mat![[-2.0]];
    let e = evaluate(&plant, &cost, k_low.as_ref());
    let g = e.grad().unwrap().clone();
    assert!(g[(0, 0)] < 0.0);
    let d = faer::mat![[4.0]];
    let step = line_search(&plant, &cost, k_low.as_ref(), g.as_ref(), e.j, d.as_ref(), &options)
        .unwrap()
        .unwrap();
    assert!(step.alpha < 1.0);
    assert!(-1.0 + step.k[(0, 0)] < 0.0);
    assert!(step.objective_f < e.j);

    let zero = faer::mat![[0.0]];
    assert!(line_search(&plant, &cost, k.as_ref(), grad.as_ref(), f0, zero.as_ref(), &options).is_err());
}

#[test]
fn fallback_clamps() {
    let k = faer::mat![[0.0, 0.0]];
    let g = faer::mat![[1.0, 1.0]];
    let lam = faer::mat![[0.0, 0.0]];
    let active = active_set(k.as_ref(), g.as_ref(), lam.as_ref());
    let d = fallback_direction(k.as_ref(), g.as_ref(), lam.as_ref(), &active, &[1e-6, 1e9], (1e-2, 1e4));
    assert!((d[(0, 0)] + 1.0 / 1e-2).abs() < 1e-9);
    assert!((d[(0, 1)] + 1.0 / 1e4).abs() < 1e-15);
}

#[test]
fn inner_solve_matches_explicit_newton_direction() {
    let (plant, cost, k) = random_problem(3, 3, 2);
    let eval = evaluate(&plant, &cost, k.as_ref());
    let data = eval.data().unwrap();
    let (m, n) = (2, 3);
    // assemble the mn×mn Hessian column by column
    let mut h = Mat::<f64>::zeros(m * n, m * n);
    for q in 0..m * n {
        let mut e = Mat::<f64>::zeros(m, n);
        e[(q / n, q % n)] = 1.0;
        let col = hessian_product(&plant, &cost, data, e.as_ref()).unwrap();
        for p in 0..m * n {
            h[(p, q)] = col[(p / n, p % n)];
        }
    }
    let rhs = Mat::from_fn(m * n, 1, |p, _| -data.grad[(p / n, p % n)]);
    let newton = h.partial_piv_lu().solve(&rhs);

    let mut cache = build_spectral_cache(&plant, &cost, &eval, 1e-12).unwrap().coords;
    let lam = cost.lambda();
    let active = active_set(k.as_ref(), data.grad.as_ref(), lam);
    let curv: Vec<f64> = active.coords().iter().map(|&(i, j)| cache.curvature(i, j)).collect();
    inner_solve(&mut cache, k.as_ref(), lam, &active, &curv, 5000, 1e-14);
    let d = cache.direction();
    let mut err = 0.0f64;
    for p in 0..m * n {
        err = err.max((d[(p / n, p % n)] - newton[(p, 0)]).abs());
    }
    assert!(err <= 1e-4 * newton.norm_max(), "{err}");
}

#[test]
fn inner_solve_decreases_regularized_model() {
    let (plant, cost) = mass_spring(4, 10.0).unwrap();
    let cost = cost.with_uniform_lambda(0.1);
    let k = initialize(&plant, &cost).unwrap().into_matrix();
    let eval = evaluate(&plant, &cost, k.as_ref());
    let grad = eval.grad().unwrap().clone();
    let active = active_set(k.as_ref(), grad.as_ref(), cost.lambda());
    let base = build_spectral_cache(&plant, &cost, &eval, 1e-8).unwrap().coords;
    let curv: Vec<f64> = active.coords().iter().map(|&(i, j)| base.curvature(i, j)).collect();
    let mut previous = penalty(&cost, k.as_ref());
    for sweeps in 1..=6 {
        let mut cache = base.clone();
        inner_solve(&mut cache, k.as_ref(), cost.lambda(), &active, &curv, sweeps, 0.0);
        let d = cache.direction().to_owned();
        let value = quadratic_model(&plant, &cost, &eval, d.as_ref()).unwrap() + penalty(&cost, (&k + &d).as_ref());
        assert!(value <= previous + 1e-12 * previous.abs(), "sweep {sweeps}: {value} > {previous}");
        assert!(rel(cache.model_value(), quadratic_model(&plant, &cost, &eval, d.as_ref()).unwrap()) < 1e-8);
        previous = value;
    }
}

#[test]
fn inner_solve_at_optimum_is_zero() {
    let (plant, cost) = hurwitz_problem(5, 4, 2);
    let cost = cost.with_uniform_lambda(1e6);
    let k = Mat::zeros(2, 4);
    let eval = evaluate(&plant, &cost, k.as_ref());
    let grad = eval.grad().unwrap().clone();
    let all: Vec<f64> = vec![1.0; 8];
    // force every coordinate into the sweep
    let forced = active_set(k.as_ref(), (&grad * faer::Scale(1e9)).as_ref(), Mat::<f64>::zeros(2, 4).as_ref());
    assert_eq!(forced.len(), 8);
    let mut cache = build_spectral_cache(&plant, &cost, &eval, 1e-8).unwrap().coords;
    let curv: Vec<f64> = forced.coords().iter().map(|&(i, j)| cache.curvature(i, j)).collect();
    assert_eq!(curv.len(), all.len());
    inner_solve(&mut cache, k.as_ref(), cost.lambda(), &forced, &curv, 3, 1e-2);
    assert_eq!(cache.direction().norm_max(), 0.0);
}

#[test]
fn polish_cases() {
    let options = SolverOptions::default();
    let (plant, cost) = mass_spring(10, 10.0).unwrap();
    let (lqr, _) = lqr_synthesize(&plant, &cost).unwrap();
    let all: Vec<(usize, usize)> = (0..10).flat_map(|i| (0..20).map(move |j| (i, j))).collect();
    let sparse = solve(&plant, &cost.with_uniform_lambda(1.0), None, &options).unwrap();
    let report = polish(&plant, &cost, &all, sparse.gain.k(), &options).unwrap();
    assert!(frob_rel(report.gain.k(), lqr.k()) <= 1e-4);

    let pattern = sparse_lqr::report::support(sparse.gain.k());
    let polished = polish(&plant, &cost, &pattern, sparse.gain.k(), &options).unwrap();
    assert!(polished.objective_j <= sparse.objective_j + 1e-10 * sparse.objective_j);
    for i in 0..10 {
        for j in 0..20 {
            if sparse.gain.k()[(i, j)] == 0.0 {
                assert_eq!(polished.gain.k()[(i, j)], 0.0);
            }
        }
    }

    let (plant, cost) = hurwitz_problem(2, 4, 2);
    let k0 = Mat::zeros(2, 4);
    let empty = polish(&plant, &cost, &[], k0.as_ref(), &options).unwrap();
    assert_eq!(empty.gain.k().norm_max(), 0.0);
    let p0 = solve_lyapunov_oracle(plant.a().transpose(), cost.q()).unwrap();
    let j0 = sparse_lqr::linalg::trace_of_product(p0.as_ref(), plant.w());
    assert!(rel(empty.objective_j, j0) < 1e-10);

    let off_pattern = faer::mat![[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]];
    assert!(polish(&plant, &cost, &[(1, 1)], off_pattern.as_ref(), &options).is_err());
}

#[test]
fn ista_agrees_with_newton() {
    let (plant, cost) = mass_spring(6, 10.0).unwrap();
    let cost = cost.with_uniform_lambda(0.5);
    let options = SolverOptions {
        max_iter: 5000,
        tol: 1e-7,
        ..SolverOptions::default()
    };
    let newton = solve(&plant, &cost, None, &options).unwrap();
    let ista = ista_solve(&plant, &cost, None, &options).unwrap();
    assert!(newton.converged() && ista.converged(), "{} {}", newton.termination, ista.termination);
    assert_monotone(&ista.trace);
    assert_eq!(newton.trace[0].objective_f, ista.trace[0].objective_f);
    assert!(rel(ista.objective_f, newton.objective_f) < 1e-6);
    assert!(frob_rel(ista.gain.k(), newton.gain.k()) < 1e-2);
    assert!(optimality(newton.gain.k(), evaluate(&plant, &cost, newton.gain.k()).grad().unwrap().as_ref(), cost.lambda()) < 1e-4);
}

#[test]
fn rejects_bad_inputs() {
    let (plant, cost) = mass_spring(3, 10.0).unwrap();
    let bad = Mat::<f64>::zeros(2, 6);
    assert!(matches!(
        solve(&plant, &cost, Some(bad.as_ref()), &SolverOptions::default()),
        Err(Error::Dimension { .. })
    ));
    let opts = SolverOptions {
        backtrack: 1.5,
        ..SolverOptions::default()
    };
    assert!(solve(&plant, &cost, None, &opts).is_err());
}
