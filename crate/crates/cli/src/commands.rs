use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use faer::Mat;

use sparse_lqr::kernels::{care_residual, lqr_synthesize};
use sparse_lqr::model::{
    mass_spring, random_network, read_matrix_csv, read_problem, write_matrix_csv, write_problem, ProblemFile,
};
use sparse_lqr::report::support;
use sparse_lqr::{ista_solve, polish, solve, CostSpec, SolverOptions, Termination};

use crate::args::{BenchArgs, Command, GenerateArgs, LqrArgs, PenaltyFlags, PolishArgs, ProblemKind, SolveArgs, SolverFlags, SweepArgs};
use crate::bench::{run_bench, write_bench_csv};
use crate::document::{write_json, BenchDocument, BenchSolverSummary, GainDocument, SweepDocument};
use crate::error::{CliError, CliResult};
use crate::sweep::{run_sweep, scaled_weights, write_sweep_csv, SweepSpec};
use crate::SolverKind;

/// Runs a parsed command and returns its exit status.
pub fn execute(command: Command) -> i32 {
    let (name, out) = match &command {
        Command::Generate(a) => ("generate", a.out.clone()),
        Command::Solve(a) => ("solve", a.out.clone()),
        Command::Sweep(a) => ("sweep", a.out.clone()),
        Command::Polish(a) => ("polish", a.out.clone()),
        Command::Bench(a) => ("bench", a.out.clone()),
        Command::Lqr(a) => ("lqr", a.out.clone()),
    };
    let result = match command {
        Command::Generate(a) => generate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Polish(a) => cmd_polish(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Lqr(a) => cmd_lqr(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if name != "generate" && out.is_dir() {
                let path = out.join("report.json");
                let written = match name {
                    "sweep" => write_json(
                        &SweepDocument {
                            command: name.into(),
                            status: "error".into(),
                            error: Some(e.to_string()),
                            ..SweepDocument::default()
                        },
                        &path,
                    ),
                    "bench" => write_json(
                        &BenchDocument {
                            command: name.into(),
                            status: "error".into(),
                            error: Some(e.to_string()),
                            ..BenchDocument::default()
                        },
                        &path,
                    ),
                    _ => write_json(&GainDocument::failed(name, &e), &path),
                };
                if let Err(w) = written {
                    eprintln!("error: could not write {}: {w}", path.display());
                }
            }
            e.exit_code()
        }
    }
}

pub fn solver_options(flags: &SolverFlags) -> CliResult<SolverOptions> {
    let time_budget = match flags.time_budget {
        None => None,
        Some(s) if s > 0.0 && s.is_finite() => Some(Duration::from_secs_f64(s)),
        Some(s) => return Err(CliError::Usage(format!("--time-budget must be positive, got {s}"))),
    };
    let options = SolverOptions {
        tol: flags.tol,
        max_iter: flags.max_iter,
        theta_tol: flags.theta_tol,
        time_budget,
        ..SolverOptions::default()
    };
    options.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(options)
}

fn load_problem(path: &Path) -> CliResult<ProblemFile> {
    read_problem(path).map_err(|source| CliError::Input {
        path: path.display().to_string(),
        source,
    })
}

fn load_matrix(path: &Path) -> CliResult<Mat<f64>> {
    read_matrix_csv(path).map_err(|source| CliError::Input {
        path: path.display().to_string(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Resolves `Λ`: `λ·weights`, `λ·1`, the weights alone, or the problem's own.
pub fn resolve_cost(problem: &ProblemFile, penalty: &PenaltyFlags) -> CliResult<(CostSpec, Option<f64>)> {
    if let Some(l) = penalty.lambda {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(CliError::Usage(format!("--lambda must be finite and non-negative, got {l}")));
        }
    }
    let weights = penalty.lambda_matrix.as_deref().map(load_matrix).transpose()?;
    let cost = &problem.cost;
    let resolved = match (penalty.lambda, weights) {
        (Some(l), Some(w)) => (cost.with_lambda(scaled_weights(w.as_ref(), l))?, Some(l)),
        (Some(l), None) => (cost.with_uniform_lambda(l), Some(l)),
        (None, Some(w)) => (cost.with_lambda(w)?, None),
        (None, None) => (cost.clone(), problem.lambda),
    };
    Ok(resolved)
}

fn generate(args: &GenerateArgs) -> CliResult<i32> {
    let generated = match args.kind {
        ProblemKind::MassSpring => mass_spring(args.size, args.r_scale),
        ProblemKind::RandomNetwork => random_network(args.size, args.density, args.seed),
    };
    let (plant, cost) = generated.map_err(|e| CliError::Usage(e.to_string()))?;
    let mut problem = ProblemFile::new(plant, cost);
    if let Some(l) = args.lambda {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(CliError::Usage(format!("--lambda must be finite and non-negative, got {l}")));
        }
        problem = problem.with_uniform_lambda(l);
    }
    ensure_dir(&args.out)?;
    let path = args.out.join("problem.json");
    write_problem(&problem, &path)?;
    println!("wrote {} (n = {}, m = {})", path.display(), problem.plant.n(), problem.plant.m());
    Ok(0)
}

fn run_solver(
    kind: SolverKind,
    plant: &sparse_lqr::Plant,
    cost: &CostSpec,
    k0: Option<faer::MatRef<'_, f64>>,
    options: &SolverOptions,
) -> sparse_lqr::Result<sparse_lqr::SolveReport> {
    match kind {
        SolverKind::NewtonCd => solve(plant, cost, k0, options),
        SolverKind::Ista => ista_solve(plant, cost, k0, options),
    }
}

fn status_code(t: Termination) -> i32 {
    if t == Termination::Converged {
        0
    } else {
        1
    }
}

fn cmd_solve(args: &SolveArgs) -> CliResult<i32> {
    let options = solver_options(&args.solver_flags)?;
    ensure_dir(&args.out)?;
    let problem = load_problem(&args.penalty.problem)?;
    let (cost, lambda) = resolve_cost(&problem, &args.penalty)?;
    let clock = Instant::now();
    let report = run_solver(args.solver, &problem.plant, &cost, problem.k0.as_ref().map(|k| k.as_ref()), &options)?;
    let wall = clock.elapsed().as_secs_f64();
    let mut doc = GainDocument::from_report("solve", &args.solver.to_string(), &report, wall);
    doc.lambda = lambda;
    write_json(&doc, &args.out.join("report.json"))?;
    report.write_trace_csv(fs::File::create(args.out.join("trace.csv"))?)?;
    write_matrix_csv(report.gain.k(), args.out.join("gain.csv"))?;
    println!(
        "{}: F = {:.10e}, J = {:.10e}, nnz = {}/{}, {} iterations, {:.3}s",
        report.termination,
        report.objective_f,
        report.objective_j,
        report.nnz(),
        problem.plant.m() * problem.plant.n(),
        report.iterations,
        wall
    );
    Ok(status_code(report.termination))
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<i32> {
    let options = solver_options(&args.solver_flags)?;
    let spec = SweepSpec {
        lambda_min: args.lambda_min,
        lambda_max: args.lambda_max,
        count: args.count,
        polish_each: !args.no_polish,
        warm_start: !args.no_warm_start,
    };
    spec.validate()?;
    ensure_dir(&args.out)?;
    let problem = load_problem(&args.problem)?;
    let (m, n) = (problem.plant.m(), problem.plant.n());
    let weights = match &args.lambda_matrix {
        Some(p) => load_matrix(p)?,
        None => Mat::from_fn(m, n, |_, _| 1.0),
    };
    let clock = Instant::now();
    let outcome = run_sweep(&problem.plant, &problem.cost, weights.as_ref(), &spec, args.solver, &options)?;
    let table = args.out.join("sweep.csv");
    write_sweep_csv(&outcome.rows, fs::File::create(&table)?)?;
    let failed = outcome.runs.iter().filter(|r| r.is_none()).count();
    let doc = SweepDocument {
        command: "sweep".into(),
        status: "ok".into(),
        error: None,
        j_lqr: Some(outcome.j_lqr),
        rows: Some(outcome.rows.len()),
        failed_rows: Some(failed),
        warm_start: Some(spec.warm_start),
        polish: Some(spec.polish_each),
        wall_time_s: Some(clock.elapsed().as_secs_f64()),
        table: Some(table.display().to_string()),
    };
    write_json(&doc, &args.out.join("report.json"))?;
    for row in &outcome.rows {
        println!(
            "λ = {:.4e}  nnz = {:.4}  gap = {:.4e}  {}",
            row.lambda, row.nnz_fraction, row.performance_gap, row.status
        );
    }
    Ok(if failed == outcome.rows.len() { 1 } else { 0 })
}

fn cmd_polish(args: &PolishArgs) -> CliResult<i32> {
    let options = solver_options(&args.solver_flags)?;
    ensure_dir(&args.out)?;
    let problem = load_problem(&args.problem)?;
    let k_start = load_matrix(&args.gain)?;
    let pattern = match &args.pattern {
        Some(p) => support(load_matrix(p)?.as_ref()),
        None => support(k_start.as_ref()),
    };
    let cost = problem.cost.with_uniform_lambda(0.0);
    let clock = Instant::now();
    let report = polish(&problem.plant, &cost, &pattern, k_start.as_ref(), &options)?;
    let wall = clock.elapsed().as_secs_f64();
    let doc = GainDocument::from_report("polish", &SolverKind::NewtonCd.to_string(), &report, wall);
    write_json(&doc, &args.out.join("report.json"))?;
    report.write_trace_csv(fs::File::create(args.out.join("trace.csv"))?)?;
    write_matrix_csv(report.gain.k(), args.out.join("gain.csv"))?;
    println!(
        "{}: J = {:.10e} on {} coordinates, {} iterations",
        report.termination,
        report.objective_j,
        pattern.len(),
        report.iterations
    );
    Ok(status_code(report.termination))
}

fn cmd_bench(args: &BenchArgs) -> CliResult<i32> {
    if args.penalty.lambda.is_none() && args.penalty.lambda_matrix.is_none() {
        return Err(CliError::Usage("bench requires --lambda".into()));
    }
    let options = solver_options(&args.solver_flags)?;
    ensure_dir(&args.out)?;
    let problem = load_problem(&args.penalty.problem)?;
    let (cost, lambda) = resolve_cost(&problem, &args.penalty)?;
    let outcome = run_bench(&problem.plant, &cost, &args.solver, &options)?;
    let table = args.out.join("bench.csv");
    write_bench_csv(&outcome.samples(), fs::File::create(&table)?)?;
    let solvers = outcome
        .series
        .iter()
        .map(|s| match &s.report {
            Ok(r) => BenchSolverSummary {
                solver: s.solver.to_string(),
                termination: Some(r.termination.to_string()),
                final_f: Some(r.objective_f),
                iterations: Some(r.iterations),
                time_s: r.trace.last().map(|t| t.time_s),
                error: None,
            },
            Err(e) => BenchSolverSummary {
                solver: s.solver.to_string(),
                error: Some(e.clone()),
                ..BenchSolverSummary::default()
            },
        })
        .collect::<Vec<_>>();
    for s in &solvers {
        println!(
            "{}: F = {}, {} ({} iterations)",
            s.solver,
            s.final_f.map_or("-".into(), |f| format!("{f:.10e}")),
            s.termination.as_deref().or(s.error.as_deref()).unwrap_or("-"),
            s.iterations.unwrap_or(0)
        );
    }
    let doc = BenchDocument {
        command: "bench".into(),
        status: "ok".into(),
        error: None,
        lambda,
        f0: Some(outcome.f0),
        f_star: Some(outcome.f_star),
        solvers,
        table: Some(table.display().to_string()),
    };
    write_json(&doc, &args.out.join("report.json"))?;
    Ok(0)
}

fn cmd_lqr(args: &LqrArgs) -> CliResult<i32> {
    ensure_dir(&args.out)?;
    let problem = load_problem(&args.problem)?;
    let cost = problem.cost.with_uniform_lambda(0.0);
    let clock = Instant::now();
    let (gain, p) = lqr_synthesize(&problem.plant, &cost)?;
    let eval = sparse_lqr::objective::evaluate(&problem.plant, &cost, gain.k());
    let nnz = sparse_lqr::report::nnz(gain.k());
    let total = (problem.plant.m() * problem.plant.n()) as f64;
    let doc = GainDocument {
        command: "lqr".into(),
        status: "ok".into(),
        objective_f: Some(eval.j),
        objective_j: Some(eval.j),
        penalty_g: Some(0.0),
        nnz: Some(nnz),
        nnz_fraction: Some(nnz as f64 / total),
        wall_time_s: Some(clock.elapsed().as_secs_f64()),
        stability_margin: Some(gain.stability_margin()),
        care_residual: Some(care_residual(&problem.plant, &cost, p.as_ref())),
        ..GainDocument::default()
    }
    .with_gain(gain.k());
    write_json(&doc, &args.out.join("report.json"))?;
    write_matrix_csv(gain.k(), args.out.join("gain.csv"))?;
    println!("J_LQR = {:.10e}, nnz = {nnz}", eval.j);
    Ok(0)
}
