use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::SolverKind;

#[derive(Debug, Parser)]
#[command(name = "sparse-lqr", version, about = "Sparse LQR feedback synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a benchmark problem file.
    Generate(GenerateArgs),
    /// Solve one ℓ1-regularized problem.
    Solve(SolveArgs),
    /// Solve along a log-spaced λ path, polishing each solution.
    Sweep(SweepArgs),
    /// Re-optimize J with the sparsity pattern of a gain held fixed.
    Polish(PolishArgs),
    /// Compare solvers from a shared starting gain.
    Bench(BenchArgs),
    /// Compute the unregularized LQR gain.
    Lqr(LqrArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    MassSpring,
    RandomNetwork,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: ProblemKind,
    /// Number of masses or network nodes.
    #[arg(long)]
    pub size: usize,
    /// Edge density of the random network.
    #[arg(long, default_value_t = 0.2)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mass-spring control weight: R = r_scale·I.
    #[arg(long, default_value_t = 10.0)]
    pub r_scale: f64,
    /// Store a uniform penalty weight in the file.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub theta_tol: f64,
    /// Wall-clock limit per solve, in seconds.
    #[arg(long)]
    pub time_budget: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PenaltyFlags {
    #[arg(long)]
    pub problem: PathBuf,
    /// Uniform weight λ; multiplies --lambda-matrix when both are given.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// CSV of entrywise weights (`inf` pins an entry to zero).
    #[arg(long)]
    pub lambda_matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub penalty: PenaltyFlags,
    #[arg(long, value_enum, default_value_t = SolverKind::NewtonCd)]
    pub solver: SolverKind,
    #[command(flatten)]
    pub solver_flags: SolverFlags,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long)]
    pub lambda_matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-2)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 1e2)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 30)]
    pub count: usize,
    #[arg(long)]
    pub no_warm_start: bool,
    #[arg(long)]
    pub no_polish: bool,
    #[arg(long, value_enum, default_value_t = SolverKind::NewtonCd)]
    pub solver: SolverKind,
    #[command(flatten)]
    pub solver_flags: SolverFlags,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PolishArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Starting gain (CSV); its support is the pattern unless --pattern is given.
    #[arg(long)]
    pub gain: PathBuf,
    /// CSV mask whose nonzero entries form the pattern.
    #[arg(long)]
    pub pattern: Option<PathBuf>,
    #[command(flatten)]
    pub solver_flags: SolverFlags,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub penalty: PenaltyFlags,
    /// Solvers to compare, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SolverKind::NewtonCd, SolverKind::Ista])]
    pub solver: Vec<SolverKind>,
    #[command(flatten)]
    pub solver_flags: SolverFlags,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LqrArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}
