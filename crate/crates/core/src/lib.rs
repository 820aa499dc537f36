//! Sparse linear state-feedback synthesis.
//!
//! Minimizes the infinite-horizon LQR cost `J(K)` plus a weighted ℓ1 penalty
//! `Σ Λ_ij |K_ij|` over stabilizing gains with a Newton coordinate-descent
//! solver ([`newton_cd`]), a proximal-gradient baseline ([`ista`]) and a
//! fixed-pattern polishing mode.

pub mod error;
pub mod ista;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod newton_cd;
pub mod objective;
pub mod report;

pub use error::{Error, Result};
pub use model::{CostSpec, Gain, Plant, ProblemFile};
pub use ista::ista_solve;
pub use newton_cd::{polish, solve, SolverOptions};
pub use report::{Direction, SolveReport, Termination, TraceRow};
