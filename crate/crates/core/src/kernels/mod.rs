//! Dense kernels: eigendecomposition, Lyapunov solvers, Riccati/LQR
//! synthesis, and the symmetric low-rank factorization of the Cauchy matrix
//! built from closed-loop eigenvalues.

mod care;
mod eig;
mod lyapunov;
mod takagi;

pub use care::{care_residual, lqr_synthesize};
pub use eig::{conjugate_partners, max_real_eig, Eigendecomposition, CONDITION_LIMIT};
pub use lyapunov::{
    lyapunov_residual, solve_lyapunov, solve_lyapunov_oracle, solve_lyapunov_sign,
    solve_lyapunov_with, LyapunovMethod, LyapunovSolution, Side, ORACLE_MAX_N,
};
pub use takagi::{cauchy_theta, takagi_factor, ThetaFactors, DEFAULT_THETA_TOL};
