//! Finite-N cone-wise matrix dynamics.

mod evolve;
mod experiments;
mod first_passage;
mod system;

pub use evolve::{evolve, evolve_multicone, gaussian_start, run, Cycle, EvolveOptions, Trajectory};
pub use experiments::{
    collapse_spread, dominant_top_eigenvalue_check, elliptic_persistence, ensemble_lyapunov,
    estimate_persistence_matrix, estimate_persistence_multicone, first_exit, scaling_collapse,
    top_eigenvalue_check, trapped_varsigma, varsigma, EllipticPoint, LyapunovMeta, LyapunovSamples,
    ScalingCollapse, TopEigenvalueCheck, POINTS_PER_DECADE,
};
pub use first_passage::{
    first_exit_dense, first_exit_diagonal, first_exit_ginibre, first_exit_tridiagonal,
};
pub use system::{ConeSystem, Operator, Probe};
