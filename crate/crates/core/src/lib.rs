//! Solver and verification harness for mixed hyperbolic-parabolic equations
//! with a nonlocal diffusion operator generated by a symmetric pure-jump
//! Levy process:
//!
//! ```text
//! d/dt u + d/dx f(u) = d/dx (a(u) d/dx u) + L[u],      a(u) = sigma(u)^2 >= 0,
//! ```
//!
//! on a periodic 1D domain. `L` is applied in singular-integral form through
//! a grid-aligned jump quadrature with a diffusion surrogate for sub-grid
//! jumps. On top of the explicit monotone scheme sits an audit and experiment
//! layer that checks entropy inequalities, L1 contraction, the comparison
//! principle, and continuous-dependence scaling on computed trajectories.

pub mod audit;
pub mod config;
pub mod experiments;
pub mod grid;
pub mod init;
pub mod io;
pub mod levy;
pub mod models;
pub mod nonlocal;
pub mod quad;
pub mod solver;

pub use grid::{bv_seminorm, l1_distance, positive_part_mass, Field, Grid1D, Trajectory};
pub use levy::{LevyMeasure, LevyQuadrature, MomentReport};
pub use models::{DiffusionModel, Entropy, FluxModel, KruzkovRegularization};
pub use solver::{cfl_dt, numeric_flux, solve, SolverConfig};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid Levy measure: {0}")]
    InvalidMeasure(String),
    #[error("quadrature did not converge: requested {requested:e}, achieved {achieved:e}")]
    QuadratureNonConvergence { requested: f64, achieved: f64 },
    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),
    #[error("spacing mismatch: operator built for h = {quad:e}, field has h = {field:e}")]
    SpacingMismatch { quad: f64, field: f64 },
    #[error("mode index {mode} out of range 1..={max}")]
    ModeOutOfRange { mode: usize, max: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("component count mismatch: {0} vs {1}")]
    ComponentMismatch(usize, usize),
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("time step underflow: dt = {dt:e}; coarsen the operator or shorten t_end")]
    TimestepUnderflow { dt: f64 },
    #[error("instability: non-finite value in cell {cell} at t = {time}")]
    Instability { cell: usize, time: f64 },
    #[error("simplified entropy mode unavailable: {0}")]
    SimplerModeUnavailable(String),
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    ConfigParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
