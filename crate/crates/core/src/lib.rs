//! Nonlocal Fokker–Planck solver for SDEs driven by tempered stable Lévy
//! noise, with a Monte-Carlo cross-check and a Zakai-equation filter built
//! on the same discretization.
//!
//! Modules:
//! * [`special`]: zeta, incomplete gamma and the tempered tail weight.
//! * [`levy`]: the jump measure and its moments.
//! * [`grid`], [`drift`]: geometry, density fields and drift polynomials.
//! * [`solver`]: the finite-difference scheme and time stepping.
//! * [`mc`]: SDE path simulation and histogram densities.
//! * [`zakai`]: signal/observation simulation and the filter.

pub mod drift;
pub mod error;
pub mod grid;
pub mod levy;
pub mod mc;
pub mod solver;
pub mod special;
pub mod zakai;

pub use drift::DriftSpec;
pub use error::{Error, Result};
pub use grid::{total_mass, DensityField, DomainMap, DomainMode, Grid1D};
pub use levy::{default_c_alpha, levy_density, second_moment_rate, TemperedStableParams};
pub use mc::{
    empirical_density, l1_distance, sample_increment, simulate_paths, EmpiricalDensity,
    IncrementSampler, InitialState, McConfig, PathEnsemble,
};
pub use solver::{
    flux_split, max_stable_dt, rhs_bounded, rhs_unbounded, solve, step_euler,
    transform_to_standard, FpeSolver, SolverConfig, StandardProblem,
};
pub use special::{riemann_zeta, tempered_tail_weight, upper_incomplete_gamma};
pub use zakai::{
    run_filter, simulate_signal_observation, zakai_step, FilterOutput, ObservationModel,
    ObservationPath, SignalObservationConfig, ZakaiFilter,
};

/// Crate version, recorded in experiment metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
