//! The discrete least-action solver: kicks, potentials, the outer fixed point,
//! primal action and dual value.

mod atoms;
mod kicks;
mod master;
mod potential;
mod solver;

pub use atoms::AtomPotentials;
pub(crate) use atoms::KickFields;
pub use kicks::{Gravity, KickSet};
pub use potential::{dual_value, forward_sweep, velocity_from_potential, VelocityPotential};
pub use solver::{
    discrete_action, momentum_velocity, recover_path_densities, solve_reconstruction, Backend, IterationRecord, PathSolution,
    SolverOptions,
};
pub(crate) use solver::energy_series_of;
