//! Least-action reconstruction of Euler-Poisson paths between two densities on
//! the periodic unit torus.
//!
//! The time-discretized problem alternates optimal-transport legs with
//! gravitational kicks `-(T/N) p(t_i)`, where `Lap p = rho - 1`. The solver
//! returns the densities, velocity potentials, velocities and transport plan
//! of the minimizing path, together with its primal action and a dual lower
//! bound. [`diagnostics`] certifies structural properties of a computed path
//! and [`pipeline`] drives configured runs end to end.

pub mod builtins;
pub mod config;
pub mod convex;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod paths;
pub mod pipeline;
pub mod poisson;
pub mod reconstruction;
pub mod spectral;
pub mod sum;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{integrate, make_grid, normalize_density, periodic_diff, DensityField, ScalarField, TorusGrid, VectorField};
pub use poisson::{dirichlet_energy, solve_poisson, PotentialField};
pub use reconstruction::{solve_reconstruction, Backend, Gravity, KickSet, PathSolution, SolverOptions};
