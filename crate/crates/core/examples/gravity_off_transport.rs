//! With gravity switched off the least-action path is the displacement
//! interpolation and `2 T * action` is the squared Wasserstein distance.
//!
//! `cargo run --release --example gravity_off_transport`

use euler_poisson_path::builtins::two_bumps;
use euler_poisson_path::transport::{l1_distance, mccann_interpolate, w2_exact_1d, MeasureModel};
use euler_poisson_path::{make_grid, solve_reconstruction, Gravity, SolverOptions};

fn main() -> euler_poisson_path::Result<()> {
    let g = make_grid(1, 256, 1.0, 8)?;
    let (rho0, rho_t) = two_bumps(g)?;
    let opts = SolverOptions { gravity: Gravity::Off, ..SolverOptions::default() };
    let path = solve_reconstruction(&rho0, &rho_t, &g, &opts)?;

    let w2 = w2_exact_1d(&rho0, &rho_t, MeasureModel::Cellwise)?;
    println!("2T * action = {:.12e}", 2.0 * g.t_final * path.action);
    println!("W2^2        = {w2:.12e}");
    for i in 1..g.steps {
        let m = mccann_interpolate(&rho0, &rho_t, i as f64 / g.steps as f64)?;
        println!("t = {:.3}: L1 distance to the displacement interpolant {:.3e}", g.time(i), l1_distance(path.densities[i].as_scalar(), m.as_scalar()));
    }
    Ok(())
}
