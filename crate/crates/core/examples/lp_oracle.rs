//! On a small grid the endpoint coupling is an exact LP over node pairs.
//! Recomputes the LP with freshly minimized pair paths and compares.
//!
//! `cargo run --release --example lp_oracle`

use euler_poisson_path::builtins::random_smooth;
use euler_poisson_path::pipeline::lp_oracle;
use euler_poisson_path::reconstruction::discrete_action;
use euler_poisson_path::{make_grid, solve_reconstruction, Backend, SolverOptions};

fn main() -> euler_poisson_path::Result<()> {
    let g = make_grid(1, 8, 1.0, 3)?;
    let rho0 = random_smooth(g, 7, 2, 0.6)?;
    let rho_t = random_smooth(g, 8, 2, 0.6)?;
    let opts = SolverOptions { backend: Backend::Lp, ..SolverOptions::default() };
    let path = solve_reconstruction(&rho0, &rho_t, &g, &opts)?;
    println!("converged {} after {} iterations", path.converged, path.log.len());
    for rec in &path.log {
        println!("  iteration {:>3}: kick change {:.3e}, action {:.12e}", rec.iteration, rec.kick_change, rec.action);
    }
    println!("action          {:.12e}", path.action);
    println!("discrete action {:.12e}", discrete_action(&path)?);
    println!("dual value      {:.12e}", path.dual_value);
    let oracle = lp_oracle(&path)?;
    println!("LP over pair costs {:.12e}, solver plan {:.12e}, difference {:.2e}", oracle.lp_value, oracle.solver_value, oracle.abs_diff);
    Ok(())
}
