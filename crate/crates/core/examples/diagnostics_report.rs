//! Runs every structural check on a solved path, then breaks the path on
//! purpose and shows which checks notice.
//!
//! `cargo run --release --example diagnostics_report`

use euler_poisson_path::builtins::{bump, linearized, linearized_reference};
use euler_poisson_path::diagnostics::{run_diagnostics, DiagnosticsConfig, DiagnosticsReport};
use euler_poisson_path::{make_grid, solve_reconstruction, Backend, SolverOptions};

fn show(title: &str, r: &DiagnosticsReport) {
    println!("{title}");
    for (name, c) in &r.checks {
        println!("  {name:<30} {:<8} measured {:>11.3e}  tolerance {:>10.3e}", format!("{:?}", c.status), c.measured, c.tolerance);
    }
}

fn main() -> euler_poisson_path::Result<()> {
    let g = make_grid(1, 64, 1.0, 8)?;
    let (rho0, rho_t) = linearized(g, 0.05, 1.0, 0.5)?;
    let opts = SolverOptions { backend: Backend::Quantile, ..SolverOptions::default() };
    let path = solve_reconstruction(&rho0, &rho_t, &g, &opts)?;
    let reference = linearized_reference(g, 0.05, 1.0, 0.5);
    let cfg = DiagnosticsConfig { tol_density_ref: 5e-2, tol_velocity_ref: 5e-2, ..DiagnosticsConfig::default() };

    let clean = run_diagnostics(&path, &cfg, Some(&reference))?;
    show("solved path", &clean);
    for (k, v) in &clean.metrics {
        println!("  metric {k} = {v:.4e}");
    }

    let mut broken = path.clone();
    broken.densities[g.steps / 2] = bump(g, 0.5, 0.05)?;
    show("midpoint replaced by a narrow bump", &run_diagnostics(&broken, &cfg, Some(&reference))?);
    Ok(())
}
