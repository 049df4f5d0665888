//! Linearized Euler-Poisson path: the cosine amplitude of the density grows
//! like `(aT sinh t + a0 sinh(T - t)) / sinh T`. Compares the solver against it.
//!
//! `cargo run --release --example linearized_growth`

use euler_poisson_path::builtins::{linearized, linearized_amplitude, linearized_reference};
use euler_poisson_path::diagnostics::consistency_vs_reference;
use euler_poisson_path::{make_grid, solve_reconstruction, SolverOptions};
use std::f64::consts::PI;

fn main() -> euler_poisson_path::Result<()> {
    let (eps, a0, a_t) = (0.01, 1.0, 0.5);
    let g = make_grid(1, 128, 1.0, 16)?;
    let (rho0, rho_t) = linearized(g, eps, a0, a_t)?;
    let path = solve_reconstruction(&rho0, &rho_t, &g, &SolverOptions::default())?;
    println!("backend {:?}, {} outer iterations, converged {}", path.backend, path.log.len(), path.converged);
    println!("action {:.10e}, dual {:.10e}", path.action, path.dual_value);

    println!("{:>6} {:>12} {:>12} {:>10}", "t", "a(t)", "measured", "rel err");
    let h = g.h();
    for i in 0..=g.steps {
        let t = g.time(i);
        let exact = linearized_amplitude(t, g.t_final, a0, a_t);
        let rho = path.densities[i].values();
        let measured = 2.0 * h * rho.iter().enumerate().map(|(k, v)| v * (2.0 * PI * k as f64 * h).cos()).sum::<f64>() / eps;
        println!("{t:>6.3} {exact:>12.6} {measured:>12.6} {:>10.2e}", (measured - exact).abs() / exact);
    }

    let errors = consistency_vs_reference(&path, &linearized_reference(g, eps, a0, a_t))?;
    println!("velocity relative L2 error over the path: {:.3e}", errors.velocity_rel_path);
    Ok(())
}
