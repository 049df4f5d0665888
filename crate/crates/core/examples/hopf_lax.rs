//! Convex-analysis building blocks: discrete Legendre transform, convex hull
//! and the forward/backward Hopf-Lax steps on the torus.
//!
//! `cargo run --release --example hopf_lax`

use euler_poisson_path::convex::{convex_hull, hopf_lax_step, legendre_transform, Direction, LatticeFunction, SlopeWindow};
use euler_poisson_path::{make_grid, ScalarField};
use std::f64::consts::PI;

fn main() -> euler_poisson_path::Result<()> {
    // double well: the hull flattens the bottom between the wells
    let f = LatticeFunction::from_fn(1, 81, -2.0, 0.05, |x| (x[0] * x[0] - 1.0).powi(2));
    let hull = convex_hull(&f, SlopeWindow { lo: -30.0, hi: 30.0 });
    let star = legendre_transform(&f, SlopeWindow { lo: -2.0, hi: 2.0 });
    for k in (0..f.len()).step_by(10) {
        println!("x = {:>5.2}: f = {:>8.4}  hull = {:>8.4}", f.point(k)[0], f.values[k], hull.values[k]);
    }
    println!("f*(0) = {:.4} (minus the minimum of f)", star.values[star.len() / 2]);

    // forward then backward recovers a potential with small slope exactly
    let g = make_grid(1, 64, 1.0, 4)?;
    let dt = 0.25;
    let phi = ScalarField::from_fn(g, |x| 1e-3 * (2.0 * PI * x[0]).sin());
    let fwd = hopf_lax_step(&phi, dt, Direction::Forward)?;
    let back = hopf_lax_step(&fwd, dt, Direction::Backward)?;
    let err = phi.values.iter().zip(&back.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("small slope: max |B(F(phi)) - phi| = {err:.3e}");

    // a steep potential loses information: B(F(phi)) lies below phi
    let steep = ScalarField::from_fn(g, |x| 0.2 * (6.0 * PI * x[0]).sin());
    let back = hopf_lax_step(&hopf_lax_step(&steep, dt, Direction::Forward)?, dt, Direction::Backward)?;
    let gap = steep.values.iter().zip(&back.values).map(|(a, b)| a - b).fold(0.0, f64::max);
    println!("steep slope: max (phi - B(F(phi))) = {gap:.3e}");
    Ok(())
}
