mod common;

use approx::assert_abs_diff_eq;
use euler_poisson_path::convex::*;
use euler_poisson_path::grid::{make_grid, periodic_diff, ScalarField};
use euler_poisson_path::Error;
use proptest::prelude::*;

#[test]
fn legendre_of_half_square_is_half_square() {
    let f = LatticeFunction::from_fn(1, 81, -2.0, 0.05, |x| 0.5 * x[0] * x[0]);
    let star = legendre_transform(&f, SlopeWindow { lo: -1.0, hi: 1.0 });
    assert_eq!(star.n, 41);
    for k in 0..star.len() {
        let y = star.point(k)[0];
        assert_abs_diff_eq!(star.values[k], 0.5 * y * y, epsilon = 1e-12);
    }
}

#[test]
fn legendre_of_2d_quadratic() {
    let f = LatticeFunction::from_fn(2, 21, -1.0, 0.1, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
    let star = legendre_transform(&f, SlopeWindow { lo: -0.5, hi: 0.5 });
    for k in 0..star.len() {
        let y = star.point(k);
        assert_abs_diff_eq!(star.values[k], 0.5 * (y[0] * y[0] + y[1] * y[1]), epsilon = 1e-12);
    }
}

#[test]
fn hull_of_double_well_is_flat_between_the_wells() {
    let a = 0.5;
    let f = LatticeFunction::from_fn(1, 41, -1.0, 0.05, |x| (0.5 * (x[0] - a).powi(2)).min(0.5 * (x[0] + a).powi(2)));
    let hull = convex_hull(&f, SlopeWindow::default());
    for k in 0..f.len() {
        let x = f.point(k)[0];
        if x.abs() <= a {
            assert_abs_diff_eq!(hull.values[k], 0.0, epsilon = 1e-14);
        } else {
            assert_abs_diff_eq!(hull.values[k], f.values[k], epsilon = 1e-14);
        }
    }
}

#[test]
fn hull_of_convex_function_is_identity() {
    let f = LatticeFunction::from_fn(2, 9, -1.0, 0.25, |x| 0.5 * x[0] * x[0] + x[1] * x[1]);
    let hull = convex_hull(&f, SlopeWindow { lo: -4.0, hi: 4.0 });
    for (a, b) in hull.values.iter().zip(&f.values) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    }
}

#[test]
fn convexified_lift_satisfies_midpoint_inequality() {
    let g = make_grid(1, 32, 1.0, 4).unwrap();
    let phi = ScalarField::from_fn(g, |x| 0.3 * (6.0 * std::f64::consts::PI * x[0]).sin());
    let lift = LiftedPotential::lift(&phi, 0.0, 0.5);
    assert!(lift.midpoint_violation() > 1e-3);
    let c = lift.convexified(SlopeWindow::default());
    assert!(c.midpoint_violation() <= 1e-10);
    // the hull lies below the lift and touches it somewhere
    let gap: Vec<f64> = lift.values.iter().zip(&c.values).map(|(a, b)| a - b).collect();
    assert!(gap.iter().all(|&v| v >= -1e-14));
    assert!(gap.iter().any(|&v| v.abs() < 1e-14));
}

#[test]
fn lift_round_trips() {
    let g = make_grid(2, 6, 1.0, 4).unwrap();
    let phi = ScalarField::from_fn(g, |x| x[0] * 0.1 - x[1] * x[1]);
    let back = LiftedPotential::lift(&phi, 0.25, 1.0).unlift();
    for (a, b) in back.values.iter().zip(&phi.values) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-14);
    }
}

#[test]
fn hopf_lax_keeps_constants() {
    let g = make_grid(2, 8, 1.0, 2).unwrap();
    let c = ScalarField::constant(g, 1.7);
    for dt in [0.01, 0.3, 5.0] {
        for dir in [Direction::Forward, Direction::Backward] {
            let out = hopf_lax_step(&c, dt, dir).unwrap();
            assert!(out.values.iter().all(|v| (v - 1.7).abs() < 1e-15));
        }
    }
}

#[test]
fn hopf_lax_of_quadratic_is_moreau_envelope() {
    let g = make_grid(1, 64, 1.0, 2).unwrap();
    let phi = ScalarField::from_fn(g, |x| 0.5 * periodic_diff(x[0], 0.0).powi(2));
    let dt = 0.05;
    let out = hopf_lax_step(&phi, dt, Direction::Forward).unwrap();
    for k in 0..64 {
        let x = periodic_diff(k as f64 / 64.0, 0.0);
        if x.abs() < 0.3 {
            // the minimizer y = x / (1 + dt) sits on the lattice only approximately
            let exact = 0.5 * x * x / (1.0 + dt);
            assert!(out.values[k] >= exact - 1e-15);
            assert!(out.values[k] - exact <= (1.0 / 64.0f64).powi(2) * (1.0 + dt) / (8.0 * dt));
        }
    }
}

#[test]
fn hopf_lax_matches_brute_force_in_1d_and_2d() {
    for d in [1usize, 2] {
        let g = make_grid(d, 10, 1.0, 2).unwrap();
        let phi = ScalarField::from_fn(g, |x| (x.iter().sum::<f64>() * 7.3).sin() * 0.02 + x[0] * 0.01);
        for (dir, fwd) in [(Direction::Forward, true), (Direction::Backward, false)] {
            let out = hopf_lax_step(&phi, 0.2, dir).unwrap();
            let oracle = common::brute_hopf_lax(&phi.values, d, 10, 0.2, fwd);
            for (a, b) in out.values.iter().zip(&oracle) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-14);
            }
        }
    }
}

#[test]
fn forward_and_backward_steps_are_adjoint() {
    // backward after forward never exceeds the input, and forward-backward-forward is forward
    let g = make_grid(2, 12, 1.0, 2).unwrap();
    let dt = 0.1;
    let phi = ScalarField::from_fn(g, |x| 0.05 * (2.0 * std::f64::consts::PI * x[0]).cos() + 0.02 * (x[1] * 9.1).sin());
    let f = hopf_lax_step(&phi, dt, Direction::Forward).unwrap();
    let bf = hopf_lax_step(&f, dt, Direction::Backward).unwrap();
    for (a, b) in bf.values.iter().zip(&phi.values) {
        assert!(*a <= b + 1e-15);
    }
    let fbf = hopf_lax_step(&bf, dt, Direction::Forward).unwrap();
    for (a, b) in fbf.values.iter().zip(&f.values) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-14);
    }
}

#[test]
fn backward_inverts_forward_for_small_slopes() {
    // |grad phi| <= h / (2 dt) puts the node itself in the discrete subdifferential of the lift
    let g = make_grid(1, 64, 1.0, 2).unwrap();
    let dt = 0.1;
    let phi = ScalarField::from_fn(g, |x| 0.005 * (2.0 * std::f64::consts::PI * x[0]).cos());
    let back = hopf_lax_step(&hopf_lax_step(&phi, dt, Direction::Forward).unwrap(), dt, Direction::Backward).unwrap();
    for (a, b) in back.values.iter().zip(&phi.values) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }
}

#[test]
fn hopf_lax_rejects_nonpositive_dt() {
    let g = make_grid(1, 8, 1.0, 2).unwrap();
    assert!(matches!(hopf_lax_step(&ScalarField::zeros(g), 0.0, Direction::Forward), Err(Error::InvalidArgument(_))));
}

#[test]
fn fd_laplacian_is_exact_on_quadratics() {
    for (d, n) in [(1usize, 32usize), (2, 16), (3, 8)] {
        let g = make_grid(d, n, 1.0, 2).unwrap();
        let f = ScalarField::from_fn(g, |x| 0.5 * x.iter().map(|xi| periodic_diff(*xi, 0.5).powi(2)).sum::<f64>());
        for variant in [Stencil::Sphere, Stencil::Ball] {
            let lap = fd_laplacian(&f, 2.0 * g.h(), variant).unwrap();
            // away from the periodic kink at x = 0
            let centre = g.flat_index(&vec![(n / 2) as i64; d]);
            assert_abs_diff_eq!(lap.values[centre], d as f64, epsilon = 1e-9);
        }
    }
}

#[test]
fn fd_laplacian_converges_on_smooth_fields() {
    let errs: Vec<f64> = [32usize, 64, 128]
        .iter()
        .map(|&n| {
            let g = make_grid(1, n, 1.0, 2).unwrap();
            let w = 2.0 * std::f64::consts::PI;
            let f = ScalarField::from_fn(g, |x| (w * x[0]).sin());
            let lap = fd_laplacian(&f, 2.0 * g.h(), Stencil::Ball).unwrap();
            (0..n).map(|k| (lap.values[k] + w * w * (w * k as f64 / n as f64).sin()).abs()).fold(0.0, f64::max)
        })
        .collect();
    assert!(errs[1] < errs[0] / 3.0 && errs[2] < errs[1] / 3.0, "{errs:?}");
}

#[test]
fn fd_laplacian_rejects_small_ball() {
    let g = make_grid(1, 8, 1.0, 2).unwrap();
    assert!(matches!(fd_laplacian(&ScalarField::zeros(g), 0.5 * g.h(), Stencil::Ball), Err(Error::BallTooSmall { .. })));
}

proptest! {
    #[test]
    fn hull_is_below_and_convex(vals in proptest::collection::vec(-1.0f64..1.0, 12)) {
        let f = LatticeFunction { d: 1, n: 12, lo: 0.0, h: 0.1, values: vals };
        let hull = convex_hull(&f, SlopeWindow::default());
        for k in 0..12 {
            prop_assert!(hull.values[k] <= f.values[k] + 1e-14);
        }
        for k in 1..11 {
            prop_assert!(hull.values[k] <= 0.5 * (hull.values[k - 1] + hull.values[k + 1]) + 1e-12);
        }
    }

    #[test]
    fn forward_hopf_lax_never_exceeds_input(vals in proptest::collection::vec(-1.0f64..1.0, 16), dt in 0.01f64..2.0) {
        let g = make_grid(1, 16, 1.0, 2).unwrap();
        let phi = ScalarField::new(g, vals).unwrap();
        let out = hopf_lax_step(&phi, dt, Direction::Forward).unwrap();
        for (a, b) in out.values.iter().zip(&phi.values) {
            prop_assert!(a <= b);
        }
    }
}
