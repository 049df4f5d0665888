mod common;

use approx::assert_abs_diff_eq;
use euler_poisson_path::grid::make_grid;
use euler_poisson_path::kernel::{deposit, interpolate, Kernel};
use euler_poisson_path::paths::Segment;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_kicks(len: usize, count: usize, amp: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..len).map(|_| rng.gen_range(-amp..amp)).collect()).collect()
}

#[test]
fn zero_kicks_give_the_straight_line() {
    let g = make_grid(2, 8, 1.0, 4).unwrap();
    let zero = vec![0.0; 64];
    let kicks: Vec<&[f64]> = vec![&zero; 3];
    let seg = Segment { grid: &g, dt: 0.25, kicks: &kicks };
    let (a, b) = ([0.1, 0.2], [0.4, -0.1]);
    let mut xs = vec![0.3; 10];
    xs[..2].copy_from_slice(&a);
    xs[8..].copy_from_slice(&b);
    let cost = seg.solve(&mut xs);
    for i in 0..=4 {
        let s = i as f64 / 4.0;
        assert_abs_diff_eq!(xs[2 * i], 0.1 + 0.3 * s, epsilon = 1e-15);
        assert_abs_diff_eq!(xs[2 * i + 1], 0.2 - 0.3 * s, epsilon = 1e-15);
    }
    assert_abs_diff_eq!(cost, (0.09 + 0.09) / 2.0, epsilon = 1e-15);
}

#[test]
fn path_cost_agrees_with_independent_bspline_evaluation() {
    let g = make_grid(1, 16, 1.0, 5).unwrap();
    let kicks = random_kicks(16, 4, 0.05, 1);
    let refs: Vec<&[f64]> = kicks.iter().map(|k| k.as_slice()).collect();
    let seg = Segment { grid: &g, dt: 0.2, kicks: &refs };
    let xs = [0.05, 0.17, 0.33, 0.31, 0.52, 0.71];
    let oracle = common::path_cost_1d(&kicks, 0.2, xs[0], xs[5], &xs[1..5]);
    assert_abs_diff_eq!(seg.cost_of(&xs), oracle, epsilon = 1e-15);
}

#[test]
fn solved_paths_are_stationary() {
    for d in [1usize, 2] {
        let n = if d == 1 { 32 } else { 8 };
        let g = make_grid(d, n, 1.0, 4).unwrap();
        let kicks = random_kicks(g.num_nodes(), 3, 0.02, 2 + d as u64);
        let refs: Vec<&[f64]> = kicks.iter().map(|k| k.as_slice()).collect();
        let seg = Segment { grid: &g, dt: 0.25, kicks: &refs };
        let a = vec![0.1; d];
        let b = vec![0.45; d];
        let mut xs = seg.straight(&a, &b);
        seg.solve(&mut xs);
        // centered differences of the cost in every interior coordinate
        let eps = 1e-6;
        for r in d..4 * d {
            let mut p = xs.clone();
            p[r] += eps;
            let mut m = xs.clone();
            m[r] -= eps;
            let grad = (seg.cost_of(&p) - seg.cost_of(&m)) / (2.0 * eps);
            assert!(grad.abs() < 1e-8, "d = {d}, coordinate {r}: {grad}");
        }
    }
}

#[test]
fn newton_matches_brute_force_minimization() {
    let g = make_grid(1, 16, 1.0, 3).unwrap();
    let dt = g.dt();
    for seed in 0..3u64 {
        let kicks = random_kicks(16, 2, 0.03, 10 + seed);
        let refs: Vec<&[f64]> = kicks.iter().map(|k| k.as_slice()).collect();
        let seg = Segment { grid: &g, dt, kicks: &refs };
        let (x, y) = (0.125, 0.6875);
        let best = [-1.0, 0.0, 1.0]
            .iter()
            .map(|s| {
                let mut xs = seg.straight(&[x], &[y + s]);
                seg.solve(&mut xs)
            })
            .fold(f64::INFINITY, f64::min);
        let oracle = common::brute_force_cost_1d(&kicks, dt, x, y);
        assert_abs_diff_eq!(best, oracle, epsilon = 1e-12);
    }
}

#[test]
fn bspline_interpolation_matches_oracle() {
    let g = make_grid(1, 16, 1.0, 2).unwrap();
    let f = random_kicks(16, 1, 1.0, 5).remove(0);
    for x in [0.0, 0.013, 0.5, 0.97, 1.3] {
        let (v, _, _) = interpolate(&g, Kernel::CubicBSpline, &f, &[x]);
        assert_abs_diff_eq!(v, common::bspline_eval_1d(&f, x.rem_euclid(1.0)), epsilon = 1e-14);
    }
}

#[test]
fn interpolation_derivatives_match_finite_differences() {
    let g = make_grid(2, 8, 1.0, 2).unwrap();
    let f = random_kicks(64, 1, 1.0, 6).remove(0);
    let x = [0.31, 0.77];
    let (_, grad, hess) = interpolate(&g, Kernel::CubicBSpline, &f, &x);
    let eps = 1e-5;
    for a in 0..2 {
        let mut p = x;
        p[a] += eps;
        let mut m = x;
        m[a] -= eps;
        let (vp, gp, _) = interpolate(&g, Kernel::CubicBSpline, &f, &p);
        let (vm, gm, _) = interpolate(&g, Kernel::CubicBSpline, &f, &m);
        assert_abs_diff_eq!(grad[a], (vp - vm) / (2.0 * eps), epsilon = 1e-7);
        for b in 0..2 {
            assert_abs_diff_eq!(hess[b * 2 + a], (gp[b] - gm[b]) / (2.0 * eps), epsilon = 1e-5);
        }
    }
}

#[test]
fn deposit_and_interpolation_are_adjoint() {
    for kernel in [Kernel::CloudInCell, Kernel::CubicBSpline] {
        for d in [1usize, 2, 3] {
            let g = make_grid(d, 6, 1.0, 2).unwrap();
            let f = random_kicks(g.num_nodes(), 1, 1.0, 7).remove(0);
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            let pts: Vec<f64> = (0..5 * d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let masses: Vec<f64> = (0..5).map(|_| rng.gen_range(0.1..1.0)).collect();
            let rho = deposit(&g, kernel, &pts, &masses);
            let lhs: f64 = rho.iter().zip(&f).map(|(r, v)| r * v).sum::<f64>() * g.cell_volume();
            let rhs: f64 = (0..5).map(|q| masses[q] * interpolate(&g, kernel, &f, &pts[q * d..(q + 1) * d]).0).sum();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-13);
            assert_abs_diff_eq!(rho.iter().sum::<f64>() * g.cell_volume(), masses.iter().sum::<f64>(), epsilon = 1e-13);
        }
    }
}
