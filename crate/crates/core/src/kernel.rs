//! Particle-mesh kernels: cloud-in-cell and the periodic cubic B-spline.
//! Deposit and interpolation with the same kernel are adjoint.

use crate::grid::TorusGrid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    CloudInCell,
    CubicBSpline,
}

fn b3(u: f64) -> f64 {
    let a = u.abs();
    if a < 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        (2.0 - a).powi(3) / 6.0
    } else {
        0.0
    }
}

fn db3(u: f64) -> f64 {
    let a = u.abs();
    let s = u.signum();
    if a < 1.0 {
        s * (-2.0 * a + 1.5 * a * a)
    } else if a < 2.0 {
        -s * 0.5 * (2.0 - a).powi(2)
    } else {
        0.0
    }
}

fn d2b3(u: f64) -> f64 {
    let a = u.abs();
    if a < 1.0 {
        -2.0 + 3.0 * a
    } else if a < 2.0 {
        2.0 - a
    } else {
        0.0
    }
}

/// Per-axis weights: (node offset from floor, w, w', w'') in grid units.
fn axis_weights(kernel: Kernel, u: f64) -> (i64, [f64; 4], [f64; 4], [f64; 4], usize) {
    let j0 = u.floor();
    let t = u - j0;
    match kernel {
        Kernel::CloudInCell => (j0 as i64, [1.0 - t, t, 0.0, 0.0], [-1.0, 1.0, 0.0, 0.0], [0.0; 4], 2),
        Kernel::CubicBSpline => {
            let mut w = [0.0; 4];
            let mut dw = [0.0; 4];
            let mut d2w = [0.0; 4];
            for o in 0..4 {
                let r = t - (o as f64 - 1.0);
                w[o] = b3(r);
                dw[o] = db3(r);
                d2w[o] = d2b3(r);
            }
            (j0 as i64 - 1, w, dw, d2w, 4)
        }
    }
}

/// Adds `mass / h^d` spread by the kernel at `x` to `rho`.
pub fn deposit_point(grid: &TorusGrid, kernel: Kernel, x: &[f64], mass: f64, rho: &mut [f64]) {
    let h = grid.h();
    let d = grid.d;
    let per: Vec<_> = x.iter().map(|&xa| axis_weights(kernel, xa / h)).collect();
    let width = per[0].4;
    let scale = mass / grid.cell_volume();
    for combo in 0..width.pow(d as u32) {
        let mut rem = combo;
        let mut w = scale;
        let mut idx = vec![0i64; d];
        for a in (0..d).rev() {
            let o = rem % width;
            rem /= width;
            idx[a] = per[a].0 + o as i64;
            w *= per[a].1[o];
        }
        if w != 0.0 {
            rho[grid.flat_index(&idx)] += w;
        }
    }
}

/// Deposits point masses; the result has quadrature mass `sum(masses)`.
pub fn deposit(grid: &TorusGrid, kernel: Kernel, points: &[f64], masses: &[f64]) -> Vec<f64> {
    let d = grid.d;
    let mut rho = vec![0.0; grid.num_nodes()];
    for (q, &m) in masses.iter().enumerate() {
        deposit_point(grid, kernel, &points[q * d..(q + 1) * d], m, &mut rho);
    }
    rho
}

/// Interpolated value, gradient and Hessian (row-major `d x d`) of nodal values at `x`.
pub fn interpolate(grid: &TorusGrid, kernel: Kernel, values: &[f64], x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let h = grid.h();
    let d = grid.d;
    let per: Vec<_> = x.iter().map(|&xa| axis_weights(kernel, xa / h)).collect();
    let width = per[0].4;
    let mut val = 0.0;
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    let mut idx = vec![0i64; d];
    let mut os = vec![0usize; d];
    for combo in 0..width.pow(d as u32) {
        let mut rem = combo;
        for a in (0..d).rev() {
            os[a] = rem % width;
            rem /= width;
            idx[a] = per[a].0 + os[a] as i64;
        }
        let f = values[grid.flat_index(&idx)];
        if f == 0.0 {
            continue;
        }
        let w: Vec<f64> = (0..d).map(|a| per[a].1[os[a]]).collect();
        let dw: Vec<f64> = (0..d).map(|a| per[a].2[os[a]] / h).collect();
        let d2w: Vec<f64> = (0..d).map(|a| per[a].3[os[a]] / (h * h)).collect();
        let prod_except = |skip: &[usize]| -> f64 {
            (0..d).filter(|a| !skip.contains(a)).map(|a| w[a]).product()
        };
        val += f * prod_except(&[]);
        for a in 0..d {
            grad[a] += f * dw[a] * prod_except(&[a]);
            for b in 0..d {
                let v = if a == b { d2w[a] * prod_except(&[a]) } else { dw[a] * dw[b] * prod_except(&[a, b]) };
                hess[a * d + b] += f * v;
            }
        }
    }
    (val, grad, hess)
}

/// Fast 1-D cubic B-spline evaluation: value, first and second derivative.
#[inline]
pub(crate) fn interp_bspline_1d(values: &[f64], h: f64, x: f64) -> (f64, f64, f64) {
    let n = values.len() as i64;
    let u = x / h;
    let j0 = u.floor();
    let t = u - j0;
    let base = j0 as i64 - 1;
    let (mut p, mut dp, mut d2p) = (0.0, 0.0, 0.0);
    for o in 0..4 {
        let r = t - (o as f64 - 1.0);
        let f = values[(base + o).rem_euclid(n) as usize];
        p += f * b3(r);
        dp += f * db3(r);
        d2p += f * d2b3(r);
    }
    (p, dp / h, d2p / (h * h))
}
