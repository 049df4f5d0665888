//! Minimizing discrete paths under the kicked action
//! `sum_legs |X_{i+1} - X_i|^2 / (2 dt) - dt * sum_i k_i(X_i)`,
//! with fixed endpoints and real (off-grid) intermediate positions.

use crate::grid::TorusGrid;
use crate::kernel::{interp_bspline_1d, interpolate, Kernel};

/// One segment of kicked legs: `kicks.len() + 1` legs of length `dt`.
/// Kick values are nodal fields interpolated with the cubic B-spline.
#[derive(Clone, Copy)]
pub struct Segment<'a> {
    pub grid: &'a TorusGrid,
    pub dt: f64,
    pub kicks: &'a [&'a [f64]],
}

const MAX_NEWTON: usize = 200;

impl<'a> Segment<'a> {
    pub fn legs(&self) -> usize {
        self.kicks.len() + 1
    }

    /// Cost of a given path `xs` (`legs + 1` points, `d` coordinates each).
    pub fn cost_of(&self, xs: &[f64]) -> f64 {
        let d = self.grid.d;
        let mut kin = 0.0;
        for i in 0..self.legs() {
            for a in 0..d {
                kin += (xs[(i + 1) * d + a] - xs[i * d + a]).powi(2);
            }
        }
        kin /= 2.0 * self.dt;
        let mut pot = 0.0;
        for (i, k) in self.kicks.iter().enumerate() {
            pot += self.kick_value(k, &xs[(i + 1) * d..(i + 2) * d]);
        }
        kin - self.dt * pot
    }

    fn kick_value(&self, k: &[f64], x: &[f64]) -> f64 {
        if self.grid.d == 1 {
            interp_bspline_1d(k, self.grid.h(), x[0]).0
        } else {
            interpolate(self.grid, Kernel::CubicBSpline, k, x).0
        }
    }

    /// Straight path between `a` and `b`.
    pub fn straight(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let d = self.grid.d;
        let m = self.legs();
        let mut xs = vec![0.0; (m + 1) * d];
        for i in 0..=m {
            let s = i as f64 / m as f64;
            for c in 0..d {
                xs[i * d + c] = a[c] + s * (b[c] - a[c]);
            }
        }
        xs
    }

    /// Newton on the discrete Euler-Lagrange equation starting from `xs`
    /// (endpoints held fixed). Returns the path cost.
    pub fn solve(&self, xs: &mut [f64]) -> f64 {
        if self.kicks.is_empty() || self.kicks.iter().all(|k| k.iter().all(|&v| v == 0.0)) {
            let d = self.grid.d;
            let m = self.legs();
            let a: Vec<f64> = xs[..d].to_vec();
            let b: Vec<f64> = xs[m * d..].to_vec();
            xs.copy_from_slice(&self.straight(&a, &b));
            return self.cost_of(xs);
        }
        if self.grid.d == 1 {
            self.solve_1d(xs)
        } else {
            self.solve_nd(xs)
        }
    }

    /// Damped Newton over the interior coordinates. `system(xs, mu)` returns the
    /// gradient and the step solving `(H + mu I) step = grad`. The shift `mu`
    /// grows whenever the step fails to decrease the cost, which keeps the
    /// iteration moving where the kicks make the Hessian indefinite.
    fn damped_newton(&self, xs: &mut [f64], system: impl Fn(&[f64], f64) -> Option<(Vec<f64>, Vec<f64>)>) -> f64 {
        let d = self.grid.d;
        let inner = d..d * (self.kicks.len() + 1);
        let mut cost = self.cost_of(xs);
        let mut mu = 0.0;
        for _ in 0..MAX_NEWTON {
            let Some((g, step)) = system(xs, mu) else { break };
            let smax = step.iter().fold(0.0f64, |a, s| a.max(s.abs()));
            if !smax.is_finite() {
                break;
            }
            if smax < 1e-15 {
                break;
            }
            let descent: f64 = g.iter().zip(&step).map(|(a, b)| a * b).sum();
            let old: Vec<f64> = xs[inner.clone()].to_vec();
            let mut lambda = 1.0;
            let mut accepted = false;
            if descent > 0.0 {
                while lambda >= 1.0 / 64.0 {
                    for (x, (o, s)) in xs[inner.clone()].iter_mut().zip(old.iter().zip(&step)) {
                        *x = o - lambda * s;
                    }
                    let c = self.cost_of(xs);
                    if c <= cost + 1e-15 * cost.abs().max(1.0) {
                        cost = c;
                        accepted = true;
                        break;
                    }
                    lambda *= 0.5;
                }
            }
            if !accepted {
                xs[inner.clone()].copy_from_slice(&old);
                mu = (4.0 * mu).max(1.0 / self.dt);
                continue;
            }
            if smax * lambda < 1e-15 && mu == 0.0 {
                break;
            }
            mu = if lambda == 1.0 && mu < 1e-3 / self.dt { 0.0 } else { 0.25 * mu };
        }
        cost
    }

    fn solve_1d(&self, xs: &mut [f64]) -> f64 {
        let m = self.kicks.len();
        let dt = self.dt;
        let h = self.grid.h();
        let off = -1.0 / dt;
        self.damped_newton(xs, |xs, mu| {
            let mut g = vec![0.0; m];
            let mut diag = vec![0.0; m];
            for i in 0..m {
                let (_, dk, d2k) = interp_bspline_1d(self.kicks[i], h, xs[i + 1]);
                g[i] = (2.0 * xs[i + 1] - xs[i] - xs[i + 2]) / dt - dt * dk;
                diag[i] = 2.0 / dt - dt * d2k + mu;
            }
            // Thomas algorithm for the tridiagonal Hessian
            let mut cp = vec![0.0; m];
            let mut dp = vec![0.0; m];
            cp[0] = off / diag[0];
            dp[0] = g[0] / diag[0];
            for i in 1..m {
                let den = diag[i] - off * cp[i - 1];
                cp[i] = off / den;
                dp[i] = (g[i] - off * dp[i - 1]) / den;
            }
            let mut step = vec![0.0; m];
            step[m - 1] = dp[m - 1];
            for i in (0..m - 1).rev() {
                step[i] = dp[i] - cp[i] * step[i + 1];
            }
            Some((g, step))
        })
    }

    fn solve_nd(&self, xs: &mut [f64]) -> f64 {
        let d = self.grid.d;
        let m = self.kicks.len();
        let dt = self.dt;
        let dim = m * d;
        self.damped_newton(xs, |xs, mu| {
            let mut g = vec![0.0; dim];
            let mut hmat = vec![0.0; dim * dim];
            for i in 0..m {
                let x = &xs[(i + 1) * d..(i + 2) * d];
                let (_, dk, d2k) = interpolate(self.grid, Kernel::CubicBSpline, self.kicks[i], x);
                for a in 0..d {
                    let r = i * d + a;
                    g[r] = (2.0 * xs[(i + 1) * d + a] - xs[i * d + a] - xs[(i + 2) * d + a]) / dt - dt * dk[a];
                    for b in 0..d {
                        hmat[r * dim + i * d + b] = -dt * d2k[a * d + b];
                    }
                    hmat[r * dim + r] += 2.0 / dt + mu;
                    if i > 0 {
                        hmat[r * dim + r - d] = -1.0 / dt;
                    }
                    if i + 1 < m {
                        hmat[r * dim + r + d] = -1.0 / dt;
                    }
                }
            }
            let step = solve_dense(hmat, g.clone(), dim)?;
            Some((g, step))
        })
    }
}

/// Gaussian elimination with partial pivoting.
pub(crate) fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        for r in col + 1..n {
            let f = a[r * n + col] / a[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    a[r * n + k] -= f * a[col * n + k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r * n + k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    Some(x)
}
