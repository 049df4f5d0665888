//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Dense two-phase simplex for `min c.x  s.t.  A x = b, x >= 0` with Bland's rule.
/// Returns the optimal value.
pub fn dense_simplex(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> f64 {
    let m = a.len();
    let n = c.len();
    // tableau with artificials: columns 0..n real, n..n+m artificial, last = rhs
    let w = n + m + 1;
    let mut t = vec![vec![0.0; w]; m];
    for i in 0..m {
        let sgn = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sgn * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][w - 1] = sgn * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let phase1: Vec<f64> = (0..n + m).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    run_simplex(&mut t, &mut basis, &phase1, n + m);
    // drive artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }
    let mut cost2 = c.to_vec();
    cost2.extend(vec![1e30; m]);
    // forbid artificial columns in phase two
    for row in t.iter_mut() {
        for j in n..n + m {
            row[j] = 0.0;
        }
    }
    run_simplex(&mut t, &mut basis, &cost2, n);
    (0..m).map(|i| if basis[i] < n { c[basis[i]] * t[i][w - 1] } else { 0.0 }).sum()
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, col: usize) {
    let w = t[0].len();
    let p = t[r][col];
    for j in 0..w {
        t[r][j] /= p;
    }
    for i in 0..t.len() {
        if i != r {
            let f = t[i][col];
            if f != 0.0 {
                for j in 0..w {
                    t[i][j] -= f * t[r][j];
                }
            }
        }
    }
    basis[r] = col;
}

fn run_simplex(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], ncols: usize) {
    let m = t.len();
    let w = t[0].len();
    loop {
        // reduced costs c_j - c_B B^-1 A_j
        let mut enter = None;
        for j in 0..ncols {
            if basis.contains(&j) {
                continue;
            }
            let rc = cost[j] - (0..m).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>();
            if rc < -1e-12 {
                enter = Some(j);
                break;
            }
        }
        let Some(col) = enter else { return };
        let mut best: Option<(f64, usize)> = None;
        for i in 0..m {
            if t[i][col] > 1e-12 {
                let ratio = t[i][w - 1] / t[i][col];
                match best {
                    None => best = Some((ratio, i)),
                    Some((r, bi)) if ratio < r - 1e-15 || ((ratio - r).abs() <= 1e-15 && basis[i] < basis[bi]) => {
                        best = Some((ratio, i))
                    }
                    _ => {}
                }
            }
        }
        let Some((_, row)) = best else { panic!("unbounded LP") };
        pivot(t, basis, row, col);
    }
}

/// Transportation LP `min sum c_ij pi_ij` with row sums `a` and column sums `b`.
pub fn transport_lp(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..m {
        let mut r = vec![0.0; m * n];
        for j in 0..n {
            r[i * n + j] = 1.0;
        }
        rows.push(r);
        rhs.push(a[i]);
    }
    // last column constraint is implied by mass balance
    for j in 0..n - 1 {
        let mut r = vec![0.0; m * n];
        for i in 0..m {
            r[i * n + j] = 1.0;
        }
        rows.push(r);
        rhs.push(b[j]);
    }
    dense_simplex(&rows, &rhs, c)
}

/// All permutations of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Cubic B-spline `B3(u)`.
pub fn b3(u: f64) -> f64 {
    let a = u.abs();
    if a < 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        (2.0 - a).powi(3) / 6.0
    } else {
        0.0
    }
}

/// Periodic 1-D cubic B-spline evaluation `sum_j f_j B3(x/h - j)`.
pub fn bspline_eval_1d(f: &[f64], x: f64) -> f64 {
    let n = f.len() as i64;
    let u = x * n as f64;
    let j0 = u.floor() as i64;
    (j0 - 2..=j0 + 2).map(|j| f[j.rem_euclid(n) as usize] * b3(u - j as f64)).sum()
}

/// Naive 1-D DFT Poisson solve of `p'' = rho - 1` (mean-zero), all modes kept.
pub fn naive_poisson_1d(rho: &[f64]) -> Vec<f64> {
    let n = rho.len();
    let mut p = vec![0.0; n];
    for k in 1..n {
        let kk = if 2 * k <= n { k as f64 } else { k as f64 - n as f64 };
        let (mut re, mut im) = (0.0, 0.0);
        for (j, r) in rho.iter().enumerate() {
            let a = -2.0 * PI * (k * j) as f64 / n as f64;
            re += (r - 1.0) * a.cos();
            im += (r - 1.0) * a.sin();
        }
        let s = -1.0 / (2.0 * PI * kk).powi(2);
        for (j, pj) in p.iter_mut().enumerate() {
            let a = 2.0 * PI * (k * j) as f64 / n as f64;
            *pj += s * (re * a.cos() - im * a.sin()) / n as f64;
        }
    }
    p
}

/// `-1/2 * integral p p''` with the naive DFT (1-D).
pub fn naive_dirichlet_1d(p: &[f64]) -> f64 {
    let n = p.len();
    let mut e = 0.0;
    for k in 1..n {
        let kk = if 2 * k <= n { k as f64 } else { k as f64 - n as f64 };
        let (mut re, mut im) = (0.0, 0.0);
        for (j, v) in p.iter().enumerate() {
            let a = -2.0 * PI * (k * j) as f64 / n as f64;
            re += v * a.cos();
            im += v * a.sin();
        }
        e += (2.0 * PI * kk).powi(2) * (re * re + im * im);
    }
    0.5 * e / (n as f64 * n as f64)
}

/// Kicked 1-D path cost with fixed endpoints `x`, `y` and interior points `z`.
pub fn path_cost_1d(kicks: &[Vec<f64>], dt: f64, x: f64, y: f64, z: &[f64]) -> f64 {
    let mut pts = vec![x];
    pts.extend_from_slice(z);
    pts.push(y);
    let kin: f64 = pts.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (2.0 * dt);
    let pot: f64 = z.iter().zip(kicks).map(|(zi, k)| bspline_eval_1d(k, *zi)).sum();
    kin - dt * pot
}

/// Minimal kicked 1-D path cost by grid search around the straight line over
/// three images of `y`, then compass search down to `1e-13`.
pub fn brute_force_cost_1d(kicks: &[Vec<f64>], dt: f64, x: f64, y: f64) -> f64 {
    let m = kicks.len();
    let mut best = f64::INFINITY;
    for shift in [-1.0, 0.0, 1.0] {
        let yy = y + shift;
        let line: Vec<f64> = (1..=m).map(|i| x + (yy - x) * i as f64 / (m + 1) as f64).collect();
        // coarse grid over +-0.1 per interior point
        let steps = 20i64;
        let mut z = line.clone();
        let mut cur = path_cost_1d(kicks, dt, x, yy, &z);
        let total = (2 * steps + 1).pow(m as u32);
        for code in 0..total {
            let mut c = code;
            let cand: Vec<f64> = (0..m)
                .map(|i| {
                    let o = (c % (2 * steps + 1)) - steps;
                    c /= 2 * steps + 1;
                    line[i] + 0.1 * o as f64 / steps as f64
                })
                .collect();
            let v = path_cost_1d(kicks, dt, x, yy, &cand);
            if v < cur {
                cur = v;
                z = cand;
            }
        }
        let mut step = 0.01;
        while step > 1e-13 {
            let mut improved = false;
            for i in 0..m {
                for s in [-step, step] {
                    let mut c = z.clone();
                    c[i] += s;
                    let v = path_cost_1d(kicks, dt, x, yy, &c);
                    if v < cur {
                        cur = v;
                        z = c;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.min(cur);
    }
    best
}

/// Brute-force forward Hopf-Lax over all nodes (any d), periodic distance.
pub fn brute_hopf_lax(values: &[f64], d: usize, n: usize, dt: f64, forward: bool) -> Vec<f64> {
    let m = n.pow(d as u32);
    let coord = |mut k: usize| {
        let mut c = vec![0.0; d];
        for a in (0..d).rev() {
            c[a] = (k % n) as f64 / n as f64;
            k /= n;
        }
        c
    };
    let pts: Vec<Vec<f64>> = (0..m).map(coord).collect();
    (0..m)
        .map(|x| {
            let mut best = if forward { f64::INFINITY } else { f64::NEG_INFINITY };
            for y in 0..m {
                let d2: f64 = pts[x]
                    .iter()
                    .zip(&pts[y])
                    .map(|(a, b)| {
                        let t = (a - b).rem_euclid(1.0);
                        t.min(1.0 - t).powi(2)
                    })
                    .sum();
                if forward {
                    best = best.min(values[y] + d2 / (2.0 * dt));
                } else {
                    best = best.max(values[y] - d2 / (2.0 * dt));
                }
            }
            best
        })
        .collect()
}

/// Support-weighted L1 distance `h^d sum |a - b|`.
pub fn l1(a: &[f64], b: &[f64], cell: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * cell
}
