//! Exact transportation simplex (MODI pivoting) with a dual certificate.

use super::{Atom, CostTable, TransportPlan};
use crate::error::{Error, Result};
use crate::grid::{periodic_diff, DensityField};
use std::collections::VecDeque;

/// Largest number of (source, target) pairs solved exactly by default.
pub const LP_PAIR_GUARD: usize = 4096;

/// Optimal coupling with its dual certificate.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub plan: TransportPlan,
    pub cost: f64,
    /// Row potentials, feasible with `v`: `u_i + v_j <= c_ij`.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `cost - (sum a u + sum b v)`; nonnegative up to rounding.
    pub gap: f64,
}

/// Exact optimal coupling of the node masses of `rho0` and `rho1` under `cost`.
/// Plan atoms carry endpoint positions only (no intermediate backpointers).
pub fn kantorovich_lp(rho0: &DensityField, rho1: &DensityField, cost: &CostTable) -> Result<LpSolution> {
    kantorovich_lp_guarded(rho0, rho1, cost, LP_PAIR_GUARD)
}

pub fn kantorovich_lp_guarded(
    rho0: &DensityField,
    rho1: &DensityField,
    cost: &CostTable,
    guard: usize,
) -> Result<LpSolution> {
    let g = rho0.grid();
    if rho1.grid() != g {
        return Err(Error::GridMismatch("endpoint grids differ".into()));
    }
    let m = g.num_nodes();
    if m * m > guard {
        return Err(Error::GuardExceeded { pairs: m * m, guard });
    }
    if cost.rows != m || cost.cols != m {
        return Err(Error::SizeMismatch { expected: m * m, got: cost.rows * cost.cols });
    }
    let a = rho0.node_masses();
    let b = rho1.node_masses();
    let (flow, basis) = transport_simplex(&a, &b, &cost.values);
    let (u0, v) = potentials(m, m, &basis, &cost.values);
    // tighten u to the c-transform of v so the certificate is exactly feasible
    let u: Vec<f64> = (0..m)
        .map(|i| (0..m).map(|j| cost.values[i * m + j] - v[j]).fold(f64::INFINITY, f64::min).min(u0[i]))
        .collect();
    let mut atoms = Vec::new();
    let mut start = Vec::new();
    let mut end = Vec::new();
    let mut total = 0.0;
    for &(i, j) in &basis {
        let f = flow[i * m + j];
        if f > 0.0 {
            total += f * cost.values[i * m + j];
            atoms.push(Atom { source: i, target: j, mass: f });
            let x = g.coords(i);
            let y = g.coords(j);
            for c in 0..g.d {
                start.push(x[c]);
                end.push(x[c] + periodic_diff(y[c], x[c]));
            }
        }
    }
    // deterministic atom order
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by_key(|&k| (atoms[k].source, atoms[k].target));
    let d = g.d;
    let atoms_sorted: Vec<Atom> = order.iter().map(|&k| atoms[k].clone()).collect();
    let pick = |src: &[f64]| order.iter().flat_map(|&k| src[k * d..(k + 1) * d].to_vec()).collect::<Vec<f64>>();
    let (start, end) = (pick(&start), pick(&end));
    let dual: f64 = a.iter().zip(&u).map(|(x, y)| x * y).sum::<f64>() + b.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
    let plan = TransportPlan { grid: g, atoms: atoms_sorted, positions: vec![start, end] };
    Ok(LpSolution { plan, cost: total, u, v, gap: total - dual })
}

/// Transportation simplex on dense costs. Returns flows and the final basis.
pub(crate) fn transport_simplex(a: &[f64], b: &[f64], c: &[f64]) -> (Vec<f64>, Vec<(usize, usize)>) {
    let (m, n) = (a.len(), b.len());
    let mut flow = vec![0.0; m * n];
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(m + n - 1);
    let mut is_basic = vec![false; m * n];
    // northwest corner start with degenerate cells kept in the basis
    let (mut ra, mut rb) = (a.to_vec(), b.to_vec());
    let (mut i, mut j) = (0, 0);
    while i < m && j < n {
        let x = ra[i].min(rb[j]);
        flow[i * n + j] = x;
        basis.push((i, j));
        is_basic[i * n + j] = true;
        ra[i] -= x;
        rb[j] -= x;
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 {
            i += 1;
        } else if ra[i] <= rb[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    // residual rounding sits in the last basic cells; clean tiny negatives
    for f in flow.iter_mut() {
        if *f < 0.0 {
            *f = 0.0;
        }
    }
    let scale = c.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    let tol = 1e-13 * scale;
    let max_iter = 50 * (m + n) * (m + n) + 1000;
    let mut degenerate_run = 0usize;
    for _ in 0..max_iter {
        let (u, v) = potentials(m, n, &basis, c);
        // entering cell: most negative reduced cost, or the first negative one
        // (Bland) after a long run of degenerate pivots
        let bland = degenerate_run > m + n;
        let mut enter = None;
        let mut best = -tol;
        'scan: for i in 0..m {
            for j in 0..n {
                if is_basic[i * n + j] {
                    continue;
                }
                let r = c[i * n + j] - u[i] - v[j];
                if r < best {
                    best = r;
                    enter = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                }
            }
        }
        let Some((ei, ej)) = enter else { break };
        let cycle = tree_path(m, n, &basis, ei, ej);
        // cycle alternates: entering (+), then cells from column ej back to row ei
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (k, &(ci, cj)) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                let f = flow[ci * n + cj];
                let bi = basis.iter().position(|&p| p == (ci, cj)).unwrap();
                if f < theta || (f == theta && bi < leave) {
                    theta = f;
                    leave = bi;
                }
            }
        }
        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
        flow[ei * n + ej] += theta;
        for (k, &(ci, cj)) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                flow[ci * n + cj] -= theta;
            } else {
                flow[ci * n + cj] += theta;
            }
        }
        let (li, lj) = basis[leave];
        flow[li * n + lj] = 0.0;
        is_basic[li * n + lj] = false;
        basis[leave] = (ei, ej);
        is_basic[ei * n + ej] = true;
    }
    (flow, basis)
}

/// Solves `u_i + v_j = c_ij` on the basis tree with `u_0 = 0`.
fn potentials(m: usize, n: usize, basis: &[(usize, usize)], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n];
    for &(i, j) in basis {
        adj[i].push(m + j);
        adj[m + j].push(i);
    }
    let mut u = vec![f64::NAN; m];
    let mut v = vec![f64::NAN; n];
    let mut seen = vec![false; m + n];
    for root in 0..m + n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        if root < m {
            u[root] = 0.0;
        } else {
            v[root - m] = 0.0;
        }
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if seen[y] {
                    continue;
                }
                seen[y] = true;
                if x < m {
                    v[y - m] = c[x * n + (y - m)] - u[x];
                } else {
                    u[y] = c[y * n + (x - m)] - v[x - m];
                }
                queue.push_back(y);
            }
        }
    }
    (u, v)
}

/// Cells on the basis-tree path from column node `ej` to row node `ei`,
/// returned as the cycle opened by entering `(ei, ej)`: odd positions get `+`
/// and even positions get `-` when the entering cell is counted first.
fn tree_path(m: usize, n: usize, basis: &[(usize, usize)], ei: usize, ej: usize) -> Vec<(usize, usize)> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n];
    for &(i, j) in basis {
        adj[i].push(m + j);
        adj[m + j].push(i);
    }
    let start = m + ej;
    let goal = ei;
    let mut prev = vec![usize::MAX; m + n];
    prev[start] = start;
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        if x == goal {
            break;
        }
        for &y in &adj[x] {
            if prev[y] == usize::MAX {
                prev[y] = x;
                queue.push_back(y);
            }
        }
    }
    // walk back from row ei to column ej; first edge touches row ei
    let mut cells = Vec::new();
    let mut x = goal;
    while x != start {
        let p = prev[x];
        let cell = if x < m { (x, p - m) } else { (p, x - m) };
        cells.push(cell);
        x = p;
    }
    cells
}
