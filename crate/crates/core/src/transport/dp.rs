//! Kicked generalized cost on a (refined) lattice by backward value iteration,
//! with argmin backpointers for every intermediate time.

use super::CostTable;
use crate::error::{Error, Result};
use crate::grid::{periodic_diff, TorusGrid};
use crate::reconstruction::KickSet;

/// Generalized cost table with lattice backpointers.
#[derive(Debug, Clone)]
pub struct LatticeCost {
    pub grid: TorusGrid,
    /// Lattice refinement: intermediate positions live on spacing `h / refine`.
    pub refine: usize,
    pub table: CostTable,
    /// `next[y][i][z]`: fine point at `t_{i+1}` after fine point `z` at `t_i`
    /// on the optimal path to target node `y`, for `i = 1..N-1` (index `i - 1`).
    next: Vec<Vec<Vec<usize>>>,
    /// `first[x * m + y]`: fine point at `t_1` on the optimal path from `x`.
    first: Vec<usize>,
}

/// Fine lattice with `n * refine` points per axis.
struct Fine {
    per_axis: usize,
    pts: Vec<Vec<f64>>,
}

impl Fine {
    fn new(grid: &TorusGrid, refine: usize) -> Self {
        let per_axis = grid.n * refine;
        let h = 1.0 / per_axis as f64;
        let total = per_axis.pow(grid.d as u32);
        let pts = (0..total)
            .map(|mut k| {
                let mut p = vec![0.0; grid.d];
                for a in (0..grid.d).rev() {
                    p[a] = (k % per_axis) as f64 * h;
                    k /= per_axis;
                }
                p
            })
            .collect();
        Self { per_axis, pts }
    }

    fn of_node(&self, grid: &TorusGrid, node: usize, refine: usize) -> usize {
        grid.multi_index(node).iter().fold(0, |acc, &i| acc * self.per_axis + i * refine)
    }

    fn sq(&self, a: usize, b: usize) -> f64 {
        self.pts[a].iter().zip(&self.pts[b]).map(|(x, y)| periodic_diff(*x, *y).powi(2)).sum()
    }
}

/// Multilinear interpolation of nodal values at a point.
fn linear_interp(grid: &TorusGrid, values: &[f64], x: &[f64]) -> f64 {
    let h = grid.h();
    let d = grid.d;
    let mut acc = 0.0;
    for combo in 0..(1usize << d) {
        let mut w = 1.0;
        let mut idx = vec![0i64; d];
        for a in 0..d {
            let u = x[a] / h;
            let j0 = u.floor();
            let t = u - j0;
            let bit = (combo >> a) & 1;
            idx[a] = j0 as i64 + bit as i64;
            w *= if bit == 1 { t } else { 1.0 - t };
        }
        if w != 0.0 {
            acc += w * values[grid.flat_index(&idx)];
        }
    }
    acc
}

/// Cost `c(x, y) = min over lattice paths of sum |dX|^2 / (2 dt) - dt sum_i k_i(X_i)`
/// between grid nodes, with intermediate positions on a lattice refined by
/// `refine` (kicks interpolated multilinearly). `refine` a multiple of `N`
/// makes the zero-kick cost exactly `d_per^2 / (2T)`.
pub fn generalized_cost_dp(kicks: &KickSet, grid: &TorusGrid, refine: usize) -> Result<LatticeCost> {
    if refine == 0 {
        return Err(Error::InvalidArgument("refine must be at least 1".into()));
    }
    if kicks.grid() != *grid {
        return Err(Error::GridMismatch("kick grid differs from cost grid".into()));
    }
    let steps = grid.steps;
    let dt = grid.dt();
    let fine = Fine::new(grid, refine);
    let nf = fine.pts.len();
    let m = grid.num_nodes();
    // kick values on the fine lattice, per interior time
    let kf: Vec<Vec<f64>> =
        (1..steps).map(|i| fine.pts.iter().map(|p| linear_interp(grid, &kicks.kick_field(i), p)).collect()).collect();
    let mut next = Vec::with_capacity(m);
    let mut first = vec![0usize; m * m];
    let mut values = vec![0.0; m * m];
    for y in 0..m {
        let yf = fine.of_node(grid, y, refine);
        // value at t_{N-1}: one leg to y, minus the kick at t_{N-1}
        let mut v: Vec<f64> = (0..nf).map(|z| fine.sq(z, yf) / (2.0 * dt) - dt * kf[steps - 2][z]).collect();
        let mut col_next = vec![vec![yf; nf]; steps - 1];
        for i in (1..steps - 1).rev() {
            let mut nv = vec![0.0; nf];
            for z in 0..nf {
                let (mut best, mut arg) = (f64::INFINITY, 0);
                for (w, vw) in v.iter().enumerate() {
                    let c = vw + fine.sq(z, w) / (2.0 * dt);
                    if c < best {
                        best = c;
                        arg = w;
                    }
                }
                nv[z] = best - dt * kf[i - 1][z];
                col_next[i - 1][z] = arg;
            }
            v = nv;
        }
        for x in 0..m {
            let xf = fine.of_node(grid, x, refine);
            let (mut best, mut arg) = (f64::INFINITY, 0);
            for (w, vw) in v.iter().enumerate() {
                let c = vw + fine.sq(xf, w) / (2.0 * dt);
                if c < best {
                    best = c;
                    arg = w;
                }
            }
            values[x * m + y] = best;
            first[x * m + y] = arg;
        }
        next.push(col_next);
    }
    Ok(LatticeCost {
        grid: *grid,
        refine,
        table: CostTable { rows: m, cols: m, values, legs: steps },
        next,
        first,
    })
}

impl LatticeCost {
    /// Optimal lattice path from node `x` to node `y` as unwrapped positions,
    /// `(N + 1) * d` values.
    pub fn path(&self, x: usize, y: usize) -> Vec<f64> {
        let g = &self.grid;
        let m = g.num_nodes();
        let fine = Fine::new(g, self.refine);
        let d = g.d;
        let mut out = g.coords(x);
        let mut cur = fine.of_node(g, x, self.refine);
        let mut nxt = self.first[x * m + y];
        for i in 1..=g.steps {
            let prev: Vec<f64> = out[(i - 1) * d..i * d].to_vec();
            for a in 0..d {
                out.push(prev[a] + periodic_diff(fine.pts[nxt][a], fine.pts[cur][a]));
            }
            cur = nxt;
            if i < g.steps {
                nxt = self.next[y][i - 1][cur];
            }
        }
        out
    }
}
