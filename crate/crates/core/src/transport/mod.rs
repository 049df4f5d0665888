//! Optimal transport on the torus: cost tables, exact LP coupling, 1-D
//! quantile coupling, McCann interpolation, the kicked-cost lattice DP and
//! mass-conserving push-forward.

mod dp;
mod lp;
mod quantile;

pub use dp::{generalized_cost_dp, LatticeCost};
pub use lp::{kantorovich_lp, kantorovich_lp_guarded, LpSolution, LP_PAIR_GUARD};
pub use quantile::{mccann_interpolate, w2_exact_1d, MeasureModel, QuantileCoupling};
pub(crate) use quantile::golden_min;

/// Rotation offset of the optimal cellwise quantile coupling.
pub(crate) fn quantile_theta(rho0: &DensityField, rho1: &DensityField) -> Result<f64> {
    quantile::optimal_theta(rho0, rho1, MeasureModel::Cellwise)
}

use crate::error::{Error, Result};
use crate::grid::{periodic_diff, DensityField, ScalarField, TorusGrid, VectorField};
use crate::kernel::{deposit, Kernel};
use std::io::Write;

/// Cost over (source node, target node) pairs, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    /// Number of legs the cost spans.
    pub legs: usize,
}

impl CostTable {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    /// Pure quadratic cost `d_per(x,y)^2 / (2T)` between grid nodes.
    pub fn quadratic(grid: &TorusGrid, horizon: f64) -> Self {
        let m = grid.num_nodes();
        let pts: Vec<Vec<f64>> = (0..m).map(|k| grid.coords(k)).collect();
        let mut values = Vec::with_capacity(m * m);
        for x in &pts {
            for y in &pts {
                values.push(sq_dist_per(x, y) / (2.0 * horizon));
            }
        }
        Self { rows: m, cols: m, values, legs: 1 }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }
}

/// Squared nearest-image distance.
pub fn sq_dist_per(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| periodic_diff(*a, *b).powi(2)).sum()
}

/// One coupling atom: mass moved from `source` to `target` node cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Coupling between endpoint densities. `positions[i]` holds the position of
/// every atom at time `t_i` (atom-major, `d` coordinates each, unwrapped so
/// consecutive positions differ by the actual leg displacement).
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub grid: TorusGrid,
    pub atoms: Vec<Atom>,
    pub positions: Vec<Vec<f64>>,
}

impl TransportPlan {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.mass).collect()
    }

    pub fn has_backpointers(&self) -> bool {
        self.positions.len() == self.grid.steps + 1
            && self.positions.iter().all(|p| p.len() == self.atoms.len() * self.grid.d)
    }

    /// Row sums (per source node) and column sums (per target node).
    pub fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.grid.num_nodes();
        let mut rows = vec![0.0; m];
        let mut cols = vec![0.0; m];
        for a in &self.atoms {
            rows[a.source] += a.mass;
            cols[a.target] += a.mass;
        }
        (rows, cols)
    }

    /// Writes `source,target,weight` triples aggregated per node pair, sorted.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut agg: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
        for a in &self.atoms {
            *agg.entry((a.source, a.target)).or_insert(0.0) += a.mass;
        }
        writeln!(w, "source,target,weight")?;
        for ((s, t), m) in agg {
            writeln!(w, "{s},{t},{m:e}")?;
        }
        Ok(())
    }
}

/// Cloud-in-cell push-forward of `rho` through nodal map values.
pub fn pushforward(rho: &DensityField, map_values: &VectorField) -> Result<DensityField> {
    let g = rho.grid();
    if map_values.grid != g {
        return Err(Error::GridMismatch("map and density grids differ".into()));
    }
    let m = g.num_nodes();
    let mut pts = Vec::with_capacity(m * g.d);
    for k in 0..m {
        for c in &map_values.components {
            pts.push(c.values[k].rem_euclid(1.0));
        }
    }
    let values = deposit(&g, Kernel::CloudInCell, &pts, &rho.node_masses());
    Ok(DensityField::from_deposit(g, values))
}

/// L1 distance `integral |a - b|` between two fields on the same grid.
pub fn l1_distance(a: &ScalarField, b: &ScalarField) -> f64 {
    let h = a.grid.cell_volume();
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum::<f64>() * h
}
