//! Circular quantile (monotone) coupling of 1-D densities, exact W2 and
//! McCann interpolation.

use super::{kantorovich_lp, Atom, CostTable, TransportPlan};
use crate::error::{Error, Result};
use crate::grid::{DensityField, TorusGrid};
use crate::kernel::{deposit, Kernel};
use serde::{Deserialize, Serialize};

/// How nodal values are read as a measure on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureModel {
    /// Point mass `rho_k h` at each node.
    Atomic,
    /// Constant density `rho_k` on the cell `[x_k - h/2, x_k + h/2)`.
    Cellwise,
}

/// Cumulative masses of a 1-D density; `cum[k]` is the mass left of cell `k`.
struct Cdf {
    n: usize,
    h: f64,
    w: Vec<f64>,
    cum: Vec<f64>,
}

impl Cdf {
    fn new(rho: &DensityField) -> Self {
        let w = rho.node_masses();
        let mut cum = Vec::with_capacity(w.len() + 1);
        let mut s = 0.0;
        cum.push(0.0);
        for &m in &w {
            s += m;
            cum.push(s);
        }
        // unit mass exactly, so periodic extension is consistent
        let total = s;
        for c in cum.iter_mut() {
            *c /= total;
        }
        let w = w.iter().map(|m| m / total).collect();
        Self { n: rho.grid().n, h: rho.grid().h(), w, cum }
    }

    /// Cell containing mass coordinate `u` (extended periodically) and the wrap count.
    fn cell(&self, u: f64) -> (usize, i64) {
        let wrap = u.floor();
        let r = u - wrap;
        // last cell with cum[k] <= r and positive mass
        let mut k = match self.cum.binary_search_by(|c| c.total_cmp(&r)) {
            Ok(i) => i.min(self.n - 1),
            Err(i) => i.saturating_sub(1).min(self.n - 1),
        };
        while self.w[k] == 0.0 && k + 1 < self.n && self.cum[k + 1] <= r {
            k += 1;
        }
        while self.w[k] == 0.0 && k > 0 {
            k -= 1;
        }
        (k, wrap as i64)
    }

    /// Quantile position for mass coordinate `u`, given the cell from [`Cdf::cell`].
    fn quantile(&self, u: f64, cell: (usize, i64), model: MeasureModel) -> f64 {
        let (k, wrap) = cell;
        let x = match model {
            MeasureModel::Atomic => k as f64 * self.h,
            MeasureModel::Cellwise => {
                let frac = if self.w[k] > 0.0 { (u - wrap as f64 - self.cum[k]) / self.w[k] } else { 0.5 };
                (k as f64 - 0.5 + frac.clamp(0.0, 1.0)) * self.h
            }
        };
        x + wrap as f64
    }
}

/// Monotone coupling `m -> (X0(m), XT(m))` with `XT(m) = Q1(m - theta)`,
/// discretized into Gauss-Legendre atoms on every merged quantile piece.
#[derive(Debug, Clone)]
pub struct QuantileCoupling {
    pub theta: f64,
    pub model: MeasureModel,
    /// Atom mass coordinates, masses, source/target cells, start and end positions.
    pub m: Vec<f64>,
    pub masses: Vec<f64>,
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
}

const GL2: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];

impl QuantileCoupling {
    /// Builds the coupling for rotation offset `theta`.
    pub fn build(rho0: &DensityField, rho1: &DensityField, theta: f64, model: MeasureModel) -> Result<Self> {
        let g = rho0.grid();
        if g.d != 1 {
            return Err(Error::UnsupportedDimension(g.d));
        }
        let (c0, c1) = (Cdf::new(rho0), Cdf::new(rho1));
        let pieces = merged_pieces(&c0, &c1, theta);
        let mut out = Self {
            theta,
            model,
            m: Vec::new(),
            masses: Vec::new(),
            sources: Vec::new(),
            targets: Vec::new(),
            x0: Vec::new(),
            x1: Vec::new(),
        };
        for (lo, hi) in pieces {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let cell0 = c0.cell(mid);
            let cell1 = c1.cell(mid - theta);
            for &(s, w) in &GL2 {
                let u = mid + half * s;
                out.m.push(u);
                out.masses.push(half * w);
                out.sources.push(cell0.0);
                out.targets.push(cell1.0);
                out.x0.push(c0.quantile(u, cell0, model));
                out.x1.push(c1.quantile(u - theta, cell1, model));
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Exact `integral |XT - X0|^2 dm` (two-point Gauss is exact on each piece).
    pub fn quadratic_cost(&self) -> f64 {
        self.masses.iter().zip(self.x0.iter().zip(&self.x1)).map(|(w, (a, b))| w * (b - a).powi(2)).sum()
    }

    /// Transport plan with endpoint positions as backpointers at `t_0` and `t_N`.
    pub fn to_plan(&self, grid: TorusGrid) -> TransportPlan {
        let atoms = (0..self.len())
            .map(|q| Atom { source: self.sources[q], target: self.targets[q], mass: self.masses[q] })
            .collect();
        TransportPlan { grid, atoms, positions: vec![self.x0.clone(), self.x1.clone()] }
    }
}

/// Merged breakpoints of the source CDF and the shifted target CDF on `[0, 1]`.
fn merged_pieces(c0: &Cdf, c1: &Cdf, theta: f64) -> Vec<(f64, f64)> {
    let mut bps: Vec<f64> = c0.cum.clone();
    for shift in -2..=2 {
        for &c in &c1.cum {
            let b = c + theta + shift as f64;
            if b > 0.0 && b < 1.0 {
                bps.push(b);
            }
        }
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    bps.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect()
}

/// Golden-section minimization of a unimodal function on `[a, b]`; returns the
/// midpoint of the final bracket.
pub(crate) fn golden_min(mut a: f64, mut b: f64, iters: usize, f: impl Fn(f64) -> f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if b - a < 1e-16 {
            break;
        }
    }
    0.5 * (a + b)
}

/// Rotation offset minimizing the quadratic cost, centered in any flat optimum.
pub(crate) fn optimal_theta(rho0: &DensityField, rho1: &DensityField, model: MeasureModel) -> Result<f64> {
    let cost = |t: f64| QuantileCoupling::build(rho0, rho1, t, model).map(|q| q.quadratic_cost()).unwrap_or(f64::INFINITY);
    let t0 = golden_min(-1.0, 1.0, 200, cost);
    let c0 = cost(t0);
    let tol = 1e-13 * c0.max(1e-300);
    let flat_edge = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if cost(mid) <= c0 + tol {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let lo = flat_edge(t0, t0 - 1.0);
    let hi = flat_edge(t0, t0 + 1.0);
    Ok(0.5 * (lo + hi))
}

/// Squared Wasserstein distance on the circle by circular CDF inversion,
/// minimizing over the rotation offset.
pub fn w2_exact_1d(rho0: &DensityField, rho1: &DensityField, model: MeasureModel) -> Result<f64> {
    if rho0.grid().d != 1 {
        return Err(Error::UnsupportedDimension(rho0.grid().d));
    }
    if rho1.grid() != rho0.grid() {
        return Err(Error::GridMismatch("endpoint grids differ".into()));
    }
    let theta = optimal_theta(rho0, rho1, model)?;
    Ok(QuantileCoupling::build(rho0, rho1, theta, model)?.quadratic_cost())
}

/// Displacement interpolant at fraction `t`. In 1-D the cellwise quantile
/// coupling is pushed forward exactly and averaged over cells; in higher
/// dimensions the LP plan is pushed forward by cloud-in-cell.
pub fn mccann_interpolate(rho0: &DensityField, rho1: &DensityField, t: f64) -> Result<DensityField> {
    let g = rho0.grid();
    if rho1.grid() != g {
        return Err(Error::GridMismatch("endpoint grids differ".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("interpolation fraction {t} outside [0, 1]")));
    }
    if g.d == 1 {
        let theta = optimal_theta(rho0, rho1, MeasureModel::Cellwise)?;
        let (c0, c1) = (Cdf::new(rho0), Cdf::new(rho1));
        let mut cells = vec![0.0; g.n];
        for (lo, hi) in merged_pieces(&c0, &c1, theta) {
            let mid = 0.5 * (lo + hi);
            let (k0, k1) = (c0.cell(mid), c1.cell(mid - theta));
            let at = |u: f64| {
                let a = c0.quantile(u, k0, MeasureModel::Cellwise);
                let b = c1.quantile(u - theta, k1, MeasureModel::Cellwise);
                (1.0 - t) * a + t * b
            };
            spread_interval(&mut cells, g.h(), at(lo), at(hi), hi - lo);
        }
        let values = cells.iter().map(|m| m / g.h()).collect();
        return Ok(DensityField::from_deposit(g, values));
    }
    let lp = kantorovich_lp(rho0, rho1, &CostTable::quadratic(&g, 1.0))?;
    let plan = &lp.plan;
    let pts: Vec<f64> = plan.positions[0]
        .iter()
        .zip(&plan.positions[1])
        .map(|(a, b)| ((1.0 - t) * a + t * b).rem_euclid(1.0))
        .collect();
    Ok(DensityField::from_deposit(g, deposit(&g, Kernel::CloudInCell, &pts, &plan.masses())))
}

/// Adds `mass` spread uniformly over `[a, b]` (mod 1) to cell masses.
/// Cells are `[(k - 1/2) h, (k + 1/2) h)`.
fn spread_interval(cells: &mut [f64], h: f64, a: f64, b: f64, mass: f64) {
    let n = cells.len() as i64;
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let len = b - a;
    if len <= 1e-15 * h {
        let k = ((0.5 * (a + b)) / h + 0.5).floor() as i64;
        cells[k.rem_euclid(n) as usize] += mass;
        return;
    }
    let first = (a / h + 0.5).floor() as i64;
    let last = (b / h + 0.5).floor() as i64;
    for k in first..=last {
        let lo = ((k as f64 - 0.5) * h).max(a);
        let hi = ((k as f64 + 0.5) * h).min(b);
        if hi > lo {
            cells[k.rem_euclid(n) as usize] += mass * (hi - lo) / len;
        }
    }
}
