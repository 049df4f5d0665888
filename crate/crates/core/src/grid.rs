//! Periodic uniform grid on the unit torus and the fields sampled on it.

use crate::error::{Error, Result};
use crate::sum::pairwise_sum;
use serde::{Deserialize, Serialize};

/// Uniform grid with `n` nodes per axis on the unit torus in `d` dimensions,
/// together with the time discretization `t_i = i T / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub d: usize,
    pub n: usize,
    pub t_final: f64,
    pub steps: usize,
}

/// Builds a grid, rejecting degenerate or overflowing sizes.
pub fn make_grid(d: usize, n: usize, t_final: f64, steps: usize) -> Result<TorusGrid> {
    if d == 0 {
        return Err(Error::InvalidGrid("dimension must be at least 1".into()));
    }
    if n < 2 {
        return Err(Error::InvalidGrid(format!("n = {n}, need n >= 2")));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidGrid(format!("T = {t_final}, need T > 0")));
    }
    if steps < 2 {
        return Err(Error::InvalidGrid(format!("N = {steps}, need N >= 2")));
    }
    let mut total: usize = 1;
    for _ in 0..d {
        total = total
            .checked_mul(n)
            .ok_or_else(|| Error::InvalidGrid(format!("n^d overflows for n = {n}, d = {d}")))?;
    }
    if total > (1 << 28) {
        return Err(Error::InvalidGrid(format!("{total} nodes is too large")));
    }
    Ok(TorusGrid { d, n, t_final, steps })
}

impl TorusGrid {
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.d as i32)
    }

    pub fn num_nodes(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.t_final
        } else {
            i as f64 * self.dt()
        }
    }

    /// Interior kick times `t_1 .. t_{N-1}`.
    pub fn kick_times(&self) -> Vec<f64> {
        (1..self.steps).map(|i| self.time(i)).collect()
    }

    /// Multi-index of a row-major node index; axis 0 varies slowest.
    pub fn multi_index(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.d];
        for a in (0..self.d).rev() {
            idx[a] = k % self.n;
            k /= self.n;
        }
        idx
    }

    /// Row-major node index of a multi-index, wrapping each component.
    pub fn flat_index(&self, idx: &[i64]) -> usize {
        let n = self.n as i64;
        idx.iter().fold(0usize, |acc, &i| acc * self.n + i.rem_euclid(n) as usize)
    }

    /// Coordinates `k h` of a node.
    pub fn coords(&self, k: usize) -> Vec<f64> {
        self.multi_index(k).into_iter().map(|i| i as f64 * self.h()).collect()
    }

    /// Same spatial grid and time discretization.
    pub fn same_as(&self, other: &TorusGrid) -> bool {
        self == other
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_nodes() {
            return Err(Error::SizeMismatch { expected: self.num_nodes(), got: len });
        }
        Ok(())
    }
}

/// Nearest-image signed difference `a - b` on the unit circle, in `[-1/2, 1/2)`.
pub fn periodic_diff(a: f64, b: f64) -> f64 {
    let r = a - b;
    r - (r + 0.5).floor()
}

/// Real values at every grid node, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: TorusGrid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, values: vec![0.0; grid.num_nodes()] }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.num_nodes()] }
    }

    /// Samples `f` at node coordinates.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.num_nodes()).map(|k| f(&grid.coords(k))).collect();
        Self { grid, values }
    }

    /// Cyclic shift by `s` nodes along `axis`.
    pub fn shifted(&self, axis: usize, s: i64) -> Self {
        let g = self.grid;
        let values = (0..g.num_nodes())
            .map(|k| {
                let mut idx: Vec<i64> = g.multi_index(k).into_iter().map(|i| i as i64).collect();
                idx[axis] -= s;
                self.values[g.flat_index(&idx)]
            })
            .collect();
        Self { grid: g, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Oscillation `max - min`.
    pub fn osc(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }
}

/// Trapezoid quadrature `h^d * sum f` over the torus.
pub fn integrate(f: &ScalarField) -> f64 {
    f.grid.cell_volume() * pairwise_sum(&f.values)
}

/// Nonnegative unit-mass density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    field: ScalarField,
}

impl DensityField {
    pub fn grid(&self) -> TorusGrid {
        self.field.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.field.values
    }

    pub fn as_scalar(&self) -> &ScalarField {
        &self.field
    }

    pub fn into_scalar(self) -> ScalarField {
        self.field
    }

    /// Node masses `rho_k h^d`.
    pub fn node_masses(&self) -> Vec<f64> {
        let w = self.grid().cell_volume();
        self.values().iter().map(|r| r * w).collect()
    }

    pub fn uniform(grid: TorusGrid) -> Self {
        Self { field: ScalarField::constant(grid, 1.0) }
    }

    /// Wraps values already known to be a valid density, checking the invariants.
    pub fn from_values(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        let field = ScalarField::new(grid, values)?;
        check_nonnegative(&field)?;
        let mass = integrate(&field);
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("density mass {mass} is not 1")));
        }
        Ok(Self { field })
    }

    /// Wraps values without checking mass; used for densities produced by exact
    /// mass-conserving deposits.
    pub(crate) fn from_deposit(grid: TorusGrid, values: Vec<f64>) -> Self {
        Self { field: ScalarField { grid, values } }
    }
}

fn check_nonnegative(f: &ScalarField) -> Result<()> {
    for (node, &value) in f.values.iter().enumerate() {
        if value < 0.0 || value.is_nan() {
            return Err(Error::NegativeDensity { node, value });
        }
    }
    Ok(())
}

/// Scales a nonnegative field to unit mass.
pub fn normalize_density(raw: &ScalarField) -> Result<DensityField> {
    check_nonnegative(raw)?;
    let mass = integrate(raw);
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::ZeroMass);
    }
    if mass == 1.0 {
        return Ok(DensityField { field: raw.clone() });
    }
    let values = raw.values.iter().map(|v| v / mass).collect();
    Ok(DensityField { field: ScalarField { grid: raw.grid, values } })
}

/// `d` component fields.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: TorusGrid,
    pub components: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, components: (0..grid.d).map(|_| ScalarField::zeros(grid)).collect() }
    }

    pub fn new(grid: TorusGrid, components: Vec<ScalarField>) -> Result<Self> {
        if components.len() != grid.d {
            return Err(Error::SizeMismatch { expected: grid.d, got: components.len() });
        }
        for c in &components {
            grid.check_len(c.values.len())?;
        }
        Ok(Self { grid, components })
    }
}
