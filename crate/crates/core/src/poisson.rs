//! Spectral solution of `Delta p = rho - 1` and the Dirichlet energy.

use crate::grid::{integrate, DensityField, ScalarField, TorusGrid, VectorField};
use crate::spectral;
use crate::sum::pairwise_sum;

/// Mean-zero potential with its cached spectral gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub p: ScalarField,
    pub gradient: VectorField,
}

impl PotentialField {
    /// Builds a potential from nodal values, removing the mean and caching the gradient.
    pub fn from_values(grid: TorusGrid, mut values: Vec<f64>) -> Self {
        let mean = pairwise_sum(&values) / values.len() as f64;
        for v in values.iter_mut() {
            *v -= mean;
        }
        let components = spectral::spectral_gradient(&grid, &values)
            .into_iter()
            .map(|g| ScalarField { grid, values: g })
            .collect();
        Self { p: ScalarField { grid, values }, gradient: VectorField { grid, components } }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self { p: ScalarField::zeros(grid), gradient: VectorField::zeros(grid) }
    }

    pub fn grid(&self) -> TorusGrid {
        self.p.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.p.values
    }

    /// Componentwise `a self + b other`.
    pub fn blend(&self, a: f64, other: &PotentialField, b: f64) -> Self {
        let values = self.p.values.iter().zip(&other.p.values).map(|(x, y)| a * x + b * y).collect();
        Self::from_values(self.grid(), values)
    }
}

/// Solves `Delta p = rho - 1` spectrally with zero-mean `p`.
pub fn solve_poisson(rho: &DensityField) -> PotentialField {
    poisson_from_values(&rho.grid(), rho.values())
}

/// Same as [`solve_poisson`] for raw nodal density values.
pub(crate) fn poisson_from_values(grid: &TorusGrid, rho: &[f64]) -> PotentialField {
    let source: Vec<f64> = rho.iter().map(|r| r - 1.0).collect();
    PotentialField::from_values(*grid, spectral::inverse_laplacian(grid, &source))
}

/// `1/2 * integral |grad p|^2`, evaluated as `-1/2 * integral p Lap p` with the
/// same spectral Laplacian as the Poisson solve (the Nyquist mode included), so
/// that `integral q (rho - 1) = -integral grad q . grad p` holds exactly on the grid.
pub fn dirichlet_energy(p: &PotentialField) -> f64 {
    let g = p.grid();
    let lap = spectral::spectral_laplacian(&g, &p.p.values);
    let prod: Vec<f64> = p.p.values.iter().zip(&lap).map(|(a, b)| a * b).collect();
    -0.5 * integrate(&ScalarField { grid: g, values: prod })
}

/// The cached spectral gradient.
pub fn grad_field(p: &PotentialField) -> &VectorField {
    &p.gradient
}

/// Spectral Laplacian of a scalar field.
pub fn spectral_laplacian(f: &ScalarField) -> ScalarField {
    ScalarField { grid: f.grid, values: spectral::spectral_laplacian(&f.grid, &f.values) }
}
