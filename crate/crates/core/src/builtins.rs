//! Endpoint density generators and the analytic linearized reference.

use crate::diagnostics::Reference;
use crate::error::{Error, Result};
use crate::grid::{normalize_density, periodic_diff, DensityField, ScalarField, TorusGrid, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Mean-one uniform density.
pub fn uniform(grid: TorusGrid) -> DensityField {
    DensityField::uniform(grid)
}

/// Periodic Gaussian bump `exp(-|x - c|^2 / (2 w^2))` centred at `(c, .., c)`,
/// normalized to mean one.
pub fn bump(grid: TorusGrid, center: f64, width: f64) -> Result<DensityField> {
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!("bump width {width} must be positive")));
    }
    let raw = ScalarField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|&xi| periodic_diff(xi, center).powi(2)).sum();
        (-r2 / (2.0 * width * width)).exp()
    });
    normalize_density(&raw)
}

/// The two-bump pair: a narrow bump at 0.3 transported to a wider one at 0.6.
pub fn two_bumps(grid: TorusGrid) -> Result<(DensityField, DensityField)> {
    Ok((bump(grid, 0.3, 0.05)?, bump(grid, 0.6, 0.08)?))
}

/// `1 + epsilon * a * cos(2 pi x_0)`.
pub fn linearized_density(grid: TorusGrid, epsilon: f64, a: f64) -> Result<DensityField> {
    if !(epsilon * a.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon * |a| = {} must stay below 1", epsilon * a.abs())));
    }
    let values = (0..grid.num_nodes()).map(|k| 1.0 + epsilon * a * (2.0 * PI * grid.coords(k)[0]).cos()).collect();
    DensityField::from_values(grid, values)
}

/// Endpoints `a0` and `aT` of the linearized family.
pub fn linearized(grid: TorusGrid, epsilon: f64, a0: f64, a_t: f64) -> Result<(DensityField, DensityField)> {
    Ok((linearized_density(grid, epsilon, a0)?, linearized_density(grid, epsilon, a_t)?))
}

/// Amplitude `a(t)` solving `a'' = a` with the given endpoint values.
pub fn linearized_amplitude(t: f64, t_final: f64, a0: f64, a_t: f64) -> f64 {
    (a_t * t.sinh() + a0 * (t_final - t).sinh()) / t_final.sinh()
}

/// `a'(t)`.
pub fn linearized_amplitude_rate(t: f64, t_final: f64, a0: f64, a_t: f64) -> f64 {
    (a_t * t.cosh() - a0 * (t_final - t).cosh()) / t_final.sinh()
}

/// Analytic linearized trajectory sampled like a [`crate::PathSolution`]:
/// densities at `t_i` and the velocity of each leg at its midpoint
/// (`v(T^-)` is compared with the last leg).
pub fn linearized_reference(grid: TorusGrid, epsilon: f64, a0: f64, a_t: f64) -> Reference {
    let tf = grid.t_final;
    let steps = grid.steps;
    let densities = (0..=steps)
        .map(|i| {
            let a = linearized_amplitude(grid.time(i), tf, a0, a_t);
            ScalarField::from_fn(grid, |x| 1.0 + epsilon * a * (2.0 * PI * x[0]).cos())
        })
        .collect();
    let velocities = (0..=steps)
        .map(|i| {
            let tm = (i.min(steps - 1) as f64 + 0.5) * grid.dt();
            let ad = linearized_amplitude_rate(tm, tf, a0, a_t);
            let mut comps = vec![ScalarField::zeros(grid); grid.d];
            comps[0] = ScalarField::from_fn(grid, |x| -(epsilon * ad / (2.0 * PI)) * (2.0 * PI * x[0]).sin());
            VectorField { grid, components: comps }
        })
        .collect();
    Reference { densities, velocities }
}

/// Uniform reference: constant density and zero velocity.
pub fn uniform_reference(grid: TorusGrid) -> Reference {
    Reference {
        densities: (0..=grid.steps).map(|_| ScalarField::constant(grid, 1.0)).collect(),
        velocities: (0..=grid.steps).map(|_| VectorField::zeros(grid)).collect(),
    }
}

/// Seeded smooth positive density `1 + sum_k a_k cos(2 pi k.x + b_k)` over the
/// first `modes` wavenumbers per axis, with total amplitude at most `amplitude < 1`.
pub fn random_smooth(grid: TorusGrid, seed: u64, modes: usize, amplitude: f64) -> Result<DensityField> {
    if !(amplitude >= 0.0 && amplitude < 1.0) || modes == 0 {
        return Err(Error::InvalidArgument(format!("random_smooth needs modes >= 1 and amplitude in [0, 1), got {modes}, {amplitude}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for _ in 0..modes {
        let k: Vec<f64> = (0..grid.d).map(|_| rng.gen_range(1..=modes) as f64).collect();
        terms.push((k, rng.gen_range(-1.0f64..1.0), rng.gen_range(0.0..2.0 * PI)));
    }
    let total: f64 = terms.iter().map(|t| t.1.abs()).sum::<f64>().max(1e-300);
    let scale = amplitude / total;
    let raw = ScalarField::from_fn(grid, |x| {
        1.0 + terms
            .iter()
            .map(|(k, a, b)| scale * a * (2.0 * PI * k.iter().zip(x).map(|(ki, xi)| ki * xi).sum::<f64>() + b).cos())
            .sum::<f64>()
    });
    normalize_density(&raw)
}
