use super::KickSet;
use crate::convex::{hopf_lax_step, Direction, LiftedPotential, SlopeWindow};
use crate::error::{Error, Result};
use crate::grid::{integrate, DensityField, ScalarField, TorusGrid, VectorField};
use crate::poisson::dirichlet_energy;

/// Piecewise-in-time potential: `plus[i] = phi(t_i^+)` for `i = 0..N-1` and
/// `minus[i - 1] = phi(t_i^-)` for `i = 1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityPotential {
    pub grid: TorusGrid,
    pub plus: Vec<ScalarField>,
    pub minus: Vec<ScalarField>,
}

impl VelocityPotential {
    pub fn phi_plus(&self, i: usize) -> &ScalarField {
        &self.plus[i]
    }

    pub fn phi_minus(&self, i: usize) -> &ScalarField {
        &self.minus[i - 1]
    }

    /// Jump records `phi(t_i^+) - phi(t_i^-)` for `i = 1..N-1`.
    pub fn jumps(&self) -> Vec<ScalarField> {
        (1..self.grid.steps)
            .map(|i| {
                let (p, m) = (self.phi_plus(i), self.phi_minus(i));
                let values = p.values.iter().zip(&m.values).map(|(a, b)| a - b).collect();
                ScalarField { grid: self.grid, values }
            })
            .collect()
    }

    /// Largest `phi(t_i^+) - phi(t_i^-) + dt k_i` over all nodes and kicks;
    /// the jump inequality requires this to be at most ~0.
    pub fn jump_excess(&self, kicks: &KickSet) -> f64 {
        let dt = self.grid.dt();
        let mut worst = f64::NEG_INFINITY;
        for (i, j) in (1..self.grid.steps).zip(self.jumps()) {
            let k = kicks.kick_field(i);
            for (a, b) in j.values.iter().zip(&k) {
                worst = worst.max(a + dt * b);
            }
        }
        worst
    }

    /// Largest deviation between `phi(t_{i+1}^-)` and the grid Hopf-Lax step of
    /// `phi(t_i^+)`. Zero for potentials built by [`forward_sweep`].
    pub fn hopf_lax_residual(&self) -> Result<f64> {
        let dt = self.grid.dt();
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.steps {
            let next = hopf_lax_step(&self.plus[i], dt, Direction::Forward)?;
            for (a, b) in next.values.iter().zip(&self.minus[i].values) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }
}

/// `phi(t^+)` from `phi(t^-)`: lift with `dt`, subtract `dt^2 k`, take the
/// convex hull of the lift and unlift.
pub(crate) fn kick_and_convexify(phi_minus: &ScalarField, kick: Option<&[f64]>, dt: f64, window: SlopeWindow) -> ScalarField {
    let mut shifted = phi_minus.clone();
    if let Some(k) = kick {
        for (v, kv) in shifted.values.iter_mut().zip(k) {
            *v -= dt * kv;
        }
    }
    LiftedPotential::lift(&shifted, 0.0, dt).convexified(window).unlift()
}

/// Grid viscosity sweep: convexify `phi0`, then alternate Hopf-Lax steps of
/// length `T/N` and convexified kicks.
pub fn forward_sweep(phi0: &ScalarField, kicks: &KickSet, window: SlopeWindow) -> Result<VelocityPotential> {
    let g = phi0.grid;
    if kicks.grid() != g {
        return Err(Error::GridMismatch("kick grid differs from potential grid".into()));
    }
    let dt = g.dt();
    let mut plus = vec![kick_and_convexify(phi0, None, dt, window)];
    let mut minus = Vec::with_capacity(g.steps);
    for i in 1..=g.steps {
        let m = hopf_lax_step(&plus[i - 1], dt, Direction::Forward)?;
        if i < g.steps {
            plus.push(kick_and_convexify(&m, Some(&kicks.kick_field(i)), dt, window));
        }
        minus.push(m);
    }
    Ok(VelocityPotential { grid: g, plus, minus })
}

/// `int rhoT phi(T^-) - int rho0 phi(0^+) + dt sum_i (int q_i - s D(q_i))`
/// with `q_i = p(t_i)` and `s` the gravity sign.
pub fn dual_value(phi: &VelocityPotential, kicks: &KickSet, rho0: &DensityField, rho_t: &DensityField) -> Result<f64> {
    let g = phi.grid;
    if rho0.grid() != g || rho_t.grid() != g || kicks.grid() != g {
        return Err(Error::GridMismatch("dual_value inputs live on different grids".into()));
    }
    let prod = |r: &DensityField, f: &ScalarField| {
        integrate(&ScalarField { grid: g, values: r.values().iter().zip(&f.values).map(|(a, b)| a * b).collect() })
    };
    let mut v = prod(rho_t, phi.phi_minus(g.steps)) - prod(rho0, phi.phi_plus(0));
    let s = kicks.gravity.sign();
    for q in &kicks.potentials {
        v += g.dt() * (s * integrate(&q.p) - s * dirichlet_energy(q));
    }
    Ok(v)
}

/// `v(t_i^+) = (grad Phi_{i,i+1} - x) / dt` from the convexified lift by
/// centered differences; `i = N` uses `phi(T^-)`.
pub fn velocity_from_potential(phi: &VelocityPotential, i: usize, window: SlopeWindow) -> Result<VectorField> {
    let g = phi.grid;
    if i > g.steps {
        return Err(Error::InvalidArgument(format!("interval index {i} exceeds N = {}", g.steps)));
    }
    let f = if i < g.steps { phi.phi_plus(i) } else { phi.phi_minus(g.steps) };
    let dt = g.dt();
    let lift = LiftedPotential::lift(f, 0.0, dt).convexified(window);
    let h = g.h();
    let n = g.n as i64;
    let comps = (0..g.d)
        .map(|a| {
            let values = (0..g.num_nodes())
                .map(|k| {
                    let idx: Vec<i64> = g.multi_index(k).into_iter().map(|v| v as i64).collect();
                    let mut lo = idx.clone();
                    lo[a] -= 1;
                    let mut hi = idx.clone();
                    hi[a] += 1;
                    // equivariant extension: Phi(x + e_a) = Phi(x) + x_a + 1/2
                    let ext = |j: &[i64]| {
                        let wrap = j[a].div_euclid(n) as f64;
                        let base = lift.values[g.flat_index(j)];
                        let x0 = j[a].rem_euclid(n) as f64 * h;
                        base + wrap * x0 + 0.5 * wrap * wrap
                    };
                    let grad = (ext(&hi) - ext(&lo)) / (2.0 * h);
                    (grad - idx[a] as f64 * h) / dt
                })
                .collect();
            ScalarField { grid: g, values }
        })
        .collect();
    VectorField::new(g, comps)
}
