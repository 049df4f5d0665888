use super::atoms::{AtomPotentials, KickFields};
use super::potential::{kick_and_convexify, velocity_from_potential, VelocityPotential};
use super::{Gravity, KickSet};
use crate::convex::SlopeWindow;
use crate::error::{Error, Result};
use crate::grid::{DensityField, ScalarField, TorusGrid, VectorField};
use crate::kernel::{deposit, Kernel};
use crate::paths::Segment;
use crate::poisson::{dirichlet_energy, poisson_from_values, PotentialField};
use crate::transport::{kantorovich_lp_guarded, Atom, CostTable, MeasureModel, QuantileCoupling, TransportPlan, LP_PAIR_GUARD};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Endpoint coupling backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Exact LP when the pair count is within the guard, quantile coupling otherwise (1-D).
    Auto,
    /// Exact transportation simplex between node masses.
    Lp,
    /// Circular quantile coupling of cellwise-constant densities (1-D only).
    Quantile,
}

/// Outer fixed-point and tolerance settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub omega: f64,
    pub tol_fp: f64,
    pub max_iter: usize,
    /// Relative duality-gap tolerance (times the action scale).
    pub tol_gap: f64,
    /// Support threshold relative to the mean density.
    pub rho_floor: f64,
    pub gravity: Gravity,
    pub slope_window: SlopeWindow,
    pub backend: Backend,
    pub lp_guard: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            omega: 0.5,
            tol_fp: 1e-8,
            max_iter: 200,
            tol_gap: 1e-4,
            rho_floor: 1e-10,
            gravity: Gravity::Attractive,
            slope_window: SlopeWindow::default(),
            backend: Backend::Auto,
            lp_guard: LP_PAIR_GUARD,
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `max_i || p_new(t_i) - p(t_i) ||_inf`.
    pub kick_change: f64,
    /// Action of the path produced in this iteration.
    pub action: f64,
}

/// Full discrete trajectory with its certificates.
#[derive(Debug, Clone)]
pub struct PathSolution {
    pub grid: TorusGrid,
    pub densities: Vec<DensityField>,
    pub kicks: KickSet,
    pub potential: VelocityPotential,
    /// `v(t_i^+)` for `i < N` and `v(T^-)` for `i = N`.
    pub velocities: Vec<VectorField>,
    pub plan: TransportPlan,
    pub atom_potentials: AtomPotentials,
    pub action: f64,
    pub dual_value: f64,
    /// `E(t_i)` for `i = 1..N-1`.
    pub energy: Vec<f64>,
    pub log: Vec<IterationRecord>,
    pub converged: bool,
    pub backend: Backend,
    pub theta: Option<f64>,
    pub options: SolverOptions,
}

impl PathSolution {
    /// Per-leg kinetic energies `sum m |dX|^2 / (2 dt^2)`.
    pub fn leg_kinetic(&self) -> Vec<f64> {
        leg_kinetic(&self.plan)
    }

    /// Support threshold in absolute density units.
    pub fn floor(&self) -> f64 {
        self.options.rho_floor
    }
}

pub(crate) fn leg_kinetic(plan: &TransportPlan) -> Vec<f64> {
    let d = plan.grid.d;
    let dt = plan.grid.dt();
    (0..plan.positions.len() - 1)
        .map(|i| {
            let (a, b) = (&plan.positions[i], &plan.positions[i + 1]);
            plan.atoms
                .iter()
                .enumerate()
                .map(|(k, at)| at.mass * (0..d).map(|c| (b[k * d + c] - a[k * d + c]).powi(2)).sum::<f64>())
                .sum::<f64>()
                / (2.0 * dt * dt)
        })
        .collect()
}

/// Kinetic term from plan backpointers plus `s dt sum_i D(p(rho(t_i)))`.
/// Rejects plans that move mass out of nodes where `rho(t_0)` vanishes.
pub fn discrete_action(path: &PathSolution) -> Result<f64> {
    action_of(&path.plan, &path.densities, path.kicks.gravity)
}

pub(crate) fn action_of(plan: &TransportPlan, densities: &[DensityField], gravity: Gravity) -> Result<f64> {
    let g = plan.grid;
    if !plan.has_backpointers() {
        return Err(Error::InvalidPath("plan has no positions at every time".into()));
    }
    if densities.len() != g.steps + 1 {
        return Err(Error::InvalidPath(format!("{} densities for N = {}", densities.len(), g.steps)));
    }
    let rho0 = densities[0].values();
    for a in &plan.atoms {
        if a.mass > 0.0 && rho0[a.source] <= 0.0 {
            return Err(Error::InvalidPath(format!("positive flux {} out of zero-mass node {}", a.mass, a.source)));
        }
    }
    let dt = g.dt();
    let kin: f64 = leg_kinetic(plan).iter().sum::<f64>() * dt;
    let s = gravity.sign();
    let pot: f64 = densities[1..g.steps]
        .iter()
        .map(|r| dirichlet_energy(&poisson_from_values(&g, r.values())))
        .sum::<f64>();
    Ok(kin + s * dt * pot)
}

/// Densities `rho(t_i)` obtained by depositing every atom at its recorded
/// position; `rho(t_0)` is returned as `rho0` after checking the plan's source
/// marginal against it.
pub fn recover_path_densities(plan: &TransportPlan, rho0: &DensityField, kernel: Kernel) -> Result<Vec<DensityField>> {
    let g = plan.grid;
    if !plan.has_backpointers() {
        return Err(Error::InvalidPath("plan is missing backpointers for interior times".into()));
    }
    let (rows, _) = plan.marginals();
    let masses = rho0.node_masses();
    let err: f64 = rows.iter().zip(&masses).map(|(a, b)| (a - b).abs()).sum();
    if err > 1e-9 {
        return Err(Error::InvalidPath(format!("plan source marginal differs from rho0 by {err:e}")));
    }
    let w = plan.masses();
    let mut out = vec![rho0.clone()];
    for i in 1..=g.steps {
        let pts: Vec<f64> = plan.positions[i].iter().map(|x| x.rem_euclid(1.0)).collect();
        out.push(DensityField::from_deposit(g, deposit(&g, kernel, &pts, &w)));
    }
    Ok(out)
}

/// Eulerian velocity of leg `i` (leg `N - 1` for `i = N`) at the positions
/// of time `t_i`: kernel-weighted momentum over kernel-weighted mass. Nodes
/// where the deposited density falls below `floor` take `fallback`.
pub fn momentum_velocity(plan: &TransportPlan, i: usize, fallback: &VectorField, floor: f64) -> VectorField {
    let g = plan.grid;
    let d = g.d;
    let steps = g.steps;
    let leg = i.min(steps - 1);
    let (a, b) = (&plan.positions[leg], &plan.positions[leg + 1]);
    let at = &plan.positions[i];
    let masses = plan.masses();
    let pts: Vec<f64> = at.iter().map(|x| x.rem_euclid(1.0)).collect();
    let rho = deposit(&g, Kernel::CubicBSpline, &pts, &masses);
    let components = (0..d)
        .map(|c| {
            let mom: Vec<f64> = (0..masses.len()).map(|k| masses[k] * (b[k * d + c] - a[k * d + c]) / g.dt()).collect();
            let j = deposit(&g, Kernel::CubicBSpline, &pts, &mom);
            let values = (0..g.num_nodes())
                .map(|z| if rho[z] >= floor && rho[z] > 0.0 { j[z] / rho[z] } else { fallback.components[c].values[z] })
                .collect();
            ScalarField { grid: g, values }
        })
        .collect();
    VectorField { grid: g, components }
}

/// Atom state shared by both backends.
struct Atoms {
    masses: Vec<f64>,
    atoms: Vec<Atom>,
    /// Positions at every time, `(N + 1)` vectors of `K d` values.
    positions: Vec<Vec<f64>>,
}

/// Solves every atom path for the given kicks, warm-starting from `positions`.
fn solve_paths(grid: &TorusGrid, kicks: &[Vec<f64>], positions: &mut [Vec<f64>], count: usize) {
    let d = grid.d;
    let steps = grid.steps;
    let refs: Vec<&[f64]> = kicks.iter().map(|k| k.as_slice()).collect();
    let seg = Segment { grid, dt: grid.dt(), kicks: &refs };
    let paths: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut xs: Vec<f64> = (0..=steps).flat_map(|i| positions[i][k * d..(k + 1) * d].to_vec()).collect();
            seg.solve(&mut xs);
            xs
        })
        .collect();
    for (k, xs) in paths.iter().enumerate() {
        for i in 0..=steps {
            positions[i][k * d..(k + 1) * d].copy_from_slice(&xs[i * d..(i + 1) * d]);
        }
    }
}

fn straight_positions(grid: &TorusGrid, x0: &[f64], x1: &[f64]) -> Vec<Vec<f64>> {
    let steps = grid.steps;
    (0..=steps)
        .map(|i| {
            let s = i as f64 / steps as f64;
            x0.iter().zip(x1).map(|(a, b)| a + s * (b - a)).collect()
        })
        .collect()
}

/// Interior densities and potentials of an atom configuration.
fn interior_fields(grid: &TorusGrid, atoms: &Atoms) -> (Vec<Vec<f64>>, Vec<PotentialField>) {
    let rhos: Vec<Vec<f64>> = (1..grid.steps)
        .into_par_iter()
        .map(|i| {
            let pts: Vec<f64> = atoms.positions[i].iter().map(|x| x.rem_euclid(1.0)).collect();
            deposit(grid, Kernel::CubicBSpline, &pts, &atoms.masses)
        })
        .collect();
    let ps = rhos.par_iter().map(|r| poisson_from_values(grid, r)).collect();
    (rhos, ps)
}

/// LP backend state: per node-pair paths, the LP vertices in use and the
/// last dual certificate.
struct LpState {
    pair_paths: Vec<Vec<f64>>,
    pair_cost: Vec<f64>,
    u: Vec<f64>,
    vertices: Vec<Vec<Atom>>,
}

/// Vertex plans kept in the restricted master problem. The optimal interior
/// densities are unique, and by Caratheodory in the space of (cost, interior
/// densities) some optimal mixture uses at most `(N - 1) m + 2` vertices.
fn max_vertices(grid: &TorusGrid) -> usize {
    ((grid.steps - 1) * grid.num_nodes() + 2).max(32)
}

impl LpState {
    fn atoms_of(&self, grid: &TorusGrid, atoms: Vec<Atom>) -> Atoms {
        let m = grid.num_nodes();
        let d = grid.d;
        let positions = (0..=grid.steps)
            .map(|i| atoms.iter().flat_map(|a| self.pair_paths[a.source * m + a.target][i * d..(i + 1) * d].to_vec()).collect())
            .collect();
        Atoms { masses: atoms.iter().map(|a| a.mass).collect(), atoms, positions }
    }

    /// Optimal mixture of the stored vertices under the current pair paths
    /// for the attractive action.
    fn mixture(&mut self, grid: &TorusGrid, sign: f64) -> Atoms {
        let r = self.vertices.len();
        let dt = grid.dt();
        let data: Vec<(f64, Vec<PotentialField>)> = self
            .vertices
            .iter()
            .map(|v| {
                let a = self.atoms_of(grid, v.clone());
                let (_, ps) = interior_fields(grid, &a);
                (kinetic(grid, &a), ps)
            })
            .collect();
        let laps: Vec<Vec<Vec<f64>>> = data
            .iter()
            .map(|(_, ps)| ps.iter().map(|p| crate::spectral::spectral_laplacian(grid, p.values())).collect())
            .collect();
        let mut q = vec![0.0; r * r];
        for v in 0..r {
            for w in v..r {
                let e: f64 = (0..grid.steps - 1)
                    .map(|i| -data[v].1[i].values().iter().zip(&laps[w][i]).map(|(a, b)| a * b).sum::<f64>())
                    .sum::<f64>()
                    * grid.cell_volume();
                q[v * r + w] = sign * dt * e;
                q[w * r + v] = sign * dt * e;
            }
        }
        let c: Vec<f64> = data.iter().map(|(k, _)| *k).collect();
        let lambda = super::master::simplex_qp(&q, &c);
        let mut mix: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
        for (v, atoms) in self.vertices.iter().enumerate() {
            for a in atoms {
                *mix.entry((a.source, a.target)).or_insert(0.0) += lambda[v] * a.mass;
            }
        }
        // evict only beyond the cap, unweighted vertices first and the oldest among equals;
        // dropping a vertex the LP returns next time makes the iteration cycle
        let cap = max_vertices(grid);
        if r > cap {
            let mut order: Vec<usize> = (0..r).collect();
            order.sort_by(|&a, &b| lambda[b].total_cmp(&lambda[a]).then(b.cmp(&a)));
            let mut keep = order[..cap].to_vec();
            keep.sort_unstable();
            self.vertices = keep.iter().map(|&v| self.vertices[v].clone()).collect();
        }
        let atoms = mix
            .into_iter()
            .filter(|(_, m)| *m > 0.0)
            .map(|((source, target), mass)| Atom { source, target, mass })
            .collect();
        self.atoms_of(grid, atoms)
    }
}

fn lp_step(
    grid: &TorusGrid,
    rho0: &DensityField,
    rho_t: &DensityField,
    kicks: &[Vec<f64>],
    state: &mut LpState,
    sign: f64,
    guard: usize,
) -> Result<Atoms> {
    let m = grid.num_nodes();
    let steps = grid.steps;
    let refs: Vec<&[f64]> = kicks.iter().map(|k| k.as_slice()).collect();
    let seg = Segment { grid, dt: grid.dt(), kicks: &refs };
    let solved: Vec<(Vec<f64>, f64)> = state
        .pair_paths
        .par_iter()
        .map(|xs| {
            let mut xs = xs.clone();
            let c = seg.solve(&mut xs);
            (xs, c)
        })
        .collect();
    for (k, (xs, c)) in solved.into_iter().enumerate() {
        state.pair_paths[k] = xs;
        state.pair_cost[k] = c;
    }
    let table = CostTable { rows: m, cols: m, values: state.pair_cost.clone(), legs: steps };
    let lp = kantorovich_lp_guarded(rho0, rho_t, &table, guard)?;
    state.u = lp.u.clone();
    let vertex = lp.plan.atoms;
    if sign <= 0.0 {
        return Ok(state.atoms_of(grid, vertex));
    }
    if !state.vertices.contains(&vertex) {
        state.vertices.push(vertex);
    }
    Ok(state.mixture(grid, sign))
}

fn init_lp_state(grid: &TorusGrid) -> LpState {
    let m = grid.num_nodes();
    let d = grid.d;
    let steps = grid.steps;
    let mut pair_paths = Vec::with_capacity(m * m);
    for i in 0..m {
        let x = grid.coords(i);
        for j in 0..m {
            let y = KickFields::image(&x, &grid.coords(j));
            let path: Vec<f64> = (0..=steps)
                .flat_map(|s| {
                    let f = s as f64 / steps as f64;
                    (0..d).map(|c| x[c] + f * (y[c] - x[c])).collect::<Vec<_>>()
                })
                .collect();
            pair_paths.push(path);
        }
    }
    LpState { pair_paths, pair_cost: vec![0.0; m * m], u: vec![0.0; m], vertices: Vec::new() }
}

fn quantile_atoms(grid: &TorusGrid, q: &QuantileCoupling) -> Atoms {
    let atoms = (0..q.len()).map(|k| Atom { source: q.sources[k], target: q.targets[k], mass: q.masses[k] }).collect();
    Atoms { masses: q.masses.clone(), atoms, positions: straight_positions(grid, &q.x0, &q.x1) }
}

/// Total kicked cost of a quantile coupling under fixed kicks.
fn quantile_cost(grid: &TorusGrid, q: &QuantileCoupling, kicks: &[Vec<f64>]) -> f64 {
    let mut a = quantile_atoms(grid, q);
    solve_paths(grid, kicks, &mut a.positions, a.masses.len());
    let refs: Vec<&[f64]> = kicks.iter().map(|k| k.as_slice()).collect();
    let seg = Segment { grid, dt: grid.dt(), kicks: &refs };
    (0..a.masses.len())
        .map(|k| {
            let xs: Vec<f64> = (0..=grid.steps).map(|i| a.positions[i][k]).collect();
            a.masses[k] * seg.cost_of(&xs)
        })
        .sum()
}

/// Damped fixed point on the kicks; returns the kicks used for the last paths.
#[allow(clippy::too_many_arguments)]
fn fixed_point(
    grid: &TorusGrid,
    opts: &SolverOptions,
    kicks: &mut Vec<PotentialField>,
    log: &mut Vec<IterationRecord>,
    mut step: impl FnMut(&[Vec<f64>]) -> Result<Atoms>,
) -> Result<(Atoms, bool)> {
    let s = opts.gravity.sign();
    let dt = grid.dt();
    let budget = opts.max_iter.saturating_sub(log.len()).max(1);
    for _ in 0..budget {
        let fields: Vec<Vec<f64>> = kicks.iter().map(|p| p.values().iter().map(|v| s * v).collect()).collect();
        let atoms = step(&fields)?;
        if opts.gravity == Gravity::Off {
            log.push(IterationRecord { iteration: log.len() + 1, kick_change: 0.0, action: kinetic(grid, &atoms) });
            return Ok((atoms, true));
        }
        let (_, ps) = interior_fields(grid, &atoms);
        let change = ps
            .iter()
            .zip(kicks.iter())
            .map(|(a, b)| a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
            .fold(0.0f64, f64::max);
        let action = kinetic(grid, &atoms) + s * dt * ps.iter().map(dirichlet_energy).sum::<f64>();
        log.push(IterationRecord { iteration: log.len() + 1, kick_change: change, action });
        if change <= opts.tol_fp {
            return Ok((atoms, true));
        }
        // the first pass runs without kicks; its potentials initialize p undamped
        let w = if log.len() == 1 { 1.0 } else { opts.omega };
        for (k, p) in kicks.iter_mut().zip(&ps) {
            *k = k.blend(1.0 - w, p, w);
        }
    }
    // out of budget: recompute paths for the final kicks so the path is consistent
    let fields: Vec<Vec<f64>> = kicks.iter().map(|p| p.values().iter().map(|v| s * v).collect()).collect();
    Ok((step(&fields)?, false))
}

fn kinetic(grid: &TorusGrid, atoms: &Atoms) -> f64 {
    let plan = TransportPlan { grid: *grid, atoms: atoms.atoms.clone(), positions: atoms.positions.clone() };
    leg_kinetic(&plan).iter().sum::<f64>() * grid.dt()
}

/// Chain potentials along a monotone coupling: the increments between
/// consecutive source atoms are placed at the same relative position inside
/// their c-cyclical-monotonicity intervals, closing the loop around the circle.
fn chain_potentials(grid: &TorusGrid, kf: &KickFields, x0: &[f64], x1: &[f64]) -> Vec<f64> {
    let k = x0.len();
    let steps = grid.steps;
    let next = |v: &[f64], q: usize| if q + 1 < k { v[q + 1] } else { v[0] + 1.0 };
    let own: Vec<f64> = (0..k).into_par_iter().map(|q| kf.cost(0, steps, &[x0[q]], &[x1[q]])).collect();
    let bounds: Vec<(f64, f64)> = (0..k)
        .into_par_iter()
        .map(|q| {
            let own_next = if q + 1 < k { own[q + 1] } else { own[0] };
            let lo = own[q] - kf.cost(0, steps, &[next(x0, q)], &[x1[q]]);
            let hi = kf.cost(0, steps, &[x0[q]], &[next(x1, q)]) - own_next;
            (lo, hi)
        })
        .collect();
    let sum_lo: f64 = bounds.iter().map(|b| b.0).sum();
    let sum_w: f64 = bounds.iter().map(|b| b.1 - b.0).sum();
    let lambda = if sum_w > 1e-300 { (-sum_lo / sum_w).clamp(0.0, 1.0) } else { 0.5 };
    let mut psi = vec![0.0; k];
    for q in 1..k {
        let (lo, hi) = bounds[q - 1];
        psi[q] = psi[q - 1] + lo + lambda * (hi - lo);
    }
    psi
}

/// Reconstructs the least-action path between `rho0` and `rho_t`.
pub fn solve_reconstruction(
    rho0: &DensityField,
    rho_t: &DensityField,
    grid: &TorusGrid,
    opts: &SolverOptions,
) -> Result<PathSolution> {
    if rho0.grid() != *grid || rho_t.grid() != *grid {
        return Err(Error::GridMismatch("endpoint densities do not live on the solver grid".into()));
    }
    if !(opts.omega > 0.0 && opts.omega <= 1.0) {
        return Err(Error::InvalidArgument(format!("omega = {} outside (0, 1]", opts.omega)));
    }
    let m = grid.num_nodes();
    let backend = match opts.backend {
        Backend::Auto if m * m <= opts.lp_guard => Backend::Lp,
        Backend::Auto if grid.d == 1 => Backend::Quantile,
        Backend::Auto => return Err(Error::GuardExceeded { pairs: m * m, guard: opts.lp_guard }),
        b => b,
    };
    if backend == Backend::Quantile && grid.d != 1 {
        return Err(Error::UnsupportedDimension(grid.d));
    }
    let mut kicks: Vec<PotentialField> = (1..grid.steps).map(|_| PotentialField::zeros(*grid)).collect();
    let mut log = Vec::new();
    let (atoms, converged, theta, psi0_src) = match backend {
        Backend::Lp => {
            let mut state = init_lp_state(grid);
            // first pass without kicks gives the gravity-off path used to initialize p
            let (atoms, conv) = fixed_point(grid, opts, &mut kicks, &mut log, |k| lp_step(grid, rho0, rho_t, k, &mut state, opts.gravity.sign(), opts.lp_guard))?;
            let psi0: Vec<f64> = state.u.iter().map(|u| -u).collect();
            (atoms, conv, None, psi0)
        }
        _ => {
            let mut theta = crate::transport::quantile_theta(rho0, rho_t)?;
            let mut coupling = QuantileCoupling::build(rho0, rho_t, theta, MeasureModel::Cellwise)?;
            let mut warm = quantile_atoms(grid, &coupling);
            let mut result;
            let mut rounds = 0;
            loop {
                let mut current = Atoms { masses: warm.masses.clone(), atoms: warm.atoms.clone(), positions: warm.positions.clone() };
                result = fixed_point(grid, opts, &mut kicks, &mut log, |k| {
                    solve_paths(grid, k, &mut current.positions, current.masses.len());
                    Ok(Atoms { masses: current.masses.clone(), atoms: current.atoms.clone(), positions: current.positions.clone() })
                })?;
                rounds += 1;
                if opts.gravity == Gravity::Off || rounds >= 4 || !result.1 {
                    break;
                }
                // re-optimize the rotation offset under the converged kicks
                let s = opts.gravity.sign();
                let fields: Vec<Vec<f64>> = kicks.iter().map(|p| p.values().iter().map(|v| s * v).collect()).collect();
                let cost = |t: f64| {
                    QuantileCoupling::build(rho0, rho_t, t, MeasureModel::Cellwise)
                        .map(|q| quantile_cost(grid, &q, &fields))
                        .unwrap_or(f64::INFINITY)
                };
                let span = 2.0 * grid.h();
                let best = crate::transport::golden_min(theta - span, theta + span, 60, cost);
                if cost(best) >= cost(theta) - 1e-15 * cost(theta).abs() || (best - theta).abs() < 1e-12 {
                    break;
                }
                theta = best;
                coupling = QuantileCoupling::build(rho0, rho_t, theta, MeasureModel::Cellwise)?;
                warm = quantile_atoms(grid, &coupling);
            }
            let (atoms, conv) = result;
            (atoms, conv, Some(theta), Vec::new())
        }
    };
    let s = opts.gravity.sign();
    let fields: Vec<Vec<f64>> = kicks.iter().map(|p| p.values().iter().map(|v| s * v).collect()).collect();
    let kf = KickFields { grid, fields: &fields };
    let (rhos, _) = interior_fields(grid, &atoms);
    let mut densities = vec![rho0.clone()];
    densities.extend(rhos.into_iter().map(|r| DensityField::from_deposit(*grid, r)));
    densities.push(rho_t.clone());
    let plan = TransportPlan { grid: *grid, atoms: atoms.atoms.clone(), positions: atoms.positions.clone() };

    let mut pots = match backend {
        Backend::Lp => {
            let coords: Vec<f64> = (0..m).flat_map(|k| grid.coords(k)).collect();
            AtomPotentials {
                src_pos: coords.clone(),
                src_mass: rho0.node_masses(),
                psi0: psi0_src,
                tgt_pos: coords,
                tgt_mass: rho_t.node_masses(),
                psi_t: Vec::new(),
                atom_src: plan.atoms.iter().map(|a| a.source).collect(),
                atom_tgt: plan.atoms.iter().map(|a| a.target).collect(),
                chain: false,
            }
        }
        _ => {
            let x0 = atoms.positions[0].clone();
            let x1 = atoms.positions[grid.steps].clone();
            let psi0 = chain_potentials(grid, &kf, &x0, &x1);
            let k = atoms.masses.len();
            AtomPotentials {
                src_pos: x0,
                src_mass: atoms.masses.clone(),
                psi0,
                tgt_pos: x1,
                tgt_mass: atoms.masses.clone(),
                psi_t: Vec::new(),
                atom_src: (0..k).collect(),
                atom_tgt: (0..k).collect(),
                chain: true,
            }
        }
    };
    pots.c_transform(&kf);
    let refs: Vec<&[f64]> = fields.iter().map(|f| f.as_slice()).collect();
    let seg = Segment { grid, dt: grid.dt(), kicks: &refs };
    let d = grid.d;
    let atom_costs: Vec<f64> = (0..plan.atoms.len())
        .into_par_iter()
        .map(|k| {
            let xs: Vec<f64> = (0..=grid.steps).flat_map(|i| plan.positions[i][k * d..(k + 1) * d].to_vec()).collect();
            seg.cost_of(&xs)
        })
        .collect();
    pots.tighten_with_atoms(&atom_costs);
    let kick_set = KickSet { potentials: kicks, gravity: opts.gravity };
    let dual_value = pots.transport_dual() - s * grid.dt() * kick_set.potentials.iter().map(dirichlet_energy).sum::<f64>();
    let action = action_of(&plan, &densities, opts.gravity)?;
    let potential = node_potentials(grid, &pots, &kf, opts.slope_window);
    let velocities = (0..=grid.steps)
        .map(|i| Ok(momentum_velocity(&plan, i, &velocity_from_potential(&potential, i, opts.slope_window)?, opts.rho_floor)))
        .collect::<Result<Vec<_>>>()?;
    let energy = energy_series_of(&plan, &densities, opts.gravity);
    Ok(PathSolution {
        grid: *grid,
        densities,
        kicks: kick_set,
        potential,
        velocities,
        plan,
        atom_potentials: pots,
        action,
        dual_value,
        energy,
        log,
        converged,
        backend,
        theta,
        options: *opts,
    })
}

/// Node values of the path potentials: `phi(t_i^-)` by the forward path
/// infimum, `phi(0^+)` by the backward one, and `phi(t_i^+)` by a convexified kick.
fn node_potentials(grid: &TorusGrid, pots: &AtomPotentials, kf: &KickFields, window: SlopeWindow) -> VelocityPotential {
    let m = grid.num_nodes();
    let steps = grid.steps;
    let dt = grid.dt();
    let all_src: Vec<usize> = (0..pots.src_mass.len()).collect();
    let all_tgt: Vec<usize> = (0..pots.tgt_mass.len()).collect();
    let phi0: Vec<f64> = (0..m).into_par_iter().map(|z| pots.backward_at(kf, 0, &grid.coords(z), &all_tgt)).collect();
    let minus: Vec<ScalarField> = (1..=steps)
        .map(|i| {
            let values = (0..m).into_par_iter().map(|z| pots.forward_at(kf, i, &grid.coords(z), &all_src)).collect();
            ScalarField { grid: *grid, values }
        })
        .collect();
    let mut plus = vec![kick_and_convexify(&ScalarField { grid: *grid, values: phi0 }, None, dt, window)];
    for i in 1..steps {
        plus.push(kick_and_convexify(&minus[i - 1], Some(&kf.fields[i - 1]), dt, window));
    }
    VelocityPotential { grid: *grid, plus, minus }
}

/// `E(t_i) = (KE_{i-1/2} + KE_{i+1/2}) / 2 - s D(p(rho(t_i)))` for interior `i`.
pub(crate) fn energy_series_of(plan: &TransportPlan, densities: &[DensityField], gravity: Gravity) -> Vec<f64> {
    let g = plan.grid;
    let ke = leg_kinetic(plan);
    let s = gravity.sign();
    (1..g.steps)
        .map(|i| {
            let dpot = dirichlet_energy(&poisson_from_values(&g, densities[i].values()));
            0.5 * (ke[i - 1] + ke[i]) - s * dpot
        })
        .collect()
}
