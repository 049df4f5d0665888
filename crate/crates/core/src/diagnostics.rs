//! Machine-checkable structural properties of a computed path.

use crate::convex::{fd_laplacian, Stencil};
use crate::error::{Error, Result};
use crate::grid::{integrate, ScalarField, VectorField};
use crate::kernel::{deposit, interp_bspline_1d, Kernel};
use crate::reconstruction::{energy_series_of, Gravity, KickFields, PathSolution};
use crate::sum::pairwise_sum;
use crate::transport::l1_distance;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Tolerances and toggles of the diagnostics suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    pub energy: bool,
    pub convexity: bool,
    pub jump: bool,
    pub oleinik: bool,
    pub log_density: bool,
    pub reversibility: bool,
    pub duality: bool,
    pub consistency: bool,
    /// Maximum relative interior energy drift.
    pub tol_energy: f64,
    /// Convexity tolerance relative to `max |G|`.
    pub tol_convexity: f64,
    /// Exponents `k` for `int rho^k`; `log` is always checked alongside.
    pub convexity_k: f64,
    /// `tol_lap = c_jump * h`.
    pub c_jump: f64,
    /// Ball radius of the finite-difference Laplacian in grid spacings.
    pub laplacian_radius: f64,
    /// Largest accepted Oleinik constant.
    pub oleinik_cap: f64,
    /// `tol_traj = c_traj * dt^2 * h`.
    pub c_traj: f64,
    /// Reversibility tolerance relative to `osc(phi)`.
    pub tol_reversibility: f64,
    /// Relative duality-gap tolerance; `None` uses the solver's `tol_gap`.
    pub tol_gap: Option<f64>,
    /// Relative density and velocity tolerances against a reference.
    pub tol_density_ref: f64,
    pub tol_velocity_ref: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            energy: true,
            convexity: true,
            jump: true,
            oleinik: true,
            log_density: true,
            reversibility: true,
            duality: true,
            consistency: true,
            tol_energy: 0.05,
            tol_convexity: 1e-6,
            convexity_k: 2.0,
            c_jump: 1.0,
            laplacian_radius: 2.0,
            oleinik_cap: 1e3,
            c_traj: 1.0,
            tol_reversibility: 1e-6,
            tol_gap: None,
            tol_density_ref: 5e-3,
            tol_velocity_ref: 1e-2,
        }
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub status: Status,
    /// The statistic compared against `tolerance` (worst case over the path).
    pub measured: f64,
    pub tolerance: f64,
    pub series: Vec<f64>,
    pub details: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl CheckResult {
    fn new(passed: bool, measured: f64, tolerance: f64) -> Self {
        let status = if passed { Status::Pass } else { Status::Fail };
        Self { status, measured, tolerance, series: Vec::new(), details: BTreeMap::new() }
    }

    fn skipped() -> Self {
        Self { status: Status::Skipped, measured: 0.0, tolerance: 0.0, series: Vec::new(), details: BTreeMap::new() }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    fn with_series(mut self, s: Vec<f64>) -> Self {
        self.series = s;
        self
    }

    fn detail(mut self, k: &str, v: f64) -> Self {
        self.details.insert(k.to_string(), v);
        self
    }
}

/// All checks keyed by name, plus reported-only metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub checks: BTreeMap<String, CheckResult>,
    pub metrics: BTreeMap<String, f64>,
}

impl DiagnosticsReport {
    pub fn all_passed(&self) -> bool {
        self.checks.values().all(CheckResult::passed)
    }

    /// Stable-key JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Analytic or externally computed reference trajectory.
#[derive(Debug, Clone)]
pub struct Reference {
    /// `rho_ref(t_i)`, `i = 0..N`.
    pub densities: Vec<ScalarField>,
    /// Reference for `path.velocities[i]`, `i = 0..N`.
    pub velocities: Vec<VectorField>,
}

/// Per-time errors against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub density_l1: Vec<f64>,
    /// `||rho - rho_ref||_1 / ||rho_ref - 1||_1` (absolute where the reference is uniform).
    pub density_rel: Vec<f64>,
    /// Support-weighted relative L2 velocity error per time.
    pub velocity_rel: Vec<f64>,
    /// Support-weighted relative L2 velocity error over the whole path
    /// (legs `0..N`, the kinetic-energy norm).
    pub velocity_rel_path: f64,
}

/// Energy series and its relative drift `(max - min) / max |E|`.
pub fn energy_series(path: &PathSolution) -> (Vec<f64>, f64) {
    let e = energy_series_of(&path.plan, &path.densities, path.kicks.gravity);
    (e.clone(), relative_drift(&e))
}

pub(crate) fn relative_drift(e: &[f64]) -> f64 {
    if e.is_empty() {
        return 0.0;
    }
    let (lo, hi, amax) = e.iter().fold((f64::INFINITY, f64::NEG_INFINITY, 0.0f64), |(lo, hi, m), &v| {
        (lo.min(v), hi.max(v), m.max(v.abs()))
    });
    if amax < 1e-300 {
        0.0
    } else {
        (hi - lo) / amax
    }
}

/// Exponent for [`displacement_convexity_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvexityFunctional {
    Power(f64),
    Log,
}

/// `G(t_i)` and its interior second differences with the verdict
/// `min second difference >= -tol * max |G|`.
pub fn displacement_convexity_report(
    path: &PathSolution,
    functional: ConvexityFunctional,
    tol_rel: f64,
) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    if let ConvexityFunctional::Power(k) = functional {
        if !(k >= 1.0) {
            return Err(Error::InvalidArgument(format!("convexity exponent k = {k} must be >= 1")));
        }
    }
    let g: Vec<f64> = path
        .densities
        .iter()
        .map(|r| {
            let values = r
                .values()
                .iter()
                .map(|&v| match functional {
                    ConvexityFunctional::Power(k) => v.powf(k),
                    ConvexityFunctional::Log => {
                        if v > 0.0 {
                            v * v.ln()
                        } else {
                            0.0
                        }
                    }
                })
                .collect();
            integrate(&ScalarField { grid: path.grid, values })
        })
        .collect();
    let sd: Vec<f64> = (1..g.len() - 1).map(|i| g[i + 1] + g[i - 1] - 2.0 * g[i]).collect();
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ok = sd.iter().all(|&s| s >= -tol_rel * scale);
    Ok((g, sd, ok))
}

fn support_mask(path: &PathSolution, i: usize) -> Vec<bool> {
    let floor = path.floor();
    path.densities[i].values().iter().map(|&r| r >= floor).collect()
}

/// Laplacian jump inequality `Lap phi(t_i^+) - Lap phi(t_i^-) <= s dt (1 - rho(t_i)) + c h`
/// at support nodes. Returns the per-kick worst excess (before tolerance).
pub fn jump_inequality_check(path: &PathSolution, cfg: &DiagnosticsConfig) -> Result<CheckResult> {
    let g = path.grid;
    let h = g.h();
    let dt = g.dt();
    let s = path.kicks.gravity.sign();
    let r = cfg.laplacian_radius * h;
    let mut series = Vec::new();
    for i in 1..g.steps {
        let lp = fd_laplacian(path.potential.phi_plus(i), r, Stencil::Ball)?;
        let lm = fd_laplacian(path.potential.phi_minus(i), r, Stencil::Ball)?;
        let mask = support_mask(path, i);
        let rho = path.densities[i].values();
        let worst = (0..g.num_nodes())
            .filter(|&k| mask[k])
            .map(|k| lp.values[k] - lm.values[k] - s * dt * (1.0 - rho[k]))
            .fold(f64::NEG_INFINITY, f64::max);
        series.push(worst);
    }
    let worst = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let tol = cfg.c_jump * h;
    Ok(CheckResult::new(worst <= tol, worst, tol).with_series(series).detail("c_needed", worst / h).detail("c", cfg.c_jump))
}

/// Smallest `C` with `-C (1 + 1/(T - t)) <= Lap phi(t_i) <= C (1 + 1/t)` on support nodes.
pub fn oleinik_bound_check(path: &PathSolution, cfg: &DiagnosticsConfig) -> Result<CheckResult> {
    let g = path.grid;
    let r = cfg.laplacian_radius * g.h();
    let mut series = Vec::new();
    for i in 0..=g.steps {
        let phi = if i < g.steps { path.potential.phi_plus(i) } else { path.potential.phi_minus(i) };
        let lap = fd_laplacian(phi, r, Stencil::Ball)?;
        let mask = support_mask(path, i);
        let t = g.time(i);
        let mut c: f64 = 0.0;
        for k in (0..g.num_nodes()).filter(|&k| mask[k]) {
            let l = lap.values[k];
            if t > 0.0 {
                c = c.max(l / (1.0 + 1.0 / t));
            }
            if t < g.t_final {
                c = c.max(-l / (1.0 + 1.0 / (g.t_final - t)));
            }
        }
        series.push(c);
    }
    let c = series.iter().cloned().fold(0.0f64, f64::max);
    let ok = c.is_finite() && c <= cfg.oleinik_cap;
    Ok(CheckResult::new(ok, c, cfg.oleinik_cap).with_series(series))
}

/// Linear interpolation of nodal values at a point (periodic, any d).
fn linear_at(f: &ScalarField, x: &[f64]) -> f64 {
    let g = f.grid;
    let h = g.h();
    let d = g.d;
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
        acc += w * f.values[g.flat_index(&idx)];
    }
    acc
}

/// Density seen by each atom at each time (`[time][atom]`, NaN where undefined).
/// In 1-D this is the Lagrangian density of the mass-ordered atom chain, a
/// secant `dM / dX` over at least one cell of mass on each side; otherwise every time level is deposited with the same kernel so
/// smoothing cancels in time differences.
pub fn trajectory_densities(path: &PathSolution) -> Vec<Vec<f64>> {
    let g = path.grid;
    let d = g.d;
    let plan = &path.plan;
    let masses = plan.masses();
    let count = masses.len();
    if d == 1 {
        let mut order: Vec<usize> = (0..count).filter(|&k| masses[k] > 0.0).collect();
        if path.backend != crate::Backend::Quantile {
            order.sort_by(|&a, &b| {
                let x0 = plan.positions[0][a].total_cmp(&plan.positions[0][b]);
                x0.then(plan.positions[g.steps][a].total_cmp(&plan.positions[g.steps][b]))
            });
        }
        let len = order.len();
        let total: f64 = order.iter().map(|&k| masses[k]).sum();
        // mass coordinate of each atom centre along the chain
        let mut centre = Vec::with_capacity(len);
        let mut acc = 0.0;
        for &k in &order {
            centre.push(acc + 0.5 * masses[k]);
            acc += masses[k];
        }
        // chain index r + j*len is atom order[r] shifted by j periods
        let ext = |j: i64| -> (usize, f64) {
            let r = j.rem_euclid(len as i64) as usize;
            let wrap = j.div_euclid(len as i64) as f64;
            (order[r], wrap)
        };
        let mass_at = |j: i64| {
            let (_, w) = ext(j);
            centre[j.rem_euclid(len as i64) as usize] + w * total
        };
        let window = g.h() * total;
        let stencil: Vec<(i64, i64)> = (0..len as i64)
            .map(|r| {
                let mut q = r + 1;
                while mass_at(q) - mass_at(r) < window && q < r + len as i64 {
                    q += 1;
                }
                let mut p = r - 1;
                while mass_at(r) - mass_at(p) < window && p > r - len as i64 {
                    p -= 1;
                }
                (p, q)
            })
            .collect();
        return plan
            .positions
            .iter()
            .map(|x| {
                let mut out = vec![f64::NAN; count];
                if len < 3 {
                    return out;
                }
                for (r, &(p, q)) in stencil.iter().enumerate() {
                    let (kp, wp) = ext(p);
                    let (kq, wq) = ext(q);
                    let dx = (x[kq] + wq) - (x[kp] + wp);
                    if dx > 0.0 {
                        out[order[r]] = (mass_at(q) - mass_at(p)) / dx;
                    }
                }
                out
            })
            .collect();
    }
    plan.positions
        .iter()
        .map(|x| {
            let pts: Vec<f64> = x.iter().map(|v| v.rem_euclid(1.0)).collect();
            let f = ScalarField { grid: g, values: deposit(&g, Kernel::CubicBSpline, &pts, &masses) };
            (0..count).map(|k| linear_at(&f, &x[k * d..(k + 1) * d])).collect()
        })
        .collect()
}

/// Discrete `d^2/dt^2 log rho >= s (rho - 1)` along every atom trajectory
/// whose density stays above the floor.
pub fn log_density_convexity_check(path: &PathSolution, cfg: &DiagnosticsConfig) -> CheckResult {
    let g = path.grid;
    let d = g.d;
    let dt = g.dt();
    let s = path.kicks.gravity.sign();
    let floor = path.floor();
    let dens = trajectory_densities(path);
    let mut series = Vec::new();
    let mut checked = 0usize;
    for i in 1..g.steps {
        let mut worst = f64::INFINITY;
        for (k, a) in path.plan.atoms.iter().enumerate() {
            if a.mass <= 0.0 {
                continue;
            }
            let (rm, r0, rp) = (dens[i - 1][k], dens[i][k], dens[i + 1][k]);
            if !(rm >= floor && r0 >= floor && rp >= floor) {
                continue;
            }
            checked += 1;
            let lhs = rp.ln() + rm.ln() - 2.0 * r0.ln();
            // the source term uses the smooth path density; stencil mass cancels in `lhs` only
            let rho_i = linear_at(path.densities[i].as_scalar(), &path.plan.positions[i][k * d..(k + 1) * d]);
            worst = worst.min(lhs - s * dt * dt * (rho_i - 1.0));
        }
        series.push(if worst.is_finite() { worst } else { 0.0 });
    }
    let worst = series.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0);
    let tol = cfg.c_traj * dt * dt * g.h();
    CheckResult::new(worst >= -tol, 0.0f64.max(-worst), tol).with_series(series).detail("trajectory_samples", checked as f64)
}

/// Forward (path-infimum from the source potential) and backward (path-supremum
/// from the target potential) potentials compared on the support of `rho(t_i)`,
/// i.e. at particle positions. Candidate sets are restricted to chain
/// neighbours for large monotone couplings; this only widens the measured gap.
pub fn reversibility_check(path: &PathSolution, tol_rel: f64) -> CheckResult {
    let g = path.grid;
    let d = g.d;
    let steps = g.steps;
    let dt = g.dt();
    let fields = path.kicks.kick_fields();
    let kf = KickFields { grid: &g, fields: &fields };
    let pots = &path.atom_potentials;
    let plan = &path.plan;
    let radius = 16;
    let ns = pots.src_mass.len();
    let nt = pots.tgt_mass.len();
    let mut series = Vec::new();
    for i in 0..=steps {
        let worst = (0..plan.atoms.len())
            .into_par_iter()
            .filter(|&k| plan.atoms[k].mass > 0.0)
            .map(|k| {
                let z = &plan.positions[i][k * d..(k + 1) * d];
                let srcs = pots.window(pots.atom_src[k], ns, radius);
                let tgts = pots.window(pots.atom_tgt[k], nt, radius);
                let fwd = if i == 0 {
                    pots.psi0[pots.atom_src[k]]
                } else {
                    let m = pots.forward_at(&kf, i, z, &srcs);
                    if i < steps {
                        m - dt * kick_at(&g, &fields[i - 1], z)
                    } else {
                        m
                    }
                };
                let bwd = if i == steps { pots.psi_t[pots.atom_tgt[k]] } else { pots.backward_at(&kf, i, z, &tgts) };
                (fwd - bwd).abs()
            })
            .reduce(|| 0.0, f64::max);
        series.push(worst);
    }
    let osc = path.potential.plus.iter().chain(&path.potential.minus).map(|f| support_osc(path, f)).fold(0.0f64, f64::max);
    let worst = series.iter().cloned().fold(0.0f64, f64::max);
    let tol = tol_rel * osc.max(1e-300);
    let off = off_support_disagreement(path, &kf);
    CheckResult::new(worst <= tol || worst <= 1e-14, worst, tol)
        .with_series(series)
        .detail("osc_phi", osc)
        .detail("node_disagreement_mid", off)
}

fn support_osc(path: &PathSolution, f: &ScalarField) -> f64 {
    let (lo, hi) = f.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let _ = path;
    hi - lo
}

fn kick_at(g: &crate::grid::TorusGrid, k: &[f64], z: &[f64]) -> f64 {
    if g.d == 1 {
        interp_bspline_1d(k, g.h(), z[0]).0
    } else {
        crate::kernel::interpolate(g, crate::kernel::Kernel::CubicBSpline, k, z).0
    }
}

/// Largest forward/backward disagreement over all grid nodes at the middle
/// kick time (reported, not graded).
fn off_support_disagreement(path: &PathSolution, kf: &KickFields) -> f64 {
    let g = path.grid;
    let i = g.steps / 2;
    let pots = &path.atom_potentials;
    let all: Vec<usize> = (0..pots.tgt_mass.len()).collect();
    let fwd = path.potential.phi_plus(i);
    (0..g.num_nodes())
        .into_par_iter()
        .map(|z| (fwd.values[z] - pots.backward_at(kf, i, &g.coords(z), &all)).abs())
        .reduce(|| 0.0, f64::max)
}

/// L1 density errors and support-weighted L2 velocity errors per time step.
pub fn consistency_vs_reference(path: &PathSolution, reference: &Reference) -> Result<ErrorTable> {
    let g = path.grid;
    if reference.densities.len() != path.densities.len() || reference.velocities.len() != path.velocities.len() {
        return Err(Error::GridMismatch("reference has a different number of time steps".into()));
    }
    if reference.densities.iter().any(|r| r.grid != g) || reference.velocities.iter().any(|v| v.grid != g) {
        return Err(Error::GridMismatch("reference lives on a different grid".into()));
    }
    let mut table =
        ErrorTable { density_l1: Vec::new(), density_rel: Vec::new(), velocity_rel: Vec::new(), velocity_rel_path: 0.0 };
    let (mut path_num, mut path_den) = (0.0, 0.0);
    for (rho, r) in path.densities.iter().zip(&reference.densities) {
        let e = l1_distance(rho.as_scalar(), r);
        let dev = integrate(&ScalarField { grid: g, values: r.values.iter().map(|v| (v - 1.0).abs()).collect() });
        table.density_l1.push(e);
        table.density_rel.push(if dev > 1e-12 { e / dev } else { e });
    }
    for (i, (v, vr)) in path.velocities.iter().zip(&reference.velocities).enumerate() {
        // weight by the density the leg departs from (arrival density for v(T^-))
        let rho = path.densities[i.min(g.steps)].values();
        let mut num = Vec::with_capacity(g.num_nodes());
        let mut den = Vec::with_capacity(g.num_nodes());
        for k in 0..g.num_nodes() {
            let (mut e2, mut r2) = (0.0, 0.0);
            for (c, cr) in v.components.iter().zip(&vr.components) {
                e2 += (c.values[k] - cr.values[k]).powi(2);
                r2 += cr.values[k].powi(2);
            }
            num.push(rho[k] * e2);
            den.push(rho[k] * r2);
        }
        let (n2, d2) = (pairwise_sum(&num), pairwise_sum(&den));
        if i < g.steps {
            path_num += n2;
            path_den += d2;
        }
        table.velocity_rel.push(if d2 > 1e-24 { (n2 / d2).sqrt() } else { (n2 * g.cell_volume()).sqrt() });
    }
    table.velocity_rel_path =
        if path_den > 1e-24 { (path_num / path_den).sqrt() } else { (path_num * g.cell_volume() / g.steps as f64).sqrt() };
    Ok(table)
}

/// `action - dual_value`.
pub fn duality_gap(path: &PathSolution) -> f64 {
    path.action - path.dual_value
}

fn gap_check(path: &PathSolution, tol_rel: f64) -> CheckResult {
    let gap = duality_gap(path);
    let scale = path.action.abs().max(path.dual_value.abs());
    let rel = if scale > 1e-12 { gap / scale } else { gap };
    let weak = match path.kicks.gravity {
        Gravity::Repulsive => true,
        _ => gap >= -1e-9,
    };
    let ok = weak && (rel.abs() <= tol_rel || gap.abs() <= 1e-12);
    CheckResult::new(ok, rel, tol_rel).detail("gap", gap).detail("action", path.action).detail("dual", path.dual_value)
}

/// Modulus-of-continuity estimate of `grad phi` at the middle time:
/// `max |v(x) - v(y)| / (r log(1/r))` over node pairs at distance `r`.
pub fn modulus_of_continuity(path: &PathSolution) -> BTreeMap<String, f64> {
    let g = path.grid;
    let v = &path.velocities[g.steps / 2];
    let mut out = BTreeMap::new();
    for m in [1usize, 2, 4] {
        let r = m as f64 * g.h();
        if r >= 0.5 {
            continue;
        }
        let mut worst: f64 = 0.0;
        for k in 0..g.num_nodes() {
            let idx: Vec<i64> = g.multi_index(k).into_iter().map(|i| i as i64).collect();
            for a in 0..g.d {
                let mut j = idx.clone();
                j[a] += m as i64;
                let kk = g.flat_index(&j);
                let diff: f64 =
                    v.components.iter().map(|c| (c.values[k] - c.values[kk]).powi(2)).sum::<f64>().sqrt();
                worst = worst.max(diff);
            }
        }
        out.insert(format!("modulus_r{m}h"), worst / (r * (1.0 / r).ln()));
    }
    out
}

/// Runs every enabled check.
pub fn run_diagnostics(path: &PathSolution, cfg: &DiagnosticsConfig, reference: Option<&Reference>) -> Result<DiagnosticsReport> {
    let mut checks = BTreeMap::new();
    let skip = CheckResult::skipped;
    checks.insert(
        "energy_conservation".to_string(),
        if cfg.energy {
            let (e, drift) = energy_series(path);
            CheckResult::new(drift <= cfg.tol_energy, drift, cfg.tol_energy).with_series(e)
        } else {
            skip()
        },
    );
    for (name, f) in [
        ("displacement_convexity_power", ConvexityFunctional::Power(cfg.convexity_k)),
        ("displacement_convexity_log", ConvexityFunctional::Log),
    ] {
        let r = if cfg.convexity {
            let (gs, sd, ok) = displacement_convexity_report(path, f, cfg.tol_convexity)?;
            let deficit = sd.iter().fold(0.0f64, |m, v| m.max(-v));
            let scale = gs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut r = CheckResult::new(ok, deficit, cfg.tol_convexity * scale).with_series(sd).detail("scale", scale);
            // the repulsive kick reverses the source term; convexity is reported, not required
            if path.kicks.gravity == Gravity::Repulsive {
                r.status = Status::Skipped;
                r = r.detail("not_guaranteed", 1.0);
            }
            r
        } else {
            skip()
        };
        checks.insert(name.to_string(), r);
    }
    checks.insert("jump_inequality".into(), if cfg.jump { jump_inequality_check(path, cfg)? } else { skip() });
    checks.insert("oleinik_bound".into(), if cfg.oleinik { oleinik_bound_check(path, cfg)? } else { skip() });
    checks.insert(
        "log_density_convexity".into(),
        if cfg.log_density { log_density_convexity_check(path, cfg) } else { skip() },
    );
    checks.insert(
        "reversibility".into(),
        if cfg.reversibility { reversibility_check(path, cfg.tol_reversibility) } else { skip() },
    );
    let tol_gap = cfg.tol_gap.unwrap_or(path.options.tol_gap);
    checks.insert("duality_gap".into(), if cfg.duality { gap_check(path, tol_gap) } else { skip() });
    let consistency = match (cfg.consistency, reference) {
        (true, Some(r)) => {
            let t = consistency_vs_reference(path, r)?;
            let dmax = t.density_rel.iter().cloned().fold(0.0f64, f64::max);
            let vmax = t.velocity_rel.iter().cloned().fold(0.0f64, f64::max);
            let ok = dmax <= cfg.tol_density_ref && t.velocity_rel_path <= cfg.tol_velocity_ref;
            CheckResult::new(ok, dmax, cfg.tol_density_ref)
                .with_series(t.density_rel.clone())
                .detail("velocity_rel_path", t.velocity_rel_path)
                .detail("velocity_rel_max", vmax)
                .detail("velocity_tolerance", cfg.tol_velocity_ref)
        }
        _ => skip(),
    };
    checks.insert("consistency_vs_reference".into(), consistency);
    let mut metrics = modulus_of_continuity(path);
    metrics.insert("action".into(), path.action);
    metrics.insert("dual_value".into(), path.dual_value);
    metrics.insert("outer_iterations".into(), path.log.len() as f64);
    Ok(DiagnosticsReport { checks, metrics })
}

/// Support-weighted relative L2 difference of two vector fields.
pub fn weighted_l2_rel(weights: &[f64], v: &VectorField, reference: &VectorField) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..weights.len() {
        for (c, cr) in v.components.iter().zip(&reference.components) {
            num += weights[k] * (c.values[k] - cr.values[k]).powi(2);
            den += weights[k] * cr.values[k].powi(2);
        }
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}
