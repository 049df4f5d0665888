//! Configured runs: solve, diagnose, and emit a hashed bundle of field files.

use crate::config::RunConfig;
use crate::diagnostics::{run_diagnostics, CheckResult, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::grid::{DensityField, ScalarField, TorusGrid};
use crate::io::{read_density_csv, scalar_csv, sha256_hex, vector_csv, write_hashed};
use crate::paths::Segment;
use crate::poisson::poisson_from_values;
use crate::reconstruction::{solve_reconstruction, PathSolution};
use crate::transport::{kantorovich_lp_guarded, CostTable};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "RECONSTRUCT_OUTPUT_ROOT";

/// Command-line switches of a run; all of them are echoed into the manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunFlags {
    pub config_path: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Solve and diagnose without writing any file.
    pub check_only: bool,
    /// Compare the solver's coupling with an exact LP over all node pairs.
    pub oracle: bool,
}

/// One emitted file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// LP comparison of the solver's coupling under its converged kicks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    /// Exact LP optimum over node pairs with per-pair minimized path costs.
    pub lp_value: f64,
    /// Total path cost of the solver's plan under the same kicks.
    pub solver_value: f64,
    pub abs_diff: f64,
    pub tolerance: f64,
}

/// Emitted (or, with `check_only`, computed) artifacts of one run.
#[derive(Debug, Clone)]
pub struct PathBundle {
    pub dir: Option<PathBuf>,
    pub files: Vec<FileEntry>,
    pub manifest: serde_json::Value,
    pub report: DiagnosticsReport,
    pub converged: bool,
}

impl PathBundle {
    /// 0 iff the solver converged and every enabled check passed.
    pub fn exit_code(&self) -> i32 {
        if self.converged && self.report.all_passed() {
            0
        } else {
            2
        }
    }
}

/// Result of [`run_pipeline`].
pub struct RunOutcome {
    pub path: PathSolution,
    pub bundle: PathBundle,
    pub oracle: Option<OracleRecord>,
}

/// Output directory: the flag, then the config, then `$RECONSTRUCT_OUTPUT_ROOT/<config stem>`, then `out`.
pub fn resolve_output_dir(cfg: &RunConfig, flags: &RunFlags) -> PathBuf {
    if let Some(d) = &flags.output_dir {
        return d.clone();
    }
    if let Some(d) = &cfg.output_dir {
        return d.clone();
    }
    let stem = flags
        .config_path
        .as_ref()
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(stem),
        _ => PathBuf::from("out").join(stem),
    }
}

/// Solves, diagnoses and (unless `check_only`) writes the bundle.
/// A non-converged solve still produces a bundle; see [`PathBundle::exit_code`].
pub fn run_pipeline(cfg: &RunConfig, flags: &RunFlags) -> Result<RunOutcome> {
    crate::config::validate(cfg)?;
    let grid = cfg.grid()?;
    let (rho0, rho_t) = cfg.endpoints()?;
    let path = solve_reconstruction(&rho0, &rho_t, &grid, &cfg.solver)?;
    let reference = cfg.reference()?;
    let mut report = run_diagnostics(&path, &cfg.diagnostics, reference.as_ref())?;
    let oracle = if flags.oracle {
        let rec = lp_oracle(&path)?;
        let ok = rec.abs_diff <= rec.tolerance;
        let mut check = CheckResult {
            status: if ok { crate::diagnostics::Status::Pass } else { crate::diagnostics::Status::Fail },
            measured: rec.abs_diff,
            tolerance: rec.tolerance,
            series: Vec::new(),
            details: Default::default(),
        };
        check.details.insert("lp_value".into(), rec.lp_value);
        check.details.insert("solver_value".into(), rec.solver_value);
        report.checks.insert("lp_oracle".into(), check);
        Some(rec)
    } else {
        None
    };
    let dir = resolve_output_dir(cfg, flags);
    let meta = json!({
        "config": cfg.to_json(),
        "flags": {
            "config_path": flags.config_path,
            "output_dir": dir,
            "check_only": flags.check_only,
            "oracle": flags.oracle,
        },
        "oracle": oracle,
    });
    let bundle = if flags.check_only {
        let manifest = manifest_json(&path, &report, &[], &meta);
        PathBundle { dir: None, files: Vec::new(), manifest, report, converged: path.converged }
    } else {
        emit_outputs(&path, &report, &dir, &meta)?
    };
    Ok(RunOutcome { path, bundle, oracle })
}

/// Exact LP over node pairs with costs of per-pair minimizing paths under the
/// converged kicks, compared with the solver's plan cost.
pub fn lp_oracle(path: &PathSolution) -> Result<OracleRecord> {
    let g = path.grid;
    let m = g.num_nodes();
    if m * m > path.options.lp_guard {
        return Err(Error::GuardExceeded { pairs: m * m, guard: path.options.lp_guard });
    }
    let d = g.d;
    let fields = path.kicks.kick_fields();
    let refs: Vec<&[f64]> = fields.iter().map(|f| f.as_slice()).collect();
    let seg = Segment { grid: &g, dt: g.dt(), kicks: &refs };
    let values: Vec<f64> = (0..m * m)
        .into_par_iter()
        .map(|k| {
            let x = g.coords(k / m);
            let y = g.coords(k % m);
            // cheapest of the nearest images per axis and their neighbours
            let mut best = f64::INFINITY;
            for shift in 0..3usize.pow(d as u32) {
                let mut rem = shift;
                let yy: Vec<f64> = (0..d)
                    .map(|a| {
                        let s = (rem % 3) as f64 - 1.0;
                        rem /= 3;
                        let near = x[a] + crate::grid::periodic_diff(y[a], x[a]);
                        near + s
                    })
                    .collect();
                let mut xs = seg.straight(&x, &yy);
                best = best.min(seg.solve(&mut xs));
            }
            best
        })
        .collect();
    let table = CostTable { rows: m, cols: m, values, legs: g.steps };
    let (rho0, rho_t) = (&path.densities[0], &path.densities[g.steps]);
    let lp = kantorovich_lp_guarded(rho0, rho_t, &table, path.options.lp_guard)?;
    let masses = path.plan.masses();
    let solver_value: f64 = (0..masses.len())
        .map(|k| {
            let xs: Vec<f64> = (0..=g.steps).flat_map(|i| path.plan.positions[i][k * d..(k + 1) * d].to_vec()).collect();
            masses[k] * seg.cost_of(&xs)
        })
        .sum();
    let tolerance = 1e-6 * lp.cost.abs().max(1e-3);
    Ok(OracleRecord { lp_value: lp.cost, solver_value, abs_diff: (solver_value - lp.cost).abs(), tolerance })
}

fn manifest_json(path: &PathSolution, report: &DiagnosticsReport, files: &[FileEntry], meta: &serde_json::Value) -> serde_json::Value {
    json!({
        "format": "euler-poisson-path-bundle/1",
        "crate": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "grid": path.grid,
        "meta": meta,
        "solver": {
            "converged": path.converged,
            "backend": path.backend,
            "theta": path.theta,
            "action": path.action,
            "dual_value": path.dual_value,
            "options": path.options,
        },
        "convergence_log": path.log,
        "timings": { "outer_iterations": path.log.len() },
        "checks_passed": report.all_passed(),
        "files": files,
    })
}

/// Field of `p(t_i)`; the endpoints carry the potentials of the given densities.
fn p_field(path: &PathSolution, i: usize) -> ScalarField {
    let g = path.grid;
    if i == 0 || i == g.steps {
        poisson_from_values(&g, path.densities[i].values()).p
    } else {
        path.kicks.p(i).p.clone()
    }
}

/// Writes `rho_i`, `phi_plus_i`, `phi_minus_i`, `p_i`, `v_i` for every `t_i`,
/// then `report.json` and `manifest.json`. Bytes depend only on the path.
/// `phi_minus_0 = phi_plus_0` and `phi_plus_N = phi_minus_N` (no kick at the ends).
pub fn emit_outputs(path: &PathSolution, report: &DiagnosticsReport, dir: &Path, meta: &serde_json::Value) -> Result<PathBundle> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let g = path.grid;
    let steps = g.steps;
    let mut files = Vec::new();
    let mut put = |name: String, bytes: &[u8]| -> Result<()> {
        let sha256 = write_hashed(&dir.join(&name), bytes)?;
        files.push(FileEntry { name, sha256, bytes: bytes.len() });
        Ok(())
    };
    for i in 0..=steps {
        let plus = if i < steps { path.potential.phi_plus(i) } else { path.potential.phi_minus(steps) };
        let minus = if i > 0 { path.potential.phi_minus(i) } else { path.potential.phi_plus(0) };
        put(format!("rho_{i}.csv"), scalar_csv(path.densities[i].as_scalar()).as_bytes())?;
        put(format!("phi_plus_{i}.csv"), scalar_csv(plus).as_bytes())?;
        put(format!("phi_minus_{i}.csv"), scalar_csv(minus).as_bytes())?;
        put(format!("p_{i}.csv"), scalar_csv(&p_field(path, i)).as_bytes())?;
        put(format!("v_{i}.csv"), vector_csv(&path.velocities[i]).as_bytes())?;
    }
    put("report.json".into(), report.to_json().as_bytes())?;
    let manifest = manifest_json(path, report, &files, meta);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let mpath = dir.join("manifest.json");
    std::fs::write(&mpath, text.as_bytes()).map_err(|e| Error::io(&mpath, e))?;
    Ok(PathBundle { dir: Some(dir.to_path_buf()), files, manifest, report: report.clone(), converged: path.converged })
}

/// Reads `rho_i.csv` from an emitted bundle after checking its hash against the manifest.
pub fn read_bundle_density(dir: &Path, i: usize, grid: TorusGrid) -> Result<DensityField> {
    let mpath = dir.join("manifest.json");
    let text = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse { path: mpath.clone(), msg: e.to_string() })?;
    let name = format!("rho_{i}.csv");
    let entry = manifest["files"]
        .as_array()
        .and_then(|fs| fs.iter().find(|f| f["name"] == name.as_str()))
        .ok_or_else(|| Error::Parse { path: mpath.clone(), msg: format!("manifest does not list {name}") })?;
    let fpath = dir.join(&name);
    let bytes = std::fs::read(&fpath).map_err(|e| Error::io(&fpath, e))?;
    if entry["sha256"] != sha256_hex(&bytes).as_str() {
        return Err(Error::Parse { path: fpath, msg: "content hash differs from the manifest".into() });
    }
    read_density_csv(&fpath, grid)
}
