//! Run configuration: JSON schema, defaults and validation.

use crate::builtins;
use crate::diagnostics::{DiagnosticsConfig, Reference};
use crate::error::{Error, Result};
use crate::grid::{make_grid, DensityField, TorusGrid};
use crate::io::read_density_csv;
use crate::reconstruction::SolverOptions;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// One endpoint density source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    Uniform,
    Bump { center: f64, width: f64 },
    Linearized { epsilon: f64, a: f64 },
    RandomSmooth { modes: usize, amplitude: f64 },
    /// CSV with one value per node in row-major order; relative paths resolve
    /// against the config file's directory.
    File { path: PathBuf },
    /// `rho_<index>.csv` of an emitted bundle, verified against its manifest.
    Bundle { dir: PathBuf, index: usize },
}

/// Named endpoint pair or an explicit pair of sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Endpoints {
    Named(Named),
    Pair(Pair),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Named {
    Uniform,
    TwoBumps,
    Linearized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pair {
    pub rho0: Source,
    #[serde(rename = "rhoT")]
    pub rho_t: Source,
}

/// Parameters of the linearized family, used by `endpoints: "linearized"`.
fn default_epsilon() -> f64 {
    0.01
}
fn default_a0() -> f64 {
    1.0
}
fn default_a_t() -> f64 {
    0.5
}

/// A validated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(rename = "N")]
    pub steps: usize,
    pub endpoints: Endpoints,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_a0")]
    pub a0: f64,
    #[serde(default = "default_a_t", rename = "aT")]
    pub a_t: f64,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Directory that relative file sources resolve against (not serialized).
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn config_err(path: &str, msg: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), msg: msg.into() }
}

/// Parses and validates a JSON config; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let p = e.path().to_string();
        config_err(if p.is_empty() { "." } else { &p }, e.into_inner().to_string())
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

/// Reads a config file; relative file sources resolve against its directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf);
    Ok(cfg)
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(path, format!("{v} must be positive and finite")))
    }
}

/// Range checks that the schema cannot express.
pub fn validate(cfg: &RunConfig) -> Result<()> {
    if !(1..=3).contains(&cfg.d) {
        return Err(config_err("d", format!("{} outside 1..=3", cfg.d)));
    }
    if cfg.n < 2 {
        return Err(config_err("n", format!("{} must be at least 2", cfg.n)));
    }
    positive("T", cfg.t_final)?;
    if cfg.steps < 2 {
        return Err(config_err("N", format!("{} must be at least 2", cfg.steps)));
    }
    let s = &cfg.solver;
    if !(s.omega > 0.0 && s.omega <= 1.0) {
        return Err(config_err("solver.omega", format!("{} outside (0, 1]", s.omega)));
    }
    positive("solver.tol_fp", s.tol_fp)?;
    positive("solver.tol_gap", s.tol_gap)?;
    positive("solver.rho_floor", s.rho_floor)?;
    if s.max_iter == 0 {
        return Err(config_err("solver.max_iter", "must be at least 1"));
    }
    if !(s.slope_window.lo < s.slope_window.hi) {
        return Err(config_err("solver.slope_window", "lo must be below hi"));
    }
    let dg = &cfg.diagnostics;
    for (name, v) in [
        ("diagnostics.tol_energy", dg.tol_energy),
        ("diagnostics.tol_convexity", dg.tol_convexity),
        ("diagnostics.c_jump", dg.c_jump),
        ("diagnostics.oleinik_cap", dg.oleinik_cap),
        ("diagnostics.c_traj", dg.c_traj),
        ("diagnostics.tol_reversibility", dg.tol_reversibility),
        ("diagnostics.tol_density_ref", dg.tol_density_ref),
        ("diagnostics.tol_velocity_ref", dg.tol_velocity_ref),
    ] {
        positive(name, v)?;
    }
    if let Some(t) = dg.tol_gap {
        positive("diagnostics.tol_gap", t)?;
    }
    if dg.convexity_k < 1.0 {
        return Err(config_err("diagnostics.convexity_k", format!("{} must be at least 1", dg.convexity_k)));
    }
    if dg.laplacian_radius < 1.0 {
        return Err(config_err("diagnostics.laplacian_radius", "ball radius must be at least one grid spacing"));
    }
    positive("epsilon", cfg.epsilon)?;
    Ok(())
}

impl RunConfig {
    pub fn grid(&self) -> Result<TorusGrid> {
        make_grid(self.d, self.n, self.t_final, self.steps)
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(b) if path.is_relative() => b.join(path),
            _ => path.to_path_buf(),
        }
    }

    fn source(&self, grid: TorusGrid, src: &Source, which: &str) -> Result<DensityField> {
        match src {
            Source::Uniform => Ok(builtins::uniform(grid)),
            Source::Bump { center, width } => builtins::bump(grid, *center, *width),
            Source::Linearized { epsilon, a } => builtins::linearized_density(grid, *epsilon, *a),
            Source::RandomSmooth { modes, amplitude } => {
                let seed = if which == "rho0" { self.seed } else { self.seed.wrapping_add(1) };
                builtins::random_smooth(grid, seed, *modes, *amplitude)
            }
            Source::File { path } => read_density_csv(&self.resolve(path), grid),
            Source::Bundle { dir, index } => crate::pipeline::read_bundle_density(&self.resolve(dir), *index, grid),
        }
    }

    /// Endpoint densities on the configured grid.
    pub fn endpoints(&self) -> Result<(DensityField, DensityField)> {
        let grid = self.grid()?;
        match &self.endpoints {
            Endpoints::Named(Named::Uniform) => Ok((builtins::uniform(grid), builtins::uniform(grid))),
            Endpoints::Named(Named::TwoBumps) => builtins::two_bumps(grid),
            Endpoints::Named(Named::Linearized) => builtins::linearized(grid, self.epsilon, self.a0, self.a_t),
            Endpoints::Pair(p) => Ok((self.source(grid, &p.rho0, "rho0")?, self.source(grid, &p.rho_t, "rhoT")?)),
        }
    }

    /// Analytic reference when the endpoints have one.
    pub fn reference(&self) -> Result<Option<Reference>> {
        let grid = self.grid()?;
        Ok(match &self.endpoints {
            Endpoints::Named(Named::Uniform) => Some(builtins::uniform_reference(grid)),
            Endpoints::Named(Named::Linearized) if self.solver.gravity == crate::Gravity::Attractive => {
                Some(builtins::linearized_reference(grid, self.epsilon, self.a0, self.a_t))
            }
            _ => None,
        })
    }

    /// Canonical JSON echo with every default filled in.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
