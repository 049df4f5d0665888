//! Configured run end to end: parse a JSON config, solve, diagnose, write the
//! hashed bundle and read a density back through its manifest.
//!
//! `cargo run --release --example pipeline_bundle`

use euler_poisson_path::config::parse_config;
use euler_poisson_path::pipeline::{read_bundle_density, run_pipeline, RunFlags};

fn main() -> euler_poisson_path::Result<()> {
    let cfg = parse_config(
        r#"{
            "d": 1, "n": 128, "T": 1.0, "N": 8,
            "endpoints": {"rho0": {"kind": "bump", "center": 0.3, "width": 0.12},
                          "rhoT": {"kind": "random_smooth", "modes": 3, "amplitude": 0.4}},
            "seed": 5,
            "solver": {"gravity": "repulsive"}
        }"#,
    )?;
    let dir = std::env::temp_dir().join("euler_poisson_path_bundle");
    let flags = RunFlags { output_dir: Some(dir.clone()), ..Default::default() };
    let out = run_pipeline(&cfg, &flags)?;
    println!("wrote {} files to {}", out.bundle.files.len() + 1, dir.display());
    for f in out.bundle.files.iter().take(5) {
        println!("  {:<18} {:>6} bytes  sha256 {}", f.name, f.bytes, &f.sha256[..16]);
    }
    println!("all checks passed: {}, exit code {}", out.bundle.report.all_passed(), out.bundle.exit_code());
    let mid = read_bundle_density(&dir, cfg.steps / 2, cfg.grid()?)?;
    let max = mid.values().iter().cloned().fold(f64::MIN, f64::max);
    println!("rho at t = T/2 read back from the bundle: max {max:.4}");
    Ok(())
}
