//! `reconstruct --config <file> [--output-dir <dir>] [--check-only] [--oracle]`

use clap::Parser;
use euler_poisson_path::config::load_config;
use euler_poisson_path::pipeline::{run_pipeline, RunFlags};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Reconstructs the least-action Euler-Poisson path between two densities and
/// checks its structural invariants.
#[derive(Parser, Debug)]
#[command(name = "reconstruct", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: config `output_dir`, then `$RECONSTRUCT_OUTPUT_ROOT/<config stem>`, then `out/<config stem>`).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Solve and run diagnostics without writing files.
    #[arg(long)]
    check_only: bool,
    /// Add the exact-LP comparison of the coupling (small grids only).
    #[arg(long)]
    oracle: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let cfg = match load_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let flags = RunFlags { config_path: Some(cli.config), output_dir: cli.output_dir, check_only: cli.check_only, oracle: cli.oracle };
    match run_pipeline(&cfg, &flags) {
        Ok(out) => {
            let b = &out.bundle;
            println!(
                "converged={} iterations={} action={:e} dual={:e}",
                out.path.converged,
                out.path.log.len(),
                out.path.action,
                out.path.dual_value
            );
            for (name, c) in &b.report.checks {
                println!("{name:<30} {:?} measured={:e} tolerance={:e}", c.status, c.measured, c.tolerance);
            }
            if let Some(dir) = &b.dir {
                println!("wrote {} files to {}", b.files.len() + 1, dir.display());
            }
            eprintln!("elapsed {:.3}s", start.elapsed().as_secs_f64());
            ExitCode::from(b.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
