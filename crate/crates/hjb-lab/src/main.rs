//! `hjb-lab`: config-driven batch runs for the torus HJB laboratory.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use hjb_lab::{config, exit, runner};

/// Run one experiment described by a TOML configuration file.
///
/// The file's `command` key selects what to do: `check` (structural
/// assumption checks), `evolve` (parabolic run), `stationary` (discounted
/// solve), `ergodic` (two-route ergodic study), or `verify-all` (the full
/// verdict suite). Artifacts are CSV files in the output directory.
///
/// Exit codes: 0 success, 1 a check or verdict failed, 2 configuration
/// error, 3 solver divergence.
#[derive(Parser)]
#[command(name = "hjb-lab", version)]
struct Cli {
    /// Path to the experiment configuration (TOML).
    config: PathBuf,

    /// Override the configured artifact directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Run checks with this single seed instead of the configured list.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// Suppress progress output on stdout (errors still go to stderr).
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config::load(&cli.config) {
        Ok(cfg) => cfg,
        Err(errors) => {
            eprintln!(
                "invalid configuration {} ({} problem{}):",
                cli.config.display(),
                errors.len(),
                if errors.len() == 1 { "" } else { "s" },
            );
            for e in &errors {
                eprintln!("  {e}");
            }
            return ExitCode::from(exit::CONFIG);
        }
    };
    ExitCode::from(runner::run(&cfg, cli.out.as_deref(), cli.seed, cli.quiet))
}
