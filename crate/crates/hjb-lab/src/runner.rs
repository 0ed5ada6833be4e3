//! Command execution: turn a validated [`Config`] into solver runs, CSV
//! artifacts, and an exit code.
//!
//! Normal progress goes to stdout (suppressed by `--quiet`); errors always go
//! to stderr. Artifacts land in the configured output directory, one file per
//! kind, written atomically.

use std::path::{Path, PathBuf};

use hjb_core::ergodic::{ergodic_study, solve_stationary, StationaryOpts};
use hjb_core::evolution::{evolve, Engine, EvolveOptions};
use hjb_core::field::ScalarField;
use hjb_core::grid::{metrics, GridFunction, TorusGrid};
use hjb_core::model::{check_diffusion, check_h1, check_h2prime, check_levy, ProblemSpec};

use crate::config::{Command, Config, Numerics};
use crate::csvout::{self, Diagnostics};
use crate::{exit, exit_code_for};

/// Execute one configured command. Returns the process exit code.
pub fn run(cfg: &Config, out_dir: Option<&Path>, seed: Option<u64>, quiet: bool) -> u8 {
    let dir = out_dir.unwrap_or(&cfg.output.dir).to_path_buf();
    let result = match cfg.command {
        Command::Check => cmd_check(cfg, &dir, seed, quiet),
        Command::Evolve => cmd_evolve(cfg, &dir, quiet),
        Command::Stationary => cmd_stationary(cfg, &dir, quiet),
        Command::Ergodic => cmd_ergodic(cfg, &dir, quiet),
        Command::VerifyAll => cmd_verify_all(&dir, quiet),
    };
    match result {
        Ok(code) => code,
        Err(RunError::Solver(e)) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
        Err(RunError::Io(path, e)) => {
            eprintln!("error: cannot write {}: {e}", path.display());
            exit::CONFIG
        }
    }
}

enum RunError {
    Solver(hjb_core::Error),
    Io(PathBuf, std::io::Error),
}

impl From<hjb_core::Error> for RunError {
    fn from(e: hjb_core::Error) -> Self {
        RunError::Solver(e)
    }
}

type RunResult = Result<u8, RunError>;

fn save(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, RunError> {
    let path = dir.join(name);
    csvout::write_atomic(&path, contents).map_err(|e| RunError::Io(path.clone(), e))?;
    Ok(path)
}

macro_rules! say {
    ($quiet:expr, $($arg:tt)*) => {
        if !$quiet {
            println!($($arg)*);
        }
    };
}

/// The problem section is mandatory for every command but `verify-all`;
/// config validation enforces that, so absence here is a programming error.
fn spec_of(cfg: &Config) -> &ProblemSpec {
    cfg.spec.as_ref().expect("validated config carries a problem")
}

fn grid_of(spec: &ProblemSpec, numerics: &Numerics) -> Result<TorusGrid, RunError> {
    Ok(TorusGrid::new(spec.dim, numerics.n)?)
}

fn stationary_opts(numerics: &Numerics) -> StationaryOpts {
    let mut o = StationaryOpts::defaults();
    o.residual_tol = numerics.residual_tol;
    o.cells_per_decade = numerics.q;
    o.cfl_safety = numerics.cfl_safety;
    o
}

fn sample_on(grid: TorusGrid, f: &ScalarField) -> GridFunction {
    let mut vals = vec![0.0f64; grid.len()];
    let mut x = [0.0f64; 2];
    for (i, v) in vals.iter_mut().enumerate() {
        grid.point(i, &mut x);
        *v = f.eval(&x[..grid.dim()]);
    }
    GridFunction::from_raw(grid, vals)
}

/// Table/scheme facts for a run, read off a fresh engine calibrated to the
/// gradient scale of `state`.
fn diagnostics_for(
    spec: &ProblemSpec,
    grid: TorusGrid,
    numerics: &Numerics,
    state: &GridFunction,
) -> Result<Diagnostics, RunError> {
    let mut engine = Engine::new(spec, grid, numerics.q, numerics.cfl_safety)?;
    let p = engine.gradient_sup(state.values());
    engine.recalibrate(p);
    let mut d = Diagnostics {
        theta: engine.params().sup_theta(),
        dt: engine.dt(),
        ..Diagnostics::default()
    };
    if let Some(t) = engine.table() {
        let (lo, hi) = t.kappa_range();
        d.node_count = t.node_count();
        d.dropped_tail_mass = t.dropped_tail_mass;
        d.sup_outflow = t.sup_outflow;
        d.kappa_min = lo;
        d.kappa_max = hi;
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

fn cmd_check(cfg: &Config, dir: &Path, seed: Option<u64>, quiet: bool) -> RunResult {
    let spec = spec_of(cfg);
    let seeds: Vec<u64> = match seed {
        Some(s) => vec![s],
        None => cfg.numerics.seeds.clone(),
    };
    let mut rows = Vec::new();
    let mut all_pass = true;
    for &s in &seeds {
        let reports = [
            check_diffusion(spec, 256, s)?,
            check_h1(spec, 256, s)?,
            check_h2prime(spec, 256, s)?,
            check_levy(spec, 256, s)?,
        ];
        for r in reports {
            all_pass &= r.pass;
            say!(
                quiet,
                "check {:<24} seed {s}: {} (worst slack {:.3e}, {} samples)",
                r.name,
                if r.pass { "PASS" } else { "FAIL" },
                r.worst_slack,
                r.samples,
            );
            if let Some(w) = &r.witness {
                say!(quiet, "  witness: {w}");
            }
            rows.push((s, r));
        }
    }
    let path = save(dir, "checks.csv", &csvout::checks_csv(&rows))?;
    say!(quiet, "wrote {}", path.display());
    Ok(if all_pass { exit::PASS } else { exit::VIOLATION })
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

fn cmd_evolve(cfg: &Config, dir: &Path, quiet: bool) -> RunResult {
    let spec = spec_of(cfg);
    let grid = grid_of(spec, &cfg.numerics)?;
    let u0 = match &spec.initial {
        Some(init) => sample_on(grid, &init.field),
        None => GridFunction::zeros(grid),
    };
    let mut opts = EvolveOptions::to_time(cfg.numerics.t_final);
    opts.sample_every = cfg.output.sample_every;
    opts.cells_per_decade = cfg.numerics.q;
    opts.cfl_safety = cfg.numerics.cfl_safety;
    let trace = evolve(spec, &u0, &opts)?;

    let m = metrics(&trace.final_state);
    let reached = trace.steps_taken as f64 * trace.dt;
    say!(
        quiet,
        "evolved to t = {:.6} of {} in {} steps (dt {:.3e}, status {:?}); final osc {:.6}, sup {:.6}",
        reached.min(cfg.numerics.t_final),
        cfg.numerics.t_final,
        trace.steps_taken,
        trace.dt,
        trace.status,
        m.osc,
        m.sup_norm,
    );
    if trace.theta_warnings > 0 {
        say!(quiet, "note: dissipation ratchet engaged {} times", trace.theta_warnings);
    }

    let mut diag = diagnostics_for(spec, grid, &cfg.numerics, &trace.final_state)?;
    diag.dt = trace.dt;
    for (name, contents) in [
        ("trace.csv", csvout::trace_csv(&trace)),
        ("state.csv", csvout::state_csv(&trace.final_state)),
        ("diagnostics.csv", csvout::diagnostics_csv(&diag)),
    ] {
        let path = save(dir, name, &contents)?;
        say!(quiet, "wrote {}", path.display());
    }
    Ok(exit::PASS)
}

// ---------------------------------------------------------------------------
// stationary
// ---------------------------------------------------------------------------

fn cmd_stationary(cfg: &Config, dir: &Path, quiet: bool) -> RunResult {
    let spec = spec_of(cfg);
    let grid = grid_of(spec, &cfg.numerics)?;
    let opts = stationary_opts(&cfg.numerics);
    let sol = solve_stationary(spec, grid, None, &opts)?;

    let m = metrics(&sol.state);
    say!(
        quiet,
        "stationary solve: residual {:.3e} after {} steps; osc {:.6}, sup {:.6}, lipschitz {:.6}",
        sol.residual,
        sol.steps,
        m.osc,
        m.sup_norm,
        m.lipschitz,
    );
    if sol.theta_warnings > 0 {
        say!(quiet, "note: dissipation ratchet engaged {} times", sol.theta_warnings);
    }

    let diag = diagnostics_for(spec, grid, &cfg.numerics, &sol.state)?;
    for (name, contents) in [
        ("state.csv", csvout::state_csv(&sol.state)),
        ("diagnostics.csv", csvout::diagnostics_csv(&diag)),
    ] {
        let path = save(dir, name, &contents)?;
        say!(quiet, "wrote {}", path.display());
    }
    Ok(exit::PASS)
}

// ---------------------------------------------------------------------------
// ergodic
// ---------------------------------------------------------------------------

fn cmd_ergodic(cfg: &Config, dir: &Path, quiet: bool) -> RunResult {
    let spec = spec_of(cfg);
    let grid = grid_of(spec, &cfg.numerics)?;
    let opts = stationary_opts(&cfg.numerics);
    let study = ergodic_study(spec, grid, 0, &cfg.numerics.horizons, &opts)?;

    say!(
        quiet,
        "ergodic constant: c_discount {:.6} (fit residual {:.3e}), c_slope {:.6} (fit residual {:.3e}), agreement gap {:.3e}",
        study.discount.c_discount,
        study.discount.fit_residual,
        study.two_route.c_slope,
        study.two_route.slope_fit_residual,
        study.agreement_gap,
    );
    for (t, d) in &study.two_route.defects {
        say!(quiet, "  profile defect at T = {t}: {d:.3e}");
    }

    let csv = csvout::ergodic_csv(
        &study.discount,
        Some(&study.two_route),
        Some(study.agreement_gap),
    );
    for (name, contents) in [
        ("ergodic.csv", csv),
        ("profile.csv", csvout::state_csv(&study.discount.profile)),
    ] {
        let path = save(dir, name, &contents)?;
        say!(quiet, "wrote {}", path.display());
    }
    Ok(exit::PASS)
}

// ---------------------------------------------------------------------------
// verify-all
// ---------------------------------------------------------------------------

fn cmd_verify_all(dir: &Path, quiet: bool) -> RunResult {
    let outcomes = crate::suite::run_all();
    for o in &outcomes {
        say!(quiet, "{}", o.line());
    }
    let all_pass = outcomes.iter().all(|o| o.pass);
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    say!(
        quiet,
        "verdict: {} ({}/{} criteria pass)",
        if all_pass { "PASS" } else { "FAIL" },
        outcomes.len() - failed,
        outcomes.len(),
    );
    let path = save(dir, "verdicts.csv", &crate::suite::verdicts_csv(&outcomes))?;
    say!(quiet, "wrote {}", path.display());
    Ok(if all_pass { exit::PASS } else { exit::VIOLATION })
}
