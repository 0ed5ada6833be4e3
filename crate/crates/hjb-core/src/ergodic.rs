//! Long-run (ergodic) analysis: the stationary discounted problem
//! `λu − Tr(AD²u) − I[u] + H(x,Du) = 0`, the vanishing-discount limit
//! `λu_λ(x) → c`, and the time-route `u(·,t)/t → c` — two independent
//! estimates of the ergodic constant that the drivers here compute and
//! compare.
//!
//! The stationary solver is pseudo-time marching with the scheme from
//! [`crate::evolution`], accelerated by an *exact* constant-mode shift: for
//! any constant `s`, `R(u + s) = R(u) + λs` identically (the spatial terms
//! are difference-form, so constants pass through them as exact zeros).
//! Setting `s = −mean(R)/λ` therefore zeroes the residual mean in one
//! algebraic step, removing the `O(1/λ)` slow mode that plain marching would
//! crawl along; the oscillating part still relaxes at the λ-independent
//! profile rate.

use alloc::format;
use alloc::vec::Vec;

use crate::evolution::{
    estimate_slope, evolve, Engine, EvolveOptions, EvolutionTrace, CELLS_PER_DECADE_DEFAULT,
    THETA_REFRESH_EVERY,
};
use crate::grid::{metrics, GridFunction, TorusGrid};
use crate::local::CFL_SAFETY_DEFAULT;
use crate::math::{fabs, linear_fit, pow};
use crate::model::ProblemSpec;
use crate::{Error, Result};

/// Default residual tolerance for stationary solves.
pub const RESIDUAL_TOL_DEFAULT: f64 = 1e-8;
/// Steps between constant-mode equilibrations (and residual-history records).
pub const EQUILIBRATE_EVERY: usize = 50;
/// Default step budget per stationary solve.
pub const MAX_STEPS_DEFAULT: usize = 2_000_000;
/// Number of discount levels in the vanishing-discount schedule.
pub const DISCOUNT_LEVELS: usize = 8;
/// Points of the schedule tail used for the λ → 0 extrapolation.
pub const FIT_TAIL: usize = 4;

/// Knobs for [`solve_stationary`].
#[derive(Clone, Debug)]
pub struct StationaryOpts {
    pub residual_tol: f64,
    pub max_steps: usize,
    pub equilibrate_every: usize,
    pub cells_per_decade: usize,
    pub cfl_safety: f64,
    pub theta_refresh_every: usize,
}

impl StationaryOpts {
    pub fn defaults() -> Self {
        StationaryOpts {
            residual_tol: RESIDUAL_TOL_DEFAULT,
            max_steps: MAX_STEPS_DEFAULT,
            equilibrate_every: EQUILIBRATE_EVERY,
            cells_per_decade: CELLS_PER_DECADE_DEFAULT,
            cfl_safety: CFL_SAFETY_DEFAULT,
            theta_refresh_every: THETA_REFRESH_EVERY,
        }
    }
}

/// Output of [`solve_stationary`].
#[derive(Clone, Debug)]
pub struct StationaryResult {
    pub state: GridFunction,
    /// Final sup-norm residual.
    pub residual: f64,
    pub steps: usize,
    /// Residual snapshots every [`StationaryOpts::equilibrate_every`] steps.
    pub history: Vec<f64>,
    pub theta_warnings: usize,
}

/// March `∂_t u = −R(u)` to the stationary solution of the discounted
/// problem (`λ > 0` required), warm-starting from `warm` when given.
pub fn solve_stationary(
    spec: &ProblemSpec,
    grid: TorusGrid,
    warm: Option<&GridFunction>,
    opts: &StationaryOpts,
) -> Result<StationaryResult> {
    if spec.lambda <= 0.0 {
        return Err(Error::Usage(format!(
            "stationary solve needs a positive discount, got lambda = {}",
            spec.lambda
        )));
    }
    if opts.equilibrate_every == 0 {
        return Err(Error::Usage("equilibrate_every must be at least 1".into()));
    }
    let mut engine = Engine::new(spec, grid, opts.cells_per_decade, opts.cfl_safety)?;
    let mut u = match warm {
        Some(w) => {
            if w.grid().len() != grid.len() {
                return Err(Error::Usage("warm start does not match the grid".into()));
            }
            w.values().to_vec()
        }
        None => alloc::vec![0.0; grid.len()],
    };
    engine.recalibrate(engine.gradient_sup(&u));
    let mut dt = engine.dt();
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::BlowUp { step: 0 });
    }

    let lambda = spec.lambda;
    let mut history = Vec::new();
    let mut theta_warnings = 0usize;
    let mut last_residual = f64::INFINITY;
    let mut rbuf = alloc::vec![0.0; grid.len()];

    for step_idx in 1..=opts.max_steps {
        // Exact constant-mode equilibration, applied to the state the
        // step is about to see: R(u + s) = R(u) + λs identically (the
        // spatial operators annihilate constants), so s = −mean(R)/λ
        // zeroes the mean residual of the current state in one algebraic
        // move, removing the slow O(1/λ) constant mode.
        if step_idx > 1 && (step_idx - 1) % opts.equilibrate_every == 0 {
            history.push(last_residual);
            engine.residual_into(&u, &mut rbuf);
            let mean_r = rbuf.iter().sum::<f64>() / rbuf.len() as f64;
            let shift = -mean_r / lambda;
            if shift.is_finite() {
                for x in u.iter_mut() {
                    *x += shift;
                }
            }
        }
        let info = engine.step(&mut u, dt);
        if !info.sup_residual.is_finite() {
            return Err(Error::BlowUp { step: step_idx });
        }
        last_residual = info.sup_residual;
        if last_residual <= opts.residual_tol {
            return Ok(StationaryResult {
                state: GridFunction::from_raw(grid, u),
                residual: last_residual,
                steps: step_idx,
                history,
                theta_warnings,
            });
        }
        if opts.theta_refresh_every > 0 && step_idx % opts.theta_refresh_every == 0 {
            let p = engine.gradient_sup(&u);
            if engine.recalibrate(p) {
                theta_warnings += 1;
                dt = engine.dt();
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(Error::BlowUp { step: step_idx });
                }
            }
        }
    }
    history.push(last_residual);
    Err(Error::NonConvergence { residual: last_residual, history })
}

// ---------------------------------------------------------------------------
// Vanishing discount
// ---------------------------------------------------------------------------

/// The geometric discount schedule `0.1·2^{−k}`, `k = 0..DISCOUNT_LEVELS`.
pub fn discount_schedule() -> Vec<f64> {
    (0..DISCOUNT_LEVELS).map(|k| 0.1 * pow(2.0, -(k as f64))).collect()
}

/// Per-discount diagnostics from the vanishing-discount sweep.
#[derive(Clone, Copy, Debug)]
pub struct DiscountRecord {
    pub lambda: f64,
    pub sup_norm: f64,
    pub osc: f64,
    pub lipschitz: f64,
    /// `u_λ` at the anchor point.
    pub anchor_value: f64,
    /// `λ·u_λ(anchor)` — the quantity whose λ → 0 limit is the ergodic
    /// constant.
    pub discount_product: f64,
    pub residual: f64,
    pub steps: usize,
}

/// Output of [`vanishing_discount`].
#[derive(Clone, Debug)]
pub struct DiscountStudy {
    pub records: Vec<DiscountRecord>,
    /// Stationary states, one per schedule entry (same order).
    pub states: Vec<GridFunction>,
    pub schedule: Vec<f64>,
    pub anchor: usize,
    /// λ → 0 intercept of `λ·u_λ(anchor)` fitted on the schedule tail.
    pub c_discount: f64,
    /// RMS residual of that fit (large ⇒ not yet in the linear regime).
    pub fit_residual: f64,
    /// Normalized profile `w = u_min − u_min(anchor)` at the smallest λ.
    pub profile: GridFunction,
}

/// Extrapolate the discounted anchor values from `states` at a different
/// anchor (fit on the same schedule tail).
pub fn c_discount_at(study: &DiscountStudy, anchor: usize) -> f64 {
    let k = study.schedule.len();
    let tail = FIT_TAIL.min(k);
    let xs: Vec<f64> = study.schedule[k - tail..].to_vec();
    let ys: Vec<f64> = study.schedule[k - tail..]
        .iter()
        .zip(&study.states[k - tail..])
        .map(|(l, s)| l * s.values()[anchor])
        .collect();
    let (_, intercept, _) = linear_fit(&xs, &ys);
    intercept
}

/// Solve the stationary problem along the discount schedule with warm
/// starts, extrapolate the ergodic constant, and normalize the limit profile.
pub fn vanishing_discount(
    spec: &ProblemSpec,
    grid: TorusGrid,
    anchor: usize,
    opts: &StationaryOpts,
) -> Result<DiscountStudy> {
    if anchor >= grid.len() {
        return Err(Error::Usage(format!(
            "anchor index {anchor} is outside the grid (len {})",
            grid.len()
        )));
    }
    let schedule = discount_schedule();
    let mut records = Vec::with_capacity(schedule.len());
    let mut states: Vec<GridFunction> = Vec::with_capacity(schedule.len());
    let mut warm: Option<GridFunction> = None;
    for &lambda in &schedule {
        let mut s = spec.clone();
        s.lambda = lambda;
        let sol = solve_stationary(&s, grid, warm.as_ref(), opts)?;
        let m = metrics(&sol.state);
        let anchor_value = sol.state.values()[anchor];
        records.push(DiscountRecord {
            lambda,
            sup_norm: m.sup_norm,
            osc: m.osc,
            lipschitz: m.lipschitz,
            anchor_value,
            discount_product: lambda * anchor_value,
            residual: sol.residual,
            steps: sol.steps,
        });
        warm = Some(sol.state.clone());
        states.push(sol.state);
    }
    let k = schedule.len();
    let tail = FIT_TAIL.min(k);
    let xs: Vec<f64> = schedule[k - tail..].to_vec();
    let ys: Vec<f64> = records[k - tail..].iter().map(|r| r.discount_product).collect();
    let (_, c_discount, fit_residual) = {
        let (slope, intercept, rms) = linear_fit(&xs, &ys);
        (slope, intercept, rms)
    };
    let last = states.last().expect("schedule is nonempty");
    let base = last.values()[anchor];
    let mut w = last.values().to_vec();
    for x in w.iter_mut() {
        *x -= base;
    }
    // anchor value is exactly zero by construction
    w[anchor] = 0.0;
    Ok(DiscountStudy {
        records,
        states,
        schedule,
        anchor,
        c_discount,
        fit_residual,
        profile: GridFunction::from_raw(grid, w),
    })
}

// ---------------------------------------------------------------------------
// Time route and agreement
// ---------------------------------------------------------------------------

/// Output of [`two_route_constant`].
#[derive(Clone, Debug)]
pub struct TwoRouteResult {
    /// Slope of `mean(u(·,t))` over the trailing window — the time-route
    /// estimate of the ergodic constant.
    pub c_slope: f64,
    pub slope_fit_residual: f64,
    /// `(T, osc(u(·,T) − w)/2)` per requested horizon: the distance from the
    /// evolved profile to the discount-route profile, modulo constants.
    pub defects: Vec<(f64, f64)>,
    pub trace: EvolutionTrace,
}

/// Centered sup-distance modulo constants: `osc(a − b)/2`.
pub fn profile_defect(a: &GridFunction, b: &GridFunction) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (x, y) in a.values().iter().zip(b.values()) {
        let d = x - y;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (hi - lo) / 2.0
}

/// Run the undiscounted parabolic problem from `u0 = 0`, estimate the linear
/// drift rate, and measure the profile defect against `w` at each horizon.
/// `horizons` must be positive and increasing; the largest sets the run
/// length.
pub fn two_route_constant(
    spec: &ProblemSpec,
    grid: TorusGrid,
    w: &GridFunction,
    horizons: &[f64],
    stationary_opts: &StationaryOpts,
) -> Result<TwoRouteResult> {
    if horizons.is_empty() {
        return Err(Error::Usage("two_route_constant needs at least one horizon".into()));
    }
    for pair in horizons.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Usage("horizons must be strictly increasing".into()));
        }
    }
    if horizons[0] <= 0.0 {
        return Err(Error::Usage("horizons must be positive".into()));
    }
    if w.grid().len() != grid.len() {
        return Err(Error::Usage("profile w does not match the grid".into()));
    }
    let mut s = spec.clone();
    s.lambda = 0.0;
    let t_final = *horizons.last().expect("nonempty");
    let mut opts = EvolveOptions::to_time(t_final);
    opts.checkpoints = horizons.to_vec();
    opts.early_stop = false;
    opts.cells_per_decade = stationary_opts.cells_per_decade;
    opts.cfl_safety = stationary_opts.cfl_safety;
    opts.theta_refresh_every = stationary_opts.theta_refresh_every;
    let u0 = GridFunction::zeros(grid);
    // Pick the sample cadence so the slope window comfortably fills: aim for
    // ~8 windows of samples over the whole run, based on the initial Δt
    // (ratchets only shrink Δt, which adds samples — never starves the fit).
    let mut engine = Engine::new(&s, grid, opts.cells_per_decade, opts.cfl_safety)?;
    let dt0 = engine.dt();
    if !(dt0.is_finite() && dt0 > 0.0) {
        return Err(Error::BlowUp { step: 0 });
    }
    let est_steps = (t_final / dt0) as usize + 1;
    opts.sample_every = (est_steps / (8 * crate::evolution::SLOPE_WINDOW)).max(1);
    let trace = crate::evolution::evolve_with(&mut engine, &u0, &opts)?;
    let est = estimate_slope(&trace)?;
    let mut defects = Vec::with_capacity(horizons.len());
    for (t, state) in &trace.checkpoint_states {
        defects.push((*t, profile_defect(state, w)));
    }
    Ok(TwoRouteResult {
        c_slope: est.slope,
        slope_fit_residual: est.fit_residual,
        defects,
        trace,
    })
}

/// Combined ergodic study: discount route, time route, and their agreement.
#[derive(Clone, Debug)]
pub struct ErgodicStudy {
    pub discount: DiscountStudy,
    pub two_route: TwoRouteResult,
    /// `|c_slope − c_discount|`.
    pub agreement_gap: f64,
}

pub fn ergodic_study(
    spec: &ProblemSpec,
    grid: TorusGrid,
    anchor: usize,
    horizons: &[f64],
    opts: &StationaryOpts,
) -> Result<ErgodicStudy> {
    let discount = vanishing_discount(spec, grid, anchor, opts)?;
    let two_route = two_route_constant(spec, grid, &discount.profile, horizons, opts)?;
    let agreement_gap = fabs(two_route.c_slope - discount.c_discount);
    Ok(ErgodicStudy { discount, two_route, agreement_gap })
}

/// Max pairwise sup-distance between anchored long-time profiles started
/// from the given initial states (undiscounted evolution to `t_final`).
/// Small output is evidence for a unique ergodic profile; the library
/// reports, callers judge.
pub fn profile_uniqueness_probe(
    spec: &ProblemSpec,
    grid: TorusGrid,
    inits: &[GridFunction],
    anchor: usize,
    t_final: f64,
    stationary_opts: &StationaryOpts,
) -> Result<f64> {
    if inits.len() < 2 {
        return Err(Error::Usage("uniqueness probe needs at least two initial states".into()));
    }
    if anchor >= grid.len() {
        return Err(Error::Usage(format!(
            "anchor index {anchor} is outside the grid (len {})",
            grid.len()
        )));
    }
    let mut s = spec.clone();
    s.lambda = 0.0;
    let mut opts = EvolveOptions::to_time(t_final);
    opts.early_stop = false;
    opts.cells_per_decade = stationary_opts.cells_per_decade;
    opts.cfl_safety = stationary_opts.cfl_safety;
    let mut profiles: Vec<Vec<f64>> = Vec::with_capacity(inits.len());
    for u0 in inits {
        if u0.grid().len() != grid.len() {
            return Err(Error::Usage("initial state does not match the grid".into()));
        }
        let trace = evolve(&s, u0, &opts)?;
        let vals = trace.final_state.values();
        let base = vals[anchor];
        profiles.push(vals.iter().map(|v| v - base).collect());
    }
    let mut worst = 0.0f64;
    for i in 0..profiles.len() {
        for j in i + 1..profiles.len() {
            let mut sup = 0.0f64;
            for (a, b) in profiles[i].iter().zip(&profiles[j]) {
                sup = sup.max(fabs(a - b));
            }
            worst = worst.max(sup);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::model::{DiffusionFactor, Hamiltonian, LevyData};

    fn constant_forcing(lambda: f64, f0: f64) -> ProblemSpec {
        ProblemSpec {
            dim: 1,
            lambda,
            diffusion: DiffusionFactor::zero(),
            hamiltonian: Hamiltonian::power_coercive(
                ScalarField::Constant(1.0),
                2.0,
                ScalarField::Constant(f0),
            ),
            levy: LevyData::none(),
            initial: None,
        }
    }

    #[test]
    fn stationary_ode_is_solved_by_one_equilibration() {
        // R(u) = λu − f₀ on flat states: the first constant-mode shift lands
        // exactly on u = f₀/λ, so convergence needs barely more than
        // EQUILIBRATE_EVERY steps.
        let spec = constant_forcing(0.4, 1.3);
        let grid = TorusGrid::new(1, 16).unwrap();
        let sol = solve_stationary(&spec, grid, None, &StationaryOpts::defaults()).unwrap();
        assert!(sol.residual <= RESIDUAL_TOL_DEFAULT);
        assert!(sol.steps <= 2 * EQUILIBRATE_EVERY + 2, "steps {}", sol.steps);
        for &x in sol.state.values() {
            assert!(fabs(x - 1.3 / 0.4) < 1e-10, "{x}");
        }
    }

    #[test]
    fn stationary_requires_positive_discount() {
        let spec = constant_forcing(0.0, 1.0);
        let grid = TorusGrid::new(1, 16).unwrap();
        match solve_stationary(&spec, grid, None, &StationaryOpts::defaults()) {
            Err(Error::Usage(msg)) => assert!(msg.contains("discount")),
            other => panic!("expected usage error, got {other:?}"),
        }
    }

    #[test]
    fn non_convergence_carries_history() {
        let spec = constant_forcing(0.01, 1.0);
        let grid = TorusGrid::new(1, 16).unwrap();
        let mut opts = StationaryOpts::defaults();
        opts.max_steps = 7; // far too few
        match solve_stationary(&spec, grid, None, &opts) {
            Err(Error::NonConvergence { residual, history }) => {
                assert!(residual > opts.residual_tol);
                assert!(!history.is_empty());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn discount_study_recovers_constant_forcing_exactly() {
        // u_λ ≡ f₀/λ, so λ·u_λ(x₀) = f₀ at every level and the intercept is
        // f₀ to fit rounding.
        let spec = constant_forcing(1.0, 0.7); // lambda here is overridden
        let grid = TorusGrid::new(1, 16).unwrap();
        let study = vanishing_discount(&spec, grid, 0, &StationaryOpts::defaults()).unwrap();
        assert_eq!(study.records.len(), DISCOUNT_LEVELS);
        assert!(fabs(study.c_discount - 0.7) < 1e-6, "c {}", study.c_discount);
        assert!(study.fit_residual < 1e-6);
        for &x in study.profile.values() {
            assert!(fabs(x) < 1e-7, "profile should vanish, got {x}");
        }
        assert_eq!(study.profile.values()[0], 0.0);
        // warm starts keep later levels cheap even as 1/λ grows
        let first = study.records.first().unwrap().steps;
        let last = study.records.last().unwrap().steps;
        assert!(last <= 4 * first.max(EQUILIBRATE_EVERY), "{first} vs {last}");
    }

    #[test]
    fn anchor_reextrapolation_matches_on_flat_profiles() {
        let spec = constant_forcing(1.0, -0.3);
        let grid = TorusGrid::new(1, 16).unwrap();
        let study = vanishing_discount(&spec, grid, 0, &StationaryOpts::defaults()).unwrap();
        let c8 = c_discount_at(&study, 8);
        assert!(fabs(c8 - study.c_discount) < 1e-9, "{c8} vs {}", study.c_discount);
    }

    #[test]
    fn two_route_agrees_on_constant_forcing() {
        // Time route: u(·,t) = f₀·t exactly, slope f₀; defect against w ≡ 0
        // is zero at every horizon.
        let spec = constant_forcing(1.0, 0.7);
        let grid = TorusGrid::new(1, 16).unwrap();
        let opts = StationaryOpts::defaults();
        let study = ergodic_study(&spec, grid, 0, &[2.0, 4.0, 8.0], &opts).unwrap();
        assert!(study.agreement_gap < 1e-6, "gap {}", study.agreement_gap);
        for &(t, d) in &study.two_route.defects {
            assert!(d < 1e-9, "defect {d} at horizon {t}");
        }
    }

    #[test]
    fn uniqueness_probe_sees_flat_odes_collapse() {
        let spec = constant_forcing(1.0, 0.5);
        let grid = TorusGrid::new(1, 16).unwrap();
        let inits = alloc::vec![
            GridFunction::zeros(grid),
            GridFunction::constant(grid, 3.0),
        ];
        let gap =
            profile_uniqueness_probe(&spec, grid, &inits, 0, 2.0, &StationaryOpts::defaults())
                .unwrap();
        // Both runs stay flat; anchored profiles are identically zero.
        assert!(gap < 1e-12, "gap {gap}");
    }

    #[test]
    fn horizons_must_increase() {
        let spec = constant_forcing(1.0, 0.5);
        let grid = TorusGrid::new(1, 16).unwrap();
        let w = GridFunction::zeros(grid);
        let r = two_route_constant(&spec, grid, &w, &[5.0, 2.0], &StationaryOpts::defaults());
        assert!(matches!(r, Err(Error::Usage(_))));
    }
}
