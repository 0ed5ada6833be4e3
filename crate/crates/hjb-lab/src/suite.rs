//! The verdict suite: eleven pinned end-to-end criteria.
//!
//! Each criterion is one public function returning a [`CriterionOutcome`]
//! with the measured quantity, the tolerance it was judged against, and a
//! deterministic human-readable detail string. `verify-all` runs them in
//! order; the acceptance tests call them one by one so every criterion gets
//! its own pass/fail line and runtime budget.
//!
//! Solver failures (non-convergence, blow-up, bad usage) are folded into a
//! failing outcome rather than propagated, so one broken criterion can never
//! hide the verdicts of the others.

use std::f64::consts::TAU;

use hjb_core::ergodic::{
    ergodic_study, profile_uniqueness_probe, vanishing_discount, StationaryOpts,
};
use hjb_core::evolution::{evolve_pair, kappa_series, EvolveOptions};
use hjb_core::field::{self, sample_1d, ScalarField};
use hjb_core::grid::{GridFunction, TorusGrid};
use hjb_core::instances;
use hjb_core::model::{check_diffusion, check_h1, check_h2prime, check_levy};
use hjb_core::nonlocal::{build_table, fractional_reference};
use hjb_core::sample::Halton;
use hjb_core::verify::{
    comparison_harness, covering_check, sup_bound_check, transform_identity_check,
};
use hjb_core::Result;

use crate::csvout::{field as csv_field, num};

/// Result of one suite criterion.
#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    /// 1-based criterion number.
    pub number: usize,
    pub name: &'static str,
    /// Instance(s) the criterion ran on.
    pub instance: &'static str,
    pub pass: bool,
    /// Headline measured quantity (the binding sub-check).
    pub measured: f64,
    /// Tolerance the headline quantity is judged against.
    pub threshold: f64,
    /// Deterministic summary of the sub-checks.
    pub detail: String,
}

impl CriterionOutcome {
    /// One printed pass/fail line.
    pub fn line(&self) -> String {
        format!(
            "ACCEPTANCE {:02} {} [{}]: {} — measured {:.3e}, tolerance {:.3e}; {}",
            self.number,
            self.name,
            self.instance,
            if self.pass { "PASS" } else { "FAIL" },
            self.measured,
            self.threshold,
            self.detail,
        )
    }
}

/// Fold a fallible criterion body into an outcome.
fn guard(
    number: usize,
    name: &'static str,
    instance: &'static str,
    threshold: f64,
    body: impl FnOnce() -> Result<(bool, f64, String)>,
) -> CriterionOutcome {
    match body() {
        Ok((pass, measured, detail)) => CriterionOutcome {
            number,
            name,
            instance,
            pass,
            measured,
            threshold,
            detail,
        },
        Err(e) => CriterionOutcome {
            number,
            name,
            instance,
            pass: false,
            measured: f64::NAN,
            threshold,
            detail: format!("solver error: {e}"),
        },
    }
}

fn grid1(n: usize) -> TorusGrid {
    TorusGrid::new(1, n).expect("one-dimensional grid")
}

fn tight_opts() -> StationaryOpts {
    let mut o = StationaryOpts::defaults();
    o.residual_tol = 1e-8;
    o
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

// ---------------------------------------------------------------------------
// 1. Assumption suite
// ---------------------------------------------------------------------------

/// The builtin eikonal instance passes all four structural checks at seeds
/// {0, 1, 2}: the growth inequality, the scaling-gap inequality, the
/// diffusion-factor bounds, and the jump-measure bounds.
pub fn criterion_01_assumption_suite() -> CriterionOutcome {
    guard(1, "assumption-suite", "eikonal", 0.0, || {
        let spec = instances::eikonal(1.0);
        let mut worst = f64::INFINITY;
        let mut failures = Vec::new();
        for seed in [0u64, 1, 2] {
            let reports = [
                check_diffusion(&spec, 256, seed)?,
                check_h1(&spec, 256, seed)?,
                check_h2prime(&spec, 256, seed)?,
                check_levy(&spec, 256, seed)?,
            ];
            for r in reports {
                worst = worst.min(r.worst_slack);
                if !r.pass {
                    failures.push(format!("{} (seed {seed})", r.name));
                }
            }
        }
        let pass = failures.is_empty();
        let detail = if pass {
            format!("12/12 checks pass, worst slack {worst:.3e}")
        } else {
            format!("failing checks: {}", failures.join(", "))
        };
        // Slack is a margin: negative means a sampled violation. The
        // headline is the margin shortfall, so 0 is the natural threshold.
        Ok((pass, (-worst).max(0.0), detail))
    })
}

// ---------------------------------------------------------------------------
// 2. Nonlocal operator accuracy
// ---------------------------------------------------------------------------

/// Quadrature table vs. the closed-form symbol on `cos(2πx)` at `N = 256`
/// for orders {0.5, 1, 1.5}: relative sup-error at the default resolution is
/// at most 1e−2, and doubling the resolution shrinks it.
pub fn criterion_02_nonlocal_accuracy() -> CriterionOutcome {
    const TOL: f64 = 1e-2;
    guard(2, "nonlocal-accuracy", "fractional-diagnostic", TOL, || {
        let n = 256;
        let grid = grid1(n);
        let u = GridFunction::from_raw(grid, sample_1d(&ScalarField::cosine(0.0, 1.0, 1, 0.0), n));
        let mut worst = 0.0f64;
        let mut parts = Vec::new();
        let mut monotone = true;
        for order in [0.5, 1.0, 1.5] {
            let spec = instances::fractional_diagnostic(1.0, order);
            let exact = fractional_reference(&u, order, spec.levy.r_max)?;
            let scale = sup_abs(exact.values());
            let mut errs = [0.0f64; 2];
            for (slot, q) in [(0usize, 32usize), (1, 64)] {
                let table = build_table(&spec, &grid, q)?;
                let approx = table.apply(&u);
                let mut sup = 0.0f64;
                for (a, b) in approx.values().iter().zip(exact.values()) {
                    sup = sup.max((a - b).abs());
                }
                errs[slot] = sup / scale;
            }
            worst = worst.max(errs[0]);
            monotone &= errs[1] < errs[0];
            parts.push(format!("order {order}: rel {:.3e} -> {:.3e}", errs[0], errs[1]));
        }
        let pass = worst <= TOL && monotone;
        let detail = format!(
            "{}; refinement {}",
            parts.join(", "),
            if monotone { "decreases error" } else { "FAILED to decrease error" },
        );
        Ok((pass, worst, detail))
    })
}

// ---------------------------------------------------------------------------
// 3. Exponential transform identity
// ---------------------------------------------------------------------------

/// On `v = 0.3·cos(2πx)`: the nonlocal conjugation identity holds to 1e−8
/// relative, the full-equation transform defect is ≤ 2e−2 at `N = 256`, and
/// doubling `N` at least halves it (modest slack on the factor).
pub fn criterion_03_transform_identity() -> CriterionOutcome {
    const REL_TOL: f64 = 1e-8;
    const DEFECT_TOL: f64 = 2e-2;
    const HALVING: f64 = 0.6;
    guard(3, "exp-transform-identity", "eikonal", REL_TOL, || {
        let spec = instances::eikonal(1.0);
        let mut defects = [0.0f64; 2];
        let mut conj = 0.0f64;
        for (slot, n) in [(0usize, 256usize), (1, 512)] {
            let grid = grid1(n);
            let v =
                GridFunction::from_raw(grid, sample_1d(&ScalarField::cosine(0.0, 0.3, 1, 0.0), n));
            let report = transform_identity_check(&spec, grid, &v, 32)?;
            defects[slot] = report.full_defect;
            conj = conj.max(report.conjugation_rel);
        }
        let halved = defects[1] <= HALVING * defects[0];
        let pass = conj <= REL_TOL && defects[0] <= DEFECT_TOL && halved;
        let detail = format!(
            "conjugation rel {conj:.3e}; full defect {:.3e} -> {:.3e} (ratio {:.2}, need <= {HALVING}, defect tol {DEFECT_TOL})",
            defects[0],
            defects[1],
            defects[1] / defects[0],
        );
        Ok((pass, conj, detail))
    })
}

// ---------------------------------------------------------------------------
// 4. Discrete comparison principle
// ---------------------------------------------------------------------------

/// 20 random ordered initial pairs evolved to `T = 5` on the mixed instance
/// keep their order to 1e−12 and respect the constant barriers.
pub fn criterion_04_comparison_principle() -> CriterionOutcome {
    const TOL: f64 = 1e-12;
    guard(4, "comparison-principle", "mixed", TOL, || {
        let report = comparison_harness(&instances::mixed(0.1), grid1(64), 20, 5.0, 0)?;
        let pass = report.pass && report.max_order_violation <= TOL;
        let detail = format!(
            "{} pairs, {} samples; max order violation {:.3e}, max barrier excess {:.3e}",
            report.pairs,
            report.samples_checked,
            report.max_order_violation,
            report.max_barrier_excess,
        );
        Ok((pass, report.max_order_violation, detail))
    })
}

// ---------------------------------------------------------------------------
// 5. Sup bound
// ---------------------------------------------------------------------------

/// Stationary solves at λ ∈ {1, 0.1, 0.01} satisfy `sup|u_λ| ≤ H₀/λ + 1e−5`.
pub fn criterion_05_sup_bound() -> CriterionOutcome {
    const SLACK: f64 = 1e-5;
    guard(5, "sup-bound", "eikonal", SLACK, || {
        let opts = tight_opts();
        let mut worst = f64::NEG_INFINITY;
        let mut parts = Vec::new();
        for lambda in [1.0, 0.1, 0.01] {
            let spec = instances::eikonal(lambda);
            let report = sup_bound_check(&spec, grid1(128), &opts)?;
            let excess = report.sup_norm - report.bound;
            worst = worst.max(excess);
            parts.push(format!(
                "lambda {lambda}: sup {:.6} vs bound {:.6}",
                report.sup_norm, report.bound
            ));
        }
        Ok((worst <= SLACK, worst, parts.join("; ")))
    })
}

// ---------------------------------------------------------------------------
// 6. λ-uniform oscillation and Lipschitz bounds
// ---------------------------------------------------------------------------

/// Over the geometric discount schedule on the mixed instance at `N = 256`:
/// the oscillation varies by at most 10% on the tail (λ ≤ 0.0125) and the
/// Lipschitz seminorm never exceeds twice its λ = 0.1 value.
pub fn criterion_06_uniform_bounds() -> CriterionOutcome {
    const OSC_RATIO: f64 = 1.1;
    const LIP_RATIO: f64 = 2.0;
    guard(6, "uniform-oscillation", "mixed", OSC_RATIO, || {
        let study = vanishing_discount(&instances::mixed(0.1), grid1(256), 0, &tight_opts())?;
        let tail: Vec<&_> = study
            .records
            .iter()
            .filter(|r| r.lambda <= 0.0125 + 1e-12)
            .collect();
        let osc_hi = tail.iter().map(|r| r.osc).fold(f64::NEG_INFINITY, f64::max);
        let osc_lo = tail.iter().map(|r| r.osc).fold(f64::INFINITY, f64::min);
        let osc_ratio = osc_hi / osc_lo;
        let lip0 = study.records[0].lipschitz;
        let lip_max = study.records.iter().map(|r| r.lipschitz).fold(0.0f64, f64::max);
        let pass = tail.len() >= 4 && osc_ratio <= OSC_RATIO && lip_max <= LIP_RATIO * lip0;
        let detail = format!(
            "tail osc ratio {osc_ratio:.4} over {} levels (need <= {OSC_RATIO}); lip max {lip_max:.4} vs {LIP_RATIO}x lip(0.1) = {:.4}",
            tail.len(),
            LIP_RATIO * lip0,
        );
        Ok((pass, osc_ratio, detail))
    })
}

// ---------------------------------------------------------------------------
// 7. Ergodic constant, analytic anchor
// ---------------------------------------------------------------------------

/// Pure first-order eikonal with forcing `cos(2πx)`: the critical value is
/// `min f = −1`; both routes must land within 5e−2 of it at `N = 256`.
pub fn criterion_07_ergodic_anchor() -> CriterionOutcome {
    const TOL: f64 = 5e-2;
    const EXACT: f64 = -1.0;
    guard(7, "ergodic-constant-anchor", "pure-eikonal", TOL, || {
        let study = ergodic_study(
            &instances::pure_eikonal(0.1),
            grid1(256),
            0,
            &[10.0, 25.0, 50.0],
            &tight_opts(),
        )?;
        let e_disc = (study.discount.c_discount - EXACT).abs();
        let e_slope = (study.two_route.c_slope - EXACT).abs();
        let pass = e_disc <= TOL && e_slope <= TOL;
        let detail = format!(
            "c_discount {:.5} (error {e_disc:.3e}), c_slope {:.5} (error {e_slope:.3e}), exact {EXACT}",
            study.discount.c_discount, study.two_route.c_slope,
        );
        Ok((pass, e_disc.max(e_slope), detail))
    })
}

// ---------------------------------------------------------------------------
// 8. Two-route agreement
// ---------------------------------------------------------------------------

/// On the mixed instance at `N = 256`: the discount route and the long-time
/// route agree to 5e−2, and the profile defect is non-increasing over the
/// horizons T ∈ {10, 25, 50} and already small at the last one.
///
/// On this instance the transient decays completely before the first
/// horizon, so all three defects sit at the systematic floor (~2.3e−6, the
/// residual gap between the evolved fixed profile and the extrapolated
/// discount profile) and consecutive values agree to ~1e−16. A strict
/// decrease would compare rounding noise; the meaningful rendering of
/// "converges as T grows" is non-increase within a rounding allowance plus
/// absolute smallness at the final horizon.
pub fn criterion_08_two_route_agreement() -> CriterionOutcome {
    const TOL: f64 = 5e-2;
    const ROUNDING: f64 = 1e-12;
    const DEFECT_CONVERGED: f64 = 1e-3;
    guard(8, "two-route-agreement", "mixed", TOL, || {
        let study = ergodic_study(
            &instances::mixed(0.1),
            grid1(256),
            0,
            &[10.0, 25.0, 50.0],
            &tight_opts(),
        )?;
        let d = &study.two_route.defects;
        let settling = d.len() == 3
            && d[1].1 <= d[0].1 + ROUNDING
            && d[2].1 <= d[1].1 + ROUNDING
            && d[2].1 <= DEFECT_CONVERGED;
        let pass = study.agreement_gap <= TOL && settling;
        let defect_list = d
            .iter()
            .map(|(t, v)| format!("T={t}: {v:.3e}"))
            .collect::<Vec<_>>()
            .join(", ");
        let detail = format!(
            "gap |c_discount - c_slope| = {:.3e}; defects {defect_list} ({})",
            study.agreement_gap,
            if settling { "settling" } else { "NOT settling" },
        );
        Ok((pass, study.agreement_gap, detail))
    })
}

// ---------------------------------------------------------------------------
// 9. Contraction monotonicity
// ---------------------------------------------------------------------------

/// Five ordered pairs evolved in lockstep on the mixed instance: the
/// sup-distance series never increases by more than 1e−10 per sample.
pub fn criterion_09_contraction_monotonicity() -> CriterionOutcome {
    guard(
        9,
        "contraction-monotonicity",
        "mixed",
        hjb_core::evolution::KAPPA_SLACK,
        || {
            let n = 64;
            let grid = grid1(n);
            let spec = instances::mixed(0.1);
            let mut opts = EvolveOptions::to_time(5.0);
            opts.store_states = true;
            opts.early_stop = false;
            let mut halton = Halton::new(7, 6);
            let mut q = [0.0f64; 6];
            let mut worst_jump = f64::NEG_INFINITY;
            let mut total_violations = 0usize;
            for _ in 0..5 {
                halton.next_point(&mut q);
                let a1 = 0.2 + 0.4 * q[0];
                let a2 = 0.3 * q[1];
                let (ph1, ph2) = (TAU * q[2], TAU * q[3]);
                let gap = 0.05 + 0.5 * q[4];
                let h = grid.spacing();
                let lower: Vec<f64> = (0..n)
                    .map(|i| {
                        let x = i as f64 * h;
                        a1 * (TAU * x + ph1).cos() + a2 * (2.0 * TAU * x + ph2).cos()
                    })
                    .collect();
                let upper: Vec<f64> = lower.iter().map(|v| v + gap).collect();
                let u0 = GridFunction::from_raw(grid, lower);
                let v0 = GridFunction::from_raw(grid, upper);
                let (tu, tv) = evolve_pair(&spec, &u0, &v0, &opts)?;
                let series = kappa_series(&tu, &tv)?;
                total_violations += series.violations.len();
                for w in series.kappa.windows(2) {
                    worst_jump = worst_jump.max(w[1] - w[0]);
                }
            }
            let pass = total_violations == 0;
            let detail = format!(
                "5 pairs; {total_violations} violations; largest per-sample increase {worst_jump:.3e}"
            );
            Ok((pass, worst_jump.max(0.0), detail))
        },
    )
}

// ---------------------------------------------------------------------------
// 10. Covering and uniqueness
// ---------------------------------------------------------------------------

/// The covering probe passes on the mixed instance, fails with a concrete
/// witness on the atomic-measure/zero-diffusion instance, and the long-time
/// profiles of the quadratic mixed instance agree to 1e−2 across distinct
/// initial data.
pub fn criterion_10_covering_uniqueness() -> CriterionOutcome {
    const PROBE_TOL: f64 = 1e-2;
    guard(10, "covering-uniqueness", "mixed / atomic-degenerate", PROBE_TOL, || {
        let grid = grid1(128);
        let full = covering_check(&instances::mixed(0.1), &grid, 0.25, 256)?;
        let degenerate = covering_check(&instances::atomic_degenerate(1.0), &grid, 0.25, 256)?;
        let witnessed = !degenerate.pass && !degenerate.witnesses.is_empty();

        let inits = [
            GridFunction::zeros(grid),
            GridFunction::from_raw(grid, sample_1d(&field::sine(0.0, 0.5, 1), 128)),
        ];
        let distance = profile_uniqueness_probe(
            &instances::mixed_m2(0.1),
            grid,
            &inits,
            0,
            50.0,
            &tight_opts(),
        )?;

        let pass = full.pass && witnessed && distance <= PROBE_TOL;
        let witness_str = degenerate
            .witnesses
            .first()
            .map(|w| format!("point {} cannot reach cell {}", w.point, w.missing_cell))
            .unwrap_or_else(|| "none".to_string());
        let detail = format!(
            "full-support covering: {} ({} degenerate points); degenerate instance fails with witness: {witness_str}; profile distance {distance:.3e}",
            if full.pass { "pass" } else { "FAIL" },
            full.degenerate_points,
        );
        Ok((pass, distance, detail))
    })
}

// ---------------------------------------------------------------------------
// 11. Determinism
// ---------------------------------------------------------------------------

/// The same study computed twice in one process serializes to bit-identical
/// CSV bytes. (The CLI tests repeat this across two separate processes on
/// the full `verify-all` artifact.)
pub fn criterion_11_determinism() -> CriterionOutcome {
    guard(11, "determinism", "constant-forcing", 0.0, || {
        let spec = instances::constant_forcing(0.2, 0.7);
        let grid = grid1(32);
        let run = || -> Result<String> {
            let study = ergodic_study(&spec, grid, 0, &[2.0, 4.0], &tight_opts())?;
            Ok(crate::csvout::ergodic_csv(
                &study.discount,
                Some(&study.two_route),
                Some(study.agreement_gap),
            ))
        };
        let first = run()?;
        let second = run()?;
        let identical = first == second;
        let detail = format!(
            "two in-process runs serialize to {} bytes each; byte-identical: {identical}",
            first.len(),
        );
        Ok((identical, if identical { 0.0 } else { 1.0 }, detail))
    })
}

// ---------------------------------------------------------------------------
// Suite driver
// ---------------------------------------------------------------------------

/// Run all eleven criteria in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    vec![
        criterion_01_assumption_suite(),
        criterion_02_nonlocal_accuracy(),
        criterion_03_transform_identity(),
        criterion_04_comparison_principle(),
        criterion_05_sup_bound(),
        criterion_06_uniform_bounds(),
        criterion_07_ergodic_anchor(),
        criterion_08_two_route_agreement(),
        criterion_09_contraction_monotonicity(),
        criterion_10_covering_uniqueness(),
        criterion_11_determinism(),
    ]
}

/// `verdicts.csv`: one row per criterion. Deliberately timing-free so
/// repeated runs are byte-identical.
pub fn verdicts_csv(outcomes: &[CriterionOutcome]) -> String {
    let mut out = String::from("criterion,name,instance,pass,measured,threshold,detail\n");
    for o in outcomes {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            o.number,
            csv_field(o.name),
            csv_field(o.instance),
            o.pass,
            num(o.measured),
            num(o.threshold),
            csv_field(&o.detail),
        ));
    }
    out
}
