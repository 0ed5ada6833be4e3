//! A small catalog of fully-specified benchmark problems with their
//! structural constants verified by the checkers in [`crate::model`] (the
//! unit tests below re-derive every declared constant).
//!
//! All instances live on the 1-torus. Forcing is `cos(2πx)` throughout, so
//! minima/maxima and bounds are hand-computable:
//!
//! * `eikonal`: `H = |p|² − cos(2πx)`, diffusion `a(x) = 0.1(1 + cos²(2πx))`,
//!   fractional measure of order 1, translation jumps.
//! * `mixed`: as `eikonal` but `H = |p|³ − cos(2πx)` and order 1/2.
//! * `mixed_m2`: the `mixed` operator with the quadratic Hamiltonian.
//! * `pure_eikonal`: first-order only (`a ≡ 0`, no jumps).
//! * `constant_forcing`: `H = |p|² − f₀` with no spatial operators — every
//!   long-run quantity is exact, which pins the drivers' plumbing.
//! * `atomic_degenerate`: `σ ≡ 0` with a single jump atom at `z = 1/4` — the
//!   canonical covering-check failure.

use alloc::vec;

use crate::field::ScalarField;
use crate::model::{
    Atom, DiffusionFactor, Hamiltonian, JumpKind, LevyData, MeasureKind, ProblemSpec,
};

const TAU: f64 = core::f64::consts::TAU;

/// `a(x) = 0.1(1 + cos²(2πx)) = 0.15 + 0.05·cos(4πx)`.
fn bench_diffusion() -> DiffusionFactor {
    // |σ| ≤ √0.2 < 1 and |σ'| = |a'|/(2√a) ≤ 0.2π/(2√0.1) < 1, so 1 bounds
    // both the size and the Lipschitz constant of σ = √a.
    DiffusionFactor::scalar_from_coefficient(ScalarField::cosine(0.15, 0.05, 2, 0.0), 1.0)
}

fn cos_forcing() -> ScalarField {
    ScalarField::cosine(0.0, 1.0, 1, 0.0)
}

/// Power Hamiltonian `|p|^m − cos(2πx)` with verified constants.
fn bench_hamiltonian(m: f64, c_zeta: f64) -> Hamiltonian {
    let mut h = Hamiltonian::power_coercive(ScalarField::Constant(1.0), m, cos_forcing());
    // growth slack at p = 0 is (1−μ)(cos(2πx) + K): K = 1 = −min cos is sharp
    h.k_const = 1.0;
    // |H(x,p) − H(y,p)| = |cos(2πx) − cos(2πy)| ≤ 2π·d(x,y)
    h.l_h = TAU;
    h.c_zeta = c_zeta;
    // H(x, 0) = −cos(2πx)
    h.h_0 = 1.0;
    // Scaling gap: H(x,Lp) − L·H(x,p) = (L^m − L)|p|^m + (L−1)cos(2πx), so
    // η must satisfy η ≤ (L^m − L)/L^m (gradient term) and η⁻¹ ≥ L − 1
    // (worst constant term, at p = 0 and cos = −1). η = 0.1 covers L ≤ 11
    // for every m > 1.
    h.eta = Some(0.1);
    h
}

fn fractional_levy(order: f64, c_nu: f64) -> LevyData {
    LevyData {
        measure: MeasureKind::Fractional { order },
        jump: JumpKind::Translation,
        c_nu,
        c_j: 1.0,
        c_a_gen: 1.0,
        r_max: 10.0,
    }
}

/// Quadratic Hamiltonian with diffusion and an order-1 fractional term.
pub fn eikonal(lambda: f64) -> ProblemSpec {
    ProblemSpec {
        dim: 1,
        lambda,
        diffusion: bench_diffusion(),
        // sup_{|q|≤1} (|p+q|²−|p|²)/(|q|(1+|p|)) = (2|p|+|q|)/(1+|p|) ≤ 2
        hamiltonian: bench_hamiltonian(2.0, 2.0),
        // ∫ 1∧|z|² dν = 2/(2−σ) + 2/σ = 4 at σ = 1
        levy: fractional_levy(1.0, 4.01),
        initial: None,
    }
}

/// Cubic Hamiltonian, weaker (order-1/2) nonlocal term, same diffusion.
pub fn mixed(lambda: f64) -> ProblemSpec {
    ProblemSpec {
        dim: 1,
        lambda,
        diffusion: bench_diffusion(),
        // sup (|p+q|³−|p|³)/(|q|(1+|p|²)) = sup (3p²+3p+1)/(1+p²) ≈ 3.81 < 5
        hamiltonian: bench_hamiltonian(3.0, 5.0),
        // 2/(2−σ) + 2/σ = 4/3 + 4 = 16/3 at σ = 1/2
        levy: fractional_levy(0.5, 5.34),
        initial: None,
    }
}

/// The `mixed` operator with the quadratic Hamiltonian (strictly convex in a
/// uniform sense, the regime with a uniqueness theory for the profile).
pub fn mixed_m2(lambda: f64) -> ProblemSpec {
    ProblemSpec {
        dim: 1,
        lambda,
        diffusion: bench_diffusion(),
        hamiltonian: bench_hamiltonian(2.0, 2.0),
        levy: fractional_levy(0.5, 5.34),
        initial: None,
    }
}

/// First-order problem: `λu + |Du|² − cos(2πx) = 0`. Its ergodic constant
/// is known in closed form: the cell problem `|Dw|² = cos(2πx) − c` is
/// solvable exactly when the right side has minimum zero, i.e.
/// `c = min_x cos(2πx) = −1`.
pub fn pure_eikonal(lambda: f64) -> ProblemSpec {
    ProblemSpec {
        dim: 1,
        lambda,
        diffusion: DiffusionFactor::zero(),
        hamiltonian: bench_hamiltonian(2.0, 2.0),
        levy: LevyData::none(),
        initial: None,
    }
}

/// No spatial structure at all: `λu + |Du|² = f₀`.
pub fn constant_forcing(lambda: f64, f0: f64) -> ProblemSpec {
    let mut h =
        Hamiltonian::power_coercive(ScalarField::Constant(1.0), 2.0, ScalarField::Constant(f0));
    h.k_const = if f0 < 0.0 { -f0 } else { 0.0 };
    h.l_h = 0.0;
    h.c_zeta = 2.0;
    h.h_0 = crate::math::fabs(f0);
    ProblemSpec {
        dim: 1,
        lambda,
        diffusion: DiffusionFactor::zero(),
        hamiltonian: h,
        levy: LevyData::none(),
        initial: None,
    }
}

/// Fully degenerate diffusion with a single jump atom at `z = 1/4`: jumps
/// reach only the four quarter points, so the covering check must fail.
pub fn atomic_degenerate(lambda: f64) -> ProblemSpec {
    ProblemSpec {
        dim: 1,
        lambda,
        diffusion: DiffusionFactor::zero(),
        hamiltonian: bench_hamiltonian(2.0, 2.0),
        levy: LevyData {
            measure: MeasureKind::Atomic { atoms: vec![Atom { z: [0.25, 0.0], mass: 1.0 }] },
            jump: JumpKind::Translation,
            // ∫ 1∧|z|² dν = 1/16
            c_nu: 0.07,
            c_j: 1.0,
            c_a_gen: 1.0,
            r_max: 1.0,
        },
        initial: None,
    }
}

/// Pure fractional translation operator (no diffusion) with the quadratic
/// Hamiltonian — the operator-accuracy workhorse.
pub fn fractional_diagnostic(lambda: f64, order: f64) -> ProblemSpec {
    let c_nu = 2.0 / (2.0 - order) + 2.0 / order + 0.01;
    ProblemSpec {
        dim: 1,
        lambda,
        diffusion: DiffusionFactor::zero(),
        hamiltonian: bench_hamiltonian(2.0, 2.0),
        levy: fractional_levy(order, c_nu),
        initial: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        check_diffusion, check_h1, check_h2prime, check_levy, coercivity_gap,
    };

    fn assert_all_pass(spec: &ProblemSpec, name: &str) {
        spec.validate().unwrap();
        for seed in [0u64, 1] {
            let d = check_diffusion(spec, 256, seed).unwrap();
            assert!(d.pass, "{name}/diffusion seed {seed}: {:?}", d.witness);
            let h1 = check_h1(spec, 256, seed).unwrap();
            assert!(h1.pass, "{name}/growth seed {seed}: {:?}", h1.witness);
            let h2 = check_h2prime(spec, 256, seed).unwrap();
            assert!(h2.pass, "{name}/continuity seed {seed}: {:?}", h2.witness);
            let lv = check_levy(spec, 64, seed).unwrap();
            assert!(lv.pass, "{name}/levy seed {seed}: {:?}", lv.witness);
        }
    }

    #[test]
    fn eikonal_instance_passes_all_checks() {
        assert_all_pass(&eikonal(1.0), "eikonal");
    }

    #[test]
    fn mixed_instance_passes_all_checks() {
        assert_all_pass(&mixed(0.1), "mixed");
        assert_all_pass(&mixed_m2(0.1), "mixed_m2");
    }

    #[test]
    fn pure_and_constant_instances_pass_all_checks() {
        assert_all_pass(&pure_eikonal(0.5), "pure_eikonal");
        assert_all_pass(&constant_forcing(0.5, 0.7), "constant_forcing(+)");
        assert_all_pass(&constant_forcing(0.5, -0.7), "constant_forcing(−)");
    }

    #[test]
    fn atomic_instance_passes_all_checks() {
        assert_all_pass(&atomic_degenerate(1.0), "atomic_degenerate");
    }

    #[test]
    fn eikonal_growth_fails_without_the_offset_constant() {
        // K = 0 cannot absorb the negative part of the forcing: the growth
        // inequality at p = 0 reads (1−μ)(cos(2πx) + K) ≥ 0.
        let mut spec = eikonal(1.0);
        spec.hamiltonian.k_const = 0.0;
        let h1 = check_h1(&spec, 256, 0).unwrap();
        assert!(!h1.pass, "K = 0 must fail on forcing cos(2πx)");
    }

    #[test]
    fn coercivity_gaps_are_nonnegative() {
        for (spec, name) in [
            (eikonal(1.0), "eikonal"),
            (mixed(0.1), "mixed"),
            (pure_eikonal(0.5), "pure_eikonal"),
        ] {
            for l in [2.0, 10.0] {
                let gap = coercivity_gap(&spec, l, 128);
                assert!(gap > -1e-10, "{name} at L = {l}: gap {gap}");
            }
        }
    }

    #[test]
    fn declared_levy_bounds_are_sharp_enough_to_matter() {
        // Tightening C_ν below the true mass must flip the check.
        let mut spec = eikonal(1.0);
        spec.levy.c_nu = 3.9; // true value 4
        let lv = check_levy(&spec, 64, 0).unwrap();
        assert!(!lv.pass);
    }
}
