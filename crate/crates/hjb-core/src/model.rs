//! Problem instances and the structural hypotheses as sampled predicates.
//!
//! A [`ProblemSpec`] bundles the data of one equation instance: discount
//! `λ ≥ 0`, diffusion factor `σ` (with `A = σσᵀ`, possibly degenerate),
//! a gradient-coercive Hamiltonian, and Lévy data `(ν, j)`. The structural
//! hypotheses the theory rests on are implemented as *sampled* checkers —
//! universally quantified inequalities can only be falsified numerically —
//! driven by a seeded low-discrepancy sequence so every verdict is
//! reproducible:
//!
//! - diffusion: `|σ| ≤ L_σ`, `|σ(x) − σ(y)| ≤ L_σ·d(x,y)`, `A ⪰ 0`;
//! - growth: `μH(x, μ⁻¹p) − H(x,p) ≥ (1−μ)(b_m|p|^m − K)` for `μ ∈ (0,1)`;
//! - continuity: `H(y,p+q) − H(x,p) ≤ L_H|x−y|(1+|p|^m) + ζ(|q|)(1+|p|^{m−1})`
//!   with the linear modulus `ζ(r) = C_ζ·r`;
//! - Lévy integrability `∫ 1∧|z|² ν(dz) ≤ C_ν` and jump-size control
//!   `|j(x,z)| ≤ C_j|z|` plus its Lipschitz version, and the per-radius
//!   first-moment bounds `∫_{|z|>a} |j(x,z)| ν(dz) ≤ C_a`.
//!
//! Gradient samples are capped at `|p| ≤ 50` and log-spaced: the coercive
//! inequalities are tightest near `μ → 1` or at large `|p|`, and log spacing
//! covers both regimes. All inequality checks carry a `1e−10` absolute slack
//! for double-precision noise (`1e−12` for the linear diffusion bounds).

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::field::ScalarField;
use crate::grid::TorusGrid;
use crate::math::{abs_pow, abs_pow_deriv, fabs, norm, pow, sqrt};
use crate::sample::{log_magnitude, Halton};
use crate::{Error, Result};

/// Default cap on sampled gradient magnitudes.
pub const P_MAX_DEFAULT: f64 = 50.0;
/// Absolute tolerance on the coercivity/continuity inequality checks.
pub const CHECK_TOL: f64 = 1e-10;
/// Tighter tolerance for the (exactly linear) diffusion bounds.
pub const DIFFUSION_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Diffusion factor
// ---------------------------------------------------------------------------

/// The matrix factor `σ(x)` with `A(x) = σ(x)σ(x)ᵀ`.
#[derive(Clone, Debug)]
pub enum SigmaKind {
    /// `σ ≡ 0`: pure first-order/nonlocal regime.
    Zero,
    /// Dimension 1: a scalar field `σ(x)`, so `A(x) = σ(x)²`.
    Scalar(ScalarField),
    /// Dimension 2: columns of `σ`, each a 2-vector field. `A = Σ_c col·colᵀ`.
    Columns2(Vec<[ScalarField; 2]>),
}

#[derive(Clone, Debug)]
pub struct DiffusionFactor {
    pub kind: SigmaKind,
    /// Declared bound `L_σ`: both `sup|σ|` and the Lipschitz constant.
    pub lipschitz_bound: f64,
}

impl DiffusionFactor {
    pub fn zero() -> Self {
        DiffusionFactor { kind: SigmaKind::Zero, lipschitz_bound: 0.0 }
    }

    /// Dimension-1 factor given the *diffusion coefficient* `a(x) ≥ 0`
    /// (so `σ = √a`), with declared bound `l_sigma`.
    pub fn scalar_from_coefficient(a: ScalarField, l_sigma: f64) -> Self {
        let field = ScalarField::custom(move |x| sqrt(a.eval(x).max(0.0)));
        DiffusionFactor { kind: SigmaKind::Scalar(field), lipschitz_bound: l_sigma }
    }

    pub fn scalar(sigma: ScalarField, l_sigma: f64) -> Self {
        DiffusionFactor { kind: SigmaKind::Scalar(sigma), lipschitz_bound: l_sigma }
    }

    /// Diffusion coefficient `a(x) = σ(x)²` (dimension 1; column-norm² sum in
    /// dimension 2 is handled per column by the scheme instead).
    #[inline]
    pub fn coefficient_1d(&self, x: &[f64]) -> f64 {
        match &self.kind {
            SigmaKind::Zero => 0.0,
            SigmaKind::Scalar(s) => {
                let v = s.eval(x);
                v * v
            }
            SigmaKind::Columns2(_) => 0.0,
        }
    }

    /// Frobenius norm `|σ(x)|`.
    pub fn frobenius(&self, x: &[f64]) -> f64 {
        match &self.kind {
            SigmaKind::Zero => 0.0,
            SigmaKind::Scalar(s) => fabs(s.eval(x)),
            SigmaKind::Columns2(cols) => {
                let mut s = 0.0;
                for c in cols {
                    let v0 = c[0].eval(x);
                    let v1 = c[1].eval(x);
                    s += v0 * v0 + v1 * v1;
                }
                sqrt(s)
            }
        }
    }

    /// Frobenius distance `|σ(x) − σ(y)|`.
    pub fn frobenius_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.kind {
            SigmaKind::Zero => 0.0,
            SigmaKind::Scalar(s) => fabs(s.eval(x) - s.eval(y)),
            SigmaKind::Columns2(cols) => {
                let mut s = 0.0;
                for c in cols {
                    let d0 = c[0].eval(x) - c[0].eval(y);
                    let d1 = c[1].eval(x) - c[1].eval(y);
                    s += d0 * d0 + d1 * d1;
                }
                sqrt(s)
            }
        }
    }

    /// Null space `E₀(x)` of `A(x)`, reported as 0, 1 or 2 orthonormal basis
    /// directions (each a unit 2-vector; in dimension 1 the direction is
    /// `[1, 0]`). Eigenvalues below `eig_tol` count as zero.
    pub fn null_space(&self, x: &[f64], dim: usize, eig_tol: f64) -> Vec<[f64; 2]> {
        match &self.kind {
            SigmaKind::Zero => {
                if dim == 1 {
                    vec![[1.0, 0.0]]
                } else {
                    vec![[1.0, 0.0], [0.0, 1.0]]
                }
            }
            SigmaKind::Scalar(s) => {
                let v = s.eval(x);
                if v * v <= eig_tol {
                    vec![[1.0, 0.0]]
                } else {
                    Vec::new()
                }
            }
            SigmaKind::Columns2(cols) => {
                // A = Σ col colᵀ, closed-form symmetric 2×2 eigensystem.
                let (mut a11, mut a12, mut a22) = (0.0, 0.0, 0.0);
                for c in cols {
                    let v0 = c[0].eval(x);
                    let v1 = c[1].eval(x);
                    a11 += v0 * v0;
                    a12 += v0 * v1;
                    a22 += v1 * v1;
                }
                let tr = a11 + a22;
                let det = a11 * a22 - a12 * a12;
                let disc = sqrt((0.5 * (a11 - a22)) * (0.5 * (a11 - a22)) + a12 * a12);
                let lo = 0.5 * tr - disc;
                let hi = 0.5 * tr + disc;
                let _ = det;
                let mut basis = Vec::new();
                let eigvec = |lam: f64| -> [f64; 2] {
                    // (A − λ) v = 0; pick the larger row for stability.
                    let r1 = [a11 - lam, a12];
                    let r2 = [a12, a22 - lam];
                    let use_r1 = norm(&r1) >= norm(&r2);
                    let r = if use_r1 { r1 } else { r2 };
                    let n = norm(&r);
                    if n < 1e-300 {
                        return [1.0, 0.0];
                    }
                    // v ⟂ r
                    [-r[1] / n, r[0] / n]
                };
                if hi <= eig_tol {
                    basis.push([1.0, 0.0]);
                    basis.push([0.0, 1.0]);
                } else if lo <= eig_tol {
                    basis.push(eigvec(lo));
                }
                basis
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Hamiltonian
// ---------------------------------------------------------------------------

type CustomHamiltonian = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Hamiltonian family.
#[derive(Clone)]
pub enum HamiltonianKind {
    /// `H(x,p) = coeff(x)·|p|^m − forcing(x)`, `coeff ≥ a_min > 0`.
    PowerCoercive { coeff: ScalarField, forcing: ScalarField },
    /// Arbitrary `H(x, p)` callback for tests and counterexamples.
    Custom(CustomHamiltonian),
}

impl core::fmt::Debug for HamiltonianKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            HamiltonianKind::PowerCoercive { coeff, forcing } => {
                write!(f, "PowerCoercive {{ coeff: {coeff:?}, forcing: {forcing:?} }}")
            }
            HamiltonianKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Hamiltonian plus its declared structural constants.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    pub kind: HamiltonianKind,
    /// Coercivity exponent `m > 1`.
    pub m: f64,
    /// Growth constant in `μH(x,μ⁻¹p) − H(x,p) ≥ (1−μ)(b_m|p|^m − K)`.
    pub b_m: f64,
    /// Additive constant `K` in the same inequality.
    pub k_const: f64,
    /// Spatial continuity constant `L_H`.
    pub l_h: f64,
    /// Modulus slope: `ζ(r) = C_ζ·r`.
    pub c_zeta: f64,
    /// Bound `H₀ ≥ sup_x |H(x,0)|`.
    pub h_0: f64,
    /// Optional coercivity-gap constant `η` (defaults to `b_m/2`).
    pub eta: Option<f64>,
}

impl Hamiltonian {
    /// Builtin family with the analytic constants of `|p|^m` pre-filled
    /// (`b_m = m−1`); callers override the forcing-dependent constants.
    pub fn power_coercive(coeff: ScalarField, m: f64, forcing: ScalarField) -> Self {
        Hamiltonian {
            kind: HamiltonianKind::PowerCoercive { coeff, forcing },
            m,
            b_m: m - 1.0,
            k_const: 0.0,
            l_h: 0.0,
            c_zeta: 0.0,
            h_0: 0.0,
            eta: None,
        }
    }

    /// Evaluate `H(x, p)`.
    #[inline]
    pub fn eval(&self, x: &[f64], p: &[f64]) -> f64 {
        match &self.kind {
            HamiltonianKind::PowerCoercive { coeff, forcing } => {
                coeff.eval(x) * abs_pow(norm(p), self.m) - forcing.eval(x)
            }
            HamiltonianKind::Custom(f) => f(x, p),
        }
    }

    /// Upper bound on `|∂H/∂p|` over `|p| ≤ p_bound` at `x`. Analytic for the
    /// builtin family; sampled central differences otherwise.
    pub fn gradient_slope_bound(&self, x: &[f64], p_bound: f64) -> f64 {
        match &self.kind {
            HamiltonianKind::PowerCoercive { coeff, .. } => {
                fabs(coeff.eval(x)) * abs_pow_deriv(p_bound, self.m)
            }
            HamiltonianKind::Custom(_) => {
                // Sample |H_p| by central differences along each axis at a few
                // log-spaced magnitudes up to p_bound, both signs.
                let dim = x.len();
                let eps = 1e-6 * (1.0 + p_bound);
                let mut worst = 0.0f64;
                let mut p = [0.0f64; 2];
                for k in 0..8 {
                    let mag = p_bound * (k as f64 + 1.0) / 8.0;
                    for axis in 0..dim {
                        for sign in [-1.0, 1.0] {
                            p = [0.0; 2];
                            p[axis] = sign * mag;
                            let mut pp = p;
                            let mut pm = p;
                            pp[axis] += eps;
                            pm[axis] -= eps;
                            let d = (self.eval(x, &pp[..dim]) - self.eval(x, &pm[..dim])) / (2.0 * eps);
                            worst = worst.max(fabs(d));
                        }
                    }
                }
                let _ = p;
                worst
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Lévy data
// ---------------------------------------------------------------------------

/// A point mass of the jump measure (second coordinate unused in dim 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub z: [f64; 2],
    pub mass: f64,
}

/// Lévy measure family.
#[derive(Clone, Debug)]
pub enum MeasureKind {
    /// No nonlocal term.
    None,
    /// `ν(dz) = |z|^{−d−order} dz`, `order ∈ (0, 2)`.
    Fractional { order: f64 },
    /// Bounded density: uniform with the given total mass on `{|z| ≤ radius}`.
    Finite { radius: f64, total_mass: f64 },
    /// Finite list of point masses.
    Atomic { atoms: Vec<Atom> },
}

/// Jump function family.
#[derive(Clone, Debug)]
pub enum JumpKind {
    /// `j(x, z) = z`: translation-invariant operator.
    Translation,
    /// `j(x, z) = g(x)·z` with `0 < g_min ≤ g ≤ g_max`, `g` Lipschitz.
    Modulated { g: ScalarField, g_min: f64, g_max: f64, g_lip: f64 },
}

#[derive(Clone, Debug)]
pub struct LevyData {
    pub measure: MeasureKind,
    pub jump: JumpKind,
    /// Declared bound on `∫ 1∧|z|² ν(dz)`.
    pub c_nu: f64,
    /// Jump-size constant: `|j(x,z)| ≤ C_j|z|`, Lipschitz in `x` with the
    /// same constant times `|z|`.
    pub c_j: f64,
    /// Generator for the per-radius constants:
    /// `C_a = c_a_gen · ∫_{a<|z|≤R_max} |z| ν(dz)`.
    pub c_a_gen: f64,
    /// Truncation radius for quadrature (mass beyond is dropped, reported).
    pub r_max: f64,
}

impl LevyData {
    pub fn none() -> Self {
        LevyData {
            measure: MeasureKind::None,
            jump: JumpKind::Translation,
            c_nu: 0.0,
            c_j: 0.0,
            c_a_gen: 0.0,
            r_max: 10.0,
        }
    }

    /// Jump scale factor at `x` (`1` for translation, `g(x)` for modulated).
    #[inline]
    pub fn jump_scale(&self, x: &[f64]) -> f64 {
        match &self.jump {
            JumpKind::Translation => 1.0,
            JumpKind::Modulated { g, .. } => g.eval(x),
        }
    }

    /// Whether the operator is translation-invariant.
    pub fn is_translation_invariant(&self) -> bool {
        matches!(self.jump, JumpKind::Translation)
    }
}

// ---------------------------------------------------------------------------
// Problem spec
// ---------------------------------------------------------------------------

/// Initial data for parabolic runs.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub field: ScalarField,
    /// Declared Lipschitz constant `L₀`.
    pub lipschitz: f64,
}

/// Full description of one equation instance.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub dim: usize,
    pub lambda: f64,
    pub diffusion: DiffusionFactor,
    pub hamiltonian: Hamiltonian,
    pub levy: LevyData,
    pub initial: Option<InitialData>,
}

impl ProblemSpec {
    /// All documented-range violations of the instance, empty when well
    /// formed. Sampled conditions (positivity of the builtin coefficient,
    /// modulation bounds) use a fixed 512-point scan per axis.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dim != 1 && self.dim != 2 {
            out.push(format!("dimension: must be 1 or 2, got {}", self.dim));
        }
        if !(self.lambda >= 0.0) {
            out.push(format!("lambda: must be >= 0, got {}", self.lambda));
        }
        if !(self.hamiltonian.m > 1.0) {
            out.push(format!("hamiltonian.m: must be > 1, got {}", self.hamiltonian.m));
        }
        if self.diffusion.lipschitz_bound < 0.0 {
            out.push("diffusion.l_sigma: must be >= 0".into());
        }
        if let HamiltonianKind::PowerCoercive { coeff, .. } = &self.hamiltonian.kind {
            let mut min_c = f64::INFINITY;
            for i in 0..512 {
                let x = [i as f64 / 512.0, 0.31 * (i as f64 / 512.0)];
                min_c = min_c.min(coeff.eval(&x[..self.dim.clamp(1, 2)]));
            }
            if !(min_c > 0.0) {
                out.push(format!("hamiltonian.coeff: must be strictly positive, sampled min {min_c}"));
            }
        }
        match &self.levy.measure {
            MeasureKind::None => {}
            MeasureKind::Fractional { order } => {
                if !(*order > 0.0 && *order < 2.0) {
                    out.push(format!("levy.sigma_frac: must lie in (0, 2), got {order}"));
                }
                if self.levy.r_max < 1.0 {
                    out.push(format!("levy.r_max: must be >= 1, got {}", self.levy.r_max));
                }
            }
            MeasureKind::Finite { radius, total_mass } => {
                if !(*radius > 0.0) {
                    out.push(format!("levy.radius: must be > 0, got {radius}"));
                }
                if !(*total_mass >= 0.0) {
                    out.push(format!("levy.total_mass: must be >= 0, got {total_mass}"));
                }
            }
            MeasureKind::Atomic { atoms } => {
                for (k, a) in atoms.iter().enumerate() {
                    if !(a.mass >= 0.0) {
                        out.push(format!("levy.atoms[{k}].mass: must be >= 0, got {}", a.mass));
                    }
                }
            }
        }
        if let JumpKind::Modulated { g, g_min, g_max, g_lip } = &self.levy.jump {
            if !(*g_min > 0.0) {
                out.push(format!("jump.g_min: must be > 0, got {g_min}"));
            }
            if g_lip < &0.0 {
                out.push("jump.g_lip: must be >= 0".into());
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..512 {
                let x = [i as f64 / 512.0, 0.47 * (i as f64 / 512.0)];
                let v = g.eval(&x[..self.dim.clamp(1, 2)]);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if lo < *g_min - CHECK_TOL || hi > *g_max + CHECK_TOL {
                out.push(format!(
                    "jump.g: sampled range [{lo}, {hi}] escapes declared [{g_min}, {g_max}]"
                ));
            }
        }
        out
    }

    /// `Ok(())` when well formed, otherwise a configuration error joining all
    /// violations.
    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }

    /// Initial datum sampled on a grid (error if the spec has none).
    pub fn initial_on(&self, grid: TorusGrid) -> Result<crate::grid::GridFunction> {
        match &self.initial {
            Some(init) => Ok(crate::grid::GridFunction::sample(grid, &init.field)),
            None => Err(Error::Config("an evolution run requires initial data u_0".into())),
        }
    }
}

// ---------------------------------------------------------------------------
// Check reports
// ---------------------------------------------------------------------------

/// Outcome of one sampled assumption check.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: &'static str,
    pub pass: bool,
    /// Number of sampled tuples inspected.
    pub samples: usize,
    /// Minimal slack observed (negative = violation).
    pub worst_slack: f64,
    /// Human-readable description of the worst sample point.
    pub witness: Option<String>,
}

impl CheckReport {
    fn from_slack(name: &'static str, samples: usize, worst_slack: f64, tol: f64, witness: String) -> Self {
        let pass = worst_slack >= -tol;
        CheckReport { name, pass, samples, worst_slack, witness: if pass { None } else { Some(witness) } }
    }
}

// ---------------------------------------------------------------------------
// Checkers
// ---------------------------------------------------------------------------

fn sample_point(dim: usize, t: &[f64]) -> [f64; 2] {
    let mut x = [0.0; 2];
    x[..dim].copy_from_slice(&t[..dim]);
    x
}

/// Direction from one low-discrepancy coordinate: `±1` in dim 1, a unit
/// vector in dim 2.
fn sample_direction(dim: usize, t: f64) -> [f64; 2] {
    if dim == 1 {
        [if t < 0.5 { -1.0 } else { 1.0 }, 0.0]
    } else {
        let ang = core::f64::consts::TAU * t;
        [crate::math::cos(ang), crate::math::sin(ang)]
    }
}

/// Check `|σ| ≤ L_σ`, Lipschitz continuity of `σ`, and `A(x) ⪰ 0` on sampled
/// point pairs.
pub fn check_diffusion(spec: &ProblemSpec, samples: usize, seed: u64) -> Result<CheckReport> {
    spec.validate()?;
    let dim = spec.dim;
    let l = spec.diffusion.lipschitz_bound;
    let mut halton = Halton::new(seed, 2 * dim);
    let mut t = [0.0f64; 8];
    let mut worst = f64::INFINITY;
    let mut witness = String::new();
    let note = |slack: f64, w: &mut f64, wit: &mut String, msg: String| {
        if slack < *w {
            *w = slack;
            *wit = msg;
        }
    };
    for _ in 0..samples {
        halton.next_point(&mut t[..2 * dim]);
        let x = sample_point(dim, &t[..dim]);
        let y = sample_point(dim, &t[dim..2 * dim]);
        let xs = &x[..dim];
        let ys = &y[..dim];

        let bound_slack = l - spec.diffusion.frobenius(xs);
        note(bound_slack, &mut worst, &mut witness, format!("|sigma| bound violated at x={xs:?}"));

        let dist = TorusGrid::torus_distance(xs, ys);
        let lip_slack = l * dist - spec.diffusion.frobenius_distance(xs, ys);
        note(lip_slack, &mut worst, &mut witness, format!("sigma Lipschitz bound violated at x={xs:?}, y={ys:?}"));

        // A = σσᵀ ⪰ 0: in dim 1 the coefficient, in dim 2 the smaller
        // eigenvalue of the assembled 2×2 matrix.
        let psd_slack = match &spec.diffusion.kind {
            SigmaKind::Zero => 0.0,
            SigmaKind::Scalar(_) => spec.diffusion.coefficient_1d(xs),
            SigmaKind::Columns2(cols) => {
                let (mut a11, mut a12, mut a22) = (0.0, 0.0, 0.0);
                for c in cols {
                    let v0 = c[0].eval(xs);
                    let v1 = c[1].eval(xs);
                    a11 += v0 * v0;
                    a12 += v0 * v1;
                    a22 += v1 * v1;
                }
                let disc = sqrt((0.5 * (a11 - a22)) * (0.5 * (a11 - a22)) + a12 * a12);
                0.5 * (a11 + a22) - disc
            }
        };
        note(psd_slack, &mut worst, &mut witness, format!("A(x) not positive semidefinite at x={xs:?}"));
    }
    Ok(CheckReport::from_slack("diffusion", samples, worst, DIFFUSION_TOL, witness))
}

/// Check the growth inequality
/// `μH(x, μ⁻¹p) − H(x,p) ≥ (1−μ)(b_m|p|^m − K)` on sampled `(x, p, μ)`.
pub fn check_h1(spec: &ProblemSpec, samples: usize, seed: u64) -> Result<CheckReport> {
    spec.validate()?;
    let dim = spec.dim;
    let ham = &spec.hamiltonian;
    let mut halton = Halton::new(seed, dim + 3);
    let mut t = [0.0f64; 8];
    let mut worst = f64::INFINITY;
    let mut witness = String::new();
    let mut count = 0usize;

    let probe = |x: &[f64], p: &[f64], mu: f64, worst: &mut f64, witness: &mut String| {
        let pm = norm(p);
        let mut p_over_mu = [0.0f64; 2];
        for a in 0..dim {
            p_over_mu[a] = p[a] / mu;
        }
        let slack = mu * ham.eval(x, &p_over_mu[..dim])
            - ham.eval(x, p)
            - (1.0 - mu) * (ham.b_m * abs_pow(pm, ham.m) - ham.k_const);
        if slack < *worst {
            *worst = slack;
            *witness = format!("growth inequality violated at x={x:?}, p={:?}, mu={mu}", &p[..dim]);
        }
    };

    for _ in 0..samples {
        halton.next_point(&mut t[..dim + 3]);
        let x = sample_point(dim, &t[..dim]);
        let mag = log_magnitude(t[dim], 1e-2, P_MAX_DEFAULT);
        let dir = sample_direction(dim, t[dim + 1]);
        let mu = 1e-3 + t[dim + 2] * (1.0 - 2e-3);
        let p = [mag * dir[0], mag * dir[1]];
        probe(&x[..dim], &p[..dim], mu, &mut worst, &mut witness);
        count += 1;
    }
    // Deterministic corner probes: p = 0 (where K binds) over an x-scan and
    // μ pushed toward both ends.
    for i in 0..32 {
        let x = [i as f64 / 32.0, ((7 * i) % 32) as f64 / 32.0];
        for &mu in &[1e-3, 0.1, 0.5, 0.9, 0.999] {
            probe(&x[..dim], &[0.0, 0.0][..dim], mu, &mut worst, &mut witness);
            count += 1;
        }
    }
    Ok(CheckReport::from_slack("growth", count, worst, CHECK_TOL, witness))
}

/// Check the continuity inequality
/// `H(y,p+q) − H(x,p) ≤ L_H|x−y|(1+|p|^m) + ζ(|q|)(1+|p|^{m−1})`, `|q| ≤ 1`,
/// with `ζ(r) = C_ζ·r`.
pub fn check_h2prime(spec: &ProblemSpec, samples: usize, seed: u64) -> Result<CheckReport> {
    spec.validate()?;
    if !(spec.hamiltonian.c_zeta >= 0.0) || !spec.hamiltonian.c_zeta.is_finite() {
        return Err(Error::Config("hamiltonian.c_zeta: modulus slope missing or invalid".into()));
    }
    let dim = spec.dim;
    let ham = &spec.hamiltonian;
    let mut halton = Halton::new(seed, 2 * dim + 4);
    let mut t = [0.0f64; 8];
    let mut worst = f64::INFINITY;
    let mut witness = String::new();
    for _ in 0..samples {
        halton.next_point(&mut t[..2 * dim + 4]);
        let x = sample_point(dim, &t[..dim]);
        let y = sample_point(dim, &t[dim..2 * dim]);
        let mag_p = log_magnitude(t[2 * dim], 1e-2, P_MAX_DEFAULT);
        let dir_p = sample_direction(dim, t[2 * dim + 1]);
        let mag_q = t[2 * dim + 2]; // uniform in [0, 1]
        let dir_q = sample_direction(dim, t[2 * dim + 3]);
        let p = [mag_p * dir_p[0], mag_p * dir_p[1]];
        let q = [mag_q * dir_q[0], mag_q * dir_q[1]];
        let ppq = [p[0] + q[0], p[1] + q[1]];

        let dist = TorusGrid::torus_distance(&x[..dim], &y[..dim]);
        let lhs = ham.eval(&y[..dim], &ppq[..dim]) - ham.eval(&x[..dim], &p[..dim]);
        let rhs = ham.l_h * dist * (1.0 + abs_pow(mag_p, ham.m))
            + ham.c_zeta * mag_q * (1.0 + abs_pow(mag_p, ham.m - 1.0));
        let slack = rhs - lhs;
        if slack < worst {
            worst = slack;
            witness = format!(
                "continuity bound violated at x={:?}, y={:?}, |p|={mag_p}, |q|={mag_q}",
                &x[..dim],
                &y[..dim]
            );
        }
    }
    Ok(CheckReport::from_slack("continuity", samples, worst, CHECK_TOL, witness))
}

/// First moment of the builtin measures over `{a < |z| ≤ b}` (per unit jump
/// scale): `∫ |z| ν(dz)`.
pub fn radial_first_moment(measure: &MeasureKind, dim: usize, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    match measure {
        MeasureKind::None => 0.0,
        MeasureKind::Fractional { order } => {
            // d=1: 2∫_a^b z·z^{−1−σ} dz; d=2: 2π∫ r·r^{−2−σ}·r dr — both
            // reduce to c_d ∫ r^{−σ} dr.
            let c_d = if dim == 1 { 2.0 } else { core::f64::consts::TAU };
            let s = *order;
            if (s - 1.0).abs() < 1e-14 {
                c_d * crate::math::log(b / a.max(1e-300))
            } else {
                c_d * (pow(b, 1.0 - s) - pow(a, 1.0 - s)) / (1.0 - s)
            }
        }
        MeasureKind::Finite { radius, total_mass } => {
            let r = *radius;
            if dim == 1 {
                // density = mass/(2r) on [−r, r]: ∫_{a<|z|≤min(b,r)} |z| dz.
                let hi = b.min(r);
                if hi <= a {
                    0.0
                } else {
                    total_mass / (2.0 * r) * (hi * hi - a * a)
                }
            } else {
                // density = mass/(πr²) on the disc.
                let hi = b.min(r);
                if hi <= a {
                    0.0
                } else {
                    total_mass / (core::f64::consts::PI * r * r)
                        * core::f64::consts::TAU
                        * (hi * hi * hi - a * a * a)
                        / 3.0
                }
            }
        }
        MeasureKind::Atomic { atoms } => {
            let mut s = 0.0;
            for at in atoms {
                let r = norm(&at.z[..dim]);
                if r > a && r <= b {
                    s += at.mass * r;
                }
            }
            s
        }
    }
}

/// Exact `∫ 1∧|z|² ν(dz)` for the builtin measures (full tail, no truncation).
pub fn levy_moment_exact(measure: &MeasureKind, dim: usize) -> f64 {
    match measure {
        MeasureKind::None => 0.0,
        MeasureKind::Fractional { order } => {
            let c_d = if dim == 1 { 2.0 } else { core::f64::consts::TAU };
            // inner: c_d ∫_0^1 r^{1−σ} dr = c_d/(2−σ); tail: c_d ∫_1^∞ r^{−1−σ} = c_d/σ.
            c_d / (2.0 - order) + c_d / order
        }
        MeasureKind::Finite { radius, total_mass } => {
            let r = *radius;
            if dim == 1 {
                let density = total_mass / (2.0 * r);
                if r <= 1.0 {
                    density * 2.0 * r * r * r / 3.0
                } else {
                    density * (2.0 / 3.0 + 2.0 * (r - 1.0))
                }
            } else {
                let density = total_mass / (core::f64::consts::PI * r * r);
                if r <= 1.0 {
                    density * core::f64::consts::TAU * r * r * r * r / 4.0
                } else {
                    density * core::f64::consts::TAU * (0.25 + 0.5 * (r * r - 1.0))
                }
            }
        }
        MeasureKind::Atomic { atoms } => {
            let mut s = 0.0;
            for at in atoms {
                let r2 = at.z[0] * at.z[0] + at.z[1] * at.z[1];
                s += at.mass * r2.min(1.0);
            }
            s
        }
    }
}

/// Composite-midpoint quadrature of `∫ 1∧|z|² ν(dz)` with `resolution` cells
/// on the unit ball and `resolution` geometric cells on `[1, r_max]`, plus
/// the analytic tail beyond `r_max`. At least first-order accurate in
/// `resolution` (exact for the fractional family at order 1, where the
/// geometric-mean midpoint telescopes).
pub fn levy_moment_quadrature(measure: &MeasureKind, dim: usize, r_max: f64, resolution: usize) -> f64 {
    let n = resolution.max(2);
    let radial_density = |r: f64| -> f64 {
        match measure {
            MeasureKind::None => 0.0,
            MeasureKind::Fractional { order } => {
                let c_d = if dim == 1 { 2.0 } else { core::f64::consts::TAU };
                c_d * pow(r, -1.0 - order) // includes the surface factor
            }
            MeasureKind::Finite { radius, total_mass } => {
                if r > *radius {
                    0.0
                } else if dim == 1 {
                    total_mass / radius
                } else {
                    total_mass / (core::f64::consts::PI * radius * radius) * core::f64::consts::TAU * r
                }
            }
            MeasureKind::Atomic { .. } => 0.0,
        }
    };
    if let MeasureKind::Atomic { .. } = measure {
        return levy_moment_exact(measure, dim);
    }
    let mut total = 0.0;
    // Unit ball, uniform midpoint cells: integrand r² · density(r).
    let hc = 1.0 / n as f64;
    for k in 0..n {
        let r = (k as f64 + 0.5) * hc;
        total += r * r * radial_density(r) * hc;
    }
    // [1, r_max] geometric midpoint cells: integrand density(r).
    let ratio = pow(r_max, 1.0 / n as f64);
    let mut lo = 1.0;
    for _ in 0..n {
        let hi = lo * ratio;
        let mid = sqrt(lo * hi);
        total += radial_density(mid) * (hi - lo);
        lo = hi;
    }
    // Analytic tail beyond r_max for the fractional family.
    if let MeasureKind::Fractional { order } = measure {
        let c_d = if dim == 1 { 2.0 } else { core::f64::consts::TAU };
        total += c_d * pow(r_max, -order) / order;
    }
    total
}

/// Check the Lévy hypotheses: the `1∧|z|²` moment against `C_ν` (analytic
/// inner ball for the fractional family, cross-checked by the module's own
/// quadrature), `|j(x,z)| ≤ C_j|z|` with its Lipschitz companion, and the
/// per-radius first-moment bounds for `a ∈ {0.5, 1, 2}`.
pub fn check_levy(spec: &ProblemSpec, quad_resolution: usize, seed: u64) -> Result<CheckReport> {
    spec.validate()?;
    let dim = spec.dim;
    let levy = &spec.levy;
    if matches!(levy.measure, MeasureKind::None) {
        // No jumps at all: every bound below quantifies over an empty set.
        return Ok(CheckReport::from_slack("levy", 0, f64::INFINITY, CHECK_TOL, String::new()));
    }
    let mut worst = f64::INFINITY;
    let mut witness = String::new();
    let mut count = 0usize;
    let note = |slack: f64, msg: String, worst: &mut f64, witness: &mut String| {
        if slack < *worst {
            *worst = slack;
            *witness = msg;
        }
    };

    // (1) Integrability moment. The analytic value is authoritative; the
    // quadrature must agree with it and stay under C_ν as well.
    let exact = levy_moment_exact(&levy.measure, dim);
    let quad = levy_moment_quadrature(&levy.measure, dim, levy.r_max, quad_resolution);
    note(levy.c_nu - exact, format!("1∧|z|² moment {exact} exceeds C_nu {}", levy.c_nu), &mut worst, &mut witness);
    note(levy.c_nu - quad, format!("quadrature moment {quad} exceeds C_nu {}", levy.c_nu), &mut worst, &mut witness);
    count += 2;

    // (2) Jump-size bounds on sampled (x, y, z).
    let mut halton = Halton::new(seed, 2 * dim + 1);
    let mut t = [0.0f64; 8];
    for _ in 0..512 {
        halton.next_point(&mut t[..2 * dim + 1]);
        let x = sample_point(dim, &t[..dim]);
        let y = sample_point(dim, &t[dim..2 * dim]);
        let zmag = log_magnitude(t[2 * dim], 1e-6, levy.r_max);
        let sx = levy.jump_scale(&x[..dim]);
        let sy = levy.jump_scale(&y[..dim]);
        note(
            levy.c_j * zmag - fabs(sx) * zmag,
            format!("|j(x,z)| > C_j|z| at x={:?}, |z|={zmag}", &x[..dim]),
            &mut worst,
            &mut witness,
        );
        let dist = TorusGrid::torus_distance(&x[..dim], &y[..dim]);
        note(
            levy.c_j * zmag * dist - fabs(sx - sy) * zmag,
            format!("jump Lipschitz bound violated at x={:?}, y={:?}", &x[..dim], &y[..dim]),
            &mut worst,
            &mut witness,
        );
        count += 2;
    }

    // (3) Per-radius first moments: sup_x ∫_{a<|z|≤R} |j(x,z)| ν(dz) ≤ C_a.
    for &a in &[0.5, 1.0, 2.0] {
        let base = radial_first_moment(&levy.measure, dim, a, levy.r_max);
        let c_a = levy.c_a_gen * base;
        let mut sup_scale: f64 = match &levy.jump {
            JumpKind::Translation => 1.0,
            JumpKind::Modulated { .. } => 0.0,
        };
        if let JumpKind::Modulated { g, .. } = &levy.jump {
            for i in 0..256 {
                let x = [i as f64 / 256.0, ((13 * i) % 256) as f64 / 256.0];
                sup_scale = sup_scale.max(fabs(g.eval(&x[..dim])));
            }
        }
        note(
            c_a - sup_scale * base + CHECK_TOL * 0.5,
            format!("first-moment bound C_a violated at a={a}"),
            &mut worst,
            &mut witness,
        );
        count += 1;
    }

    Ok(CheckReport::from_slack("levy", count, worst, CHECK_TOL, witness))
}

/// Minimal slack of the derived coercivity consequence
/// `H(x, Lp) − L·H(x,p) ≥ η L^m |p|^m − η⁻¹` over sampled `(x, p)`,
/// for `L > 1` and the declared `η` (default `b_m/2`).
pub fn coercivity_gap(spec: &ProblemSpec, l_factor: f64, samples: usize) -> f64 {
    let dim = spec.dim;
    let ham = &spec.hamiltonian;
    let eta = ham.eta.unwrap_or(0.5 * ham.b_m);
    let mut halton = Halton::new(0, dim + 2);
    let mut t = [0.0f64; 8];
    let mut worst = f64::INFINITY;
    let mut probe = |x: &[f64], p: &[f64]| {
        let pm = norm(p);
        let mut lp = [0.0f64; 2];
        for a in 0..dim {
            lp[a] = l_factor * p[a];
        }
        let slack = ham.eval(x, &lp[..dim]) - l_factor * ham.eval(x, p)
            - eta * abs_pow(l_factor, ham.m) * abs_pow(pm, ham.m)
            + 1.0 / eta;
        worst = worst.min(slack);
    };
    for _ in 0..samples {
        halton.next_point(&mut t[..dim + 2]);
        let x = sample_point(dim, &t[..dim]);
        let mag = log_magnitude(t[dim], 1e-2, P_MAX_DEFAULT);
        let dir = sample_direction(dim, t[dim + 1]);
        let p = [mag * dir[0], mag * dir[1]];
        probe(&x[..dim], &p[..dim]);
    }
    for i in 0..16 {
        let x = [i as f64 / 16.0, ((5 * i) % 16) as f64 / 16.0];
        probe(&x[..dim], &[0.0, 0.0][..dim]);
        probe(&x[..dim], &[P_MAX_DEFAULT, 0.0][..dim]);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use core::f64::consts::{PI, TAU};

    fn bare_spec(ham: Hamiltonian) -> ProblemSpec {
        ProblemSpec {
            dim: 1,
            lambda: 0.0,
            diffusion: DiffusionFactor::zero(),
            hamiltonian: ham,
            levy: LevyData::none(),
            initial: None,
        }
    }

    fn quadratic_h() -> Hamiltonian {
        let mut h = Hamiltonian::power_coercive(ScalarField::Constant(1.0), 2.0, ScalarField::zero());
        h.h_0 = 0.0;
        h.l_h = 0.0;
        h.c_zeta = 2.0;
        h
    }

    // --- diffusion checker -------------------------------------------------

    #[test]
    fn constant_identity_sigma_passes() {
        let mut spec = bare_spec(quadratic_h());
        spec.diffusion = DiffusionFactor::scalar(ScalarField::Constant(1.0), 1.0);
        let rep = check_diffusion(&spec, 500, 0).unwrap();
        assert!(rep.pass, "worst slack {}", rep.worst_slack);
    }

    #[test]
    fn sine_sigma_needs_2pi_lipschitz() {
        // σ(x) = sin(2πx): |σ| ≤ 1 and |σ'| ≤ 2π, so L_σ = 2π passes…
        let sine = ScalarField::cosine(0.0, 1.0, 1, -core::f64::consts::FRAC_PI_2);
        let mut spec = bare_spec(quadratic_h());
        spec.diffusion = DiffusionFactor::scalar(sine.clone(), TAU);
        assert!(check_diffusion(&spec, 2000, 1).unwrap().pass);
        // …and L_σ = 0.5 must fail with a witness near the steepest point.
        spec.diffusion = DiffusionFactor::scalar(sine, 0.5);
        let rep = check_diffusion(&spec, 2000, 1).unwrap();
        assert!(!rep.pass);
        assert!(rep.witness.is_some());
        assert!(rep.worst_slack < -0.1);
    }

    // --- growth checker ----------------------------------------------------

    #[test]
    fn pure_quadratic_growth_passes_with_k_zero() {
        // μ|μ⁻¹p|² − |p|² = (μ⁻¹−1)|p|² ≥ (1−μ)|p|².
        let mut h = quadratic_h();
        h.b_m = 1.0;
        h.k_const = 0.0;
        let spec = bare_spec(h);
        for seed in 0..3 {
            let rep = check_h1(&spec, 2000, seed).unwrap();
            assert!(rep.pass, "seed {seed}: slack {}", rep.worst_slack);
        }
    }

    #[test]
    fn p15_growth_constant_is_m_minus_one() {
        // For |p|^{1.5}, min over μ of (μ^{1−m}−1)/(1−μ) equals m−1 = 0.5.
        let mut h = Hamiltonian::power_coercive(ScalarField::Constant(1.0), 1.5, ScalarField::zero());
        h.b_m = 0.5;
        h.k_const = 0.0;
        let rep = check_h1(&bare_spec(h), 2000, 0).unwrap();
        assert!(rep.pass, "slack {}", rep.worst_slack);
        // Oracle: 1-D scan confirms the infimum of the normalized gap is ≈ m−1.
        let mut inf = f64::INFINITY;
        for k in 1..1000 {
            let mu = k as f64 / 1000.0;
            inf = inf.min((pow(mu, 1.0 - 1.5) - 1.0) / (1.0 - mu));
        }
        assert!((inf - 0.5).abs() < 1e-3, "scan infimum {inf}");
    }

    #[test]
    fn linear_hamiltonian_fails_growth() {
        // H = ⟨b, p⟩: left side of the inequality is identically 0.
        let mut h = Hamiltonian {
            kind: HamiltonianKind::Custom(Arc::new(|_x, p| 3.0 * p[0])),
            m: 2.0,
            b_m: 0.1,
            k_const: 10.0,
            l_h: 0.0,
            c_zeta: 10.0,
            h_0: 0.0,
            eta: None,
        };
        h.b_m = 0.1;
        let rep = check_h1(&bare_spec(h), 2000, 0).unwrap();
        assert!(!rep.pass);
        assert!(rep.witness.is_some());
    }

    #[test]
    fn forced_quadratic_needs_k_at_least_sup_f_minus() {
        // H = |p|² − cos(2πx): at p = 0 the slack is (1−μ)(K + cos(2πx)) − …
        // wait − the inequality needs K ≥ 1; K = 0 must fail, K = 1 must pass.
        let forcing = ScalarField::cosine(0.0, 1.0, 1, 0.0);
        let mut h = Hamiltonian::power_coercive(ScalarField::Constant(1.0), 2.0, forcing);
        h.b_m = 1.0;
        h.k_const = 0.0;
        h.c_zeta = 2.0;
        h.l_h = TAU;
        h.h_0 = 1.0;
        let rep = check_h1(&bare_spec(h.clone()), 2000, 0).unwrap();
        assert!(!rep.pass, "K = 0 should fail for forced quadratic");
        h.k_const = 1.0;
        let rep = check_h1(&bare_spec(h), 2000, 0).unwrap();
        assert!(rep.pass, "K = 1 should pass, slack {}", rep.worst_slack);
    }

    #[test]
    fn growth_check_monotone_in_b_m() {
        // If the check passes at b_m it passes at any smaller b_m (same K).
        let instances = [
            (2.0, 1.0, 1.0),  // (m, b_m, K)
            (3.0, 2.0, 1.0),
            (1.5, 0.5, 0.0),
        ];
        for &(m, b_m, k) in &instances {
            for &shrink in &[1.0, 0.5, 0.1] {
                let mut h = Hamiltonian::power_coercive(
                    ScalarField::Constant(1.0),
                    m,
                    if k > 0.0 { ScalarField::cosine(0.0, 1.0, 1, 0.0) } else { ScalarField::zero() },
                );
                h.b_m = b_m * shrink;
                h.k_const = k;
                let rep = check_h1(&bare_spec(h), 1000, 2).unwrap();
                assert!(rep.pass, "m={m} b_m={} K={k}: slack {}", b_m * shrink, rep.worst_slack);
            }
        }
    }

    // --- continuity checker ------------------------------------------------

    #[test]
    fn x_independent_quadratic_passes_with_zero_lh() {
        let spec = bare_spec(quadratic_h());
        let rep = check_h2prime(&spec, 2000, 0).unwrap();
        assert!(rep.pass, "slack {}", rep.worst_slack);
    }

    #[test]
    fn cosine_forcing_needs_lh_2pi() {
        let forcing = ScalarField::cosine(0.0, 1.0, 1, 0.0);
        let mut h = Hamiltonian::power_coercive(ScalarField::Constant(1.0), 2.0, forcing);
        h.l_h = TAU;
        h.c_zeta = 2.0;
        let rep = check_h2prime(&bare_spec(h), 3000, 0).unwrap();
        assert!(rep.pass, "slack {}", rep.worst_slack);
    }

    #[test]
    fn varying_coefficient_fails_below_pi() {
        // H = (1 + 0.5cos(2πx))|p|²: the coefficient variation needs L_H ≥ π.
        let coeff = ScalarField::cosine(1.0, 0.5, 1, 0.0);
        let mut h = Hamiltonian::power_coercive(coeff, 2.0, ScalarField::zero());
        h.l_h = 0.9 * PI;
        h.c_zeta = 6.0;
        let rep = check_h2prime(&bare_spec(h), 4000, 0).unwrap();
        assert!(!rep.pass, "L_H < π must fail; slack {}", rep.worst_slack);
    }

    // --- Lévy checker ------------------------------------------------------

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

    #[test]
    fn fractional_moment_analytic_and_quadrature_agree() {
        // σ = 1, d = 1: inner-ball ∫_{|z|<1}|z|²|z|^{−2}dz = 2, tail = 2.
        let m = MeasureKind::Fractional { order: 1.0 };
        assert!((levy_moment_exact(&m, 1) - 4.0).abs() < 1e-14);
        let q = levy_moment_quadrature(&m, 1, 10.0, 4000);
        assert!((q - 4.0).abs() / 4.0 < 1e-6, "quadrature {q}");
    }

    #[test]
    fn moment_quadrature_converges_first_order() {
        // Order 1 is special: the geometric-mean midpoint telescopes the
        // r⁻² integrand exactly, leaving only rounding noise.
        let m = MeasureKind::Fractional { order: 1.0 };
        let exact = levy_moment_exact(&m, 1);
        assert!((levy_moment_quadrature(&m, 1, 10.0, 100) - exact).abs() < 1e-12);

        // Away from order 1 the error is genuine; doubling the resolution
        // must shrink it by better than first order.
        let m = MeasureKind::Fractional { order: 0.5 };
        let exact = levy_moment_exact(&m, 1);
        let mut errs = alloc::vec::Vec::new();
        for &res in &[200usize, 400, 800] {
            errs.push((levy_moment_quadrature(&m, 1, 10.0, res) - exact).abs());
        }
        assert!(errs[0] > 1e-12, "errors should be above rounding noise, got {errs:?}");
        for w in errs.windows(2) {
            let ratio = w[1] / w[0];
            assert!(ratio < 0.75, "expected ~first-order decay, ratio {ratio}");
        }
    }

    #[test]
    fn fractional_sigma1_passes_with_declared_cnu() {
        let mut spec = bare_spec(quadratic_h());
        spec.levy = fractional_levy(1.0, 4.0 + 1e-9);
        let rep = check_levy(&spec, 2000, 0).unwrap();
        assert!(rep.pass, "slack {}", rep.worst_slack);
        // And fails when C_ν is declared below the true moment.
        spec.levy.c_nu = 3.9;
        assert!(!check_levy(&spec, 2000, 0).unwrap().pass);
    }

    #[test]
    fn finite_measure_total_mass_bounds_moment() {
        let mut spec = bare_spec(quadratic_h());
        spec.levy = LevyData {
            measure: MeasureKind::Finite { radius: 2.0, total_mass: 1.0 },
            jump: JumpKind::Translation,
            c_nu: 1.0,
            c_j: 1.0,
            c_a_gen: 1.0,
            r_max: 10.0,
        };
        let rep = check_levy(&spec, 1000, 0).unwrap();
        assert!(rep.pass, "1∧|z|² ≤ 1 ⇒ moment ≤ total mass; slack {}", rep.worst_slack);
    }

    #[test]
    fn modulated_jump_respects_cj() {
        // g ∈ [0.5, 2] with Lipschitz constant 1 ⇒ C_j = 2 works.
        let g = ScalarField::custom(|x| {
            1.25 + 0.75 * crate::math::cos(TAU * x[0]) / TAU // slope ≤ 0.75 < 1
        });
        let mut spec = bare_spec(quadratic_h());
        spec.levy = LevyData {
            measure: MeasureKind::Fractional { order: 1.0 },
            jump: JumpKind::Modulated { g, g_min: 0.5, g_max: 2.0, g_lip: 1.0 },
            c_nu: 4.01,
            c_j: 2.0,
            c_a_gen: 2.0,
            r_max: 10.0,
        };
        let rep = check_levy(&spec, 1000, 0).unwrap();
        assert!(rep.pass, "slack {}", rep.worst_slack);
    }

    #[test]
    fn invalid_fractional_order_is_config_error() {
        let mut spec = bare_spec(quadratic_h());
        spec.levy = fractional_levy(2.5, 100.0);
        match check_levy(&spec, 100, 0) {
            Err(Error::Config(msg)) => assert!(msg.contains("sigma_frac"), "{msg}"),
            other => panic!("expected configuration error, got {other:?}"),
        }
    }

    // --- coercivity gap ----------------------------------------------------

    #[test]
    fn quadratic_gap_slack_matches_hand_value() {
        // H = |p|², L = 2, η = 1/2, |p| = 1: (4−2) − ½·4·1 + 2 = 2.
        let mut h = quadratic_h();
        h.eta = Some(0.5);
        let ham = h.clone();
        let spec = bare_spec(h);
        let x = [0.0];
        let p = [1.0];
        let slack = ham.eval(&x, &[2.0 * p[0]]) - 2.0 * ham.eval(&x, &p) - 0.5 * 4.0 + 2.0;
        assert!((slack - 2.0).abs() < 1e-12);
        assert!(coercivity_gap(&spec, 2.0, 2000) >= 0.0);
    }

    #[test]
    fn l_equal_one_gives_negative_slack_for_large_p() {
        // L = 1 makes the left side vanish; −η|p|^m + η⁻¹ < 0 for large |p|.
        let mut h = quadratic_h();
        h.eta = Some(0.5);
        let spec = bare_spec(h);
        assert!(coercivity_gap(&spec, 1.0, 2000) < 0.0);
    }

    #[test]
    fn p15_with_bounded_forcing_keeps_nonnegative_slack() {
        // H = |p|^{1.5} − 0.4cos(2πx), L = 10, η = 0.25: slack ≥ 0 on |p| ≤ 50.
        let mut h = Hamiltonian::power_coercive(
            ScalarField::Constant(1.0),
            1.5,
            ScalarField::cosine(0.0, 0.4, 1, 0.0),
        );
        h.eta = Some(0.25);
        let spec = bare_spec(h);
        let slack = coercivity_gap(&spec, 10.0, 3000);
        assert!(slack >= 0.0, "slack {slack}");
    }

    // --- spec validation ---------------------------------------------------

    #[test]
    fn violations_list_every_offending_field() {
        let mut h = quadratic_h();
        h.m = 0.5;
        let mut spec = bare_spec(h);
        spec.lambda = -1.0;
        spec.levy = fractional_levy(2.5, 1.0);
        let v = spec.violations();
        assert!(v.iter().any(|s| s.contains("lambda")));
        assert!(v.iter().any(|s| s.contains("hamiltonian.m")));
        assert!(v.iter().any(|s| s.contains("sigma_frac")));
        assert_eq!(v.len(), 3, "{v:?}");
    }

    #[test]
    fn null_space_detection_1d() {
        let elliptic = DiffusionFactor::scalar(ScalarField::Constant(0.3), 0.3);
        assert!(elliptic.null_space(&[0.2], 1, 1e-10).is_empty());
        let degenerate = DiffusionFactor::zero();
        assert_eq!(degenerate.null_space(&[0.2], 1, 1e-10).len(), 1);
    }

    #[test]
    fn null_space_detection_2d_rank_one() {
        // σ with single column (1, 1)/√2: null direction ∝ (1, −1).
        let cols = vec![[
            ScalarField::Constant(core::f64::consts::FRAC_1_SQRT_2),
            ScalarField::Constant(core::f64::consts::FRAC_1_SQRT_2),
        ]];
        let d = DiffusionFactor { kind: SigmaKind::Columns2(cols), lipschitz_bound: 1.0 };
        let ns = d.null_space(&[0.1, 0.4], 2, 1e-10);
        assert_eq!(ns.len(), 1);
        let v = ns[0];
        let dot = (v[0] + v[1]).abs(); // should be ⟂ (1,1)
        assert!(dot < 1e-10, "null vector {v:?}");
    }
}
