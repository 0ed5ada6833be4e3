//! Monotone discretization of the local terms: the (possibly degenerate)
//! second-order part `Tr(A(x)D²u)` and the coercive Hamiltonian `H(x, Du)`.
//!
//! Diffusion is discretized per column of `σ` (Kushner–Dupuis): each column
//! contributes a directional second difference along itself, which keeps the
//! scheme monotone even when `A = σσᵀ` is degenerate or anisotropic. In
//! dimension 1 this is the classic 3-point stencil scaled by `a(x) = σ(x)²`.
//! No regularization is added when `σ ≡ 0` — coercivity of `H`, not
//! ellipticity, is what drives the estimates under test.
//!
//! The Hamiltonian uses a Lax–Friedrichs flux
//!
//! ```text
//! Ĥ(x, D⁺u, D⁻u) = H(x, (D⁺u + D⁻u)/2) − Σ_axes θ(x)·(D⁺u − D⁻u)_axis / 2,
//! ```
//!
//! monotone whenever `θ ≥ |H_p|` on the visited gradient range; `θ` is
//! calibrated from an observed gradient bound with a 1.1 safety factor (plus
//! any centered compensator drift the nonlocal table carries, so that drift
//! is dominated too). Consistency `Ĥ(x,p,p) = H(x,p)` holds *exactly*: the
//! average of two equal floats is that float and the dissipation term is an
//! exact zero.
//!
//! Everything is difference-form (weights times `u(neighbor) − u(center)`),
//! so constants are annihilated exactly.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{GridFunction, GridVectorField, TorusGrid};
use crate::math::{fabs, norm};
use crate::model::{Hamiltonian, HamiltonianKind, ProblemSpec, SigmaKind};
use crate::nonlocal::QuadratureTable;

/// Lax–Friedrichs dissipation and CFL policy.
#[derive(Clone, Debug)]
pub struct SchemeParams {
    /// Per-point dissipation coefficient θ(x) ≥ 0 (isotropic: the builtin
    /// Hamiltonians depend on |p|, so one bound serves every axis).
    pub theta: Vec<f64>,
    /// CFL safety factor in (0, 1].
    pub cfl_safety: f64,
}

impl SchemeParams {
    pub fn new(n_total: usize, cfl_safety: f64) -> Self {
        SchemeParams { theta: vec![0.0; n_total], cfl_safety }
    }

    pub fn sup_theta(&self) -> f64 {
        self.theta.iter().fold(0.0f64, |a, &t| a.max(t))
    }
}

/// Default CFL safety factor.
pub const CFL_SAFETY_DEFAULT: f64 = 0.8;
/// Safety factor applied on top of the sampled `|H_p|` bound.
pub const THETA_SAFETY: f64 = 1.1;

// ---------------------------------------------------------------------------
// Diffusion
// ---------------------------------------------------------------------------

/// Grid-sampled diffusion data.
#[derive(Clone, Debug)]
pub enum DiffusionStencil {
    None,
    /// Dimension 1: coefficient `a(x_i) = σ(x_i)²` per point.
    Axis1(Vec<f64>),
    /// Dimension 2: per column of σ, the two components sampled per point.
    Columns(Vec<[Vec<f64>; 2]>),
}

/// Sample the diffusion factor of a problem on a grid.
pub fn sample_diffusion(spec: &ProblemSpec, grid: &TorusGrid) -> DiffusionStencil {
    let mut x = [0.0f64; 2];
    match &spec.diffusion.kind {
        SigmaKind::Zero => DiffusionStencil::None,
        SigmaKind::Scalar(_) => {
            let mut a = Vec::with_capacity(grid.len());
            for i in 0..grid.len() {
                grid.point(i, &mut x);
                a.push(spec.diffusion.coefficient_1d(&x[..1]));
            }
            DiffusionStencil::Axis1(a)
        }
        SigmaKind::Columns2(cols) => {
            let mut sampled = Vec::with_capacity(cols.len());
            for col in cols {
                let mut c0 = Vec::with_capacity(grid.len());
                let mut c1 = Vec::with_capacity(grid.len());
                for i in 0..grid.len() {
                    grid.point(i, &mut x);
                    c0.push(col[0].eval(&x[..2]));
                    c1.push(col[1].eval(&x[..2]));
                }
                sampled.push([c0, c1]);
            }
            DiffusionStencil::Columns(sampled)
        }
    }
}

/// Add the discrete `Tr(A D²u)` to `out`.
///
/// Dimension 1: `a_i (u_{i+1} − u_i + u_{i−1} − u_i)/h²`. Dimension 2, per
/// column `v`: `(u(x + h v) − u(x) + u(x − h v) − u(x))/h²` with bilinear
/// interpolation at the off-grid arrival points.
pub fn apply_diffusion_into(st: &DiffusionStencil, grid: &TorusGrid, u: &[f64], out: &mut [f64]) {
    let n = grid.points_per_axis();
    let h = grid.spacing();
    match st {
        DiffusionStencil::None => {}
        DiffusionStencil::Axis1(a) => {
            let inv_h2 = 1.0 / (h * h);
            for i in 0..n {
                let up = if i + 1 == n { u[0] } else { u[i + 1] };
                let um = if i == 0 { u[n - 1] } else { u[i - 1] };
                out[i] += a[i] * inv_h2 * ((up - u[i]) + (um - u[i]));
            }
        }
        DiffusionStencil::Columns(cols) => {
            let inv_h2 = 1.0 / (h * h);
            for col in cols {
                for i0 in 0..n {
                    for i1 in 0..n {
                        let i = i0 * n + i1;
                        // displacement h·col in grid units is just col itself
                        let d0 = col[0][i];
                        let d1 = col[1][i];
                        let interp = |s0: f64, s1: f64| -> f64 {
                            let b0 = crate::math::floor(s0);
                            let b1 = crate::math::floor(s1);
                            let f0 = s0 - b0;
                            let f1 = s1 - b1;
                            let j0 = (i0 as i64 + b0 as i64).rem_euclid(n as i64) as usize;
                            let j1 = (i1 as i64 + b1 as i64).rem_euclid(n as i64) as usize;
                            let j0p = if j0 + 1 == n { 0 } else { j0 + 1 };
                            let j1p = if j1 + 1 == n { 0 } else { j1 + 1 };
                            (1.0 - f0) * (1.0 - f1) * u[j0 * n + j1]
                                + (1.0 - f0) * f1 * u[j0 * n + j1p]
                                + f0 * (1.0 - f1) * u[j0p * n + j1]
                                + f0 * f1 * u[j0p * n + j1p]
                        };
                        let fwd = interp(d0, d1);
                        let bwd = interp(-d0, -d1);
                        out[i] += inv_h2 * ((fwd - u[i]) + (bwd - u[i]));
                    }
                }
            }
        }
    }
}

/// Discrete diffusion term as a grid function.
pub fn apply_diffusion(spec: &ProblemSpec, u: &GridFunction) -> GridFunction {
    let grid = u.grid();
    let st = sample_diffusion(spec, &grid);
    let mut out = vec![0.0; u.values().len()];
    apply_diffusion_into(&st, &grid, u.values(), &mut out);
    GridFunction::from_raw(grid, out)
}

/// Center-coefficient bound of the diffusion stencil (its CFL share).
pub fn diffusion_cfl(st: &DiffusionStencil, h: f64) -> f64 {
    match st {
        DiffusionStencil::None => 0.0,
        DiffusionStencil::Axis1(a) => {
            let sup = a.iter().fold(0.0f64, |m, &v| m.max(v));
            2.0 * sup / (h * h)
        }
        DiffusionStencil::Columns(cols) => 2.0 * cols.len() as f64 / (h * h),
    }
}

// ---------------------------------------------------------------------------
// Hamiltonian
// ---------------------------------------------------------------------------

/// Grid-sampled Hamiltonian data (fast path for the builtin family).
#[derive(Clone, Debug)]
pub enum HamiltonianStencil {
    Power { m: f64, coeff: Vec<f64>, forcing: Vec<f64> },
    Custom { ham: Hamiltonian, points: Vec<[f64; 2]>, dim: usize },
}

/// Sample the Hamiltonian of a problem on a grid.
pub fn sample_hamiltonian(spec: &ProblemSpec, grid: &TorusGrid) -> HamiltonianStencil {
    let mut x = [0.0f64; 2];
    match &spec.hamiltonian.kind {
        HamiltonianKind::PowerCoercive { coeff, forcing } => {
            let mut c = Vec::with_capacity(grid.len());
            let mut f = Vec::with_capacity(grid.len());
            for i in 0..grid.len() {
                grid.point(i, &mut x);
                c.push(coeff.eval(&x[..grid.dim()]));
                f.push(forcing.eval(&x[..grid.dim()]));
            }
            HamiltonianStencil::Power { m: spec.hamiltonian.m, coeff: c, forcing: f }
        }
        HamiltonianKind::Custom(_) => {
            let mut points = Vec::with_capacity(grid.len());
            for i in 0..grid.len() {
                grid.point(i, &mut x);
                points.push(x);
            }
            HamiltonianStencil::Custom { ham: spec.hamiltonian.clone(), points, dim: grid.dim() }
        }
    }
}

impl HamiltonianStencil {
    /// `H(x_i, p)`.
    #[inline]
    pub fn eval(&self, i: usize, p: &[f64]) -> f64 {
        match self {
            HamiltonianStencil::Power { m, coeff, forcing } => {
                coeff[i] * crate::math::abs_pow(norm(p), *m) - forcing[i]
            }
            HamiltonianStencil::Custom { ham, points, dim } => ham.eval(&points[i][..*dim], p),
        }
    }

    /// Per-point bound on `|H_p|` over `|p| ≤ p_bound`.
    pub fn slope_bound(&self, i: usize, p_bound: f64) -> f64 {
        match self {
            HamiltonianStencil::Power { m, coeff, .. } => {
                fabs(coeff[i]) * crate::math::abs_pow_deriv(p_bound, *m)
            }
            HamiltonianStencil::Custom { ham, points, dim } => {
                ham.gradient_slope_bound(&points[i][..*dim], p_bound)
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            HamiltonianStencil::Power { coeff, .. } => coeff.len(),
            HamiltonianStencil::Custom { points, .. } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Calibrate the per-point dissipation: `θ_i = 1.1·|H_p|(x_i, P) + drift_i`,
/// where `P` is the observed gradient bound (floored at 1 by the caller) and
/// `drift` bounds any centered compensator advection the nonlocal table adds.
pub fn calibrate_theta(hs: &HamiltonianStencil, p_bound: f64, drift_sup: f64) -> Vec<f64> {
    let mut theta = Vec::with_capacity(hs.len());
    for i in 0..hs.len() {
        theta.push(THETA_SAFETY * hs.slope_bound(i, p_bound) + drift_sup);
    }
    theta
}

/// Add the Lax–Friedrichs numerical Hamiltonian to `out`.
pub fn numerical_hamiltonian_into(
    hs: &HamiltonianStencil,
    params: &SchemeParams,
    dplus: &GridVectorField,
    dminus: &GridVectorField,
    out: &mut [f64],
) {
    let dim = dplus.comps.len();
    let n_total = out.len();
    let mut pbar = [0.0f64; 2];
    for i in 0..n_total {
        let mut visc = 0.0;
        for a in 0..dim {
            let dp = dplus.comps[a][i];
            let dm = dminus.comps[a][i];
            pbar[a] = 0.5 * (dp + dm);
            visc += 0.5 * (dp - dm);
        }
        out[i] += hs.eval(i, &pbar[..dim]) - params.theta[i] * visc;
    }
}

/// Lax–Friedrichs numerical Hamiltonian as a grid function.
pub fn numerical_hamiltonian(
    spec: &ProblemSpec,
    params: &SchemeParams,
    dplus: &GridVectorField,
    dminus: &GridVectorField,
) -> GridFunction {
    let grid = dplus.grid;
    let hs = sample_hamiltonian(spec, &grid);
    let mut out = vec![0.0; grid.len()];
    numerical_hamiltonian_into(&hs, params, dplus, dminus, &mut out);
    GridFunction::from_raw(grid, out)
}

// ---------------------------------------------------------------------------
// Time step
// ---------------------------------------------------------------------------

/// Stable explicit time step:
///
/// ```text
/// Δt = safety / [ 2·sup a/h²  +  Σ nonlocal weights (κ folds included)
///                 + sup θ·(2/h) + λ ],
/// ```
///
/// falling back to the ODE branch `safety/λ` (or `safety` when `λ = 0`) when
/// every spatial operator vanishes.
pub fn stable_timestep(
    lambda: f64,
    st: &DiffusionStencil,
    table: Option<&QuadratureTable>,
    params: &SchemeParams,
    grid: &TorusGrid,
) -> f64 {
    let h = grid.spacing();
    let mut denom = diffusion_cfl(st, h);
    if let Some(t) = table {
        denom += t.sup_outflow;
    }
    denom += params.sup_theta() * 2.0 / h;
    if denom <= 0.0 {
        if lambda > 0.0 {
            params.cfl_safety / lambda
        } else {
            params.cfl_safety
        }
    } else {
        params.cfl_safety / (denom + lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::model::{DiffusionFactor, LevyData};
    use core::f64::consts::TAU;

    fn spec_1d(diffusion: DiffusionFactor, ham: Hamiltonian) -> ProblemSpec {
        ProblemSpec { dim: 1, lambda: 0.0, diffusion, hamiltonian: ham, levy: LevyData::none(), initial: None }
    }

    fn quadratic() -> Hamiltonian {
        Hamiltonian::power_coercive(ScalarField::Constant(1.0), 2.0, ScalarField::cosine(0.0, 1.0, 1, 0.0))
    }

    // --- diffusion -----------------------------------------------------------

    #[test]
    fn diffusion_annihilates_constants_exactly() {
        let g = TorusGrid::new(1, 64).unwrap();
        let spec = spec_1d(DiffusionFactor::scalar(ScalarField::Constant(1.0), 1.0), quadratic());
        let out = apply_diffusion(&spec, &GridFunction::constant(g, 2.71828));
        for &v in out.values() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn diffusion_on_cosine_matches_discrete_eigenvalue() {
        // The 3-point stencil has cos(2πx) as an exact eigenvector with
        // eigenvalue 2(cos(2πh) − 1)/h².
        let g = TorusGrid::new(1, 256).unwrap();
        let h = g.spacing();
        let spec = spec_1d(DiffusionFactor::scalar(ScalarField::Constant(1.0), 1.0), quadratic());
        let u = GridFunction::sample(g, &ScalarField::cosine(0.0, 1.0, 1, 0.0));
        let out = apply_diffusion(&spec, &u);
        let eig = 2.0 * (crate::math::cos(TAU * h) - 1.0) / (h * h);
        // and that eigenvalue is within O(h²) of −4π²
        assert!((eig + 4.0 * core::f64::consts::PI * core::f64::consts::PI).abs() < 1e-2);
        for i in 0..256 {
            let expect = eig * u.values()[i];
            assert!((out.values()[i] - expect).abs() < 1e-9, "index {i}");
        }
    }

    #[test]
    fn degenerate_sigma_gives_zero() {
        let g = TorusGrid::new(1, 64).unwrap();
        let spec = spec_1d(DiffusionFactor::zero(), quadratic());
        let u = GridFunction::sample(g, &ScalarField::cosine(0.3, 1.0, 2, 0.1));
        for &v in apply_diffusion(&spec, &u).values() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn dim2_axis_columns_match_two_1d_stencils() {
        // σ columns (1, 0) and (0, 1) land on grid points, so the directional
        // stencil reduces exactly to the sum of two axis Laplacians.
        let g = TorusGrid::new(2, 16).unwrap();
        let n = 16;
        let h = g.spacing();
        let cols = alloc::vec![
            [ScalarField::Constant(1.0), ScalarField::zero()],
            [ScalarField::zero(), ScalarField::Constant(1.0)],
        ];
        let spec = ProblemSpec {
            dim: 2,
            lambda: 0.0,
            diffusion: DiffusionFactor { kind: SigmaKind::Columns2(cols), lipschitz_bound: 2.0 },
            hamiltonian: quadratic(),
            levy: LevyData::none(),
            initial: None,
        };
        let u = GridFunction::sample(g, &ScalarField::cosine(0.0, 1.0, 1, 0.2));
        let out = apply_diffusion(&spec, &u);
        let v = u.values();
        for i0 in 0..n {
            for i1 in 0..n {
                let i = i0 * n + i1;
                let lap0 = v[((i0 + 1) % n) * n + i1] - 2.0 * v[i] + v[((i0 + n - 1) % n) * n + i1];
                let lap1 = v[i0 * n + (i1 + 1) % n] - 2.0 * v[i] + v[i0 * n + (i1 + n - 1) % n];
                let expect = (lap0 + lap1) / (h * h);
                assert!((out.values()[i] - expect).abs() < 1e-9 * (1.0 + expect.abs()), "({i0},{i1})");
            }
        }
    }

    // --- numerical Hamiltonian ------------------------------------------------

    #[test]
    fn flux_is_exactly_consistent() {
        // dplus == dminus bitwise ⇒ Ĥ(x,p,p) = H(x,p) with zero dissipation.
        let g = TorusGrid::new(1, 64).unwrap();
        let spec = spec_1d(DiffusionFactor::zero(), quadratic());
        let hs = sample_hamiltonian(&spec, &g);
        let mut params = SchemeParams::new(64, 0.8);
        for t in params.theta.iter_mut() {
            *t = 7.3;
        }
        let mut field = GridVectorField::zeros(g);
        for (i, v) in field.comps[0].iter_mut().enumerate() {
            *v = crate::math::sin(TAU * i as f64 / 64.0) * 3.0;
        }
        let mut out = vec![0.0; 64];
        numerical_hamiltonian_into(&hs, &params, &field, &field, &mut out);
        let mut x = [0.0f64; 2];
        for i in 0..64 {
            g.point(i, &mut x);
            let p = [field.comps[0][i]];
            let expect = spec.hamiltonian.eval(&x[..1], &p);
            assert_eq!(out[i], expect, "index {i}");
        }
    }

    #[test]
    fn flux_dissipation_has_the_stated_form() {
        let g = TorusGrid::new(1, 8).unwrap();
        let spec = spec_1d(DiffusionFactor::zero(), quadratic());
        let hs = sample_hamiltonian(&spec, &g);
        let mut params = SchemeParams::new(8, 0.8);
        params.theta[3] = 2.0;
        let mut dp = GridVectorField::zeros(g);
        let mut dm = GridVectorField::zeros(g);
        dp.comps[0][3] = 1.5;
        dm.comps[0][3] = 0.5;
        let mut out = vec![0.0; 8];
        numerical_hamiltonian_into(&hs, &params, &dp, &dm, &mut out);
        // p̄ = 1, H = 1 − f(x₃), dissipation = 2·(1.5−0.5)/2 = 1
        let f3 = crate::math::cos(TAU * 3.0 / 8.0);
        assert!((out[3] - (1.0 - f3 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn calibrated_theta_covers_sampled_slope() {
        let g = TorusGrid::new(1, 128).unwrap();
        let spec = spec_1d(DiffusionFactor::zero(), quadratic());
        let hs = sample_hamiltonian(&spec, &g);
        let theta = calibrate_theta(&hs, 3.0, 0.25);
        for i in 0..128 {
            // |H_p| = 2|p| ≤ 6 on |p| ≤ 3; θ must be ≥ 1.1·6 + 0.25
            assert!((theta[i] - (1.1 * 6.0 + 0.25)).abs() < 1e-12);
        }
    }

    // --- time step -------------------------------------------------------------

    #[test]
    fn timestep_matches_pure_first_order_hand_value() {
        // θ = 2, h = 1/128, safety 0.8 → Δt = 0.8/(2·2·128) = 1/640.
        let g = TorusGrid::new(1, 128).unwrap();
        let mut params = SchemeParams::new(128, 0.8);
        for t in params.theta.iter_mut() {
            *t = 2.0;
        }
        let dt = stable_timestep(0.0, &DiffusionStencil::None, None, &params, &g);
        assert!((dt - 1.0 / 640.0).abs() < 1e-18, "dt {dt}");
    }

    #[test]
    fn timestep_diffusion_limited_branch() {
        // a ≡ 1, h = 1/128, θ = 0 → Δt = 0.8·h²/2.
        let g = TorusGrid::new(1, 128).unwrap();
        let h = g.spacing();
        let st = DiffusionStencil::Axis1(vec![1.0; 128]);
        let params = SchemeParams::new(128, 0.8);
        let dt = stable_timestep(0.0, &st, None, &params, &g);
        assert!((dt - 0.8 * h * h / 2.0).abs() < 1e-18, "dt {dt}");
    }

    #[test]
    fn timestep_ode_branches() {
        let g = TorusGrid::new(1, 64).unwrap();
        let params = SchemeParams::new(64, 0.8);
        let dt = stable_timestep(1.0, &DiffusionStencil::None, None, &params, &g);
        assert_eq!(dt, 0.8);
        let dt0 = stable_timestep(0.0, &DiffusionStencil::None, None, &params, &g);
        assert_eq!(dt0, 0.8);
        // λ enters the full denominator too
        let mut p2 = SchemeParams::new(64, 0.8);
        for t in p2.theta.iter_mut() {
            *t = 2.0;
        }
        let dt2 = stable_timestep(3.0, &DiffusionStencil::None, None, &p2, &g);
        assert!((dt2 - 0.8 / (2.0 * 2.0 * 64.0 + 3.0)).abs() < 1e-18);
    }
}
