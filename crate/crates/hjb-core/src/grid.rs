//! Uniform periodic grid on the torus and its discrete calculus.
//!
//! The grid has `N` points per axis at spacing `h = 1/N`; indices wrap. All
//! derivative operators are written in *difference form* — every term is a
//! weight times `u(neighbor) − u(center)` — so they annihilate constants
//! exactly in floating point, a property the comparison-principle and
//! translation-identity tests assert bit-for-bit.
//!
//! Dimension 2 uses axis-ordered flattening: flat index `i = i₀·N + i₁`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::fabs;
use crate::{Error, Result};

/// Uniform periodic grid: `d ∈ {1,2}` axes, `n` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    d: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::Config(alloc::format!("dimension must be 1 or 2, got {d}")));
        }
        if n < 8 {
            return Err(Error::Config(alloc::format!("grid needs at least 8 points per axis, got {n}")));
        }
        Ok(TorusGrid { d, n })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Points per axis.
    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    /// Total number of grid points `N^d`.
    #[inline]
    pub fn len(&self) -> usize {
        if self.d == 1 {
            self.n
        } else {
            self.n * self.n
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `h = 1/N`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Coordinates of the flat index `i`, written into `out[..d]`.
    #[inline]
    pub fn point(&self, i: usize, out: &mut [f64]) {
        let h = self.spacing();
        if self.d == 1 {
            out[0] = i as f64 * h;
        } else {
            out[0] = (i / self.n) as f64 * h;
            out[1] = (i % self.n) as f64 * h;
        }
    }

    /// Flat index of axis indices (wrapping is the caller's concern).
    #[inline]
    pub fn flat(&self, i0: usize, i1: usize) -> usize {
        if self.d == 1 {
            i0
        } else {
            i0 * self.n + i1
        }
    }

    /// Flat index of the neighbor of `i` shifted by `step ∈ {−1, +1}` along
    /// `axis`, with periodic wraparound.
    #[inline]
    pub fn neighbor(&self, i: usize, axis: usize, step: isize) -> usize {
        let n = self.n;
        let wrap = |k: usize| -> usize {
            if step > 0 {
                if k + 1 == n {
                    0
                } else {
                    k + 1
                }
            } else if k == 0 {
                n - 1
            } else {
                k - 1
            }
        };
        if self.d == 1 {
            wrap(i)
        } else if axis == 0 {
            self.flat(wrap(i / n), i % n)
        } else {
            self.flat(i / n, wrap(i % n))
        }
    }

    /// Torus distance between two points (wraparound metric per axis).
    pub fn torus_distance(x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for a in 0..x.len() {
            let mut dz = fabs(x[a] - y[a]);
            dz -= crate::math::floor(dz);
            let dz = dz.min(1.0 - dz);
            s += dz * dz;
        }
        crate::math::sqrt(s)
    }
}

/// Scalar field sampled on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl GridFunction {
    /// Wrap a value vector; length must be `grid.len()` and all entries finite.
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(alloc::format!(
                "value vector length {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("grid function contains non-finite values".into()));
        }
        Ok(GridFunction { grid, values })
    }

    /// Wrap an already-computed value vector without the finiteness scan.
    /// For internal operator outputs; panics on a length mismatch.
    pub fn from_raw(grid: TorusGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value vector does not match grid size");
        GridFunction { grid, values }
    }

    /// Zero function.
    pub fn zeros(grid: TorusGrid) -> Self {
        GridFunction { grid, values: vec![0.0; grid.len()] }
    }

    /// Constant function.
    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        GridFunction { grid, values: vec![c; grid.len()] }
    }

    /// Sample a periodic field at the grid points.
    pub fn sample(grid: TorusGrid, field: &crate::field::ScalarField) -> Self {
        let mut values = vec![0.0; grid.len()];
        let mut x = [0.0; 2];
        for (i, v) in values.iter_mut().enumerate() {
            grid.point(i, &mut x);
            *v = field.eval(&x[..grid.dim()]);
        }
        GridFunction { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Mean value (fixed-order summation, deterministic).
    pub fn mean(&self) -> f64 {
        let mut s = 0.0;
        for &v in &self.values {
            s += v;
        }
        s / self.values.len() as f64
    }

    /// Linear (d=1) / bilinear (d=2) interpolation at a real-valued point,
    /// coordinates taken modulo 1.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let n = self.grid.n;
        let nf = n as f64;
        let locate = |c: f64| -> (usize, f64) {
            let s = c - crate::math::floor(c);
            let sc = s * nf;
            let base = sc as usize; // s ∈ [0,1) ⇒ base ≤ n−1 except rounding; clamp below
            let base = base.min(n - 1);
            (base, sc - base as f64)
        };
        if self.grid.d == 1 {
            let (i, t) = locate(x[0]);
            let ip = if i + 1 == n { 0 } else { i + 1 };
            let u = &self.values;
            u[i] + t * (u[ip] - u[i])
        } else {
            let (i0, t0) = locate(x[0]);
            let (i1, t1) = locate(x[1]);
            let i0p = if i0 + 1 == n { 0 } else { i0 + 1 };
            let i1p = if i1 + 1 == n { 0 } else { i1 + 1 };
            let u = &self.values;
            let f00 = u[self.grid.flat(i0, i1)];
            let f01 = u[self.grid.flat(i0, i1p)];
            let f10 = u[self.grid.flat(i0p, i1)];
            let f11 = u[self.grid.flat(i0p, i1p)];
            let a = f00 + t1 * (f01 - f00);
            let b = f10 + t1 * (f11 - f10);
            a + t0 * (b - a)
        }
    }
}

/// Per-axis vector field on the grid (e.g. a gradient): `comps[axis][i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridVectorField {
    pub grid: TorusGrid,
    pub comps: Vec<Vec<f64>>,
}

impl GridVectorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        GridVectorField { grid, comps: vec![vec![0.0; grid.len()]; grid.dim()] }
    }
}

/// One-sided difference quotients `(D⁺u, D⁻u)` per axis with periodic wrap:
/// `(D⁺u)_i = (u_{i+1} − u_i)/h`, `(D⁻u)_i = (u_i − u_{i−1})/h`.
pub fn upwind_gradients(u: &GridFunction) -> (GridVectorField, GridVectorField) {
    let grid = u.grid();
    let mut dp = GridVectorField::zeros(grid);
    let mut dm = GridVectorField::zeros(grid);
    let inv_h = grid.points_per_axis() as f64;
    let vals = u.values();
    for axis in 0..grid.dim() {
        let fwd = &mut dp.comps[axis];
        for (i, f) in fwd.iter_mut().enumerate() {
            let ip = grid.neighbor(i, axis, 1);
            *f = (vals[ip] - vals[i]) * inv_h;
        }
        // D⁻u at i equals D⁺u at i−1: fill by shifted copy to keep the two
        // fields bitwise consistent.
        let bwd = &mut dm.comps[axis];
        for (i, b) in bwd.iter_mut().enumerate() {
            let im = grid.neighbor(i, axis, -1);
            let ip_of_im = grid.neighbor(im, axis, 1);
            debug_assert_eq!(ip_of_im, i);
            *b = (vals[i] - vals[im]) * inv_h;
        }
    }
    (dp, dm)
}

/// Centered difference quotients `(D⁺u + D⁻u)/2` per axis.
pub fn centered_gradient(u: &GridFunction) -> GridVectorField {
    let grid = u.grid();
    let mut g = GridVectorField::zeros(grid);
    let half_inv_h = 0.5 * grid.points_per_axis() as f64;
    let vals = u.values();
    for axis in 0..grid.dim() {
        let comp = &mut g.comps[axis];
        for (i, c) in comp.iter_mut().enumerate() {
            let ip = grid.neighbor(i, axis, 1);
            let im = grid.neighbor(i, axis, -1);
            *c = (vals[ip] - vals[im]) * half_inv_h;
        }
    }
    g
}

/// Size metrics of a grid function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    /// `max u − min u`.
    pub osc: f64,
    /// `max |u|`.
    pub sup_norm: f64,
    /// Discrete Lipschitz constant: max over axis neighbors of `|Δu|/h`.
    /// For grid functions the all-pairs Lipschitz quotient in the torus
    /// metric is attained along an axis path, so neighbors suffice.
    pub lipschitz: f64,
}

/// Compute [`Metrics`] with fixed-order reductions.
pub fn metrics(u: &GridFunction) -> Metrics {
    let vals = u.values();
    let grid = u.grid();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let mut max_jump = 0.0f64;
    for axis in 0..grid.dim() {
        for i in 0..vals.len() {
            let ip = grid.neighbor(i, axis, 1);
            max_jump = max_jump.max(fabs(vals[ip] - vals[i]));
        }
    }
    Metrics {
        osc: hi - lo,
        sup_norm: lo.abs().max(hi.abs()),
        lipschitz: max_jump * grid.points_per_axis() as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use core::f64::consts::TAU;

    fn cos_grid(n: usize) -> GridFunction {
        GridFunction::sample(TorusGrid::new(1, n).unwrap(), &ScalarField::cosine(0.0, 1.0, 1, 0.0))
    }

    #[test]
    fn grid_rejects_bad_dimensions() {
        assert!(TorusGrid::new(3, 64).is_err());
        assert!(TorusGrid::new(1, 4).is_err());
        assert!(TorusGrid::new(2, 8).is_ok());
    }

    #[test]
    fn constant_has_zero_gradients_and_metrics() {
        let g = TorusGrid::new(1, 32).unwrap();
        let u = GridFunction::constant(g, 3.0);
        let (dp, dm) = upwind_gradients(&u);
        assert!(dp.comps[0].iter().all(|&v| v == 0.0));
        assert!(dm.comps[0].iter().all(|&v| v == 0.0));
        let m = metrics(&u);
        assert_eq!((m.osc, m.sup_norm, m.lipschitz), (0.0, 3.0, 0.0));
    }

    #[test]
    fn upwind_gradient_converges_first_order_on_cosine() {
        // max |D⁺u − (−2π sin)| ≤ C·h, with the constant shrinking as h halves.
        let mut errs = alloc::vec::Vec::new();
        for &n in &[256usize, 512] {
            let u = cos_grid(n);
            let (dp, _) = upwind_gradients(&u);
            let h = 1.0 / n as f64;
            let mut worst = 0.0f64;
            for i in 0..n {
                let x = i as f64 * h;
                let exact = -TAU * crate::math::sin(TAU * x);
                worst = worst.max(fabs(dp.comps[0][i] - exact));
            }
            errs.push(worst);
        }
        assert!(errs[0] < TAU * TAU / 256.0 * 1.1, "err={}", errs[0]);
        let ratio = errs[1] / errs[0];
        assert!(ratio < 0.6, "first-order convergence expected, ratio {ratio}");
    }

    #[test]
    fn sawtooth_gradient_is_slope_except_reset() {
        // Periodic ramp of slope +2: u = 2x on [0,1), reset jump at the seam.
        let n = 64;
        let g = TorusGrid::new(1, n).unwrap();
        let h = 1.0 / n as f64;
        let u = GridFunction::new(g, (0..n).map(|i| 2.0 * i as f64 * h).collect()).unwrap();
        let (dp, _) = upwind_gradients(&u);
        for i in 0..n - 1 {
            assert!((dp.comps[0][i] - 2.0).abs() < 1e-12);
        }
        // Reset cell sees the wrap: (0 − 2(1−h))/h = 2 − 2/h.
        assert!((dp.comps[0][n - 1] - (2.0 - 2.0 * n as f64)).abs() < 1e-9);
    }

    #[test]
    fn metrics_on_cosine_and_hat() {
        let m = metrics(&cos_grid(512));
        assert!(m.lipschitz <= TAU && m.lipschitz >= TAU - 0.1, "lip={}", m.lipschitz);
        assert!((m.osc - 2.0).abs() < 1e-4);
        assert!((m.sup_norm - 1.0).abs() < 1e-12);

        // Periodic hat of height 1 over a half period: slope ±4.
        let n = 128;
        let g = TorusGrid::new(1, n).unwrap();
        let hat = GridFunction::new(
            g,
            (0..n)
                .map(|i| {
                    let x = i as f64 / n as f64;
                    let d = (x - 0.25).abs().min(1.0 - (x - 0.25).abs());
                    (1.0 - 4.0 * d).max(0.0)
                })
                .collect(),
        )
        .unwrap();
        let m = metrics(&hat);
        assert!((m.osc - 1.0).abs() < 1e-12);
        assert!((m.lipschitz - 4.0).abs() < 1e-9);
    }

    #[test]
    fn interpolation_is_exact_on_nodes_and_linear_between() {
        let n = 16;
        let g = TorusGrid::new(1, n).unwrap();
        let u = GridFunction::new(g, (0..n).map(|i| (i * i) as f64).collect()).unwrap();
        let h = 1.0 / n as f64;
        for i in 0..n {
            assert_eq!(u.interpolate(&[i as f64 * h]), u.values()[i]);
        }
        let mid = u.interpolate(&[2.5 * h]);
        assert!((mid - 0.5 * (4.0 + 9.0)) .abs() < 1e-12);
        // Wraparound segment between the last node and node 0: the probe sits
        // 0.75h past the last node, so that node keeps weight 0.25 and node 0
        // (value zero) takes the rest.
        let near_seam = u.interpolate(&[1.0 - 0.25 * h]);
        let want = 0.25 * ((n - 1) * (n - 1)) as f64;
        assert!((near_seam - want).abs() < 1e-9);
    }

    #[test]
    fn bilinear_interpolation_reproduces_grid_values() {
        let g = TorusGrid::new(2, 8).unwrap();
        let f = ScalarField::custom(|x| {
            crate::math::cos(TAU * x[0]) + 0.5 * crate::math::sin(TAU * x[1])
        });
        let u = GridFunction::sample(g, &f);
        let h = g.spacing();
        for i0 in 0..8 {
            for i1 in 0..8 {
                let v = u.interpolate(&[i0 as f64 * h, i1 as f64 * h]);
                assert!((v - u.values()[g.flat(i0, i1)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn torus_distance_wraps() {
        assert!((TorusGrid::torus_distance(&[0.05], &[0.95]) - 0.1).abs() < 1e-15);
        assert!((TorusGrid::torus_distance(&[0.3], &[0.6]) - 0.3).abs() < 1e-15);
        let d2 = TorusGrid::torus_distance(&[0.05, 0.0], &[0.95, 0.0]);
        assert!((d2 - 0.1).abs() < 1e-15);
    }
}
