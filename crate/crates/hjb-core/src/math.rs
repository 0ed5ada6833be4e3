//! Thin float-math layer for the `no_std` core.
//!
//! `core` provides `abs`/`max`/`min` on `f64` but no transcendentals; those
//! come from `libm`. Centralizing the imports here keeps call sites tidy and
//! gives one place for the few numerically careful helpers (power laws with
//! common exponents, stable linear regression) shared across modules.

pub use libm::{cos, exp, fabs, floor, log, pow, sin, sqrt};

/// `|p|^m` with fast paths for the exponents the builtin Hamiltonian families
/// actually use. `m = 2` and `m = 3` dominate the time-marching inner loops.
#[inline]
pub fn abs_pow(p: f64, m: f64) -> f64 {
    let a = fabs(p);
    if m == 2.0 {
        a * a
    } else if m == 3.0 {
        a * a * a
    } else if m == 1.5 {
        a * sqrt(a)
    } else {
        pow(a, m)
    }
}

/// Derivative magnitude `d/dp |p|^m = m·|p|^{m−1}`, same fast paths.
#[inline]
pub fn abs_pow_deriv(p: f64, m: f64) -> f64 {
    let a = fabs(p);
    if m == 2.0 {
        2.0 * a
    } else if m == 3.0 {
        3.0 * a * a
    } else if m == 1.5 {
        1.5 * sqrt(a)
    } else {
        m * pow(a, m - 1.0)
    }
}

/// Euclidean norm of a short slice (dimension ≤ 2 in practice).
#[inline]
pub fn norm(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for &c in v {
        s += c * c;
    }
    sqrt(s)
}

/// Least-squares slope and intercept of `y` against `x`, plus the root mean
/// square residual of the fit. Used for the running-slope trace channel and
/// the discount-limit extrapolation.
///
/// Returns `(slope, intercept, rms_residual)`; requires `x.len() == y.len()`
/// and at least two distinct abscissae (degenerate input yields slope 0).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len();
    debug_assert_eq!(n, y.len());
    if n < 2 {
        let b = y.first().copied().unwrap_or(0.0);
        return (0.0, b, 0.0);
    }
    let nf = n as f64;
    let mut mx = 0.0;
    let mut my = 0.0;
    for i in 0..n {
        mx += x[i];
        my += y[i];
    }
    mx /= nf;
    my /= nf;
    // Centered sums for numerical stability when x is a long time axis.
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        sxx += dx * dx;
        sxy += dx * (y[i] - my);
    }
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = 0.0;
    for i in 0..n {
        let r = y[i] - (slope * x[i] + intercept);
        ss += r * r;
    }
    (slope, intercept, sqrt(ss / nf))
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// Classic recursion with the Richardson error estimate `|S_left + S_right −
/// S_whole| / 15`; the tolerance is split between halves. Termination at
/// `max_depth` accepts the refined estimate. The integrands used here
/// (truncated Lévy densities, Fourier symbols) are smooth away from 0, and
/// callers split off the singular or oscillatory parts first.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let h6 = (b - a) / 12.0;
        let left = h6 * (fa + 4.0 * flm + fm);
        let right = h6 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || fabs(delta) <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)
}
