//! Periodic scalar fields on the torus.
//!
//! Problem data (diffusion coefficients, Hamiltonian coefficients, forcing,
//! jump modulation, initial data) are 1-periodic functions of `x ∈ T^d`. The
//! builtin families are closed under everything the configuration format can
//! express; `Custom` admits arbitrary closures for tests and oracles.

use alloc::sync::Arc;

use crate::math::cos;

/// Two-argument trig wave: `offset + amplitude · cos(2π k·x + phase)` with an
/// integer wave vector `k` (second component ignored in dimension 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wave {
    pub offset: f64,
    pub amplitude: f64,
    pub freq: [i32; 2],
    pub phase: f64,
}

/// A periodic scalar field `T^d → ℝ`.
#[derive(Clone)]
pub enum ScalarField {
    /// Constant field.
    Constant(f64),
    /// Cosine wave; with `phase = −π/2` this is a sine wave.
    Cosine(Wave),
    /// Arbitrary evaluation callback (must be 1-periodic per axis).
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl core::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ScalarField::Constant(c) => write!(f, "Constant({c})"),
            ScalarField::Cosine(w) => write!(f, "Cosine({w:?})"),
            ScalarField::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl ScalarField {
    /// Constant zero field.
    pub fn zero() -> Self {
        ScalarField::Constant(0.0)
    }

    /// `amplitude · cos(2π freq x₀ + phase) + offset`, acting on the first axis.
    pub fn cosine(offset: f64, amplitude: f64, freq: i32, phase: f64) -> Self {
        ScalarField::Cosine(Wave { offset, amplitude, freq: [freq, 0], phase })
    }

    /// Wrap a closure.
    pub fn custom<F: Fn(&[f64]) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        ScalarField::Custom(Arc::new(f))
    }

    /// Evaluate at a point `x` (slice of length ≥ the ambient dimension).
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Cosine(w) => {
                let mut arg = w.phase;
                arg += core::f64::consts::TAU * (w.freq[0] as f64) * x[0];
                if w.freq[1] != 0 && x.len() > 1 {
                    arg += core::f64::consts::TAU * (w.freq[1] as f64) * x[1];
                }
                w.offset + w.amplitude * cos(arg)
            }
            ScalarField::Custom(f) => f(x),
        }
    }

    /// Analytic spatial gradient magnitude bound where cheaply available:
    /// `|∇field| ≤ 2π |k| |amplitude|` for waves, 0 for constants, `None` for
    /// custom fields (callers then fall back to declared constants).
    pub fn gradient_bound(&self) -> Option<f64> {
        match self {
            ScalarField::Constant(_) => Some(0.0),
            ScalarField::Cosine(w) => {
                let k = crate::math::norm(&[w.freq[0] as f64, w.freq[1] as f64]);
                Some(core::f64::consts::TAU * k * crate::math::fabs(w.amplitude))
            }
            ScalarField::Custom(_) => None,
        }
    }
}

/// Convenience constructor for sine waves (used by initial data).
pub fn sine(offset: f64, amplitude: f64, freq: i32) -> ScalarField {
    ScalarField::Cosine(Wave {
        offset,
        amplitude,
        freq: [freq, 0],
        phase: -core::f64::consts::FRAC_PI_2,
    })
}

/// Sample a field on `n` uniform points of `[0,1)` (dimension-1 helper).
pub fn sample_1d(field: &ScalarField, n: usize) -> alloc::vec::Vec<f64> {
    let h = 1.0 / n as f64;
    (0..n).map(|i| field.eval(&[i as f64 * h])).collect()
}

#[allow(dead_code)]
fn _assert_traits() {
    fn is_send_sync<T: Send + Sync>() {}
    is_send_sync::<ScalarField>();
}
