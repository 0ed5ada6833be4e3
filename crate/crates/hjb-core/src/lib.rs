//! Numerical laboratory core for integro-differential Hamilton–Jacobi–Bellman
//! equations on the periodic torus `T^d` (`d ∈ {1, 2}`).
//!
//! The equations treated are the stationary problem
//!
//! ```text
//! λu − Tr(A(x) D²u) − I[u](x) + H(x, Du) = 0,      A(x) = σ(x)σ(x)ᵀ,
//! ```
//!
//! and its parabolic companion `∂_t u − Tr(A D²u) − I[u] + H(x, Du) = 0`,
//! where `I` is a Lévy-type nonlocal operator
//!
//! ```text
//! I[u](x) = ∫ [ u(x + j(x,z)) − u(x) − 1_{|z|≤1} ⟨Du(x), j(x,z)⟩ ] ν(dz)
//! ```
//!
//! with a (possibly singular) Lévy measure `ν` and jump function `j`, and `H`
//! is coercive in the gradient (`H(x,p) ≈ a(x)|p|^m − f(x)`, `m > 1`). The
//! diffusion may be degenerate, including `σ ≡ 0`.
//!
//! Everything here is built around *monotone* discretizations: nonnegative
//! quadrature weights for `I`, directional second differences for the
//! diffusion, and a Lax–Friedrichs numerical Hamiltonian. Monotonicity gives a
//! discrete comparison principle, which the [`verify`] module turns into
//! runnable invariants, and it is what makes the long-time and vanishing
//! discount experiments in [`ergodic`] trustworthy.
//!
//! The crate is `no_std` (with `alloc`): all state lives in plain `Vec<f64>`
//! buffers, and transcendental functions come from `libm`. IO, configuration
//! and CSV serialization live in the companion binary crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod ergodic;
pub mod evolution;
pub mod field;
pub mod grid;
pub mod instances;
pub mod local;
pub mod math;
pub mod model;
pub mod nonlocal;
pub mod sample;
pub mod verify;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors surfaced by the numerical core.
///
/// The variants map one-to-one onto the process exit codes used by the
/// command-line front-end: configuration errors (2), solver non-convergence or
/// blow-up (3); usage and domain errors are programming/contract errors and
/// also map to configuration errors at the boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A problem description violates its documented parameter ranges.
    Config(String),
    /// An operation was called with mismatched or unsupported arguments.
    Usage(String),
    /// An iterative solve exhausted its step budget; carries the residual
    /// history recorded along the way.
    NonConvergence { residual: f64, history: Vec<f64> },
    /// The explicit time-marching produced a non-finite value at `step`.
    BlowUp { step: usize },
    /// Input leaves the representable domain (e.g. `exp` overflow).
    Domain(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::NonConvergence { residual, history } => write!(
                f,
                "solver failed to converge: residual {residual:e} after {} recorded checks",
                history.len()
            ),
            Error::BlowUp { step } => write!(f, "solution blew up (non-finite value) at step {step}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
