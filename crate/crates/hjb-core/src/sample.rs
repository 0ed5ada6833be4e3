//! Deterministic quasi-random sampling for the assumption checkers.
//!
//! The structural hypotheses on the data are universally quantified
//! inequalities; a numerical harness can only falsify them on samples. We use
//! a Halton low-discrepancy sequence (one prime base per coordinate) so the
//! sample set fills its box evenly, composed with a seed-keyed
//! Cranley–Patterson rotation so different seeds probe genuinely different
//! point sets while each seed remains fully reproducible.

use crate::math::floor;

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical-inverse of `i` in base `b`, the Halton coordinate in `[0, 1)`.
#[inline]
fn radical_inverse(mut i: u64, b: u32) -> f64 {
    let bf = b as f64;
    let inv = 1.0 / bf;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += f * (i % b as u64) as f64;
        i /= b as u64;
        f *= inv;
    }
    x
}

/// SplitMix64 — a tiny, well-mixed integer hash used to derive rotation
/// offsets from `(seed, dimension)` pairs.
#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Low-discrepancy point generator over the unit cube `[0, 1)^dim`.
///
/// `dim ≤ 8`. Iteration order is a pure function of `(seed, dim)`.
pub struct Halton {
    index: u64,
    dim: usize,
    rot: [f64; 8],
}

impl Halton {
    pub fn new(seed: u64, dim: usize) -> Self {
        assert!(dim >= 1 && dim <= PRIMES.len(), "sampler supports 1..=8 dimensions");
        let mut rot = [0.0; 8];
        for (d, r) in rot.iter_mut().enumerate().take(dim) {
            let bits = splitmix64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(d as u64 + 1));
            // 53 uniform mantissa bits → offset in [0, 1).
            *r = (bits >> 11) as f64 * (1.0 / 9007199254740992.0);
        }
        // Skip the degenerate all-zeros first element.
        Halton { index: 1, dim, rot }
    }

    /// Next point, written into `out[..dim]`; coordinates lie in `[0, 1)`.
    pub fn next_point(&mut self, out: &mut [f64]) {
        debug_assert!(out.len() >= self.dim);
        for d in 0..self.dim {
            let u = radical_inverse(self.index, PRIMES[d]) + self.rot[d];
            out[d] = u - floor(u);
        }
        self.index += 1;
    }
}

/// Map a uniform `t ∈ [0, 1)` to a log-spaced magnitude in `[lo, hi]`.
///
/// The coercivity and growth inequalities are tightest either near the origin
/// or at the largest admissible gradient, so checkers sample `|p|`
/// logarithmically (default range `10^{−2} … 50`).
#[inline]
pub fn log_magnitude(t: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo > 0.0 && hi > lo);
    let (llo, lhi) = (crate::math::log(lo), crate::math::log(hi));
    crate::math::exp(llo + t * (lhi - llo))
}
