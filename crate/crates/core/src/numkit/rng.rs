//! SplitMix64 random number generation.
//!
//! The recurrence is fixed so that every stream is reproducible bit for bit
//! on any platform and from any language:
//!
//! ```text
//! state  = state + 0x9E3779B97F4A7C15            (wrapping)
//! z      = state
//! z      = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  (wrapping)
//! z      = (z ^ (z >> 27)) * 0x94D049BB133111EB  (wrapping)
//! output = z ^ (z >> 31)
//! ```
//!
//! Uniform reals take the top 53 bits of one output scaled by 2^-53.
//! Normals use Box-Muller on two uniforms drawn in the order `u1`, `u2`,
//! with `u1 = 1 - uniform` so that it lies in (0, 1].
//!
//! Per-trajectory streams are derived with [`Rng::for_stream`], which only
//! depends on `(seed, index)`, so generation order never changes the data.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Independent stream for item `index` of a run seeded with `seed`.
    ///
    /// The stream state is `mix64(seed + mix64(index + GOLDEN_GAMMA))`.
    pub fn for_stream(seed: u64, index: u64) -> Self {
        let salt = mix64(index.wrapping_add(GOLDEN_GAMMA));
        Self::new(mix64(seed.wrapping_add(salt)))
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi); returns `lo` when the interval is degenerate.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo <= hi) {
            return Err(Error::Domain(format!(
                "uniform interval requires lo <= hi, got [{lo}, {hi})"
            )));
        }
        let u = self.next_f64();
        let v = lo + (hi - lo) * u;
        // rounding can land exactly on hi
        Ok(if v >= hi && hi > lo { hi.next_down() } else { v })
    }

    /// Standard normal sample; consumes exactly two uniforms.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        box_muller(u1, u2)
    }

    /// Uniform index in `0..n` (n > 0), by rejection-free multiply-shift.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// `sqrt(-2 ln u1) * cos(2 pi u2)` with `u1` clamped away from zero.
#[inline]
pub fn box_muller(u1: f64, u2: f64) -> f64 {
    let u1 = u1.max(f64::MIN_POSITIVE);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_vector() {
        let mut rng = Rng::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = (0..16).scan(Rng::new(0), |r, _| Some(r.next_u64())).collect();
        let b: Vec<u64> = (0..16).scan(Rng::new(0), |r, _| Some(r.next_u64())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn seeds_one_and_two_differ() {
        assert_ne!(Rng::new(1).next_u64(), Rng::new(2).next_u64());
    }

    #[test]
    fn uniform_degenerate_and_range() {
        let mut rng = Rng::new(9);
        assert_eq!(rng.uniform(3.0, 3.0).unwrap(), 3.0);
        for _ in 0..1000 {
            let v = rng.uniform(0.0, 1.0).unwrap();
            assert!((0.0..1.0).contains(&v));
        }
        assert!(matches!(rng.uniform(1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn uniform_uses_top_53_bits() {
        let expected = (0xE220_A839_7B1D_CDAFu64 >> 11) as f64 * 2f64.powi(-53);
        assert_eq!(Rng::new(0).uniform(0.0, 1.0).unwrap(), expected);
    }

    #[test]
    fn box_muller_hand_values() {
        assert_eq!(box_muller(1.0, 0.0), 0.0);
        let e2 = (-2.0f64).exp();
        assert!((box_muller(e2, 0.0) - 2.0).abs() < 1e-15);
        assert!((box_muller(e2, 0.5) + 2.0).abs() < 1e-15);
        assert!(box_muller(0.0, 0.0).is_finite());
    }

    #[test]
    fn normal_consumes_two_uniforms() {
        let mut a = Rng::new(5);
        a.normal();
        let mut b = Rng::new(5);
        b.next_u64();
        b.next_u64();
        assert_eq!(a, b);
    }

    #[test]
    fn streams_depend_only_on_seed_and_index() {
        let x = Rng::for_stream(7, 3).next_u64();
        let _ = Rng::for_stream(7, 2).next_u64();
        assert_eq!(Rng::for_stream(7, 3).next_u64(), x);
        assert_ne!(Rng::for_stream(7, 4).next_u64(), x);
        assert_ne!(Rng::for_stream(8, 3).next_u64(), x);
    }

    #[test]
    fn shuffle_is_permutation() {
        let mut v: Vec<usize> = (0..50).collect();
        Rng::new(1).shuffle(&mut v);
        let mut s = v.clone();
        s.sort_unstable();
        assert_eq!(s, (0..50).collect::<Vec<_>>());
        assert_ne!(v, s);
    }
}
