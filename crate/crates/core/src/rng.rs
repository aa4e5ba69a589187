//! Portable seeded randomness.
//!
//! Every random draw in the crate goes through [`SeededRng`], which is
//! xoshiro256** (Blackman & Vigna) seeded by expanding a `u64` with
//! SplitMix64 (golden-gamma `0x9E3779B97F4A7C15`, mix multipliers
//! `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`). Bounded integers use
//! Lemire's multiply-shift with rejection, so a draw in `{0, .., n-1}` is
//! exactly uniform and consumes a fixed, documented number of words.
//!
//! Per-video streams are derived with [`derive_seed`] so results never depend
//! on scheduling order.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256StarStar};

/// A source of uniform integers in `{0, .., n-1}`.
///
/// The samplers are generic over this so tests can force extreme draws.
pub trait UniformSource {
    /// Uniform integer in `[0, n)`. `n` must be non-zero.
    fn below(&mut self, n: u64) -> u64;
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Xoshiro256StarStar,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform f64 in `[0, 1)` built from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform f64 in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Fisher-Yates shuffle, drawing from the highest index down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

impl UniformSource for SeededRng {
    fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) is undefined");
        let mut m = u128::from(self.next_u64()) * u128::from(n);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(n);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derive a child seed from a base seed and a sequence of tags.
///
/// Each tag is hashed with FNV-1a, xored into the running state and passed
/// through one SplitMix64 step.
pub fn derive_seed(base: u64, tags: &[&[u8]]) -> u64 {
    let mut state = SplitMix64::seed_from_u64(base).next_u64();
    for tag in tags {
        state = SplitMix64::seed_from_u64(state ^ fnv1a(tag)).next_u64();
    }
    state
}

/// Seed of the stream used for a single video.
pub fn video_seed(global_seed: u64, video_id: &str) -> u64 {
    derive_seed(global_seed, &[b"video", video_id.as_bytes()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn below_stays_in_range() {
        let mut rng = SeededRng::new(7);
        for n in [1u64, 2, 3, 10, 1 << 40, u64::MAX] {
            for _ in 0..200 {
                assert!(rng.below(n) < n);
            }
        }
    }

    #[test]
    fn below_one_consumes_a_word() {
        let mut a = SeededRng::new(3);
        let mut b = SeededRng::new(3);
        assert_eq!(a.below(1), 0);
        b.next_u64();
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn below_is_roughly_uniform() {
        let mut rng = SeededRng::new(11);
        let mut counts = [0usize; 6];
        for _ in 0..60_000 {
            counts[rng.below(6) as usize] += 1;
        }
        for c in counts {
            assert!((9_000..11_000).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn xoshiro_reference_stream() {
        // xoshiro256** with SplitMix64 expansion of seed 0.
        let mut splitmix = SplitMix64::seed_from_u64(0);
        assert_eq!(splitmix.next_u64(), 0xe220_a839_7b1d_cdaf);
        let a: Vec<u64> = {
            let mut r = SeededRng::new(0);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = SeededRng::new(0);
            (0..4).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn derived_seeds_differ_by_tag() {
        assert_ne!(video_seed(1, "a"), video_seed(1, "b"));
        assert_ne!(video_seed(1, "a"), video_seed(2, "a"));
        assert_eq!(video_seed(5, "clip"), video_seed(5, "clip"));
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut v: Vec<u32> = (0..50).collect();
        SeededRng::new(9).shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
