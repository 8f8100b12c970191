//! Deterministic, splittable random-number handles.
//!
//! Every stochastic routine in the crate takes a `&mut RngHandle`. A handle is
//! built from a 64-bit seed and can spawn child handles for parallel work:
//! the child seed is `mix(parent_seed ^ mix(index))`, where `mix` is the
//! SplitMix64 finalizer. Children with different indices get unrelated
//! ChaCha8 streams, so replicate `k` of a sweep draws the same numbers no
//! matter how many other replicates run or in which order.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RngHandle {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngHandle {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive an independent child stream. Depends only on this handle's
    /// seed and `index`, never on how many numbers were already drawn.
    pub fn child(&self, index: u64) -> RngHandle {
        RngHandle::new(mix64(self.seed ^ mix64(index)))
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            // 53 random mantissa bits.
            let u = (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Lemire's multiply-shift; bias is below 2^-64 * n and irrelevant here.
        ((self.inner.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

impl RngCore for RngHandle {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = RngHandle::new(42);
        let mut b = RngHandle::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn child_ignores_parent_position() {
        let parent = RngHandle::new(7);
        let mut used = parent.clone();
        for _ in 0..10 {
            used.next_u64();
        }
        let mut c1 = parent.child(3);
        let mut c2 = used.child(3);
        assert_eq!(c1.next_u64(), c2.next_u64());
        assert_ne!(parent.child(3).next_u64(), parent.child(4).next_u64());
    }

    #[test]
    fn uniform_open_in_range() {
        let mut r = RngHandle::new(1);
        for _ in 0..10_000 {
            let u = r.uniform_open();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn index_covers_range() {
        let mut r = RngHandle::new(2);
        let mut seen = [false; 5];
        for _ in 0..1000 {
            seen[r.index(5)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
