//! Seeded RNG used everywhere training or shuffling happens.
//!
//! ChaCha8 is stable across platforms and rand versions, which is what the
//! byte-identical-artifact guarantee rests on.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream from a base seed and a label, so components
/// of one run do not share a stream.
pub fn derive(seed: u64, label: &str) -> SeededRng {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

/// Fisher-Yates shuffle driven by the given rng (rand's `shuffle` would also
/// work; this keeps the exact permutation under our control).
pub fn shuffle<T>(items: &mut [T], rng: &mut SeededRng) {
    if items.is_empty() {
        return;
    }
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

/// Uniform sample in [-bound, bound].
pub fn uniform(rng: &mut SeededRng, bound: f64) -> f64 {
    rng.gen_range(-bound..bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = seeded(42);
        let mut b = seeded(42);
        for _ in 0..100 {
            assert_eq!(a.gen::<u64>(), b.gen::<u64>());
        }
    }

    #[test]
    fn derived_streams_differ() {
        let mut a = derive(42, "embeddings");
        let mut b = derive(42, "classifier");
        let xs: Vec<u64> = (0..8).map(|_| a.gen()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.gen()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn shuffle_is_permutation() {
        let mut v: Vec<u32> = (0..50).collect();
        shuffle(&mut v, &mut seeded(7));
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
    }
}
