//! Seeded random streams.
//!
//! Shot sampling uses ChaCha8 as a counter-based generator: a draw is
//! addressed by `(seed, stream, index)`, so any partition of the shot range
//! across workers sees exactly the same numbers.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::qubit::BlochVector;

/// Sequential reader positioned at draw `index` of stream `stream`.
///
/// Each draw consumes one 64-bit word pair of the ChaCha keystream.
pub struct KeyedStream {
    rng: ChaCha8Rng,
}

impl KeyedStream {
    pub fn at(seed: u64, stream: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng.set_word_pos(u128::from(index) * 2);
        KeyedStream { rng }
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Independent generator for worker or start `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform direction on the unit sphere from three normalized Gaussians.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let z: f64 = rng.sample(StandardNormal);
        if let Some(v) = BlochVector::normalized(x, y, z) {
            if v.is_unit() {
                return v;
            }
        }
    }
}

/// Index of the outcome selected by uniform `u` under `probs`.
///
/// Zero-probability outcomes are never returned.
pub fn pick_outcome(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc && *p > 0.0 {
            return k;
        }
    }
    // rounding left u above the final cumulative sum
    probs
        .iter()
        .rposition(|p| *p > 0.0)
        .unwrap_or(probs.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyed_stream_is_partition_independent() {
        let mut whole = KeyedStream::at(42, 3, 0);
        let seq: Vec<f64> = (0..100).map(|_| whole.next_uniform()).collect();
        for start in [0u64, 1, 17, 64, 99] {
            let mut part = KeyedStream::at(42, 3, start);
            assert_eq!(part.next_uniform(), seq[start as usize]);
        }
        let mut other = KeyedStream::at(42, 4, 0);
        assert_ne!(other.next_uniform(), seq[0]);
    }

    #[test]
    fn pick_outcome_skips_zero_mass() {
        let probs = [0.0, 0.5, 0.5, 0.0];
        assert_eq!(pick_outcome(&probs, 0.0), 1);
        assert_eq!(pick_outcome(&probs, 0.49), 1);
        assert_eq!(pick_outcome(&probs, 0.5), 2);
        assert_eq!(pick_outcome(&probs, 0.999_999_999_999), 2);
        assert_eq!(pick_outcome(&[0.3, 0.3, 0.3999999, 0.0], 0.9999999999), 2);
    }

    #[test]
    fn random_vectors_are_unit() {
        let mut rng = stream_rng(7, 0);
        for _ in 0..1000 {
            assert!(random_unit_vector(&mut rng).is_unit());
        }
    }
}
