//! Reproducible random streams.
//!
//! Every clock in the graphical representation owns an independent generator
//! whose seed is a 64-bit avalanche mix of the master seed, a stream id and a
//! canonical key of the entity (edge or site). Timelines therefore do not
//! depend on the order in which entities are visited.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines two words into one well-mixed word.
#[inline]
pub fn mix2(a: u64, b: u64) -> u64 {
    mix64(mix64(a) ^ b.rotate_left(23))
}

/// A named, reproducible random stream: `(master seed, stream id)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    /// Child stream keyed by `key`; children with distinct keys are independent.
    pub fn substream(&self, key: u64) -> RngStream {
        RngStream {
            master: self.master,
            stream: mix2(self.stream, key),
        }
    }

    /// Stream for replica `index` of experiment `experiment`.
    pub fn replica(&self, experiment: u64, index: u64) -> RngStream {
        self.substream(experiment).substream(index)
    }

    pub fn seed(&self) -> u64 {
        mix2(self.master, self.stream)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_stream_same_sequence() {
        let s = RngStream::new(42, 7);
        let a: Vec<u64> = (0..8).map({
            let mut r = s.rng();
            move |_| r.random()
        }).collect();
        let mut r = s.rng();
        let b: Vec<u64> = (0..8).map(|_| r.random()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn substreams_differ() {
        let s = RngStream::new(1, 0);
        assert_ne!(s.substream(1).seed(), s.substream(2).seed());
        assert_ne!(s.replica(0, 1).seed(), s.replica(1, 0).seed());
    }
}
