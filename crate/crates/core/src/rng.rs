//! Seeded random streams.
//!
//! Every Monte-Carlo routine splits its work into fixed-size chunks and draws
//! chunk `i` from its own ChaCha8 stream, so results do not depend on how many
//! worker threads rayon happens to use.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per Monte-Carlo chunk.
pub const CHUNK: usize = 4096;

/// Source of independent, reproducible random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    seed: u64,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream `index` within the named `domain`. Distinct `(domain, index)`
    /// pairs give non-overlapping streams for `index < 2^40`.
    pub fn stream(&self, domain: Domain, index: u64) -> ChaCha8Rng {
        debug_assert!(index < 1 << 40);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((domain as u64) << 40) | index);
        rng
    }

    /// A factory for a nested computation, deterministically derived from
    /// this one.
    pub fn child(&self, domain: Domain, index: u64) -> StreamFactory {
        use rand::RngCore;
        StreamFactory::new(self.stream(domain, index).next_u64())
    }
}

/// Stream namespaces, one per consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    ConditionalEntropy = 1,
    Bootstrap = 2,
    PhasePath = 3,
    Fading = 4,
    ChannelInput = 5,
    ChannelNoise = 6,
    RateBound = 7,
    Validation = 8,
    Derived = 9,
}

/// Chunk boundaries `[start, end)` covering `0..n`.
pub fn chunks(n: usize) -> impl Iterator<Item = (usize, usize, usize)> + Clone {
    (0..n.div_ceil(CHUNK)).map(move |i| (i, i * CHUNK, ((i + 1) * CHUNK).min(n)))
}
