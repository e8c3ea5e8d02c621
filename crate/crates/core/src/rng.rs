//! Seeded random streams.
//!
//! Every sampler run owns a [`Streams`] bundle of three ChaCha8 generators
//! sharing one 256-bit key and differing only in their 64-bit stream id:
//!
//! | stream | id | consumer |
//! |---|---|---|
//! | proposal | 0 | draws `X_1, X_2, ...` from `P` |
//! | gumbel | 1 | uniforms driving the truncated-Gumbel chain |
//! | accept | 2 | acceptance uniforms of rejection sampling |
//! | aux | 3 | test-pair generation and perturbations |
//!
//! The key is the little-endian master seed in bytes 0..8, the little-endian
//! replication index in bytes 8..16, and zeros elsewhere. Two methods run on
//! the same `(seed, replication)` therefore see the same proposal sequence
//! and the same Gumbel sequence, which is what coupling relies on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const PROPOSAL_STREAM: u64 = 0;
pub const GUMBEL_STREAM: u64 = 1;
pub const ACCEPT_STREAM: u64 = 2;
pub const AUX_STREAM: u64 = 3;

/// Builds a ChaCha8 generator for `(seed, replication, stream)`.
pub fn stream_rng(seed: u64, replication: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replication.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
pub struct Streams {
    pub proposal: ChaCha8Rng,
    pub gumbel: ChaCha8Rng,
    pub accept: ChaCha8Rng,
}

impl Streams {
    pub fn new(seed: u64, replication: u64) -> Self {
        Self {
            proposal: stream_rng(seed, replication, PROPOSAL_STREAM),
            gumbel: stream_rng(seed, replication, GUMBEL_STREAM),
            accept: stream_rng(seed, replication, ACCEPT_STREAM),
        }
    }
}
