//! Seeded random streams.
//!
//! Every chain or benchmark cell gets its own stream derived from a single
//! 64-bit master seed: the generator is `ChaCha8` seeded with
//! `seed_from_u64(master)` and then moved to stream number `index`. Streams
//! never overlap, so results do not depend on how work is spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used by the CLI and the reproducibility tests.
pub type SimRng = ChaCha8Rng;

/// Stream `index` of the master seed `seed`.
pub fn stream_rng(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
