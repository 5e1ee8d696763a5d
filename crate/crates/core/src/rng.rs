//! Seeded random streams.
//!
//! Every random draw comes from a ChaCha8 generator keyed by an experiment
//! seed and a stream index, so work split across threads reproduces the
//! serial run bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream indices used by the library. Callers may use any other value.
pub mod streams {
    pub const SAMPLE: u64 = 0;
    pub const BOOTSTRAP: u64 = 1;
    pub const POLICY: u64 = 2;
}

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
