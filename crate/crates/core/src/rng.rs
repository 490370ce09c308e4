//! Seeded random streams.
//!
//! Every stochastic routine draws from a ChaCha8 stream addressed by
//! `(seed, stream)`. Distinct streams are statistically independent, so work
//! can be split across threads without changing any draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tag mixed into the stream index so that, for example, the field
/// coefficients and the pair geometry of one replicate never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Coefficients = 0,
    Geometry = 1,
    Configuration = 2,
}

/// The stream for `(seed, replicate, purpose)`.
pub fn substream(seed: u64, replicate: u64, purpose: Purpose) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate.wrapping_mul(4).wrapping_add(purpose as u64));
    rng
}
