//! Seedable, splittable random streams.
//!
//! Every stochastic step in the pipeline draws from a ChaCha stream addressed
//! by `(seed, stream id)`. Stream ids are assigned statically (tree index,
//! cell index, `tree * p + feature`, ...), so work units can run in any order
//! or in parallel and still consume exactly the same random bytes.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// An independent random stream for the given seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
