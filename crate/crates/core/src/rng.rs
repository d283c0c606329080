//! Keyed random streams.
//!
//! Stream `(seed, index)` is a pure function of its key, so work items can be
//! generated in any order or in parallel and still reproduce exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
