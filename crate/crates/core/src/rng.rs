//! Per-replica random streams.
//!
//! Replica `r` of a run seeded with `s` draws from ChaCha8 keyed by `s` on
//! stream `r`, so replicas are independent of each other and of the order in
//! which worker threads pick them up.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name of the generator, for reports.
pub const GENERATOR: &str = "ChaCha8 (rand_chacha), key = seed_from_u64(seed), stream = replica index";

pub fn stream(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}
