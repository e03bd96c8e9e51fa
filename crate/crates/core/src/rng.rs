//! Seed expansion. Every random stream is derived from one 64-bit seed and a counter,
//! so results do not depend on how work is spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream for trial `index` of a run seeded with `seed`: `seed ⊕ index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index)
}
