//! Seeded random streams.
//!
//! Every consumer of randomness takes its own ChaCha stream derived from the
//! run seed and a fixed tag, so adding a consumer never shifts another one.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng;

pub const TAG_ACTOR_INIT: u64 = 1;
pub const TAG_CRITIC_INIT: u64 = 2;
pub const TAG_EPISODES: u64 = 3;
pub const TAG_NOISE: u64 = 4;
pub const TAG_MINIBATCH: u64 = 5;
pub const TAG_EVAL: u64 = 6;
pub const TAG_CURVE: u64 = 7;
pub const TAG_FORECAST: u64 = 8;

/// Independent stream `tag` of the generator seeded with `seed`.
pub fn stream(seed: u64, tag: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}
