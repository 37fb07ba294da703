//! Seed derivation.
//!
//! Every random decision descends from one master seed:
//!
//! * `derive_seed(master, tag)` mixes a tag into the master seed with
//!   SplitMix64; pipeline stages and sub-tasks use distinct tags.
//! * `stream_rng(seed, stream)` returns a ChaCha8 generator keyed by `seed`
//!   and positioned on stream `stream`. Walks use their ordinal as the
//!   stream id, so any partition of the work across threads sees the same
//!   numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type WalkRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(master) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Stable 64-bit tag for a stage or task name (FNV-1a).
pub fn tag_of(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
