//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha20 generator keyed by a
//! 64-bit base seed. Independent streams are selected through the ChaCha
//! stream id, which is derived from a purpose tag and up to two indices
//! (replicate, filter, subject, ...). A stream only depends on
//! `(seed, tag, a, b)`, never on the order in which streams are created, so
//! Monte-Carlo work can be scheduled on any number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

/// Purpose tags for stream derivation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Synthesis = 1,
    Contamination = 2,
    Folds = 3,
    Cohort = 4,
    Correction = 5,
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id for a tagged, doubly indexed stream.
pub fn stream_id(purpose: Purpose, a: u64, b: u64) -> u64 {
    mix(mix(mix(purpose as u64) ^ a) ^ b.rotate_left(17))
}

/// Generator for one stream of a base seed.
pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(purpose, a, b));
    rng
}
