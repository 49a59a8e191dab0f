//! Counter-keyed random streams.
//!
//! Every consumer of randomness asks for a stream keyed by
//! `(seed, episode, step, purpose)`, so changing how one consumer draws never
//! shifts the numbers another consumer sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    InitialState = 1,
    Environment = 2,
    Planner = 3,
    Check = 4,
    Sweep = 5,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes the key components into one 64-bit stream identifier.
pub fn stream_key(seed: u64, episode: u64, step: u64, purpose: Purpose) -> u64 {
    [episode, step, purpose as u64]
        .into_iter()
        .fold(splitmix64(seed), |acc, part| splitmix64(acc ^ splitmix64(part)))
}

pub fn stream(seed: u64, episode: u64, step: u64, purpose: Purpose) -> StreamRng {
    ChaCha8Rng::seed_from_u64(stream_key(seed, episode, step, purpose))
}

/// Seed of run `index` inside a sweep driven by `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    stream_key(master, index, 0, Purpose::Sweep)
}
