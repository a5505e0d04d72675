//! Seeded random streams.
//!
//! Every random quantity in an experiment is drawn from a ChaCha8 stream
//! derived from `(master seed, trial index, purpose)`. The 64-bit seed is
//! the SplitMix64 finaliser applied to the master seed and trial index; the
//! purpose selects the ChaCha stream id, so e.g. the instance and the
//! internal vector of one trial never share key-stream material.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. The discriminant is the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Instance = 1,
    Ordering = 2,
    InternalV = 3,
    InternalW = 4,
    Solution = 5,
    Extension = 6,
    PeelOrder = 7,
    Misc = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` of an experiment with master seed `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(master) ^ trial.wrapping_mul(0xD605_BBB5_8C8A_BBE5))
}

/// A stream for one purpose under a plain 64-bit seed.
pub fn stream(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// A stream for one purpose of one trial.
pub fn trial_stream(master: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    stream(trial_seed(master, trial), purpose)
}
