//! Counter-based random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha20 keystream
//! addressed by `(seed, purpose, index)`. Streams never overlap, so a
//! trial's draws do not depend on how many other trials ran or on which
//! thread ran them.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// What a stream is used for. Distinct purposes yield disjoint streams
/// under the same seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u16)]
pub enum Purpose {
    OrbitDigits = 1,
    FreshDigits = 2,
    Gaussian = 3,
    TrialSeed = 4,
    Oracle = 5,
    Control = 6,
    Restart = 7,
}

/// Returns the generator for `(seed, purpose, index)`.
///
/// The 64-bit ChaCha stream id packs the purpose in the top 16 bits and
/// `index` in the low 48 bits.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha20Rng {
    debug_assert!(index < (1 << 48));
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) | (index & ((1 << 48) - 1)));
    rng
}

/// Seed of trial `trial` under master seed `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    stream(seed, Purpose::TrialSeed, trial).next_u64()
}
