//! Seeded randomness.
//!
//! Trial `i` of an experiment with base seed `s` draws from a ChaCha20
//! stream keyed by four consecutive SplitMix64 outputs started at `s ^ i`.
//! The construction is fixed; [`STREAM_ID`] names it in report headers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub const STREAM_ID: &str = "chacha20/splitmix64(seed^trial)/v1";

pub type TrialRng = ChaCha20Rng;

/// One SplitMix64 step.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_from_u64(seed: u64) -> TrialRng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha20Rng::from_seed(key)
}

pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    stream_from_u64(seed ^ trial)
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
