//! Deterministic sub-seed derivation.
//!
//! Every random draw in the crate flows through a `ChaCha8Rng` seeded from a
//! master seed combined with a purpose tag and optional grid/trial indices,
//! so that noise, masks, thresholds, and scene draws are independent streams
//! and every run is reproducible bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived sub-seed is used for. The discriminant enters the hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Waveforms = 0,
    Masks = 1,
    Noise = 2,
    Threshold = 3,
    SceneGen = 4,
    PhaseDraw = 5,
    /// RUT draw feeding the first-pass reconstruction that anchors RGT means.
    ThresholdFirstPass = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a sub-seed from a master seed, a purpose, and indices.
pub fn derive(master: u64, purpose: Purpose, snr_index: u64, trial_index: u64) -> u64 {
    let mut acc = splitmix64(master);
    for part in [purpose as u64, snr_index, trial_index] {
        acc = splitmix64(acc ^ splitmix64(part));
    }
    acc
}

/// RNG for a derived sub-seed.
pub fn rng(master: u64, purpose: Purpose, snr_index: u64, trial_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, purpose, snr_index, trial_index))
}
