//! Seed and stream derivation.
//!
//! Every replication draws from its own ChaCha stream keyed by
//! `(seed, purpose, index)`, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purposes that get independent seed families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Pool = 1,
    Observed = 2,
    LcmCritical = 3,
    RhoHat = 4,
    Design = 5,
    Oracle = 6,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derive a seed for a purpose from a user seed.
pub fn derive_seed(seed: u64, purpose: Purpose) -> u64 {
    splitmix64(seed ^ splitmix64(purpose as u64))
}

/// RNG for replication `index` of a given purpose.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, purpose));
    rng.set_stream(index);
    rng
}
