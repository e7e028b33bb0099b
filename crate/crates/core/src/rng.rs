//! Reproducible random streams.
//!
//! Every path is driven by a ChaCha8 keystream keyed by a 64-bit seed and
//! selected by a 64-bit stream id. ChaCha is counter based, so a path's
//! draws depend only on `(seed, stream)`, never on which worker produced
//! them or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type PathRng = ChaCha8Rng;

/// Generator for path `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal draw.
#[inline]
pub fn std_normal(rng: &mut PathRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Sub-seed for an auxiliary purpose (bootstrap, etc.) so it never shares
/// a keystream with the path simulations under the same master seed.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
