//! Keyed seed derivation. Every random stream in the crate starts from a
//! master seed plus a path of keys, so any sample or augmentation can be
//! reproduced in isolation and independently of scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over bytes, used to turn string keys into integers.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Child seed of `parent` under integer key `key`.
#[inline]
pub fn derive(parent: u64, key: u64) -> u64 {
    mix64(parent ^ mix64(key.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

/// Child seed of `parent` under a named key.
pub fn derive_named(parent: u64, name: &str) -> u64 {
    derive(parent, fnv1a(name.as_bytes()))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
