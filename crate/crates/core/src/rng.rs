//! Seed expansion.
//!
//! One 64-bit run seed fans out into independent generator streams, one per
//! `(component, index)` pair. The component label is hashed with FNV-1a and
//! folded into the seed with the SplitMix64 finalizer, so adding a new
//! component never shifts the numbers drawn by existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere in the crate.
pub type StreamRng = ChaCha8Rng;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derives the 64-bit sub-seed for `component` at position `index`.
pub fn derive_seed(seed: u64, component: &str, index: u64) -> u64 {
    let a = splitmix64(seed ^ fnv1a(component));
    splitmix64(a ^ splitmix64(index))
}

/// A generator for `component` at position `index` of the run seeded by `seed`.
pub fn stream(seed: u64, component: &str, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, component, index))
}
