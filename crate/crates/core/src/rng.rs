//! Deterministic random streams.
//!
//! Every random choice in the crate flows from a single `u64` seed through
//! named sub-streams, so independent components (environment resets, model
//! init, task sampling, rollouts) can draw without coupling their sequences:
//! inserting draws into one stream never shifts another.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over the stream name, then a splitmix64 finalizer mixing in the
/// seed. Stable across platforms; not cryptographic, just well-spread.
fn mix(seed: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A generator for the named sub-stream of `seed`.
pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, name))
}

/// A sub-stream keyed by a name and an index (e.g. per-epoch, per-episode).
pub fn indexed_stream(seed: u64, name: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix(seed, name), &index.to_string()))
}

/// A stable 64-bit key for an `f64` slice, used to derive per-query streams
/// from query coordinates so identical queries always see identical draws.
pub fn point_key(xs: &[f64]) -> u64 {
    let mut z: u64 = 0x51_7c_c1_b7_27_22_0a_95;
    for x in xs {
        z ^= x.to_bits();
        z = z.wrapping_mul(0x2545_f491_4f6c_dd1d);
        z ^= z >> 29;
    }
    z
}
