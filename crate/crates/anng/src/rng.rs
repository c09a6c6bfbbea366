//! Deterministic seed derivation and counter-based uniform values.
//!
//! All randomness in this crate flows from explicit 64-bit seeds. Streams are
//! derived by hashing (seed, tag, index) through the SplitMix64 finalizer, so
//! any worker can reproduce any stream without shared state and results are
//! independent of scheduling.

/// SplitMix64 finalizer. Full avalanche; not cryptographic.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent-quality 64-bit value from `(seed, a, b)`.
///
/// Pure function of its arguments; `(a, b)` and `(b, a)` give unrelated
/// outputs.
#[inline]
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ 0x9e37_79b9_7f4a_7c15;
    z = mix64(z);
    z ^= a.wrapping_mul(0xff51_afd7_ed55_8ccd);
    z = mix64(z);
    z ^= b.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    mix64(z)
}

/// Map 64 random bits to a uniform f64 in `[0, 1)` (53-bit mantissa).
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
