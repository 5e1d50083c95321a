//! Seed derivation for reproducible, schedule-independent random ensembles.

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `index`-th member of an ensemble rooted at `base`.
///
/// Depends only on `(base, index)`, so instances can be generated in any
/// order or in parallel and still reproduce the same ensemble.
pub fn derive(base: u64, index: u64) -> u64 {
    mix64(mix64(base ^ 0x9e37_79b9_7f4a_7c15).wrapping_add(mix64(index.wrapping_add(1))))
}
