//! Seeded, platform-stable hashing shared by the filters and the placement
//! policy. `std`'s default hasher is randomized per process, which would break
//! run-to-run reproducibility, so we use FNV-1a with a splitmix64 finalizer.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// 64-bit hash of `key` under `seed`; identical inputs always map to the
/// same value, on every platform.
pub(crate) fn hash64(key: &[u8], seed: u64) -> u64 {
    let mut h = FNV_OFFSET ^ splitmix64(seed);
    for &b in key {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

/// Derives an independent sub-seed from a master seed, so that the workload,
/// placement, and filter streams do not share randomness.
pub(crate) fn derive_seed(master: u64, component: u64) -> u64 {
    splitmix64(master ^ splitmix64(component))
}
