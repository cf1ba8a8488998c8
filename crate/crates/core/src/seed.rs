//! Stable sub-seed derivation. Independent of hashing internals of std and of
//! execution order, so parallel runs reproduce sequential ones.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed for item `index` of stage `stage` under the global seed `parent`.
pub fn derive_seed(parent: u64, stage: &str, index: u64) -> u64 {
    splitmix64(splitmix64(parent ^ fnv1a(stage)).wrapping_add(splitmix64(index)))
}
