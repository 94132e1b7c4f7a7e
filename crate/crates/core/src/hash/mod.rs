//! Seeded hash families: k-wise independent polynomials over a prime field,
//! random roots of unity, hierarchical subsampling bits and unbiased coins.
//!
//! Every random choice in the sketch is derived from a 64-bit seed, so two
//! structures built from the same seed evaluate identically.

mod kwise;
mod prime;
mod roots;
mod subsample;

pub use kwise::{HashMode, HashParams, KWiseHash};
pub use prime::{field_modulus, is_prime};
pub use roots::RootsFamily;
pub use subsample::SubsampleHashes;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed for structure `tag`, slot `index`.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    mix64(mix64(master ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93)) ^ index.wrapping_mul(GOLDEN))
}

/// Deterministic unbiased bit for item `i` under `seed` (heads = `true`).
#[inline]
pub fn coin(seed: u64, i: u64) -> bool {
    let key = mix64(seed ^ 0xC01D_C0FF_EE00_0001);
    mix64(key ^ i.wrapping_mul(GOLDEN)) >> 63 == 1
}

/// Maps a uniform 64-bit word onto `[0, range)` by multiply-shift.
#[inline]
pub(crate) fn reduce(word: u64, range: u64) -> u64 {
    ((word as u128 * range as u128) >> 64) as u64
}

/// `ceil(log2(x))` for `x >= 1`, with `ceil_log2(1) = 0`.
pub fn ceil_log2(x: f64) -> u32 {
    if x <= 1.0 {
        0
    } else {
        x.log2().ceil() as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coin_is_deterministic() {
        for i in 0..1000 {
            assert_eq!(coin(17, i), coin(17, i));
        }
    }

    #[test]
    fn coin_bias_over_2_16_items() {
        for seed in [0u64, 1, 0xFEED] {
            let heads = (0..1u64 << 16).filter(|&i| coin(seed, i)).count();
            let rate = heads as f64 / 65536.0;
            assert!((rate - 0.5).abs() <= 0.01, "seed {seed}: {rate}");
        }
    }

    #[test]
    fn derived_seeds_differ_by_slot() {
        let a = derive_seed(1, 2, 3);
        assert_ne!(a, derive_seed(1, 2, 4));
        assert_ne!(a, derive_seed(1, 3, 3));
        assert_eq!(a, derive_seed(1, 2, 3));
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1.0), 0);
        assert_eq!(ceil_log2(2.0), 1);
        assert_eq!(ceil_log2(10.0), 4);
        assert_eq!(ceil_log2(16384.0), 14);
    }
}
