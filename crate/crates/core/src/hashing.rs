//! Splittable seeded randomness.
//!
//! Every random quantity in this crate is a pure function of a 64-bit seed
//! and an index, derived by hashing the pair. This keeps per-vertex samples,
//! generator draws, and message delays independent of evaluation order and of
//! how many other values were drawn.

/// Domain tags keep distinct uses of the same seed uncorrelated.
pub(crate) const DOMAIN_OFFSETS: u64 = 0x0f;
pub(crate) const DOMAIN_GRAPH: u64 = 0x67;
pub(crate) const DOMAIN_DELAY: u64 = 0xd1;
pub(crate) const DOMAIN_INIT_NOTIFY: u64 = 0x1e;

/// SplitMix64 finalizer: a bijective 64-bit mixer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of a (seed, index) pair: the seed passes through the mixer first,
/// so the combination is not symmetric and consecutive indices under one
/// seed form a full-avalanche counter stream.
pub(crate) fn mix2(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed).wrapping_add(index))
}

/// Uniform value in the half-open-from-below interval (0, 1].
pub(crate) fn unit_open_closed(h: u64) -> f64 {
    ((h >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform value in [0, 1).
pub(crate) fn unit_half_open(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform integer in [1, hi]. Modulo bias is below 2^-40 for hi < 2^24,
/// far beneath anything the statistical tests can resolve.
pub(crate) fn uniform_1_to(h: u64, hi: u64) -> u64 {
    debug_assert!(hi >= 1);
    1 + h % hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix2_is_deterministic_and_spreads() {
        assert_eq!(mix2(1, 2), mix2(1, 2));
        assert_ne!(mix2(1, 2), mix2(2, 1));
        assert_ne!(mix2(0, 0), mix2(0, 1));
        assert_ne!(mix2(0, 0), mix2(1, 0));
    }

    #[test]
    fn unit_ranges() {
        for h in [0u64, 1, u64::MAX, 0xdead_beef] {
            let u = unit_open_closed(h);
            assert!(u > 0.0 && u <= 1.0);
            let v = unit_half_open(h);
            assert!((0.0..1.0).contains(&v));
        }
        assert_eq!(unit_open_closed(u64::MAX), 1.0);
        assert_eq!(unit_half_open(0), 0.0);
    }

    #[test]
    fn uniform_1_to_covers_range() {
        let mut seen = [false; 3];
        for i in 0..64 {
            let x = uniform_1_to(mix2(9, i), 3);
            assert!((1..=3).contains(&x));
            seen[(x - 1) as usize] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }
}
