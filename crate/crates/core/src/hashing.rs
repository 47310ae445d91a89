//! Seeded pseudorandomness standing in for a random oracle, and the
//! pairwise-independent hash family used for bin assignment.

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic 64 random bits for `(seed, row, index, lane)`.
#[inline]
pub fn oracle_bits(seed: u64, row: u64, index: u64, lane: u64) -> u64 {
    let a = mix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let b = mix64(a ^ row.wrapping_mul(0xd1b5_4a32_d192_ed03));
    let c = mix64(b ^ index.wrapping_mul(0x8cb9_2ba7_2f3d_8dd7));
    mix64(c ^ lane.wrapping_mul(0xa076_1d64_78bd_642f))
}

/// Maps 64 random bits to a uniform in the open interval `(0, 1)`.
#[inline]
pub fn unit_open(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Derives an independent child seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(mix64(seed) ^ mix64(tag.wrapping_add(0x632b_e59b_d9b4_e019)))
}

const MERSENNE_61: u64 = (1 << 61) - 1;

#[inline]
fn mod_mersenne(x: u128) -> u64 {
    let lo = (x as u64) & MERSENNE_61;
    let hi = (x >> 61) as u64;
    let mut r = lo + (hi & MERSENNE_61) + (hi >> 61);
    while r >= MERSENNE_61 {
        r -= MERSENNE_61;
    }
    r
}

/// `h(x) = ((a x + b) mod (2^61 - 1)) mod buckets`, a pairwise-independent
/// family over keys below `2^61 - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairwiseHash {
    a: u64,
    b: u64,
}

impl PairwiseHash {
    pub fn from_seed(seed: u64) -> Self {
        let a = mix64(seed ^ 0x5851_f42d_4c95_7f2d) % (MERSENNE_61 - 1) + 1;
        let b = mix64(seed ^ 0x1405_7b7e_f767_814f) % MERSENNE_61;
        Self { a, b }
    }

    #[inline]
    pub fn field(&self, key: u64) -> u64 {
        mod_mersenne(self.a as u128 * (key % MERSENNE_61) as u128 + self.b as u128)
    }

    #[inline]
    pub fn bucket(&self, key: u64, buckets: usize) -> usize {
        (self.field(key) % buckets as u64) as usize
    }

    /// One pseudo-random bit of `key`.
    #[inline]
    pub fn bit(&self, key: u64) -> u8 {
        // The low bit of the field value is biased by one part in 2^61.
        (self.field(key) & 1) as u8
    }
}
