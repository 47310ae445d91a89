//! Exact, order-independent accumulation of `delta * R` terms.
//!
//! A projection is a 256-bit two's-complement integer counting units of
//! `2^-64`. Each variate is truncated to that grid once, before it is scaled
//! by the update delta, so the accumulated value is a linear function of the
//! net frequency vector and any interleaving of updates yields the same bits.
//! Arithmetic wraps modulo `2^256`; the represented range is `|y| < 2^191`.

/// Variates are clamped below `2^MAX_EXPONENT` in magnitude before
/// quantization.
pub const MAX_EXPONENT: i32 = 150;
const FRAC_BITS: i32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fixed256(pub [u64; 4]);

impl Fixed256 {
    pub const ZERO: Self = Self([0; 4]);

    #[inline]
    fn add_limbs(&mut self, x: &[u64; 4]) {
        let mut carry = false;
        for (a, &b) in self.0.iter_mut().zip(x) {
            let (s1, c1) = a.overflowing_add(b);
            let (s2, c2) = s1.overflowing_add(carry as u64);
            *a = s2;
            carry = c1 | c2;
        }
    }

    #[inline]
    fn sub_limbs(&mut self, x: &[u64; 4]) {
        let mut borrow = false;
        for (a, &b) in self.0.iter_mut().zip(x) {
            let (s1, b1) = a.overflowing_sub(b);
            let (s2, b2) = s1.overflowing_sub(borrow as u64);
            *a = s2;
            borrow = b1 | b2;
        }
    }

    pub fn wrapping_add(mut self, other: Self) -> Self {
        self.add_limbs(&other.0);
        self
    }

    pub fn wrapping_neg(self) -> Self {
        let mut z = Self::ZERO;
        z.sub_limbs(&self.0);
        z
    }

    pub fn is_negative(&self) -> bool {
        self.0[3] >> 63 == 1
    }

    /// Adds `delta * q(r)`, where `q` truncates `|r|` toward zero onto the
    /// `2^-64` grid.
    #[inline]
    pub fn add_scaled(&mut self, delta: i64, r: f64) {
        if delta == 0 || r == 0.0 || !r.is_finite() {
            return;
        }
        let bits = r.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as i32;
        if biased == 0 {
            // Subnormals are far below the grid.
            return;
        }
        let (mut mant, mut exp) = ((bits & ((1u64 << 52) - 1)) | (1u64 << 52), biased - 1075);
        // r = mant * 2^exp with mant < 2^53
        if exp + 53 > MAX_EXPONENT {
            mant = (1u64 << 53) - 1;
            exp = MAX_EXPONENT - 53;
        }
        let mut shift = exp + FRAC_BITS;
        if shift < 0 {
            if shift <= -53 {
                return;
            }
            mant >>= -shift;
            shift = 0;
        }
        let negative = (r < 0.0) != (delta < 0);
        let product = mant as u128 * delta.unsigned_abs() as u128;
        let limb = (shift / 64) as usize;
        let off = (shift % 64) as u32;
        let mut x = [0u64; 4];
        let lo = product << off;
        let spill = if off == 0 { 0 } else { (product >> 64) >> (64 - off) } as u64;
        x[limb] = lo as u64;
        if limb + 1 < 4 {
            x[limb + 1] = (lo >> 64) as u64;
        }
        if limb + 2 < 4 {
            x[limb + 2] = spill;
        }
        if negative {
            self.sub_limbs(&x);
        } else {
            self.add_limbs(&x);
        }
    }

    /// Nearest-ish `f64`; exact whenever the magnitude fits in 53 bits.
    pub fn to_f64(&self) -> f64 {
        let neg = self.is_negative();
        let mag = if neg { self.wrapping_neg() } else { *self };
        let mut v = 0.0;
        for (i, &l) in mag.0.iter().enumerate().rev() {
            v += l as f64 * 2f64.powi(64 * i as i32 - FRAC_BITS);
        }
        if neg {
            -v
        } else {
            v
        }
    }

    pub fn to_le_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (chunk, l) in out.chunks_exact_mut(8).zip(self.0) {
            chunk.copy_from_slice(&l.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8; 32]) -> Self {
        let mut limbs = [0u64; 4];
        for (l, chunk) in limbs.iter_mut().zip(bytes.chunks_exact(8)) {
            *l = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        Self(limbs)
    }
}
