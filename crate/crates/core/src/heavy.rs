//! Detection and identification of an element holding most of the L1 mass.
//!
//! Each repetition hashes items into `B = ceil(20/eps)` bins and keeps the
//! net weight per bin. A shared set of `ceil(log2 n)` bit counters tallies the
//! weight of items whose zero-based index has each bit set, which spells out
//! the heavy element once one is known to exist.
//!
//! Bin mass is measured with `|counter|`, and the reference mass of a
//! repetition is the sum of its `|bin|` values. In the strict turnstile model
//! that sum is the total count.

use crate::error::{invalid, Error, Result};
use crate::hashing::{derive_seed, PairwiseHash};
use crate::stable::Reader;
use crate::stream::UpdateEvent;

/// Detection fires when every repetition has a bin with this share of mass.
pub const DETECT_THRESHOLD: f64 = 3.0 / 4.0;
/// What a fired detection lets callers assume about the heaviest share.
pub const CERTIFIED_SHARE: f64 = 2.0 / 3.0;
/// Share of the mass a bit counter needs for the heavy element's bit to be 1.
pub const BIT_THRESHOLD: f64 = 3.0 / 5.0;
/// Heavy-hitter premise of the residual algorithms.
pub const HEAVY_PREMISE: f64 = 4.0 / 5.0;
/// Every entropy estimator treats `x_max <= 5/6` as the no-heavy regime.
pub const NO_HEAVY_BOUND: f64 = 5.0 / 6.0;
pub const DEFAULT_REPETITIONS: usize = 10;

/// `ceil(20 / eps)`.
pub fn bins_for(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid("epsilon", format!("{epsilon} is not inside (0, 1]")));
    }
    Ok((20.0 / epsilon - 1e-9).ceil() as usize)
}

/// `ceil(log2 n)`, the bit width of indices `0..n`.
pub fn bits_for(n: u64) -> usize {
    if n <= 1 {
        0
    } else {
        (64 - (n - 1).leading_zeros()) as usize
    }
}

/// A detected heavy element together with the bin it occupies in each
/// repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct HeavyHitter {
    pub index: u64,
    pub bins: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeavyHitterSketch {
    bin_count: usize,
    universe: u64,
    seed: u64,
    hashes: Vec<PairwiseHash>,
    /// `repetitions * bin_count`, repetition-major.
    weights: Vec<i64>,
    bit_counters: Vec<i64>,
    total: i64,
}

impl HeavyHitterSketch {
    /// `ceil(20/eps)` bins and the default ten repetitions.
    pub fn new(epsilon: f64, universe: u64, seed: u64) -> Result<Self> {
        Self::with_shape(bins_for(epsilon)?, DEFAULT_REPETITIONS, universe, seed)
    }

    pub fn with_shape(bin_count: usize, repetitions: usize, universe: u64, seed: u64) -> Result<Self> {
        if bin_count == 0 || repetitions == 0 {
            return Err(invalid("bins", "needs at least one bin and one repetition"));
        }
        if universe == 0 {
            return Err(invalid("n", "universe must be nonempty"));
        }
        Ok(Self {
            bin_count,
            universe,
            seed,
            hashes: (0..repetitions)
                .map(|r| PairwiseHash::from_seed(derive_seed(seed, r as u64)))
                .collect(),
            weights: vec![0; bin_count * repetitions],
            bit_counters: vec![0; bits_for(universe)],
            total: 0,
        })
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn repetitions(&self) -> usize {
        self.hashes.len()
    }

    pub fn universe_size(&self) -> u64 {
        self.universe
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn total(&self) -> i64 {
        self.total
    }

    pub fn bit_counters(&self) -> &[i64] {
        &self.bit_counters
    }

    pub fn bins(&self, rep: usize) -> &[i64] {
        &self.weights[rep * self.bin_count..(rep + 1) * self.bin_count]
    }

    /// Bin of `index` in repetition `rep`.
    pub fn bin_of(&self, rep: usize, index: u64) -> usize {
        self.hashes[rep].bucket(index, self.bin_count)
    }

    /// Bins, bit counters and the total.
    pub fn space_words(&self) -> u64 {
        (self.weights.len() + self.bit_counters.len() + 1) as u64
    }

    pub fn update(&mut self, e: UpdateEvent) {
        for rep in 0..self.hashes.len() {
            let b = self.bin_of(rep, e.index);
            self.weights[rep * self.bin_count + b] += e.delta;
        }
        let key = e.index - 1;
        for (bit, c) in self.bit_counters.iter_mut().enumerate() {
            if key >> bit & 1 == 1 {
                *c += e.delta;
            }
        }
        self.total += e.delta;
    }

    /// Sum of `|bin|` in repetition `rep`.
    pub fn mass(&self, rep: usize) -> i64 {
        self.bins(rep).iter().map(|w| w.abs()).sum()
    }

    fn reference_mass(&self) -> Result<i64> {
        let mass = (0..self.repetitions()).map(|r| self.mass(r)).max().unwrap_or(0);
        if mass == 0 {
            return Err(Error::Undefined("heavy-hitter detection on an empty vector"));
        }
        Ok(mass)
    }

    /// For each repetition, the heaviest bin if it carries at least
    /// `threshold` of that repetition's mass.
    pub fn heavy_bins(&self, threshold: f64) -> Result<Option<Vec<usize>>> {
        self.reference_mass()?;
        let mut out = Vec::with_capacity(self.repetitions());
        for rep in 0..self.repetitions() {
            let bins = self.bins(rep);
            let (b, w) = bins
                .iter()
                .enumerate()
                .max_by_key(|(_, w)| w.abs())
                .expect("at least one bin");
            if (w.abs() as f64) < threshold * self.mass(rep) as f64 {
                return Ok(None);
            }
            out.push(b);
        }
        Ok(Some(out))
    }

    /// Whether every repetition has a bin holding `threshold` of the mass.
    pub fn detect(&self, threshold: f64) -> Result<bool> {
        Ok(self.heavy_bins(threshold)?.is_some())
    }

    /// Index assembled bit by bit; meaningful only when a heavy element exists.
    pub fn identify(&self) -> u64 {
        let Ok(mass) = self.reference_mass() else {
            return 1;
        };
        let mut key = 0u64;
        for (bit, c) in self.bit_counters.iter().enumerate() {
            if c.abs() as f64 >= BIT_THRESHOLD * mass as f64 {
                key |= 1 << bit;
            }
        }
        key + 1
    }

    /// Detection at `threshold` followed by identification. Returns `None`
    /// when detection does not fire or the identified index does not hash to
    /// the heavy bin of every repetition.
    pub fn find_heavy(&self, threshold: f64) -> Result<Option<HeavyHitter>> {
        let Some(bins) = self.heavy_bins(threshold)? else {
            return Ok(None);
        };
        let index = self.identify();
        if index > self.universe || bins.iter().enumerate().any(|(r, &b)| self.bin_of(r, index) != b) {
            return Ok(None);
        }
        Ok(Some(HeavyHitter { index, bins }))
    }

    /// Whether the vector looks like a single distinct element: every
    /// repetition places all mass in one bin and the identified element
    /// lands there.
    pub fn is_degenerate(&self) -> bool {
        matches!(self.find_heavy(1.0), Ok(Some(_)))
            && (0..self.repetitions()).all(|r| self.bins(r).iter().filter(|w| **w != 0).count() == 1)
    }

    /// Net weight outside the heavy bin, per repetition.
    pub fn residual_l1_by_rep(&self, heavy: &HeavyHitter) -> Vec<i64> {
        heavy
            .bins
            .iter()
            .enumerate()
            .map(|(r, &b)| self.mass(r) - self.bins(r)[b].abs())
            .collect()
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.seed != other.seed
            || self.bin_count != other.bin_count
            || self.hashes.len() != other.hashes.len()
            || self.universe != other.universe
        {
            return Err(Error::Incompatible("heavy-hitter sketches differ in seed or shape".into()));
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.bit_counters.iter_mut().zip(&other.bit_counters) {
            *a += b;
        }
        self.total += other.total;
        Ok(())
    }

    const MAGIC: &'static [u8; 4] = b"TEHH";
    const VERSION: u16 = 1;

    /// Header (magic, version, bins, repetitions, universe, seed) then bins,
    /// bit counters and total as little-endian `i64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(Self::MAGIC);
        out.extend_from_slice(&Self::VERSION.to_le_bytes());
        for v in [self.bin_count as u64, self.hashes.len() as u64, self.universe, self.seed] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for w in self.weights.iter().chain(&self.bit_counters).chain(std::iter::once(&self.total)) {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != Self::MAGIC {
            return Err(Error::Decode("bad magic".into()));
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != Self::VERSION {
            return Err(Error::Decode(format!("unsupported version {version}")));
        }
        let bins = u64::from_le_bytes(r.array()?) as usize;
        let reps = u64::from_le_bytes(r.array()?) as usize;
        let universe = u64::from_le_bytes(r.array()?);
        let seed = u64::from_le_bytes(r.array()?);
        let words = bins
            .checked_mul(reps)
            .and_then(|w| w.checked_add(bits_for(universe) + 1))
            .ok_or_else(|| Error::Decode("shape overflows".into()))?;
        if r.remaining() != words * 8 {
            return Err(Error::Decode(format!("expected {} counter bytes, found {}", words * 8, r.remaining())));
        }
        let mut s = Self::with_shape(bins, reps, universe, seed).map_err(|e| Error::Decode(e.to_string()))?;
        for w in s.weights.iter_mut().chain(s.bit_counters.iter_mut()) {
            *w = i64::from_le_bytes(r.array()?);
        }
        s.total = i64::from_le_bytes(r.array()?);
        Ok(s)
    }
}
