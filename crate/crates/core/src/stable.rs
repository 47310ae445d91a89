//! Symmetric alpha-stable projections and Li's geometric-mean estimator of
//! `F_alpha`, amplified by median of means.
//!
//! Row `j` of the projection matrix is never stored: `R[j, i]` is rebuilt from
//! `(seed, j, i)` through the Chambers-Mallows-Stuck transform each time item
//! `i` is updated.

use std::f64::consts::{FRAC_PI_2, PI};

use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::fixed::Fixed256;
use crate::hashing::{mix64, unit_open};
use crate::stream::{EstimateReport, Guarantee, Quantity, UpdateEvent};

/// Projections per geometric-mean group.
pub const GROUP: usize = 3;

/// Default variance constant: groups per block is `ceil(c_var / eps^2)`.
pub const DEFAULT_C_VAR: f64 = 30.0;

/// `S` for `W = -ln u` and angle `theta`:
/// `sin(a theta) / cos(theta)^(1/a) * (cos((1-a) theta) / W)^((1-a)/a)`.
pub fn sample_stable(alpha: f64, u: f64, theta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(invalid("alpha", format!("{alpha} is not inside (0, 2]")));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(invalid("u", format!("{u} is not inside (0, 1)")));
    }
    if !(theta > -FRAC_PI_2 && theta < FRAC_PI_2) {
        return Err(invalid("theta", format!("{theta} is not inside (-pi/2, pi/2)")));
    }
    Ok(Angles::new(u, theta).variate(alpha, 1.0 / alpha))
}

/// Per-`(row, item)` quantities shared by every exponent.
///
/// With `y = alpha - 1` the transform rearranges to
/// `S = sin(alpha theta) / cos(theta) * exp((y / alpha) (ln(W cos theta) - ln cos(y theta)))`,
/// so only `sin(alpha theta)`, `ln cos(y theta)` and one `exp` depend on alpha.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Angles {
    theta: f64,
    sin_t: f64,
    cos_t: f64,
    inv_cos_t: f64,
    ln_w_cos_t: f64,
}

/// Below this `|alpha - 1|` the `(alpha - 1) theta` terms use series.
const NEAR_UNITY: f64 = 0.03;

impl Angles {
    #[inline]
    pub(crate) fn new(u: f64, theta: f64) -> Self {
        let (sin_t, cos_t) = theta.sin_cos();
        Self {
            theta,
            sin_t,
            cos_t,
            inv_cos_t: 1.0 / cos_t,
            ln_w_cos_t: (-u.ln() * cos_t).ln(),
        }
    }

    #[inline]
    pub(crate) fn from_oracle(seed: u64, row: u64, index: u64) -> Self {
        let key = mix64(mix64(seed ^ 0x9e37_79b9_7f4a_7c15) ^ row.wrapping_mul(0xd1b5_4a32_d192_ed03));
        let base = mix64(key ^ index.wrapping_mul(0x8cb9_2ba7_2f3d_8dd7));
        let u = unit_open(mix64(base ^ 0xa076_1d64_78bd_642f));
        let v = unit_open(mix64(base ^ 0xe703_7ed1_a0b4_28db));
        Self::new(u, PI * (v - 0.5))
    }

    #[inline]
    pub(crate) fn variate(&self, alpha: f64, inv_alpha: f64) -> f64 {
        let y = alpha - 1.0;
        if y == 0.0 {
            return self.sin_t * self.inv_cos_t;
        }
        let (sin_at, ln_cos_yt) = if y.abs() <= NEAR_UNITY {
            // t = (alpha - 1) theta is at most 0.048, so these truncations are
            // below 1e-17 relative.
            let t = y * self.theta;
            let t2 = t * t;
            let cos_yt = 1.0 - t2 * (0.5 - t2 * (1.0 / 24.0 - t2 * (1.0 / 720.0 - t2 * (1.0 / 40320.0))));
            let sin_yt = t * (1.0 - t2 * (1.0 / 6.0 - t2 * (1.0 / 120.0 - t2 * (1.0 / 5040.0))));
            let ln_cos_yt =
                -t2 * (0.5 + t2 * (1.0 / 12.0 + t2 * (1.0 / 45.0 + t2 * (17.0 / 2520.0 + t2 * (31.0 / 14175.0)))));
            (self.sin_t * cos_yt + self.cos_t * sin_yt, ln_cos_yt)
        } else {
            ((alpha * self.theta).sin(), (y * self.theta).cos().ln())
        };
        sin_at * self.inv_cos_t * (y * inv_alpha * (self.ln_w_cos_t - ln_cos_yt)).exp()
    }
}

/// `R[row, index]` for a sketch with this seed.
pub fn oracle_variate(alpha: f64, seed: u64, row: u64, index: u64) -> f64 {
    Angles::from_oracle(seed, row, index).variate(alpha, 1.0 / alpha)
}

/// `D(alpha) = [(2/pi) Gamma(alpha/3) Gamma(2/3) sin(pi alpha / 6)]^3`.
pub fn gm_denominator(alpha: f64) -> f64 {
    let k = GROUP as f64;
    ((2.0 / PI) * gamma(alpha / k) * gamma(1.0 - 1.0 / k) * (PI * alpha / (2.0 * k)).sin()).powi(GROUP as i32)
}

/// Exact `Var / Mean^2` of the per-group estimator:
/// `[(2/pi) Gamma(2a/3) Gamma(1/3) sin(pi a / 3)]^3 / D(a)^2 - 1`.
pub fn gm_relative_variance(alpha: f64) -> f64 {
    let k = GROUP as f64;
    let second =
        ((2.0 / PI) * gamma(2.0 * alpha / k) * gamma(1.0 - 2.0 / k) * (PI * alpha / k).sin()).powi(GROUP as i32);
    second / gm_denominator(alpha).powi(2) - 1.0
}

/// `prod |y_j|^(alpha/3) / D(alpha)`.
pub fn geometric_mean_estimate(group: [f64; GROUP], alpha: f64) -> f64 {
    geometric_mean_with(group, alpha, gm_denominator(alpha))
}

#[inline]
fn geometric_mean_with(group: [f64; GROUP], alpha: f64, denom: f64) -> f64 {
    if group.contains(&0.0) {
        return 0.0;
    }
    let ln_sum: f64 = group.iter().map(|y| y.abs().ln()).sum();
    (alpha / GROUP as f64 * ln_sum).exp() / denom
}

/// Median, averaging the two middle values for even lengths.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let n = values.len();
    let mid = n / 2;
    let (_, hi, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = *hi;
    if n % 2 == 1 {
        hi
    } else {
        let lo = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// How many groups are averaged per block and how many block means the
/// median is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SketchLayout {
    pub groups_per_block: usize,
    pub blocks: usize,
}

impl SketchLayout {
    pub fn new(groups_per_block: usize, blocks: usize) -> Result<Self> {
        if groups_per_block == 0 || blocks == 0 {
            return Err(invalid("layout", "needs at least one group and one block"));
        }
        Ok(Self {
            groups_per_block,
            blocks,
        })
    }

    /// `ceil(c_var / eps^2)` groups per block, `ceil(8 ln(1/delta))` blocks.
    pub fn for_precision(epsilon: f64, delta: f64, c_var: f64) -> Result<Self> {
        Self::new(groups_for(epsilon, c_var)?, blocks_for(delta)?)
    }

    /// The row-count knob for strict-turnstile streams:
    /// `ceil(c_var (|alpha - 1| / eps^2 + 1/eps))` groups per block.
    ///
    /// Only the row count shrinks. The estimator stays symmetric, so a sketch
    /// built this way reports itself undersized for `epsilon`.
    pub fn strict_turnstile(alpha: f64, epsilon: f64, delta: f64, c_var: f64) -> Result<Self> {
        check_eps(epsilon)?;
        let g = (c_var * ((alpha - 1.0).abs() / (epsilon * epsilon) + 1.0 / epsilon)).ceil();
        Self::new(g as usize, blocks_for(delta)?)
    }

    pub fn rows(&self) -> usize {
        GROUP * self.groups_per_block * self.blocks
    }

    pub fn groups(&self) -> usize {
        self.groups_per_block * self.blocks
    }

    /// Smallest `eps` with `ceil(c_var / eps^2) <= groups_per_block`.
    pub fn sized_epsilon(&self, c_var: f64) -> f64 {
        (c_var / self.groups_per_block as f64).sqrt()
    }
}

fn check_eps(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(invalid("epsilon", format!("{epsilon} is not inside (0, 1)")))
    }
}

pub fn groups_for(epsilon: f64, c_var: f64) -> Result<usize> {
    check_eps(epsilon)?;
    if !(c_var > 0.0) {
        return Err(invalid("c_var", "must be positive"));
    }
    Ok((c_var / (epsilon * epsilon) - 1e-9).ceil() as usize)
}

pub fn blocks_for(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} is not inside (0, 1)")));
    }
    Ok(((8.0 * (1.0 / delta).ln() - 1e-9).ceil() as usize).max(1))
}

/// `rows` alpha-stable projections of the frequency vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StableSketch {
    alpha: f64,
    inv_alpha: f64,
    denom: f64,
    seed: u64,
    layout: SketchLayout,
    projections: Vec<Fixed256>,
}

impl StableSketch {
    pub fn new(alpha: f64, layout: SketchLayout, seed: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(invalid("alpha", format!("{alpha} is not inside (0, 2]")));
        }
        Ok(Self {
            alpha,
            inv_alpha: 1.0 / alpha,
            denom: gm_denominator(alpha),
            seed,
            layout,
            projections: vec![Fixed256::ZERO; layout.rows()],
        })
    }

    /// One block of `rows / 3` groups; `rows` must be a positive multiple of 3.
    pub fn with_rows(alpha: f64, rows: usize, seed: u64) -> Result<Self> {
        if rows == 0 || rows % GROUP != 0 {
            return Err(invalid("rows", format!("{rows} is not a positive multiple of 3")));
        }
        Self::new(alpha, SketchLayout::new(rows / GROUP, 1)?, seed)
    }

    /// Sized with the default `c_var`.
    pub fn for_precision(alpha: f64, epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        Self::new(alpha, SketchLayout::for_precision(epsilon, delta, DEFAULT_C_VAR)?, seed)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layout(&self) -> SketchLayout {
        self.layout
    }

    pub fn rows(&self) -> usize {
        self.projections.len()
    }

    pub fn row_group_count(&self) -> usize {
        self.projections.len() / GROUP
    }

    /// One counter per projection.
    pub fn space_words(&self) -> u64 {
        self.projections.len() as u64
    }

    pub fn raw_projections(&self) -> &[Fixed256] {
        &self.projections
    }

    pub fn projections(&self) -> Vec<f64> {
        self.projections.iter().map(Fixed256::to_f64).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.projections.iter().all(|p| *p == Fixed256::ZERO)
    }

    /// `R[row, index]`.
    pub fn variate(&self, row: usize, index: u64) -> f64 {
        Angles::from_oracle(self.seed, row as u64, index).variate(self.alpha, self.inv_alpha)
    }

    pub fn update(&mut self, e: UpdateEvent) {
        for row in 0..self.projections.len() {
            let r = self.variate(row, e.index);
            self.projections[row].add_scaled(e.delta, r);
        }
    }

    /// Applies `e` to the listed rows only.
    pub fn update_rows(&mut self, e: UpdateEvent, rows: impl IntoIterator<Item = usize>) {
        for row in rows {
            let r = self.variate(row, e.index);
            self.projections[row].add_scaled(e.delta, r);
        }
    }

    /// Geometric-mean estimate of group `group` (rows `3g..3g+3`).
    pub fn group_estimate(&self, group: usize) -> f64 {
        let base = group * GROUP;
        let y = [
            self.projections[base].to_f64(),
            self.projections[base + 1].to_f64(),
            self.projections[base + 2].to_f64(),
        ];
        geometric_mean_with(y, self.alpha, self.denom)
    }

    pub fn group_estimates(&self) -> Vec<f64> {
        (0..self.row_group_count()).map(|g| self.group_estimate(g)).collect()
    }

    /// Mean of each block's groups.
    pub fn block_means(&self) -> Vec<f64> {
        let g = self.layout.groups_per_block;
        (0..self.layout.blocks)
            .map(|b| (b * g..(b + 1) * g).map(|i| self.group_estimate(i)).sum::<f64>() / g as f64)
            .collect()
    }

    /// Median of block means, with no sizing check.
    pub fn estimate(&self) -> f64 {
        median(&mut self.block_means())
    }

    /// `(1 +- eps) F_alpha` with probability `1 - delta`, provided the layout
    /// was sized for `(eps, delta)` under the default `c_var`.
    pub fn estimate_moment(&self, epsilon: f64, delta: f64) -> Result<EstimateReport> {
        let need = SketchLayout::for_precision(epsilon, delta, DEFAULT_C_VAR)?;
        if self.layout.groups_per_block < need.groups_per_block {
            return Err(Error::Undersized {
                sized: self.layout.sized_epsilon(DEFAULT_C_VAR),
                requested: epsilon,
            });
        }
        if self.layout.blocks < need.blocks {
            return Err(invalid(
                "delta",
                format!("{} blocks cannot deliver failure probability {delta}", self.layout.blocks),
            ));
        }
        Ok(EstimateReport {
            value: self.estimate(),
            quantity: Quantity::Moment(self.alpha),
            guarantee: Guarantee::Multiplicative(epsilon),
            success_prob: 1.0 - delta,
            seed: self.seed,
            space_words_used: self.space_words(),
            degenerate: false,
            budget_capped: false,
            weak_certification: false,
        })
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.alpha.to_bits() != other.alpha.to_bits() {
            return Err(Error::Incompatible(format!("alpha {} vs {}", self.alpha, other.alpha)));
        }
        if self.seed != other.seed {
            return Err(Error::Incompatible(format!("seed {} vs {}", self.seed, other.seed)));
        }
        if self.layout != other.layout {
            return Err(Error::Incompatible(format!("layout {:?} vs {:?}", self.layout, other.layout)));
        }
        Ok(())
    }

    /// Entrywise sum; the result sketches the concatenated streams.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.projections.iter_mut().zip(&other.projections) {
            *a = a.wrapping_add(*b);
        }
        Ok(())
    }

    /// Entrywise difference; sketches the stream with `other`'s updates negated.
    pub fn subtract(&mut self, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.projections.iter_mut().zip(&other.projections) {
            *a = a.wrapping_add(b.wrapping_neg());
        }
        Ok(())
    }

    const MAGIC: &'static [u8; 4] = b"TESS";
    const VERSION: u16 = 1;

    /// Header (magic, version, alpha, seed, groups per block, blocks) then one
    /// 32-byte little-endian projection per row.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(38 + 32 * self.projections.len());
        out.extend_from_slice(Self::MAGIC);
        out.extend_from_slice(&Self::VERSION.to_le_bytes());
        out.extend_from_slice(&self.alpha.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.layout.groups_per_block as u64).to_le_bytes());
        out.extend_from_slice(&(self.layout.blocks as u64).to_le_bytes());
        for p in &self.projections {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != Self::MAGIC {
            return Err(Error::Decode("bad magic".into()));
        }
        let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
        if version != Self::VERSION {
            return Err(Error::Decode(format!("unsupported version {version}")));
        }
        let alpha = f64::from_le_bytes(r.array()?);
        let seed = u64::from_le_bytes(r.array()?);
        let gpb = u64::from_le_bytes(r.array()?) as usize;
        let blocks = u64::from_le_bytes(r.array()?) as usize;
        let layout = SketchLayout::new(gpb, blocks).map_err(|e| Error::Decode(e.to_string()))?;
        let rows = gpb
            .checked_mul(blocks)
            .and_then(|g| g.checked_mul(GROUP))
            .ok_or_else(|| Error::Decode("row count overflows".into()))?;
        if r.remaining() != rows * 32 {
            return Err(Error::Decode(format!(
                "expected {} projection bytes, found {}",
                rows * 32,
                r.remaining()
            )));
        }
        let mut sketch = Self::new(alpha, layout, seed).map_err(|e| Error::Decode(e.to_string()))?;
        for p in sketch.projections.iter_mut() {
            *p = Fixed256::from_le_bytes(&r.array()?);
        }
        Ok(sketch)
    }
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Decode("truncated input".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// Sketches of several exponents over one seed and layout, updated together
/// so each `(row, item)` angle pair is drawn once.
///
/// Sharing the seed makes the node estimates strongly correlated, which is
/// what lets differences across nearby exponents survive sketch noise.
#[derive(Debug, Clone, PartialEq)]
pub struct StableBank {
    sketches: Vec<StableSketch>,
}

impl StableBank {
    pub fn new(alphas: &[f64], layout: SketchLayout, seed: u64) -> Result<Self> {
        if alphas.is_empty() {
            return Err(invalid("alphas", "a bank needs at least one exponent"));
        }
        let sketches = alphas
            .iter()
            .map(|&a| StableSketch::new(a, layout, seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sketches })
    }

    pub fn update(&mut self, e: UpdateEvent) {
        let rows = self.sketches[0].rows();
        self.update_rows(e, 0..rows);
    }

    pub fn update_rows(&mut self, e: UpdateEvent, rows: impl IntoIterator<Item = usize>) {
        let seed = self.sketches[0].seed;
        for row in rows {
            let angles = Angles::from_oracle(seed, row as u64, e.index);
            for s in self.sketches.iter_mut() {
                let r = angles.variate(s.alpha, s.inv_alpha);
                s.projections[row].add_scaled(e.delta, r);
            }
        }
    }

    pub fn sketches(&self) -> &[StableSketch] {
        &self.sketches
    }

    pub fn sketch(&self, i: usize) -> &StableSketch {
        &self.sketches[i]
    }

    pub fn len(&self) -> usize {
        self.sketches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sketches.is_empty()
    }

    pub fn layout(&self) -> SketchLayout {
        self.sketches[0].layout
    }

    pub fn space_words(&self) -> u64 {
        self.sketches.iter().map(StableSketch::space_words).sum()
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.sketches.len() != other.sketches.len() {
            return Err(Error::Incompatible("banks hold different exponent lists".into()));
        }
        for (a, b) in self.sketches.iter_mut().zip(&other.sketches) {
            a.merge(b)?;
        }
        Ok(())
    }

    pub fn subtract(&mut self, other: &Self) -> Result<()> {
        if self.sketches.len() != other.sketches.len() {
            return Err(Error::Incompatible("banks hold different exponent lists".into()));
        }
        for (a, b) in self.sketches.iter_mut().zip(&other.sketches) {
            a.subtract(b)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_and_gaussian_reductions() {
        for (u, th) in [(0.3, 0.7), (0.9, -1.2), (0.01, 0.1)] {
            assert!((sample_stable(1.0, u, th).unwrap() - f64::tan(th)).abs() < 1e-12);
            let g = 2.0 * th.sin() * (-f64::ln(u)).sqrt();
            assert!((sample_stable(2.0, u, th).unwrap() - g).abs() < 1e-12);
        }
        assert!(sample_stable(0.0, 0.5, 0.1).is_err());
        assert!(sample_stable(2.5, 0.5, 0.1).is_err());
    }

    #[test]
    fn series_branch_matches_direct_formula() {
        for (u, th) in [(0.3, 0.7), (0.9, -1.5), (1e-9, 1.56), (0.999, -0.01)] {
            let a = Angles::new(u, th);
            for y in [0.03, -0.03, 0.001, -1e-6] {
                let alpha = 1.0 + y;
                let fast = a.variate(alpha, 1.0 / alpha);
                let direct = (alpha * th).sin() / th.cos().powf(1.0 / alpha)
                    * (((1.0 - alpha) * th).cos() / -u.ln()).powf((1.0 - alpha) / alpha);
                assert!((fast - direct).abs() <= 1e-12 * direct.abs().max(1.0), "{u} {th} {y}: {fast} {direct}");
            }
        }
    }

    #[test]
    fn denominator_at_one() {
        assert!((gm_denominator(1.0) - (2.0 / 3f64.sqrt()).powi(3)).abs() < 1e-12);
        assert!((gm_denominator(1.0) - 1.5396).abs() < 1e-4);
    }

    #[test]
    fn relative_variance_is_finite_and_small() {
        for a in [0.25, 0.5, 1.0, 1.5, 2.0] {
            let v = gm_relative_variance(a);
            assert!(v > 0.0 && v < 2.5, "{a}: {v}");
        }
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn single_update_is_the_variate() {
        let mut s = StableSketch::with_rows(1.5, 6, 9).unwrap();
        s.update(UpdateEvent::insert(4));
        for (j, y) in s.projections().iter().enumerate() {
            let r = s.variate(j, 4);
            assert!((y - r).abs() <= 1e-15 * r.abs().max(1.0));
        }
        s.update(UpdateEvent::delete(4));
        assert!(s.is_zero());
        assert_eq!(s.estimate(), 0.0);
    }

    #[test]
    fn bank_matches_individual_sketches() {
        let layout = SketchLayout::new(4, 2).unwrap();
        let alphas = [0.98, 1.0, 1.3];
        let mut bank = StableBank::new(&alphas, layout, 5).unwrap();
        let mut solo: Vec<_> = alphas.iter().map(|&a| StableSketch::new(a, layout, 5).unwrap()).collect();
        for (i, d) in [(1, 3), (7, -1), (2, 5)] {
            let e = UpdateEvent::new(i, d);
            bank.update(e);
            for s in solo.iter_mut() {
                s.update(e);
            }
        }
        for (b, s) in bank.sketches().iter().zip(&solo) {
            assert_eq!(b, s);
        }
    }

    #[test]
    fn merge_rejects_mismatch() {
        let mut a = StableSketch::with_rows(1.0, 3, 1).unwrap();
        assert!(a.merge(&StableSketch::with_rows(1.0, 3, 2).unwrap()).is_err());
        assert!(a.merge(&StableSketch::with_rows(0.5, 3, 1).unwrap()).is_err());
        assert!(a.merge(&StableSketch::with_rows(1.0, 6, 1).unwrap()).is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let mut s = StableSketch::new(0.7, SketchLayout::new(2, 3).unwrap(), 77).unwrap();
        s.update(UpdateEvent::new(3, 11));
        s.update(UpdateEvent::new(8, -2));
        let bytes = s.to_bytes();
        assert_eq!(StableSketch::from_bytes(&bytes).unwrap(), s);
        assert!(StableSketch::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(StableSketch::from_bytes(&bad).is_err());
    }

    #[test]
    fn undersized_sketch_is_refused() {
        let s = StableSketch::for_precision(1.0, 0.2, 0.1, 3).unwrap();
        assert!(s.estimate_moment(0.2, 0.1).is_ok());
        assert!(matches!(s.estimate_moment(0.1, 0.1), Err(Error::Undersized { .. })));
    }

    #[test]
    fn layout_formulas() {
        let l = SketchLayout::for_precision(0.1, 0.05, 30.0).unwrap();
        assert_eq!(l.groups_per_block, 3000);
        assert_eq!(l.blocks, 24);
        assert_eq!(l.rows(), 3 * 3000 * 24);
        let k = SketchLayout::strict_turnstile(1.0, 0.1, 0.05, 30.0).unwrap();
        assert_eq!(k.groups_per_block, 300);
    }
}
