//! Exact counts and every quantity the sketches estimate, computed by direct
//! summation. This stores all `n` counters and is the ground truth the test
//! suites compare against.
//!
//! Powers are evaluated as `exp(alpha * ln|A_i|)` and each sum is accumulated
//! in increasing order of term magnitude so results do not depend on index
//! order.

use crate::error::{invalid, Error, Result};
use crate::stream::UpdateEvent;

/// Exact frequency vector `A` over the universe `[1, n]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyVector {
    counts: Vec<i64>,
    l1: u64,
}

/// `G_k(a) = sum_i x_i^(1+a) ln^k(x_i)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeProbe {
    pub order: u32,
    pub point: f64,
    pub value: f64,
}

pub(crate) fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    terms.into_iter().sum()
}

impl FrequencyVector {
    pub fn new(n: u64) -> Self {
        Self {
            counts: vec![0; n as usize],
            l1: 0,
        }
    }

    /// Builds the vector directly; `counts[0]` is item 1.
    pub fn from_counts(counts: Vec<i64>) -> Self {
        let l1 = counts.iter().map(|c| c.unsigned_abs()).sum();
        Self { counts, l1 }
    }

    pub fn from_events(n: u64, events: &[UpdateEvent]) -> Result<Self> {
        let mut fv = Self::new(n);
        for &e in events {
            fv.apply(e)?;
        }
        Ok(fv)
    }

    /// `A[e.index] += e.delta`, keeping the cached `||A||_1` in sync.
    pub fn apply(&mut self, e: UpdateEvent) -> Result<()> {
        let n = self.counts.len() as u64;
        if e.index < 1 || e.index > n {
            return Err(invalid(
                "index",
                format!("{} outside [1, {n}]", e.index),
            ));
        }
        let slot = &mut self.counts[(e.index - 1) as usize];
        let before = slot.unsigned_abs();
        *slot += e.delta;
        self.l1 = self.l1 - before + slot.unsigned_abs();
        Ok(())
    }

    pub fn universe_size(&self) -> u64 {
        self.counts.len() as u64
    }

    pub fn counts(&self) -> &[i64] {
        &self.counts
    }

    /// `A_i` for a 1-based index.
    pub fn count(&self, index: u64) -> i64 {
        self.counts[(index - 1) as usize]
    }

    pub fn l1(&self) -> u64 {
        self.l1
    }

    pub fn is_nonnegative(&self) -> bool {
        self.counts.iter().all(|&c| c >= 0)
    }

    pub fn support_size(&self) -> usize {
        self.counts.iter().filter(|&&c| c != 0).count()
    }

    /// The heaviest coordinate by `|A_i|` as `(index, A_i)`; the lowest index
    /// wins ties. `None` for the zero vector.
    pub fn heaviest(&self) -> Option<(u64, i64)> {
        let mut best: Option<(u64, i64)> = None;
        for (i, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            match best {
                Some((_, b)) if b.unsigned_abs() >= c.unsigned_abs() => {}
                _ => best = Some((i as u64 + 1, c)),
            }
        }
        best
    }

    /// The normalized distribution `x_i = |A_i| / ||A||_1` over the support.
    pub fn distribution(&self) -> Vec<f64> {
        let l1 = self.l1 as f64;
        self.counts
            .iter()
            .filter(|&&c| c != 0)
            .map(|&c| c.unsigned_abs() as f64 / l1)
            .collect()
    }

    fn require_mass(&self) -> Result<()> {
        if self.l1 == 0 {
            Err(Error::Undefined("empty distribution"))
        } else {
            Ok(())
        }
    }

    /// `F_alpha = sum_i |A_i|^alpha`.
    pub fn moment(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        Ok(sorted_sum(
            self.counts
                .iter()
                .filter(|&&c| c != 0)
                .map(|&c| (alpha * (c.unsigned_abs() as f64).ln()).exp())
                .collect(),
        ))
    }

    /// `sum_i x_i^alpha`; requires a nonzero vector.
    pub fn normalized_moment(&self, alpha: f64) -> Result<f64> {
        self.require_mass()?;
        if !alpha.is_finite() {
            return Err(invalid("alpha", "must be finite"));
        }
        Ok(sorted_sum(
            self.distribution()
                .into_iter()
                .map(|x| (alpha * x.ln()).exp())
                .collect(),
        ))
    }

    /// Shannon entropy in nats.
    pub fn shannon(&self) -> Result<f64> {
        self.require_mass()?;
        Ok(-sorted_sum(
            self.distribution().into_iter().map(|x| x * x.ln()).collect(),
        ))
    }

    /// Rényi entropy `ln(sum x_i^alpha) / (1 - alpha)`.
    pub fn renyi(&self, alpha: f64) -> Result<f64> {
        check_entropy_alpha(alpha)?;
        Ok(self.normalized_moment(alpha)?.ln() / (1.0 - alpha))
    }

    /// Tsallis entropy `(1 - sum x_i^alpha) / (alpha - 1)`.
    pub fn tsallis(&self, alpha: f64) -> Result<f64> {
        check_entropy_alpha(alpha)?;
        Ok((1.0 - self.normalized_moment(alpha)?) / (alpha - 1.0))
    }

    /// `T(a) = T_{1+a}` with the Shannon limit at `a = 0`.
    pub fn tsallis_offset(&self, a: f64) -> Result<f64> {
        if a == 0.0 {
            self.shannon()
        } else {
            self.tsallis(1.0 + a)
        }
    }

    /// `F_alpha` with the single heaviest coordinate removed.
    pub fn residual_moment(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        self.require_mass()?;
        let (heavy, _) = self.heaviest().expect("nonzero vector has a heaviest entry");
        Ok(sorted_sum(
            self.counts
                .iter()
                .enumerate()
                .filter(|&(i, &c)| c != 0 && i as u64 + 1 != heavy)
                .map(|(_, &c)| (alpha * (c.unsigned_abs() as f64).ln()).exp())
                .collect(),
        ))
    }

    /// `G_k(a)` by direct summation over the support.
    pub fn derivative_sum(&self, order: u32, point: f64) -> Result<DerivativeProbe> {
        self.require_mass()?;
        if !(point >= -1.0) {
            return Err(invalid("a", format!("{point} is below -1")));
        }
        let value = sorted_sum(
            self.distribution()
                .into_iter()
                .map(|x| {
                    let ln = x.ln();
                    ((1.0 + point) * ln).exp() * ln.powi(order as i32)
                })
                .collect(),
        );
        Ok(DerivativeProbe {
            order,
            point,
            value,
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(invalid("alpha", format!("{alpha} is not positive")))
    }
}

fn check_entropy_alpha(alpha: f64) -> Result<()> {
    check_alpha(alpha)?;
    if alpha == 1.0 {
        return Err(invalid("alpha", "order 1 is the Shannon limit; use shannon()"));
    }
    Ok(())
}
