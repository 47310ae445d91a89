//! Residual moments `F_alpha^res = F_alpha - |A_1|^alpha`, where `A_1` is the
//! heaviest coordinate, estimated while a single element holds most of the
//! mass.
//!
//! Strict-turnstile streams use the bucketing algorithm, whose variant depends
//! on `alpha`. General-update streams use the bipartition algorithm: each
//! trial splits the universe in two with a random bit and the half without
//! the heavy element is measured with a geometric-mean group.

use std::collections::{BTreeMap, HashMap};

use crate::config::{BipartitionConstants, EstimatorConfig, Sizing};
use crate::error::{invalid, Result};
use crate::hashing::{derive_seed, oracle_bits};
use crate::heavy::{HeavyHitter, HeavyHitterSketch, DETECT_THRESHOLD};
use crate::stable::{median, SketchLayout, StableBank};
use crate::stream::{validate_strict_turnstile, EstimateReport, Guarantee, Quantity, UpdateEvent};

/// Which bucketing variant applies to an exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualCase {
    /// `alpha = 1`: bin counts alone.
    L1,
    /// `alpha` in `(0, 1/3)` or `(1, 2]`: one moment sketch per bin.
    Bucketed,
    /// `alpha` in `[1/3, 1)`: one sketch of the whole stream, with the heavy
    /// element deleted almost entirely before estimating.
    DeletionTrick,
}

impl ResidualCase {
    pub fn for_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(invalid("alpha", format!("{alpha} is not inside (0, 2]")));
        }
        Ok(if alpha == 1.0 {
            Self::L1
        } else if (1.0 / 3.0..1.0).contains(&alpha) {
            Self::DeletionTrick
        } else {
            Self::Bucketed
        })
    }
}

/// A residual estimate with the pieces callers combine further.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualEstimate {
    /// Describes the first exponent.
    pub report: EstimateReport,
    pub heavy_index: u64,
    /// `F~_1^res` from the heavy-hitter bins, median over repetitions, or
    /// from the companion sketch for the bipartition algorithm.
    pub residual_l1: f64,
    /// `F~_alpha^res` per exponent.
    pub values: Vec<f64>,
    /// Per-exponent, per-block `F~_alpha^res`; empty for the L1 case.
    pub block_moments: Vec<Vec<f64>>,
    /// Per-block `F~_1^res` from the same rows; empty without a companion.
    pub block_l1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResidualOutcome {
    Estimate(ResidualEstimate),
    /// Detection did not fire, or identification contradicted it.
    NoHeavyHitter,
}

impl ResidualOutcome {
    pub fn estimate(&self) -> Option<&ResidualEstimate> {
        match self {
            Self::Estimate(e) => Some(e),
            Self::NoHeavyHitter => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.estimate().map(|e| e.report.value)
    }
}

/// `F_1 - F~_1^res`, the number of deletions of the heavy element appended
/// before the whole-stream sketch is read.
pub fn deletion_count(f1: i64, residual_l1: f64) -> i64 {
    f1 - residual_l1.round() as i64
}

/// Target exponents, then `1` when a companion is wanted and absent.
fn bank_alphas(targets: &[f64], companion: bool) -> Vec<f64> {
    let mut out = targets.to_vec();
    if companion && !targets.contains(&1.0) {
        out.push(1.0);
    }
    out
}

fn validate_targets(targets: &[f64]) -> Result<ResidualCase> {
    let Some(&first) = targets.first() else {
        return Err(invalid("alphas", "at least one exponent is needed"));
    };
    let case = ResidualCase::for_alpha(first)?;
    for &a in targets {
        if ResidualCase::for_alpha(a)? != case {
            return Err(invalid("alphas", format!("{a} falls in a different case than {first}")));
        }
    }
    Ok(case)
}

fn residual_l1_of(hh: &HeavyHitterSketch, heavy: &HeavyHitter) -> f64 {
    let mut by_rep: Vec<f64> = hh.residual_l1_by_rep(heavy).into_iter().map(|w| w as f64).collect();
    median(&mut by_rep)
}

/// Bucketing-algorithm state for one exponent.
#[derive(Debug, Clone)]
pub struct ResidualBucketSketch {
    targets: Vec<f64>,
    epsilon: f64,
    case: ResidualCase,
    seed: u64,
    alphas: Vec<f64>,
    sizing: Sizing,
    hh: HeavyHitterSketch,
    /// Bucketed: sketches of the bins of repetition 0, allocated on first use.
    bins: HashMap<usize, StableBank>,
    /// DeletionTrick: the whole stream.
    whole: Option<StableBank>,
}

impl ResidualBucketSketch {
    /// `companion` adds an `alpha = 1` sketch on the same rows for
    /// self-normalization.
    pub fn new(
        alpha: f64,
        epsilon: f64,
        universe: u64,
        seed: u64,
        config: &EstimatorConfig,
        companion: bool,
    ) -> Result<Self> {
        Self::with_exponents(&[alpha], epsilon, universe, seed, config, companion)
    }

    /// Several exponents of one case over shared rows and one heavy-hitter
    /// sketch.
    pub fn with_exponents(
        targets: &[f64],
        epsilon: f64,
        universe: u64,
        seed: u64,
        config: &EstimatorConfig,
        companion: bool,
    ) -> Result<Self> {
        config.validate()?;
        let case = validate_targets(targets)?;
        // The L1-residual precision of the deletion trick is eps^(1/alpha).
        let hh_eps = match case {
            ResidualCase::DeletionTrick => {
                let lowest = targets.iter().copied().fold(f64::INFINITY, f64::min);
                epsilon.powf(1.0 / lowest)
            }
            _ => epsilon,
        };
        let (bins, bins_capped) = config.bins(hh_eps)?;
        let hh = HeavyHitterSketch::with_shape(bins, config.hh_repetitions, universe, derive_seed(seed, 0x4848))?;
        let mut sizing = config.sizing(epsilon)?;
        if case == ResidualCase::L1 {
            sizing.capped = false;
        }
        sizing.capped |= bins_capped;
        let alphas = match case {
            ResidualCase::L1 => vec![1.0],
            _ => bank_alphas(targets, companion),
        };
        let whole = match case {
            ResidualCase::DeletionTrick => Some(StableBank::new(&alphas, sizing.layout, derive_seed(seed, 0x5354))?),
            _ => None,
        };
        Ok(Self {
            targets: targets.to_vec(),
            epsilon,
            case,
            seed,
            alphas,
            sizing,
            hh,
            bins: HashMap::new(),
            whole,
        })
    }

    pub fn case(&self) -> ResidualCase {
        self.case
    }

    pub fn heavy_sketch(&self) -> &HeavyHitterSketch {
        &self.hh
    }

    pub fn layout(&self) -> SketchLayout {
        self.sizing.layout
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// A bank over the full vector: the deletion trick's bank before any
    /// deletion, or the sum of all bin banks. `None` for the L1 case.
    pub fn whole_stream(&self) -> Result<Option<StableBank>> {
        match self.case {
            ResidualCase::L1 => Ok(None),
            ResidualCase::DeletionTrick => Ok(self.whole.clone()),
            ResidualCase::Bucketed => {
                let mut merged = StableBank::new(&self.alphas, self.sizing.layout, self.bin_bank_seed())?;
                for bank in self.bins.values() {
                    merged.merge(bank)?;
                }
                Ok(Some(merged))
            }
        }
    }

    /// Whether the formulas asked for more rows or bins than the budget.
    pub fn capped(&self) -> bool {
        self.sizing.capped
    }

    /// Heavy-hitter counters plus, for Bucketed, one bank per bin and, for
    /// DeletionTrick, the whole-stream bank. Bucketed bins are allocated on
    /// first use, but the count assumes all of them.
    pub fn space_words(&self) -> u64 {
        if self.case == ResidualCase::L1 {
            return self.hh.space_words();
        }
        let bank = (self.alphas.len() * self.sizing.layout.rows()) as u64;
        self.hh.space_words()
            + match self.case {
                ResidualCase::L1 => 0,
                ResidualCase::Bucketed => self.hh.bin_count() as u64 * bank,
                ResidualCase::DeletionTrick => bank,
            }
    }

    fn bin_bank_seed(&self) -> u64 {
        derive_seed(self.seed, 0x4255)
    }

    pub fn update(&mut self, e: UpdateEvent) {
        self.hh.update(e);
        match self.case {
            ResidualCase::L1 => {}
            ResidualCase::Bucketed => {
                let b = self.hh.bin_of(0, e.index);
                let (alphas, layout, seed) = (&self.alphas, self.sizing.layout, self.bin_bank_seed());
                self.bins
                    .entry(b)
                    .or_insert_with(|| StableBank::new(alphas, layout, seed).expect("validated exponents"))
                    .update(e);
            }
            ResidualCase::DeletionTrick => self.whole.as_mut().expect("whole-stream bank").update(e),
        }
    }

    pub fn estimate(&self) -> Result<ResidualOutcome> {
        let Some(heavy) = self.hh.find_heavy(DETECT_THRESHOLD)? else {
            return Ok(ResidualOutcome::NoHeavyHitter);
        };
        let residual_l1 = residual_l1_of(&self.hh, &heavy);
        let residual_bank = match self.case {
            ResidualCase::L1 => None,
            ResidualCase::Bucketed => {
                let mut merged = StableBank::new(&self.alphas, self.sizing.layout, self.bin_bank_seed())?;
                for (b, bank) in &self.bins {
                    if *b != heavy.bins[0] {
                        merged.merge(bank)?;
                    }
                }
                Some(merged)
            }
            ResidualCase::DeletionTrick => {
                let mut bank = self.whole.clone().expect("whole-stream bank");
                let d = deletion_count(self.hh.total(), residual_l1);
                bank.update(UpdateEvent::new(heavy.index, -d));
                Some(bank)
            }
        };
        let t = self.targets.len();
        let (values, block_moments, block_l1) = match &residual_bank {
            None => (vec![residual_l1], Vec::new(), Vec::new()),
            Some(bank) => {
                let values = (0..t).map(|i| bank.sketch(i).estimate()).collect();
                let blocks = (0..t).map(|i| bank.sketch(i).block_means()).collect();
                let l1 = match self.targets.iter().position(|a| *a == 1.0) {
                    Some(i) => bank.sketch(i).block_means(),
                    None if bank.len() > t => bank.sketch(t).block_means(),
                    None => Vec::new(),
                };
                (values, blocks, l1)
            }
        };
        Ok(ResidualOutcome::Estimate(ResidualEstimate {
            report: EstimateReport {
                value: values[0],
                quantity: Quantity::ResidualMoment(self.targets[0]),
                guarantee: Guarantee::Multiplicative(self.epsilon),
                success_prob: 0.75,
                seed: self.seed,
                space_words_used: self.space_words(),
                degenerate: false,
                budget_capped: self.sizing.capped,
                weak_certification: false,
            },
            heavy_index: heavy.index,
            residual_l1,
            values,
            block_moments,
            block_l1,
        }))
    }
}

/// `r = c2 * ceil(eps^-2 (ln ln L + ln(c3 / eps)))` for `L >= ||A||_1`;
/// `ln ln L` is floored at zero for `L < e`.
pub fn bipartition_trials(epsilon: f64, l1_bound: f64, c: &BipartitionConstants) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", format!("{epsilon} is not inside (0, 1)")));
    }
    let lnln = if l1_bound > std::f64::consts::E { l1_bound.ln().ln() } else { 0.0 };
    let inner = ((lnln + (c.c3 / epsilon).ln()) / (epsilon * epsilon) - 1e-9).ceil();
    let r = c.c2 * inner;
    Ok(if r > 1e15 { usize::MAX } else { r as usize })
}

/// Bipartition state: `r` trials, each a pair of three-row groups (one per
/// half of the universe), plus a heavy-hitter sketch.
///
/// Trials are averaged in a single block, as the algorithm prescribes.
#[derive(Debug, Clone)]
pub struct BipartitionResidualSketch {
    targets: Vec<f64>,
    epsilon: f64,
    seed: u64,
    side_seed: u64,
    trials: usize,
    capped: bool,
    hh: HeavyHitterSketch,
    bank: StableBank,
}

impl BipartitionResidualSketch {
    pub fn new(
        alpha: f64,
        epsilon: f64,
        universe: u64,
        l1_bound: f64,
        seed: u64,
        config: &EstimatorConfig,
        companion: bool,
    ) -> Result<Self> {
        Self::with_exponents(&[alpha], epsilon, universe, l1_bound, seed, config, companion)
    }

    pub fn with_exponents(
        targets: &[f64],
        epsilon: f64,
        universe: u64,
        l1_bound: f64,
        seed: u64,
        config: &EstimatorConfig,
        companion: bool,
    ) -> Result<Self> {
        config.validate()?;
        if targets.is_empty() {
            return Err(invalid("alphas", "at least one exponent is needed"));
        }
        for &a in targets {
            ResidualCase::for_alpha(a)?;
        }
        let wanted = bipartition_trials(epsilon, l1_bound, &config.bipartition)?;
        let budget = (config.max_groups / 2).max(1);
        let trials = wanted.min(budget);
        let (bins, bins_capped) = config.bins(epsilon)?;
        let hh = HeavyHitterSketch::with_shape(bins, config.hh_repetitions, universe, derive_seed(seed, 0x4848))?;
        let bank = StableBank::new(
            &bank_alphas(targets, companion),
            SketchLayout::new(2 * trials, 1)?,
            derive_seed(seed, 0x5354),
        )?;
        Ok(Self {
            targets: targets.to_vec(),
            epsilon,
            seed,
            side_seed: derive_seed(seed, 0x5349),
            trials,
            capped: wanted > budget || bins_capped,
            hh,
            bank,
        })
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn capped(&self) -> bool {
        self.capped
    }

    /// `h_j(index)`, the half of the universe `index` falls in during trial `j`.
    pub fn side(&self, trial: usize, index: u64) -> usize {
        (oracle_bits(self.side_seed, trial as u64, index, 0) & 1) as usize
    }

    pub fn space_words(&self) -> u64 {
        self.hh.space_words() + self.bank.space_words()
    }

    pub fn heavy_sketch(&self) -> &HeavyHitterSketch {
        &self.hh
    }

    pub fn update(&mut self, e: UpdateEvent) {
        self.hh.update(e);
        let rows: Vec<usize> = (0..self.trials)
            .flat_map(|j| {
                let g = 2 * j + self.side(j, e.index);
                3 * g..3 * g + 3
            })
            .collect();
        self.bank.update_rows(e, rows);
    }

    /// Per-trial values `2 F~_{alpha, j, 1 - h_j(heavy)}` of bank sketch
    /// `which`.
    pub fn trial_values(&self, which: usize, heavy: u64) -> Vec<f64> {
        let s = self.bank.sketch(which);
        (0..self.trials)
            .map(|j| 2.0 * s.group_estimate(2 * j + 1 - self.side(j, heavy)))
            .collect()
    }

    fn trial_average(&self, which: usize, heavy: u64) -> f64 {
        self.trial_values(which, heavy).iter().sum::<f64>() / self.trials as f64
    }

    pub fn estimate(&self) -> Result<ResidualOutcome> {
        let Some(heavy) = self.hh.find_heavy(DETECT_THRESHOLD)? else {
            return Ok(ResidualOutcome::NoHeavyHitter);
        };
        let t = self.targets.len();
        let values: Vec<f64> = (0..t).map(|i| self.trial_average(i, heavy.index)).collect();
        let block_l1 = match self.targets.iter().position(|a| *a == 1.0) {
            Some(i) => vec![values[i]],
            None if self.bank.len() > t => vec![self.trial_average(t, heavy.index)],
            None => Vec::new(),
        };
        let residual_l1 = block_l1.first().copied().unwrap_or_else(|| residual_l1_of(&self.hh, &heavy));
        Ok(ResidualOutcome::Estimate(ResidualEstimate {
            report: EstimateReport {
                value: values[0],
                quantity: Quantity::ResidualMoment(self.targets[0]),
                guarantee: Guarantee::Multiplicative(self.epsilon),
                success_prob: 0.75,
                seed: self.seed,
                space_words_used: self.space_words(),
                degenerate: false,
                budget_capped: self.capped,
                weak_certification: false,
            },
            heavy_index: heavy.index,
            residual_l1,
            block_moments: values.iter().map(|v| vec![*v]).collect(),
            values,
            block_l1,
        }))
    }
}

fn require_strict(events: &[UpdateEvent], n: u64) -> Result<()> {
    if validate_strict_turnstile(events, n) {
        Ok(())
    } else {
        Err(invalid("model", "the bucketing algorithm needs a strict-turnstile stream"))
    }
}

fn run_bucketed(
    events: &[UpdateEvent],
    n: u64,
    alpha: f64,
    epsilon: f64,
    seed: u64,
    config: &EstimatorConfig,
) -> Result<ResidualOutcome> {
    require_strict(events, n)?;
    let mut s = ResidualBucketSketch::new(alpha, epsilon, n, seed, config, false)?;
    for &e in events {
        s.update(e);
    }
    s.estimate()
}

/// `F_1^res`: total minus the heavy bin's count.
pub fn residual_l1(
    events: &[UpdateEvent],
    n: u64,
    epsilon: f64,
    seed: u64,
    config: &EstimatorConfig,
) -> Result<ResidualOutcome> {
    run_bucketed(events, n, 1.0, epsilon, seed, config)
}

/// Per-bin moment sketches merged outside the heavy bin, `alpha` in
/// `(0, 1/3)` or `(1, 2]`.
pub fn residual_bucketed(
    events: &[UpdateEvent],
    n: u64,
    alpha: f64,
    epsilon: f64,
    seed: u64,
    config: &EstimatorConfig,
) -> Result<ResidualOutcome> {
    if ResidualCase::for_alpha(alpha)? != ResidualCase::Bucketed {
        return Err(invalid("alpha", format!("{alpha} is outside (0, 1/3) and (1, 2]")));
    }
    run_bucketed(events, n, alpha, epsilon, seed, config)
}

/// Whole-stream sketch with the heavy element deleted, `alpha` in `[1/3, 1)`.
pub fn residual_deletion_trick(
    events: &[UpdateEvent],
    n: u64,
    alpha: f64,
    epsilon: f64,
    seed: u64,
    config: &EstimatorConfig,
) -> Result<ResidualOutcome> {
    if ResidualCase::for_alpha(alpha)? != ResidualCase::DeletionTrick {
        return Err(invalid("alpha", format!("{alpha} is outside [1/3, 1)")));
    }
    run_bucketed(events, n, alpha, epsilon, seed, config)
}

/// Bipartition estimate; valid for general-update streams. The L1 bound is
/// the net vector's `||A||_1`.
pub fn residual_bipartition(
    events: &[UpdateEvent],
    n: u64,
    alpha: f64,
    epsilon: f64,
    seed: u64,
    config: &EstimatorConfig,
) -> Result<ResidualOutcome> {
    let bound = crate::stream::net_l1(events) as f64;
    let mut s = BipartitionResidualSketch::new(alpha, epsilon, n, bound.max(1.0), seed, config, false)?;
    for &e in events {
        s.update(e);
    }
    s.estimate()
}

/// Weight classes `I_z = { i : (1 + eps/c1)^z <= |A_i| < (1 + eps/c1)^(z+1) }`
/// over the nonzero coordinates; values are zero-based positions.
pub fn weight_classes(counts: &[i64], epsilon: f64, c1: f64) -> BTreeMap<u32, Vec<usize>> {
    let ln_ratio = (1.0 + epsilon / c1).ln();
    let mut classes: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &a) in counts.iter().enumerate() {
        if a != 0 {
            let z = ((a.unsigned_abs() as f64).ln() / ln_ratio + 1e-12).floor() as u32;
            classes.entry(z).or_default().push(i);
        }
    }
    classes
}

/// `ceil(log_{1 + eps/c1} m)`, the number of classes coordinates up to `m`
/// can occupy.
pub fn weight_class_count(m: u64, epsilon: f64, c1: f64) -> usize {
    ((m as f64).ln() / (1.0 + epsilon / c1).ln()).ceil() as usize
}

/// `sum_z |I_z| ((1 + eps/c1)^z)^alpha`, each coordinate replaced by its
/// class floor.
pub fn class_floor_moment(classes: &BTreeMap<u32, Vec<usize>>, alpha: f64, epsilon: f64, c1: f64) -> f64 {
    let ln_ratio = (1.0 + epsilon / c1).ln();
    classes
        .iter()
        .map(|(z, members)| members.len() as f64 * (alpha * *z as f64 * ln_ratio).exp())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn events(counts: &[i64]) -> Vec<UpdateEvent> {
        counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0)
            .map(|(i, &c)| UpdateEvent::new(i as u64 + 1, c))
            .collect()
    }

    #[test]
    fn case_dispatch() {
        assert_eq!(ResidualCase::for_alpha(1.0).unwrap(), ResidualCase::L1);
        assert_eq!(ResidualCase::for_alpha(0.2).unwrap(), ResidualCase::Bucketed);
        assert_eq!(ResidualCase::for_alpha(1.0 / 3.0).unwrap(), ResidualCase::DeletionTrick);
        assert_eq!(ResidualCase::for_alpha(0.999).unwrap(), ResidualCase::DeletionTrick);
        assert_eq!(ResidualCase::for_alpha(1.5).unwrap(), ResidualCase::Bucketed);
        assert_eq!(ResidualCase::for_alpha(2.0).unwrap(), ResidualCase::Bucketed);
        assert!(ResidualCase::for_alpha(0.0).is_err());
        assert!(ResidualCase::for_alpha(2.1).is_err());
    }

    #[test]
    fn deletion_arithmetic() {
        assert_eq!(deletion_count(1000, 17.0), 983);
    }

    #[test]
    fn point_mass_residuals_vanish() {
        let c = EstimatorConfig::default();
        let ev = events(&[100]);
        assert_eq!(residual_l1(&ev, 1, 0.1, 1, &c).unwrap().value(), Some(0.0));
        assert_eq!(residual_bucketed(&ev, 1, 2.0, 0.1, 1, &c).unwrap().value(), Some(0.0));
        let v = residual_deletion_trick(&events(&[1000]), 1, 0.5, 0.1, 1, &c).unwrap().value().unwrap();
        assert_eq!(v, 0.0);
        let v = residual_bipartition(&ev, 1, 1.0, 0.1, 1, &c).unwrap().value().unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn uniform_has_no_heavy_hitter() {
        let c = EstimatorConfig::default();
        let ev = events(&[1; 100]);
        assert_eq!(residual_l1(&ev, 100, 0.1, 3, &c).unwrap(), ResidualOutcome::NoHeavyHitter);
    }

    #[test]
    fn strictness_and_ranges_are_checked() {
        let c = EstimatorConfig::default();
        let ev = vec![UpdateEvent::new(1, 5), UpdateEvent::new(2, -1)];
        assert!(residual_l1(&ev, 2, 0.1, 1, &c).is_err());
        assert!(residual_bucketed(&events(&[5]), 1, 0.5, 0.1, 1, &c).is_err());
        assert!(residual_deletion_trick(&events(&[5]), 1, 1.5, 0.1, 1, &c).is_err());
    }

    #[test]
    fn trial_count_formula() {
        let c = BipartitionConstants::default();
        let r = bipartition_trials(0.1, 107.0, &c).unwrap();
        let expect = 64.0 * ((107f64.ln().ln() + 40f64.ln()) / 0.01).ceil();
        assert_eq!(r, expect as usize);
    }

    #[test]
    fn classes_partition_support() {
        let counts = [100, 3, 4, 0, 4, 1];
        let cl = weight_classes(&counts, 0.1, 4.0);
        let total: usize = cl.values().map(Vec::len).sum();
        assert_eq!(total, 5);
        assert!(cl.values().any(|v| v == &vec![2, 4]));
    }
}
