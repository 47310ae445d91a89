//! Entropy estimators over turnstile streams.
//!
//! Each estimator makes one pass over the updates into its sketches and then
//! reads them. Sketches are split into blocks; node values are formed and
//! combined per block, and the reported value is the median over blocks.
//! Requests with `delta < 1/4` run independent instances and report their
//! median.

mod constants;
mod power;
mod shannon;

pub use constants::*;
pub use power::*;
pub use shannon::*;

use crate::config::{EstimatorConfig, Normalization};
use crate::error::{invalid, Error, Result};
use crate::hashing::derive_seed;
use crate::heavy::{HeavyHitterSketch, DETECT_THRESHOLD};
use crate::residual::{BipartitionResidualSketch, ResidualBucketSketch, ResidualOutcome};
use crate::stable::{median, StableBank};
use crate::stream::{
    validate_strict_turnstile, EstimateReport, Guarantee, Quantity, StreamModel, UpdateEvent,
};

/// What to estimate, how accurately, and under which stream promise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyRequest {
    pub quantity: Quantity,
    pub guarantee: Guarantee,
    pub model: StreamModel,
    pub seed: u64,
}

impl EntropyRequest {
    pub fn new(quantity: Quantity, guarantee: Guarantee, model: StreamModel, seed: u64) -> Result<Self> {
        let r = Self {
            quantity,
            guarantee,
            model,
            seed,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.guarantee.epsilon();
        if matches!(self.guarantee, Guarantee::Exact) {
            return Err(invalid("guarantee", "sketch estimators are additive or multiplicative"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid("epsilon", format!("{eps} is not inside (0, 1)")));
        }
        match self.quantity {
            Quantity::Shannon => Ok(()),
            Quantity::Renyi(a) | Quantity::Tsallis(a) => check_order(a),
            Quantity::Moment(a) | Quantity::ResidualMoment(a) => {
                if !(a > 0.0 && a <= 2.0) {
                    return Err(invalid("alpha", format!("{a} is not inside (0, 2]")));
                }
                if matches!(self.guarantee, Guarantee::Additive(_)) {
                    return Err(invalid("guarantee", "moments are estimated multiplicatively"));
                }
                Ok(())
            }
        }
    }
}

/// Runs the estimator a request names.
///
/// Residual moments without a heavy element give [`Error::NoHeavyHitter`].
pub fn estimate(
    events: &[UpdateEvent],
    n: u64,
    request: &EntropyRequest,
    config: &EstimatorConfig,
) -> Result<EstimateReport> {
    request.validate()?;
    let (eps, model, seed) = (request.guarantee.epsilon(), request.model, request.seed);
    let additive = matches!(request.guarantee, Guarantee::Additive(_));
    match request.quantity {
        Quantity::Shannon if additive => match config.shannon_additive {
            crate::config::ShannonMethod::OnePoint => shannon_onepoint_additive(events, n, eps, model, seed, config),
            crate::config::ShannonMethod::MultiPoint => {
                shannon_multipoint_additive(events, n, eps, model, seed, config)
            }
        },
        Quantity::Shannon => shannon_multiplicative(events, n, eps, model, seed, config),
        Quantity::Renyi(a) if additive => renyi_additive(events, n, a, eps, model, seed, config),
        Quantity::Renyi(a) => renyi_multiplicative(events, n, a, eps, model, seed, config),
        Quantity::Tsallis(a) if additive => tsallis_additive(events, n, a, eps, model, seed, config),
        Quantity::Tsallis(a) => tsallis_multiplicative(events, n, a, eps, model, seed, config),
        Quantity::Moment(a) => moment_multiplicative(events, n, a, eps, model, seed, config),
        Quantity::ResidualMoment(a) => {
            let outcome = match model {
                StreamModel::StrictTurnstile => match crate::residual::ResidualCase::for_alpha(a)? {
                    crate::residual::ResidualCase::L1 => crate::residual::residual_l1(events, n, eps, seed, config)?,
                    crate::residual::ResidualCase::Bucketed => {
                        crate::residual::residual_bucketed(events, n, a, eps, seed, config)?
                    }
                    crate::residual::ResidualCase::DeletionTrick => {
                        crate::residual::residual_deletion_trick(events, n, a, eps, seed, config)?
                    }
                },
                StreamModel::GeneralUpdate => crate::residual::residual_bipartition(events, n, a, eps, seed, config)?,
            };
            match outcome {
                ResidualOutcome::Estimate(e) => Ok(e.report),
                ResidualOutcome::NoHeavyHitter => Err(Error::NoHeavyHitter),
            }
        }
    }
}

/// `F~_alpha / F~_1^alpha`, the normalized moment when `||A||_1` itself is
/// only estimated.
pub fn normalize_general_update(f_alpha: f64, f1: f64, alpha: f64) -> Result<f64> {
    if !(f1 > 0.0) {
        return Err(Error::Undefined("normalization by a nonpositive L1 estimate"));
    }
    Ok(f_alpha / f1.powf(alpha))
}

/// `F_alpha` to relative precision `epsilon` from one stable sketch.
pub fn moment_multiplicative(
    events: &[UpdateEvent],
    n: u64,
    alpha: f64,
    epsilon: f64,
    model: StreamModel,
    seed: u64,
    config: &EstimatorConfig,
) -> Result<EstimateReport> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(invalid("alpha", format!("{alpha} is not inside (0, 2]")));
    }
    let input = StreamInput::new(events, n, model)?;
    amplified(config, seed, |seed| {
        let sizing = config.sizing(epsilon)?;
        let mut bank = StableBank::new(&[alpha], sizing.layout, seed)?;
        input.feed(|e| bank.update(e));
        let mut blocks = bank.sketch(0).block_means();
        Ok(EstimateReport {
            value: median(&mut blocks),
            quantity: Quantity::Moment(alpha),
            guarantee: Guarantee::Multiplicative(epsilon),
            success_prob: 0.75,
            seed,
            space_words_used: bank.space_words(),
            degenerate: false,
            budget_capped: sizing.capped,
            weak_certification: false,
        })
    })
}

fn check_order(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) || alpha == 1.0 {
        return Err(invalid("alpha", format!("{alpha} is outside (0, 1) and (1, 2]")));
    }
    Ok(())
}

/// A validated stream and what is known about it without sketching.
pub(crate) struct StreamInput<'a> {
    events: &'a [UpdateEvent],
    n: u64,
    model: StreamModel,
    /// `||A||_1` of the net vector. Standing in for the bound `m` fixed before
    /// the stream, it keeps node placement a function of the final vector.
    bound: u64,
}

impl<'a> StreamInput<'a> {
    pub(crate) fn new(events: &'a [UpdateEvent], n: u64, model: StreamModel) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "the universe is empty"));
        }
        match model {
            StreamModel::StrictTurnstile => {
                if !validate_strict_turnstile(events, n) {
                    return Err(invalid(
                        "model",
                        "stream leaves a coordinate negative or outside [1, n]",
                    ));
                }
                if events.iter().map(|e| e.delta).sum::<i64>() == 0 {
                    return Err(Error::Undefined("entropy of an empty stream"));
                }
            }
            StreamModel::GeneralUpdate => {
                if let Some(e) = events.iter().find(|e| e.index < 1 || e.index > n) {
                    return Err(invalid("index", format!("{} is outside [1, {n}]", e.index)));
                }
            }
        }
        let bound = crate::stream::net_l1(events);
        Ok(Self {
            events,
            n,
            model,
            bound,
        })
    }

    pub(crate) fn feed(&self, mut f: impl FnMut(UpdateEvent)) {
        for &e in self.events {
            f(e);
        }
    }

    /// `m` for node placement: the net `||A||_1`, at least `n` and 4.
    pub(crate) fn m(&self) -> u64 {
        self.bound.max(self.n).max(4)
    }

    pub(crate) fn strict(&self) -> bool {
        self.model == StreamModel::StrictTurnstile
    }
}

/// Median over instances when `config.delta < 1/4`; one instance otherwise.
pub(crate) fn amplified(
    config: &EstimatorConfig,
    seed: u64,
    mut run: impl FnMut(u64) -> Result<EstimateReport>,
) -> Result<EstimateReport> {
    config.validate()?;
    let instances = config.instances();
    if instances == 1 {
        return run(seed);
    }
    let mut reports = Vec::with_capacity(instances);
    for i in 0..instances {
        reports.push(run(derive_seed(seed, 0xA000 + i as u64))?);
    }
    let mut values: Vec<f64> = reports.iter().map(|r| r.value).collect();
    let mut out = reports[0].clone();
    out.value = median(&mut values);
    out.seed = seed;
    out.success_prob = 1.0 - config.delta;
    out.space_words_used = reports.iter().map(|r| r.space_words_used).sum();
    out.degenerate = reports.iter().all(|r| r.degenerate);
    out.budget_capped = reports.iter().any(|r| r.budget_capped);
    out.weak_certification = reports.iter().any(|r| r.weak_certification);
    Ok(out)
}

/// Per-block `F~_alpha / N^alpha` for the normalizer in use.
pub(crate) fn normalized_blocks(moments: &[f64], alpha: f64, norm: &Norm) -> Vec<f64> {
    moments
        .iter()
        .enumerate()
        .map(|(b, &f)| match norm {
            Norm::Exact(l1) => f / l1.powf(alpha),
            Norm::Blocks(l1) => {
                if l1[b] > 0.0 {
                    f / l1[b].powf(alpha)
                } else {
                    1.0
                }
            }
        })
        .collect()
}

/// Divisor of moment estimates: the exact `||A||_1`, or per-block `F~_1`.
pub(crate) enum Norm {
    Exact(f64),
    Blocks(Vec<f64>),
}

/// Whole-stream sketches of several exponents, optionally with an `alpha = 1`
/// companion, plus a heavy-hitter sketch for degeneracy checks.
pub(crate) struct MomentRun {
    pub(crate) hh: HeavyHitterSketch,
    pub(crate) bank: StableBank,
    pub(crate) targets: usize,
    pub(crate) capped: bool,
    pub(crate) l1: i64,
    normalization: Normalization,
}

impl MomentRun {
    /// Sizes every sketch for relative precision `precision`; the
    /// heavy-hitter sketch for `hh_epsilon`.
    pub(crate) fn run(
        input: &StreamInput,
        targets: &[f64],
        precision: f64,
        hh_epsilon: f64,
        normalization: Normalization,
        seed: u64,
        config: &EstimatorConfig,
    ) -> Result<Self> {
        let sizing = config.sizing(precision)?;
        let (bins, bins_capped) = config.bins(hh_epsilon)?;
        let mut hh = HeavyHitterSketch::with_shape(bins, config.hh_repetitions, input.n, derive_seed(seed, 0x4848))?;
        let mut alphas = targets.to_vec();
        if normalization == Normalization::SelfNormalized {
            alphas.push(1.0);
        }
        let mut bank = StableBank::new(&alphas, sizing.layout, derive_seed(seed, 0x5354))?;
        input.feed(|e| {
            hh.update(e);
            bank.update(e);
        });
        // Errors on an all-zero vector.
        hh.heavy_bins(DETECT_THRESHOLD)?;
        Ok(Self {
            l1: hh.total(),
            hh,
            bank,
            targets: targets.len(),
            capped: sizing.capped || bins_capped,
            normalization,
        })
    }

    pub(crate) fn space_words(&self) -> u64 {
        self.hh.space_words() + self.bank.space_words()
    }

    pub(crate) fn degenerate(&self) -> bool {
        self.hh.is_degenerate()
    }

    /// Per-block `sum x_i^alpha` estimates of target `i`.
    pub(crate) fn normalized(&self, i: usize) -> Vec<f64> {
        let s = self.bank.sketch(i);
        let norm = match self.normalization {
            Normalization::ExactL1 => Norm::Exact(self.l1 as f64),
            Normalization::SelfNormalized => Norm::Blocks(self.bank.sketch(self.targets).block_means()),
        };
        normalized_blocks(&s.block_means(), s.alpha(), &norm)
    }
}

/// What the multiplicative estimators found.
pub(crate) enum Branch {
    /// A single distinct element.
    Degenerate,
    /// Per target, per block `sum x_i^alpha`.
    NoHeavy(Vec<Vec<f64>>),
    /// `r = 1 - x_max` and, per target and block, the residual shares
    /// `sum_{j != heavy} (x_j / r)^alpha`.
    Heavy { r: f64, shares: Vec<Vec<f64>> },
}

enum ResidualState {
    Strict(ResidualBucketSketch),
    General(BipartitionResidualSketch, StableBank),
}

/// Heavy-element detection, residual moments and whole-stream moments for
/// several exponents of one residual case.
pub(crate) struct MultiplicativeRun {
    state: ResidualState,
    targets: Vec<f64>,
    /// For the whole-stream moments of the no-heavy branch.
    normalization: Normalization,
    /// For the residual moments of the heavy branch.
    heavy_normalization: Normalization,
    l1: i64,
    capped: bool,
}

impl MultiplicativeRun {
    /// `no_heavy_precision` sizes the whole-stream sketches and
    /// `residual_precision` the residual ones; strict streams share rows
    /// between the two and use the finer size. `normalization` is
    /// `(no-heavy branch, heavy branch)`.
    pub(crate) fn run(
        input: &StreamInput,
        targets: &[f64],
        no_heavy_precision: f64,
        residual_precision: f64,
        normalization: (Normalization, Normalization),
        seed: u64,
        config: &EstimatorConfig,
    ) -> Result<Self> {
        let (normalization, heavy_normalization) = normalization;
        let companion = normalization == Normalization::SelfNormalized
            || heavy_normalization == Normalization::SelfNormalized;
        let (state, l1, capped) = if input.strict() {
            let mut s = ResidualBucketSketch::with_exponents(
                targets,
                no_heavy_precision.min(residual_precision),
                input.n,
                seed,
                config,
                companion,
            )?;
            input.feed(|e| s.update(e));
            let l1 = s.heavy_sketch().total();
            let capped = s.capped();
            (ResidualState::Strict(s), l1, capped)
        } else {
            let mut s = BipartitionResidualSketch::with_exponents(
                targets,
                residual_precision,
                input.n,
                input.bound.max(1) as f64,
                seed,
                config,
                true,
            )?;
            let sizing = config.sizing(no_heavy_precision)?;
            let mut alphas = targets.to_vec();
            alphas.push(1.0);
            let mut whole = StableBank::new(&alphas, sizing.layout, derive_seed(seed, 0x5748))?;
            input.feed(|e| {
                s.update(e);
                whole.update(e);
            });
            let capped = s.capped() || sizing.capped;
            (ResidualState::General(s, whole), 0, capped)
        };
        let run = Self {
            state,
            targets: targets.to_vec(),
            normalization,
            heavy_normalization,
            l1,
            capped,
        };
        run.hh().heavy_bins(DETECT_THRESHOLD)?;
        Ok(run)
    }

    pub(crate) fn hh(&self) -> &HeavyHitterSketch {
        match &self.state {
            ResidualState::Strict(s) => s.heavy_sketch(),
            ResidualState::General(s, _) => s.heavy_sketch(),
        }
    }

    pub(crate) fn capped(&self) -> bool {
        self.capped
    }

    pub(crate) fn space_words(&self) -> u64 {
        match &self.state {
            ResidualState::Strict(s) => s.space_words(),
            ResidualState::General(s, whole) => s.space_words() + whole.space_words(),
        }
    }

    fn whole(&self) -> Result<StableBank> {
        match &self.state {
            ResidualState::Strict(s) => Ok(s.whole_stream()?.expect("entropy exponents are never 1")),
            ResidualState::General(_, whole) => Ok(whole.clone()),
        }
    }

    /// Whole-stream normalizer: exact `||A||_1` or per-block `F~_1`.
    fn whole_norm(&self, whole: &StableBank) -> Norm {
        match self.normalization {
            Normalization::ExactL1 => Norm::Exact(self.l1 as f64),
            Normalization::SelfNormalized => Norm::Blocks(whole.sketch(self.targets.len()).block_means()),
        }
    }

    /// The no-heavy branch, whatever detection says.
    pub(crate) fn no_heavy(&self) -> Result<Branch> {
        let whole = self.whole()?;
        let norm = self.whole_norm(&whole);
        Ok(Branch::NoHeavy(
            (0..self.targets.len())
                .map(|i| normalized_blocks(&whole.sketch(i).block_means(), self.targets[i], &norm))
                .collect(),
        ))
    }

    /// `None` when detection fired but the residual sketch could not certify
    /// the heavy element.
    pub(crate) fn branch(&self) -> Result<Option<Branch>> {
        if self.hh().is_degenerate() {
            return Ok(Some(Branch::Degenerate));
        }
        let detected = self.hh().detect(DETECT_THRESHOLD)?;
        let outcome = match &self.state {
            ResidualState::Strict(s) => s.estimate()?,
            ResidualState::General(s, _) => s.estimate()?,
        };
        let est = match outcome {
            ResidualOutcome::NoHeavyHitter if detected => return Ok(None),
            ResidualOutcome::NoHeavyHitter => return self.no_heavy().map(Some),
            ResidualOutcome::Estimate(e) => e,
        };
        let l1 = match &self.state {
            ResidualState::Strict(_) => self.l1 as f64,
            ResidualState::General(..) => {
                let whole = self.whole()?;
                let mut f1 = whole.sketch(self.targets.len()).block_means();
                median(&mut f1)
            }
        };
        let r = (est.residual_l1 / l1).clamp(0.0, 1.0);
        if r == 0.0 || est.block_moments.is_empty() {
            return Ok(Some(Branch::Heavy {
                r: 0.0,
                shares: vec![vec![1.0]; self.targets.len()],
            }));
        }
        let norm = match (self.heavy_normalization, est.block_l1.is_empty()) {
            (Normalization::SelfNormalized, false) => Norm::Blocks(est.block_l1.clone()),
            _ => Norm::Exact(est.residual_l1),
        };
        let shares = self
            .targets
            .iter()
            .zip(&est.block_moments)
            .map(|(&a, blocks)| normalized_blocks(blocks, a, &norm))
            .collect();
        Ok(Some(Branch::Heavy { r, shares }))
    }
}

/// Runs `attempt` and, if the heavy element could not be certified, once more
/// with a fresh seed. A second failure falls back to the no-heavy branch and
/// sets the weak-certification flag.
pub(crate) fn certified_branch(
    seed: u64,
    mut attempt: impl FnMut(u64) -> Result<MultiplicativeRun>,
) -> Result<(MultiplicativeRun, Branch, bool)> {
    let first = attempt(seed)?;
    if let Some(b) = first.branch()? {
        return Ok((first, b, false));
    }
    let second = attempt(derive_seed(seed, 0x5245))?;
    match second.branch()? {
        Some(b) => Ok((second, b, false)),
        None => {
            let b = second.no_heavy()?;
            Ok((second, b, true))
        }
    }
}

/// `(1 - (1 - r)^alpha - r^alpha) / (alpha - 1)`, the Tsallis entropy of
/// `(1 - r, r)`, stable as `alpha -> 1`.
pub(crate) fn binary_tsallis(alpha: f64, r: f64) -> f64 {
    let y = alpha - 1.0;
    if r <= 0.0 || r >= 1.0 {
        return 0.0;
    }
    let a = (1.0 - r) * (y * (1.0 - r).ln()).exp_m1();
    let b = r * (y * r.ln()).exp_m1();
    -(a + b) / y
}

/// Tsallis value of target `alpha` in one block of a branch.
pub(crate) fn branch_tsallis(branch: &Branch, i: usize, alpha: f64, block: usize) -> f64 {
    let y = alpha - 1.0;
    match branch {
        Branch::Degenerate => 0.0,
        Branch::NoHeavy(s) => (1.0 - s[i][block]) / y,
        Branch::Heavy { r, shares } => {
            let s = shares[i][block.min(shares[i].len() - 1)];
            binary_tsallis(alpha, *r) + r.powf(alpha) * (1.0 - s) / y
        }
    }
}

/// Blocks a branch carries.
pub(crate) fn branch_blocks(branch: &Branch) -> usize {
    match branch {
        Branch::Degenerate => 1,
        Branch::NoHeavy(s) | Branch::Heavy { shares: s, .. } => s[0].len(),
    }
}

pub(crate) fn degenerate_report(quantity: Quantity, guarantee: Guarantee, seed: u64, space: u64) -> EstimateReport {
    EstimateReport {
        value: 0.0,
        quantity,
        guarantee,
        success_prob: 1.0,
        seed,
        space_words_used: space,
        degenerate: true,
        budget_capped: false,
        weak_certification: false,
    }
}
