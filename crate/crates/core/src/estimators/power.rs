//! Renyi and Tsallis entropies of order `alpha` in `(0, 1)` or `(1, 2]`.

use crate::config::{EstimatorConfig, Normalization};
use crate::error::Result;
use crate::stable::median;
use crate::stream::{EstimateReport, Guarantee, Quantity, StreamModel, UpdateEvent};

use super::{
    amplified, branch_blocks, branch_tsallis, certified_branch, check_order, degenerate_report, Branch,
    MomentRun, MultiplicativeRun, StreamInput, APPROXIMATE_DIFFERENCE_D, LARGE_DIFFERENCE_C, LOG_APPROX_RATIO,
    MIN_ENTROPY_FLOOR,
};

/// Single-exponent additive estimate: `value(sum x_i^alpha)` per block, then
/// the median.
#[allow(clippy::too_many_arguments)]
fn additive_single(
    input: &StreamInput,
    alpha: f64,
    epsilon: f64,
    precision: f64,
    quantity: Quantity,
    seed: u64,
    config: &EstimatorConfig,
    value: impl Fn(f64) -> f64,
) -> Result<EstimateReport> {
    let norm = config.normalization_for(input.model, Normalization::ExactL1)?;
    amplified(config, seed, |seed| {
        let run = MomentRun::run(input, &[alpha], precision, epsilon, norm, seed, config)?;
        let guarantee = Guarantee::Additive(epsilon);
        if run.degenerate() {
            return Ok(degenerate_report(quantity, guarantee, seed, run.space_words()));
        }
        let mut blocks: Vec<f64> = run.normalized(0).into_iter().map(&value).collect();
        Ok(EstimateReport {
            value: median(&mut blocks),
            quantity,
            guarantee,
            success_prob: 0.75,
            seed,
            space_words_used: run.space_words(),
            degenerate: false,
            budget_capped: run.capped,
            weak_certification: false,
        })
    })
}

/// `ln(F~_alpha / ||A||_1^alpha) / (1 - alpha)` from a moment estimate of
/// relative precision `eps |1 - alpha|`.
pub fn renyi_additive(
    events: &[UpdateEvent],
    n: u64,
    alpha: f64,
    epsilon: f64,
    model: StreamModel,
    seed: u64,
    config: &EstimatorConfig,
) -> Result<EstimateReport> {
    check_order(alpha)?;
    let input = StreamInput::new(events, n, model)?;
    let precision = epsilon * (1.0 - alpha).abs();
    additive_single(&input, alpha, epsilon, precision, Quantity::Renyi(alpha), seed, config, |s| {
        s.ln() / (1.0 - alpha)
    })
}

/// `(1 - F~_alpha / ||A||_1^alpha) / (alpha - 1)`. The moment precision is
/// `(1 - alpha) eps n^(alpha - 1)` below 1 and `(alpha - 1) eps` above.
pub fn tsallis_additive(
    events: &[UpdateEvent],
    n: u64,
    alpha: f64,
    epsilon: f64,
    model: StreamModel,
    seed: u64,
    config: &EstimatorConfig,
) -> Result<EstimateReport> {
    check_order(alpha)?;
    let input = StreamInput::new(events, n, model)?;
    let precision = if alpha < 1.0 {
        (1.0 - alpha) * epsilon * (n as f64).powf(alpha - 1.0)
    } else {
        (alpha - 1.0) * epsilon
    };
    additive_single(&input, alpha, epsilon, precision, Quantity::Tsallis(alpha), seed, config, |s| {
        (1.0 - s) / (alpha - 1.0)
    })
}

/// Runs the detection-branched estimate shared by the multiplicative Renyi
/// and Tsallis estimators and maps each block through `value`.
#[allow(clippy::too_many_arguments)]
fn multiplicative_single(
    input: &StreamInput,
    alpha: f64,
    epsilon: f64,
    no_heavy_precision: f64,
    residual_precision: f64,
    quantity: Quantity,
    seed: u64,
    config: &EstimatorConfig,
    value: impl Fn(&Branch, usize) -> f64,
) -> Result<EstimateReport> {
    let norms = (
        config.normalization_for(input.model, Normalization::ExactL1)?,
        config.normalization_for(input.model, Normalization::SelfNormalized)?,
    );
    amplified(config, seed, |seed| {
        let (run, branch, weak) = certified_branch(seed, |s| {
            MultiplicativeRun::run(input, &[alpha], no_heavy_precision, residual_precision, norms, s, config)
        })?;
        let guarantee = Guarantee::Multiplicative(epsilon);
        if matches!(branch, Branch::Degenerate) {
            return Ok(degenerate_report(quantity, guarantee, seed, run.space_words()));
        }
        let mut blocks: Vec<f64> = (0..branch_blocks(&branch)).map(|b| value(&branch, b)).collect();
        Ok(EstimateReport {
            value: median(&mut blocks),
            quantity,
            guarantee,
            success_prob: 0.75,
            seed,
            space_words_used: run.space_words(),
            degenerate: false,
            budget_capped: run.capped(),
            weak_certification: weak,
        })
    })
}

/// `(1 +- eps) T_alpha`. Without a heavy element `|1 - sum x^alpha|` is at
/// least `C |alpha - 1|`, so a moment of precision `C |alpha - 1| eps / 2`
/// suffices. With one, `1 - x_max` and the residual moment are combined.
pub fn tsallis_multiplicative(
    events: &[UpdateEvent],
    n: u64,
    alpha: f64,
    epsilon: f64,
    model: StreamModel,
    seed: u64,
    config: &EstimatorConfig,
) -> Result<EstimateReport> {
    check_order(alpha)?;
    let input = StreamInput::new(events, n, model)?;
    let gap = (alpha - 1.0).abs();
    let no_heavy = 0.5 * gap * LARGE_DIFFERENCE_C * epsilon;
    let residual = LARGE_DIFFERENCE_C * gap * epsilon / APPROXIMATE_DIFFERENCE_D;
    multiplicative_single(&input, alpha, epsilon, no_heavy, residual, Quantity::Tsallis(alpha), seed, config, |b, blk| {
        branch_tsallis(b, 0, alpha, blk)
    })
}

/// `(1 +- eps) H_alpha`. Without a heavy element `H_alpha >= ln(6/5)`, so the
/// additive estimate at `ln(6/5) eps` suffices. With one, `1 - sum x^alpha`
/// is estimated multiplicatively and carried through the logarithm.
pub fn renyi_multiplicative(
    events: &[UpdateEvent],
    n: u64,
    alpha: f64,
    epsilon: f64,
    model: StreamModel,
    seed: u64,
    config: &EstimatorConfig,
) -> Result<EstimateReport> {
    check_order(alpha)?;
    let input = StreamInput::new(events, n, model)?;
    let gap = (alpha - 1.0).abs();
    let no_heavy = MIN_ENTROPY_FLOOR * epsilon * gap;
    let residual = LARGE_DIFFERENCE_C * gap * epsilon / (APPROXIMATE_DIFFERENCE_D * LOG_APPROX_RATIO);
    multiplicative_single(&input, alpha, epsilon, no_heavy, residual, Quantity::Renyi(alpha), seed, config, |b, blk| {
        match b {
            Branch::NoHeavy(s) => s[0][blk].ln() / (1.0 - alpha),
            // 1 - sum x^alpha = (alpha - 1) T_alpha.
            _ => {
                let gap_value = (alpha - 1.0) * branch_tsallis(b, 0, alpha, blk);
                (-gap_value).ln_1p() / (1.0 - alpha)
            }
        }
    })
}
