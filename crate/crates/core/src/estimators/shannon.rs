//! Shannon entropy: one Renyi value just above 1, Chebyshev interpolation of
//! Tsallis values just below 1, and the multiplicative variant.

use crate::chebyshev::{InterpolationPlan, PlanMode};
use crate::config::{EstimatorConfig, Normalization};
use crate::error::Result;
use crate::stable::median;
use crate::stream::{EstimateReport, Guarantee, Quantity, StreamModel, UpdateEvent};

use super::{
    amplified, branch_blocks, branch_tsallis, certified_branch, degenerate_report, Branch, MomentRun,
    MultiplicativeRun, OnePointConfig, StreamInput, APPROXIMATE_DIFFERENCE_D, LARGE_DIFFERENCE_C,
};

/// `H~ = -ln(F~_{1+y0} / ||A||_1^(1+y0)) / y0` with `y0 = beta* - 1`.
pub fn shannon_onepoint_additive(
    events: &[UpdateEvent],
    n: u64,
    epsilon: f64,
    model: StreamModel,
    seed: u64,
    config: &EstimatorConfig,
) -> Result<EstimateReport> {
    let input = StreamInput::new(events, n, model)?;
    let plan = OnePointConfig::new(epsilon, n.max(2), input.m())?;
    let norm = config.normalization_for(model, Normalization::SelfNormalized)?;
    amplified(config, seed, |seed| {
        let run = MomentRun::run(&input, &[plan.beta_star], plan.moment_precision, epsilon, norm, seed, config)?;
        let guarantee = Guarantee::Additive(epsilon);
        if run.degenerate() {
            return Ok(degenerate_report(Quantity::Shannon, guarantee, seed, run.space_words()));
        }
        let mut blocks: Vec<f64> = run.normalized(0).iter().map(|s| -s.ln() / plan.y0).collect();
        Ok(EstimateReport {
            value: median(&mut blocks),
            quantity: Quantity::Shannon,
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

/// One-point value from exact normalized moments `alpha -> sum x_i^alpha`.
pub fn shannon_onepoint_from_moments(plan: &OnePointConfig, moment: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    Ok(-moment(plan.beta_star)?.ln() / plan.y0)
}

/// Interpolates `T~(y_i) = (1 - F~_{1+y_i} / ||A||_1^(1+y_i)) / y_i` at the
/// plan's nodes and evaluates at zero.
pub fn shannon_multipoint_additive(
    events: &[UpdateEvent],
    n: u64,
    epsilon: f64,
    model: StreamModel,
    seed: u64,
    config: &EstimatorConfig,
) -> Result<EstimateReport> {
    let input = StreamInput::new(events, n, model)?;
    let plan = InterpolationPlan::build(epsilon, input.m(), PlanMode::Additive)?;
    let norm = config.normalization_for(model, Normalization::SelfNormalized)?;
    let alphas: Vec<f64> = plan.nodes.iter().map(|y| 1.0 + y).collect();
    amplified(config, seed, |seed| {
        let run = MomentRun::run(&input, &alphas, plan.node_precision, epsilon, norm, seed, config)?;
        let guarantee = Guarantee::Additive(epsilon);
        if run.degenerate() {
            return Ok(degenerate_report(Quantity::Shannon, guarantee, seed, run.space_words()));
        }
        let per_node: Vec<Vec<f64>> = (0..alphas.len()).map(|i| run.normalized(i)).collect();
        let blocks = per_node[0].len();
        let mut values = Vec::with_capacity(blocks);
        for b in 0..blocks {
            let t: Vec<f64> = plan
                .nodes
                .iter()
                .zip(&per_node)
                .map(|(y, s)| (1.0 - s[b]) / y)
                .collect();
            values.push(plan.interpolate(&t)?);
        }
        Ok(EstimateReport {
            value: median(&mut values),
            quantity: Quantity::Shannon,
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

/// `p(0)` from exact Tsallis values `y -> T(y)` at the plan's nodes.
pub fn shannon_multipoint_from_tsallis(plan: &InterpolationPlan, tsallis: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let values = plan.nodes.iter().map(|&y| tsallis(y)).collect::<Result<Vec<_>>>()?;
    plan.interpolate(&values)
}

/// Multiplicative Shannon entropy: the multi-point scheme with
/// `k = max(5, ceil(log2(1/eps)))` and node values from the multiplicative
/// Tsallis estimator, whose heavy-element branch covers low entropy.
pub fn shannon_multiplicative(
    events: &[UpdateEvent],
    n: u64,
    epsilon: f64,
    model: StreamModel,
    seed: u64,
    config: &EstimatorConfig,
) -> Result<EstimateReport> {
    let input = StreamInput::new(events, n, model)?;
    let plan = InterpolationPlan::build(epsilon, input.m(), PlanMode::Multiplicative)?;
    let norm = config.normalization_for(model, Normalization::SelfNormalized)?;
    let alphas: Vec<f64> = plan.nodes.iter().map(|y| 1.0 + y).collect();
    // The node nearest zero needs the finest precision.
    let y_min = plan.nodes.iter().fold(f64::INFINITY, |m, y| m.min(y.abs()));
    let no_heavy = 0.5 * y_min * LARGE_DIFFERENCE_C * plan.node_precision;
    let residual = LARGE_DIFFERENCE_C * y_min * plan.node_precision / APPROXIMATE_DIFFERENCE_D;
    amplified(config, seed, |seed| {
        let (run, branch, weak) = certified_branch(seed, |s| {
            MultiplicativeRun::run(&input, &alphas, no_heavy, residual, (norm, norm), s, config)
        })?;
        let guarantee = Guarantee::Multiplicative(epsilon);
        if matches!(branch, Branch::Degenerate) {
            return Ok(degenerate_report(Quantity::Shannon, guarantee, seed, run.space_words()));
        }
        let mut values = Vec::new();
        for b in 0..branch_blocks(&branch) {
            let t: Vec<f64> = alphas.iter().enumerate().map(|(i, &a)| branch_tsallis(&branch, i, a, b)).collect();
            values.push(plan.interpolate(&t)?);
        }
        Ok(EstimateReport {
            value: median(&mut values),
            quantity: Quantity::Shannon,
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
