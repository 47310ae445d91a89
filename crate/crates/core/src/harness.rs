//! Synthetic streams and seeded Monte-Carlo trials against the exact oracle.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::EstimatorConfig;
use crate::error::{invalid, Error, Result};
use crate::estimators::{estimate, EntropyRequest};
use crate::hashing::derive_seed;
use crate::oracle::FrequencyVector;
use crate::stream::{Guarantee, Quantity, StreamModel, UpdateEvent};

/// Shape of the net frequency vector a generated stream ends at.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `m` spread over `[1, n]`; the first `m mod n` items get one extra.
    Uniform(u64),
    /// All `m` on item 1.
    PointMass,
    /// Weights `i^-s` on `[1, n]`, floored to counts, rounding residue on
    /// item 1.
    Zipf { s: f64, n: u64 },
    /// Item 1 holds `round(w_max m)`; the rest is uniform over `[2, n]`.
    HeavyPlusUniform { w_max: f64, n: u64 },
    /// Ends at `base` (item `i + 1` holds `base[i]`) after
    /// `round(churn_fraction * sum base)` extra insert/delete pairs on random
    /// items, each delete after its insert.
    DeletionChurn { base: Vec<i64>, churn_fraction: f64 },
}

impl Family {
    /// Universe size of the generated stream.
    pub fn universe(&self) -> u64 {
        match self {
            Self::Uniform(n) | Self::Zipf { n, .. } | Self::HeavyPlusUniform { n, .. } => *n,
            Self::PointMass => 1,
            Self::DeletionChurn { base, .. } => base.len() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub family: Family,
    /// Total count `||A||_1` of the net vector; ignored by `DeletionChurn`.
    pub length: u64,
    pub model: StreamModel,
    pub seed: u64,
}

impl StreamSpec {
    pub fn new(family: Family, length: u64, model: StreamModel, seed: u64) -> Self {
        Self {
            family,
            length,
            model,
            seed,
        }
    }

    pub fn universe(&self) -> u64 {
        self.family.universe()
    }

    /// The net vector in closed form; `counts[0]` is item 1.
    pub fn net_counts(&self) -> Result<Vec<i64>> {
        let m = self.length;
        let spread = |total: u64, slots: u64| -> Vec<i64> {
            (0..slots)
                .map(|i| (total / slots + u64::from(i < total % slots)) as i64)
                .collect()
        };
        match &self.family {
            Family::Uniform(n) => {
                if *n == 0 {
                    return Err(invalid("n", "uniform family needs n >= 1"));
                }
                Ok(spread(m, *n))
            }
            Family::PointMass => Ok(vec![m as i64]),
            Family::Zipf { s, n } => {
                if *n == 0 || !(s.is_finite() && *s >= 0.0) {
                    return Err(invalid("zipf", "needs n >= 1 and s >= 0"));
                }
                let weights: Vec<f64> = (1..=*n).map(|i| (i as f64).powf(-s)).collect();
                let total: f64 = weights.iter().sum();
                let mut counts: Vec<i64> = weights.iter().map(|w| (m as f64 * w / total).floor() as i64).collect();
                let residue = m as i64 - counts.iter().sum::<i64>();
                counts[0] += residue;
                Ok(counts)
            }
            Family::HeavyPlusUniform { w_max, n } => {
                if *n < 2 || !(*w_max > 0.0 && *w_max < 1.0) {
                    return Err(invalid("heavy", "needs n >= 2 and w_max inside (0, 1)"));
                }
                let heavy = (w_max * m as f64).round() as u64;
                let mut counts = vec![heavy as i64];
                counts.extend(spread(m - heavy, n - 1));
                Ok(counts)
            }
            Family::DeletionChurn { base, churn_fraction } => {
                if base.is_empty() || base.iter().any(|c| *c < 0) || !(*churn_fraction >= 0.0) {
                    return Err(invalid("churn", "needs a nonempty nonnegative base and churn >= 0"));
                }
                Ok(base.clone())
            }
        }
    }
}

/// Unit updates ending at the net vector of `spec`, in a seeded random order.
pub fn generate(spec: &StreamSpec) -> Result<Vec<UpdateEvent>> {
    let counts = spec.net_counts()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut events: Vec<UpdateEvent> = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        events.extend(std::iter::repeat(UpdateEvent::insert(i as u64 + 1)).take(c as usize));
    }
    match &spec.family {
        Family::PointMass => {}
        Family::DeletionChurn { churn_fraction, .. } => {
            let pairs = (churn_fraction * counts.iter().sum::<i64>() as f64).round() as usize;
            let n = counts.len() as u64;
            // Each event gets a time; a delete's time is after its insert's.
            let mut timed: Vec<(f64, UpdateEvent)> = events.into_iter().map(|e| (rng.random::<f64>(), e)).collect();
            for _ in 0..pairs {
                let index = rng.random_range(1..=n);
                let t_in: f64 = rng.random();
                let t_out = t_in + (1.0 - t_in) * rng.random::<f64>();
                timed.push((t_in, UpdateEvent::insert(index)));
                timed.push((t_out, UpdateEvent::delete(index)));
            }
            // Stable sort keeps an insert ahead of a delete at an equal time.
            timed.sort_by(|a, b| a.0.total_cmp(&b.0));
            events = timed.into_iter().map(|(_, e)| e).collect();
        }
        _ => events.shuffle(&mut rng),
    }
    Ok(events)
}

/// One update per nonzero coordinate of the net vector.
pub fn compact(fv: &FrequencyVector) -> Vec<UpdateEvent> {
    fv.counts()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0)
        .map(|(i, &c)| UpdateEvent::new(i as u64 + 1, c))
        .collect()
}

/// The oracle value a request estimates.
pub fn exact_value(fv: &FrequencyVector, quantity: Quantity) -> Result<f64> {
    match quantity {
        Quantity::Shannon => fv.shannon(),
        Quantity::Renyi(a) => fv.renyi(a),
        Quantity::Tsallis(a) => fv.tsallis(a),
        Quantity::Moment(a) => fv.moment(a),
        Quantity::ResidualMoment(a) => fv.residual_moment(a),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub trials: usize,
    pub within_tolerance: usize,
    /// `within_tolerance / trials`.
    pub empirical_rate: f64,
    /// Over trials that produced an estimate.
    pub mean_abs_error: f64,
    /// Over trials that produced an estimate and have a nonzero truth.
    pub mean_rel_error: f64,
}

impl TrialSummary {
    /// Summary of `(estimate, truth)` pairs; `None` estimates count as
    /// misses.
    pub fn from_outcomes(outcomes: &[(Option<f64>, f64)], guarantee: Guarantee) -> Self {
        let trials = outcomes.len();
        let mut within = 0;
        let (mut abs_sum, mut abs_n, mut rel_sum, mut rel_n) = (0.0, 0usize, 0.0, 0usize);
        for &(est, truth) in outcomes {
            let Some(est) = est else { continue };
            if guarantee.holds(est, truth) {
                within += 1;
            }
            abs_sum += (est - truth).abs();
            abs_n += 1;
            if truth != 0.0 {
                rel_sum += ((est - truth) / truth).abs();
                rel_n += 1;
            }
        }
        let mean = |s: f64, k: usize| if k == 0 { 0.0 } else { s / k as f64 };
        Self {
            trials,
            within_tolerance: within,
            empirical_rate: if trials == 0 { 0.0 } else { within as f64 / trials as f64 },
            mean_abs_error: mean(abs_sum, abs_n),
            mean_rel_error: mean(rel_sum, rel_n),
        }
    }
}

/// Runs `trials` estimates of the stream `spec` describes with seeds derived from
/// `request.seed` and scores them against the oracle.
///
/// Every trial feeds the sketches the compacted net vector. Sketches are
/// linear and accumulate exactly, so this is bit-identical to replaying the
/// generated stream and much faster for long streams.
pub fn run_trials(
    spec: &StreamSpec,
    request: &EntropyRequest,
    trials: usize,
    config: &EstimatorConfig,
) -> Result<TrialSummary> {
    if trials == 0 {
        return Err(invalid("trials", "needs at least one trial"));
    }
    request.validate()?;
    let n = spec.universe();
    let fv = FrequencyVector::from_events(n, &generate(spec)?)?;
    let truth = exact_value(&fv, request.quantity)?;
    let events = compact(&fv);
    let mut outcomes = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut r = *request;
        r.seed = derive_seed(request.seed, t as u64);
        r.model = spec.model;
        let est = match estimate(&events, n, &r, config) {
            Ok(report) => Some(report.value),
            Err(Error::NoHeavyHitter) => None,
            Err(e) => return Err(e),
        };
        outcomes.push((est, truth));
    }
    Ok(TrialSummary::from_outcomes(&outcomes, request.guarantee))
}
