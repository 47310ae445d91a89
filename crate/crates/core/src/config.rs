//! Tunables shared by the residual and entropy estimators.

use crate::error::{invalid, Result};
use crate::stream::StreamModel;
use crate::stable::{blocks_for, groups_for, SketchLayout, DEFAULT_C_VAR};

/// Symbolic constants of the bipartition trial count
/// `r = c2 * ceil(eps^-2 (ln ln ||A||_1 + ln(c3 / eps)))`; `c1` sets the
/// weight-class ratio `1 + eps / c1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartitionConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for BipartitionConstants {
    fn default() -> Self {
        Self {
            c1: 4.0,
            c2: 64.0,
            c3: 4.0,
        }
    }
}

/// How a moment estimate is turned into `sum x_i^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Divide by `||A||_1^alpha`, known exactly in the strict turnstile model.
    ExactL1,
    /// Divide by `F~_1^alpha` from an `alpha = 1` sketch sharing the seed and
    /// rows. The errors of the two estimates are then strongly correlated and
    /// largely cancel near `alpha = 1`.
    SelfNormalized,
}

/// Which additive Shannon algorithm a request runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShannonMethod {
    /// One Renyi estimate at `beta* - 1`.
    OnePoint,
    /// Chebyshev interpolation of Tsallis values.
    #[default]
    MultiPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Groups per block are `ceil(c_var / eps^2)` for a target precision.
    pub c_var: f64,
    /// Cap on the groups of any one stable sketch, summed over its blocks.
    /// Precision formulas for entropy nodes ask for far more rows than any
    /// machine holds, so they are clipped here and the report says so.
    pub max_groups: usize,
    /// Failure probability the result should meet. Values below `1/4` run
    /// `ceil(8 ln(1/delta))` independent instances and take the median.
    pub delta: f64,
    /// Failure probability each internal moment sketch is sized for.
    pub sketch_delta: f64,
    pub hh_repetitions: usize,
    /// Cap on heavy-hitter bins per repetition.
    pub max_bins: usize,
    pub bipartition: BipartitionConstants,
    /// `None` picks per estimator: self-normalized for interpolation nodes,
    /// general-update streams and the heavy-element paths, exact otherwise.
    pub normalization: Option<Normalization>,
    pub shannon_additive: ShannonMethod,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            c_var: DEFAULT_C_VAR,
            max_groups: 4096,
            delta: 0.25,
            sketch_delta: 0.25,
            hh_repetitions: crate::heavy::DEFAULT_REPETITIONS,
            max_bins: 4096,
            bipartition: BipartitionConstants::default(),
            normalization: None,
            shannon_additive: ShannonMethod::default(),
        }
    }
}

/// A layout and whether it was clipped by the group budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sizing {
    pub layout: SketchLayout,
    pub capped: bool,
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_var > 0.0) {
            return Err(invalid("c_var", "must be positive"));
        }
        if self.max_groups == 0 {
            return Err(invalid("max_groups", "must be positive"));
        }
        for (name, d) in [("delta", self.delta), ("sketch_delta", self.sketch_delta)] {
            if !(d > 0.0 && d < 1.0) {
                return Err(invalid(name, format!("{d} is not inside (0, 1)")));
            }
        }
        if self.hh_repetitions == 0 {
            return Err(invalid("hh_repetitions", "must be positive"));
        }
        if self.max_bins < 2 {
            return Err(invalid("max_bins", "needs at least two bins"));
        }
        Ok(())
    }

    /// Layout for a sketch that must reach relative precision `epsilon`,
    /// which may be far below any practical value.
    pub fn sizing(&self, epsilon: f64) -> Result<Sizing> {
        let blocks = blocks_for(self.sketch_delta)?;
        let wanted = if epsilon >= 1.0 {
            1
        } else if epsilon > 0.0 {
            // Past about 1e-9 the count no longer fits a usize; it is capped anyway.
            let raw = self.c_var / (epsilon * epsilon);
            if raw > 1e15 {
                usize::MAX
            } else {
                groups_for(epsilon, self.c_var)?
            }
        } else {
            return Err(invalid("epsilon", format!("{epsilon} must be positive")));
        };
        let budget = (self.max_groups / blocks).max(1);
        let capped = wanted > budget;
        Ok(Sizing {
            layout: SketchLayout::new(wanted.min(budget), blocks)?,
            capped,
        })
    }

    /// Heavy-hitter bins for residual precision `epsilon`, clipped to
    /// `max_bins`, and whether the clip applied.
    pub fn bins(&self, epsilon: f64) -> Result<(usize, bool)> {
        if !(epsilon > 0.0) {
            return Err(invalid("epsilon", format!("{epsilon} must be positive")));
        }
        let wanted = if epsilon >= 1.0 {
            20
        } else {
            crate::heavy::bins_for(epsilon.max(1e-12))?
        };
        Ok((wanted.min(self.max_bins), wanted > self.max_bins))
    }

    /// `requested`, or `default` when none was set. Without exact counts
    /// only self-normalization is available.
    pub fn normalization_for(&self, model: StreamModel, default: Normalization) -> Result<Normalization> {
        match (model, self.normalization) {
            (StreamModel::GeneralUpdate, Some(Normalization::ExactL1)) => Err(invalid(
                "normalization",
                "the general update model has no exact L1 norm",
            )),
            (StreamModel::GeneralUpdate, _) => Ok(Normalization::SelfNormalized),
            (_, Some(n)) => Ok(n),
            (_, None) => Ok(default),
        }
    }

    /// Independent instances whose median meets `delta`.
    pub fn instances(&self) -> usize {
        if self.delta >= 0.25 {
            1
        } else {
            blocks_for(self.delta).expect("validated delta")
        }
    }
}
