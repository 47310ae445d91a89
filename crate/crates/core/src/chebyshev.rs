//! Chebyshev polynomials, their extrema, the affine map that places
//! interpolation nodes just left of zero, and Newton interpolation evaluated
//! at zero.
//!
//! The multi-point estimators sample `T(y)` at `k + 1` nodes inside
//! `[-l, -l/(2k^2 + 1)]` and extrapolate the interpolating polynomial to
//! `y = 0`. Placing the nodes at the image of the Chebyshev extrema bounds how
//! much node noise can grow at zero: the preimage of `0` is `1 + 1/k^2`, and
//! `|P_k(1 + 1/k^2)| <= e^2`.

use crate::error::{invalid, Error, Result};

/// `P_k(t)` by the three-term recurrence.
pub fn cheb_eval(k: u32, t: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => t,
        _ => {
            let (mut prev, mut cur) = (1.0, t);
            for _ in 2..=k {
                let next = 2.0 * t * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `eta_j = cos(j pi / k)` for `j = 0..=k`, descending from 1 to -1.
pub fn extrema_nodes(k: u32) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(invalid("k", "needs at least degree 1"));
    }
    Ok((0..=k)
        .map(|j| {
            // Pin the symmetric endpoints and centre exactly.
            if 2 * j == k {
                0.0
            } else {
                (j as f64 * std::f64::consts::PI / k as f64).cos()
            }
        })
        .collect())
}

/// The affine map `f(y) = (k^2 l y - l (k^2 + 1)) / (2k^2 + 1)`, sending
/// `-1 -> -l` and `1 -> -l/(2k^2 + 1)`.
pub fn node_map(k: u32, scale: f64, y: f64) -> f64 {
    let k2 = (k as f64).powi(2);
    (k2 * scale * y - scale * (k2 + 1.0)) / (2.0 * k2 + 1.0)
}

/// `f^{-1}(0) = 1 + 1/k^2`.
pub fn preimage_of_zero(k: u32) -> f64 {
    1.0 + 1.0 / (k as f64).powi(2)
}

/// Which node-count rule a plan follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanMode {
    /// `k = ceil(log2(1/eps) + log2 log2 m)`, at least 2.
    Additive,
    /// `k = max(5, ceil(log2(1/eps)))`.
    Multiplicative,
}

/// Degree, scale, nodes and per-node precision for multi-point estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationPlan {
    pub mode: PlanMode,
    pub degree: u32,
    /// `l = 1 / (2 (k+1) ln m)`.
    pub scale: f64,
    /// `y_i = f(cos(i pi / k))` inside `[-l, -l/(2k^2+1)]`. Node 0 is the
    /// one closest to zero; the last node is `-l`.
    pub nodes: Vec<f64>,
    /// Relative precision each node's moment estimate must reach.
    pub node_precision: f64,
}

fn ceil_log(x: f64) -> u32 {
    // Guard exact powers of two against rounding just above the integer.
    (x - 1e-9).ceil().max(0.0) as u32
}

impl InterpolationPlan {
    pub fn build(epsilon: f64, m: u64, mode: PlanMode) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(invalid("epsilon", format!("{epsilon} is not inside (0, 1)")));
        }
        if m < 4 {
            return Err(invalid("m", "needs m >= 4"));
        }
        let log2_inv_eps = (1.0 / epsilon).log2();
        let ln_m = (m as f64).ln();
        let (degree, node_precision) = match mode {
            PlanMode::Additive => {
                let k = ceil_log(log2_inv_eps + (m as f64).log2().log2()).max(2);
                let kp1 = (k + 1) as f64;
                (k, epsilon / (12.0 * kp1.powi(3) * ln_m))
            }
            PlanMode::Multiplicative => {
                let k = ceil_log(log2_inv_eps).max(5);
                (k, epsilon / (3.0 * (k as f64).powi(2)))
            }
        };
        Ok(Self::with_degree(mode, degree, ln_m, node_precision))
    }

    /// A plan with an explicit degree; `ln_m` sets the node scale.
    pub fn with_degree(mode: PlanMode, degree: u32, ln_m: f64, node_precision: f64) -> Self {
        let scale = 1.0 / (2.0 * (degree + 1) as f64 * ln_m);
        let nodes = extrema_nodes(degree)
            .expect("degree >= 1")
            .into_iter()
            .map(|eta| node_map(degree, scale, eta))
            .collect();
        Self {
            mode,
            degree,
            scale,
            nodes,
            node_precision,
        }
    }

    /// Interpolates `values[i]` at `nodes[i]` and evaluates at zero.
    pub fn interpolate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.nodes.len() {
            return Err(invalid(
                "values",
                format!("expected {} node values, got {}", self.nodes.len(), values.len()),
            ));
        }
        let points: Vec<(f64, f64)> = self.nodes.iter().copied().zip(values.iter().copied()).collect();
        interpolate_at_zero(&points)
    }
}

/// `p(0)` for the unique polynomial of degree `< points.len()` through
/// `points`, via Newton divided differences.
pub fn interpolate_at_zero(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(invalid("points", "interpolation needs at least two points"));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    for (i, a) in xs.iter().enumerate() {
        if !a.is_finite() || xs[..i].contains(a) {
            return Err(Error::InvalidParameter {
                name: "points",
                reason: format!("abscissa {a} is repeated or not finite"),
            });
        }
    }
    let mut coef: Vec<f64> = points.iter().map(|p| p.1).collect();
    let n = coef.len();
    for level in 1..n {
        for i in (level..n).rev() {
            coef[i] = (coef[i] - coef[i - 1]) / (xs[i] - xs[i - level]);
        }
    }
    // Horner on the Newton form at x = 0.
    let mut acc = coef[n - 1];
    for i in (0..n - 1).rev() {
        acc = acc * (-xs[i]) + coef[i];
    }
    Ok(acc)
}
