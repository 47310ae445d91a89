//! Constants the multiplicative estimators are sized with, and the explicit
//! parameters of the one-point Shannon estimator.

use crate::error::{invalid, Result};

/// `ln(6/5)`. For `alpha < 1` and `x <= 5/6`,
/// `x^(alpha-1) >= (6/5)^(1-alpha) >= 1 + ln(6/5) (1 - alpha)`, the tangent
/// of the exponential at zero.
pub const LARGE_DIFFERENCE_C1: f64 = 0.182_321_556_793_954_6;

/// `1/6`. For `alpha` in `(1, 2]` the convex `(5/6)^(alpha-1)` lies below its
/// chord `1 - (alpha - 1)/6`.
pub const LARGE_DIFFERENCE_C2: f64 = 1.0 / 6.0;

/// `min(C1, C2)`: with every `x_i <= 5/6`, `|1 - sum x_i^alpha| >= C |alpha - 1|`
/// and so `T_alpha >= C`.
pub const LARGE_DIFFERENCE_C: f64 = LARGE_DIFFERENCE_C2;

const LN_3: f64 = 1.098_612_288_668_109_8;

/// `alpha < 1` branch: `3^(1-alpha) >= 1 + ln 3 (1 - alpha)` gives
/// `S >= (1 + ln 3 (1-alpha)) Q` for `S = sum_{j != i} x_j^alpha` and
/// `Q = 1 - x_i^alpha`. Relative error `eta` on both moves `S - Q` by at most
/// `eta (S + Q) <= eta (1 + 2 / (ln 3 (1 - alpha))) (S - Q)`, so
/// `eta = (1 - alpha) eps ln 3 / (2 + ln 3)` suffices. `Q` comes from
/// `1 - x_i` through `g(y) = 1 - (1-y)^alpha`, whose derivative varies by a
/// factor `3/2` on `[0, 1/3]`, costing another `3/2`.
pub const APPROXIMATE_DIFFERENCE_D1: f64 = 1.5 * (2.0 + LN_3) / LN_3;

/// `alpha > 1` branch: the chord bound `3^(1-alpha) <= 1 - (2/3)(alpha - 1)`
/// gives `S + Q <= 2Q <= 3 (Q - S) / (alpha - 1)`, so `eta = (alpha-1) eps / 3`,
/// times the same `3/2`.
pub const APPROXIMATE_DIFFERENCE_D2: f64 = 4.5;

/// `max(D1, D2)`: relative precision `C |1 - alpha| eps / D` on `1 - x_i`
/// and on `sum_{j != i} x_j^alpha` yields `(1 + eps)` on `|1 - sum x^alpha|`.
pub const APPROXIMATE_DIFFERENCE_D: f64 = APPROXIMATE_DIFFERENCE_D2;

/// `ln` has derivative in `[1, 9/4]` on `[4/9, 1]`, so relative error `eps`
/// on `t - 1` is at most `9/4 eps` on `ln t`.
pub const LOG_APPROX_RATIO: f64 = 9.0 / 4.0;

/// Min-entropy floor `ln(6/5)` when no element exceeds `5/6`.
pub const MIN_ENTROPY_FLOOR: f64 = LARGE_DIFFERENCE_C1;

/// Parameters of the one-point estimator: `H~ = -ln(F~_{1+y0} / ||A||_1^(1+y0)) / y0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnePointConfig {
    pub epsilon: f64,
    /// `mu = eps / (4 ln m)`.
    pub mu: f64,
    /// `nu = eps / (4 ln n ln m)`.
    pub nu: f64,
    /// `1 + mu / (16 ln(1/mu))`; `H / H_alpha* <= 1 + eps`.
    pub alpha_star: f64,
    /// `1 + nu / (16 ln(1/nu))`; `H - H_beta* <= eps`.
    pub beta_star: f64,
    /// `beta* - 1`.
    pub y0: f64,
    /// `eps * y0`, the relative precision of the single moment estimate.
    pub moment_precision: f64,
}

impl OnePointConfig {
    /// Needs `2 <= n <= m`, the smallest positive probability being `>= 1/m`.
    pub fn new(epsilon: f64, n: u64, m: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(invalid("epsilon", format!("{epsilon} is not inside (0, 1)")));
        }
        if n < 2 {
            return Err(invalid("n", "needs a universe of at least two items"));
        }
        if m < n {
            return Err(invalid("m", format!("m = {m} is below n = {n}")));
        }
        let (ln_n, ln_m) = ((n as f64).ln(), (m as f64).ln());
        let mu = epsilon / (4.0 * ln_m);
        let nu = epsilon / (4.0 * ln_n * ln_m);
        let alpha_star = 1.0 + mu / (16.0 * (1.0 / mu).ln());
        let beta_star = 1.0 + nu / (16.0 * (1.0 / nu).ln());
        let y0 = beta_star - 1.0;
        Ok(Self {
            epsilon,
            mu,
            nu,
            alpha_star,
            beta_star,
            y0,
            moment_precision: epsilon * y0,
        })
    }

    /// `xi(alpha) = 4 (alpha - 1) H`.
    pub fn xi(alpha: f64, shannon: f64) -> f64 {
        4.0 * (alpha - 1.0) * shannon
    }

    /// `e(alpha) = 2 (xi ln n + xi ln(1/xi))`; when `xi < 1/4`,
    /// `H_alpha <= H <= H_alpha + e(alpha)`.
    pub fn convergence_gap(alpha: f64, shannon: f64, n: u64) -> f64 {
        let xi = Self::xi(alpha, shannon);
        if xi <= 0.0 {
            return 0.0;
        }
        2.0 * (xi * (n as f64).ln() + xi * (1.0 / xi).ln())
    }
}
