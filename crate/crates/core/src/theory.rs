//! Closed-form sufficiency bounds and tail estimates.
//!
//! The bounds below give the number of queries after which the greedy
//! decoder succeeds with high probability, for each measurement channel and
//! sparsity regime. They are sufficient conditions: simulated phase
//! transitions sit at or below them, and the harness plots them as reference
//! curves.

use crate::error::{CoreError, Result};

/// `1 - exp(-1/2)`, the asymptotic fraction of distinct draws per agent
/// (a query re-draws each agent with rate 1/2 when `gamma = n/2`).
pub fn gamma_constant() -> f64 {
    1.0 - (-0.5f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRegime {
    /// `k = round(n^theta)`, `theta` in (0, 1).
    Sublinear { theta: f64 },
    /// `k = round(zeta * n)`, `zeta` in (0, 1).
    Linear { zeta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdModel {
    Noiseless,
    /// Z-channel: a one reads as zero with probability `p`.
    Z { p: f64 },
    /// General noisy channel with flip probabilities `p` (1 to 0) and
    /// `q` (0 to 1), `q > 0`.
    Gnc { p: f64, q: f64 },
    /// Additive Gaussian noise on the query sum; the bound matches the
    /// noiseless one (feasibility of a given `lambda` is a separate check,
    /// see [`noisy_query_feasibility`]).
    NoisyQuery { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdQuery {
    pub n: usize,
    pub regime: ThresholdRegime,
    pub model: ThresholdModel,
    /// Slack added to the leading constant; any `eps >= 0`.
    pub eps: f64,
}

/// Sufficient query count for the greedy decoder, rounded up.
pub fn required_queries_bound(query: &ThresholdQuery) -> Result<u64> {
    let ThresholdQuery { n, regime, model, eps } = *query;
    if n < 2 {
        return Err(CoreError::InvalidConfig(format!(
            "threshold bounds need n >= 2, got {n}"
        )));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(CoreError::InvalidConfig(format!(
            "eps must be finite and >= 0, got {eps}"
        )));
    }
    match regime {
        ThresholdRegime::Sublinear { theta } => {
            if !(theta > 0.0 && theta < 1.0) {
                return Err(CoreError::InvalidConfig(format!(
                    "theta must lie in (0, 1), got {theta}"
                )));
            }
        }
        ThresholdRegime::Linear { zeta } => {
            if !(zeta > 0.0 && zeta < 1.0) {
                return Err(CoreError::InvalidConfig(format!(
                    "zeta must lie in (0, 1), got {zeta}"
                )));
            }
        }
    }
    match model {
        ThresholdModel::Noiseless | ThresholdModel::NoisyQuery { .. } => {}
        ThresholdModel::Z { p } => {
            if !(0.0..1.0).contains(&p) {
                return Err(CoreError::InvalidConfig(format!(
                    "Z-channel bound needs p in [0, 1), got {p}"
                )));
            }
        }
        ThresholdModel::Gnc { p, q } => {
            if !(0.0..1.0).contains(&p) || !(q > 0.0 && q < 1.0) || p + q >= 1.0 {
                return Err(CoreError::InvalidConfig(format!(
                    "general-channel bound needs p in [0, 1), q in (0, 1), p + q < 1, got p = {p}, q = {q}"
                )));
            }
        }
    }

    let nf = n as f64;
    let ln_n = nf.ln();
    let g = gamma_constant();
    let raw = match (regime, model) {
        (ThresholdRegime::Sublinear { theta }, model) => {
            let k = nf.powf(theta).round();
            let front = (1.0 + theta.sqrt()).powi(2);
            match model {
                ThresholdModel::Noiseless | ThresholdModel::NoisyQuery { .. } => {
                    (4.0 * g + eps) * front * k * ln_n
                }
                ThresholdModel::Z { p } => (4.0 * g + eps) * front / (1.0 - p) * k * ln_n,
                ThresholdModel::Gnc { p, q } => {
                    (4.0 * g + eps) * q * front / (1.0 - p - q).powi(2) * nf * ln_n
                }
            }
        }
        (ThresholdRegime::Linear { zeta }, model) => match model {
            ThresholdModel::Noiseless | ThresholdModel::NoisyQuery { .. } => {
                (16.0 * g + eps) * zeta * nf * ln_n
            }
            ThresholdModel::Z { p } => {
                let keep = 1.0 - p;
                (16.0 * g + eps) * keep / keep.powi(2) * zeta * nf * ln_n
            }
            ThresholdModel::Gnc { p, q } => {
                let keep = 1.0 - p - q;
                (16.0 * g + eps) * (q + keep) / keep.powi(2) * zeta * nf * ln_n
            }
        },
    };
    if !raw.is_finite() || raw < 0.0 {
        return Err(CoreError::InvalidConfig(format!(
            "bound evaluated to {raw}"
        )));
    }
    Ok(raw.ceil() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Achievable,
    Indeterminate,
    Failing,
}

/// Classify a Gaussian-noise level against a query budget.
///
/// Achievable when `lambda^2 <= c_safe * m / ln n` (recovery provably
/// possible), failing when `lambda^2 >= c_fail * m` (provably impossible),
/// indeterminate in between. The achievable test runs first, so a
/// pathological constant choice that makes both hold reports achievable.
pub fn noisy_query_feasibility(
    m: usize,
    n: usize,
    lambda: f64,
    c_safe: f64,
    c_fail: f64,
) -> Result<Feasibility> {
    if m < 1 {
        return Err(CoreError::InvalidConfig("feasibility needs m >= 1".into()));
    }
    if n < 2 {
        return Err(CoreError::InvalidConfig(format!(
            "feasibility needs n >= 2, got {n}"
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(CoreError::InvalidConfig(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if !(c_safe > 0.0) || !(c_fail > 0.0) {
        return Err(CoreError::InvalidConfig(format!(
            "constants must be positive, got c_safe = {c_safe}, c_fail = {c_fail}"
        )));
    }
    let var = lambda * lambda;
    if var <= c_safe * m as f64 / (n as f64).ln() {
        Ok(Feasibility::Achievable)
    } else if var >= c_fail * m as f64 {
        Ok(Feasibility::Failing)
    } else {
        Ok(Feasibility::Indeterminate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSide {
    Upper,
    Lower,
}

/// Multiplicative Chernoff bound on a sum with the given mean:
/// `P(X >= (1 + eps) mean) <= exp(-eps^2 mean / (2 + eps))` and
/// `P(X <= (1 - eps) mean) <= exp(-eps^2 mean / 2)`.
pub fn chernoff_bound(mean: f64, eps: f64, side: TailSide) -> Result<f64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(CoreError::InvalidConfig(format!(
            "mean must be finite and >= 0, got {mean}"
        )));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(CoreError::InvalidConfig(format!(
            "eps must be finite and >= 0, got {eps}"
        )));
    }
    Ok(match side {
        TailSide::Upper => (-eps * eps / (2.0 + eps) * mean).exp(),
        TailSide::Lower => (-eps * eps / 2.0 * mean).exp(),
    })
}

/// Two-sided sandwich on the Gaussian tail `P(N(0, lambda^2) > y)`:
/// `(lambda/y - lambda^3/y^3) phi(y/lambda) <= tail <= (lambda/y) phi(y/lambda)`
/// with `phi` the standard normal density. Returns `(lower, upper)`.
pub fn gaussian_tail_bounds(lambda: f64, y: f64) -> Result<(f64, f64)> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(CoreError::InvalidConfig(format!(
            "lambda must be finite and > 0, got {lambda}"
        )));
    }
    if !(y > 0.0) || !y.is_finite() {
        return Err(CoreError::InvalidConfig(format!(
            "y must be finite and > 0, got {y}"
        )));
    }
    let ratio = lambda / y;
    let phi = (1.0 / (2.0 * std::f64::consts::PI).sqrt()) * (-y * y / (2.0 * lambda * lambda)).exp();
    let upper = ratio * phi;
    let lower = (ratio - ratio.powi(3)) * phi;
    Ok((lower, upper))
}
