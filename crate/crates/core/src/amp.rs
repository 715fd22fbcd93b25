//! Approximate message passing baseline.
//!
//! The pooling design is flattened into a dense m x n matrix `A` of
//! multi-edge counts, so that an exact measurement satisfies
//! `A sigma = results`. AMP iterates
//!
//! ```text
//! sigma[t+1] = eta_t(A^T z[t] + sigma[t])
//! z[t+1]     = y - A sigma[t+1] + b[t+1] * z[t],
//! b[t+1]     = (1/m) * sum_i eta_t'(A^T z[t] + sigma[t])_i
//! ```
//!
//! starting from `sigma[0] = 0`, `z[0] = y`, with no Onsager correction in
//! the initial residual. The correction scalar `b` multiplies the previous
//! residual; with centered columns a residual-free scalar shift would cancel
//! out of `A^T z` and leave the iteration uncorrected.
//!
//! Raw counts have column mean `gamma / n`, far from the zero-mean designs
//! AMP assumes, so the default normalization subtracts the column mean and
//! divides by `sqrt(m)`; [`amp_run`] shifts and scales the measurement vector
//! consistently. All products are plain sequential ndarray operations, so a
//! run is deterministic regardless of thread count.

use crate::error::{CoreError, Result};
use crate::greedy::{declare_top_k, Estimate, RankMethod};
use crate::model::PoolingGraph;
use crate::noise::QueryResults;
use ndarray::{Array1, Array2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Raw multi-edge counts; row sums equal `gamma`.
    None,
    /// Subtract the column mean `gamma / n`, divide every entry by `sqrt(m)`.
    CenteredScaled,
}

/// Dense design matrix with the normalization that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    entries: Array2<f64>,
    pub normalization: Normalization,
    gamma: usize,
}

/// Default dense-storage budget for [`build_design_matrix`]: 1 GiB.
pub const DEFAULT_MATRIX_BUDGET: usize = 1 << 30;

impl DesignMatrix {
    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n(&self) -> usize {
        self.entries.ncols()
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }
}

pub fn build_design_matrix(graph: &PoolingGraph, normalization: Normalization) -> Result<DesignMatrix> {
    build_design_matrix_with_budget(graph, normalization, DEFAULT_MATRIX_BUDGET)
}

pub fn build_design_matrix_with_budget(
    graph: &PoolingGraph,
    normalization: Normalization,
    budget: usize,
) -> Result<DesignMatrix> {
    let (m, n) = (graph.m(), graph.n());
    let needed = m
        .checked_mul(n)
        .and_then(|c| c.checked_mul(std::mem::size_of::<f64>()))
        .ok_or(CoreError::ResourceLimit {
            needed: usize::MAX,
            budget,
        })?;
    if needed > budget {
        return Err(CoreError::ResourceLimit { needed, budget });
    }

    let mut entries = Array2::zeros((m, n));
    for (j, query) in graph.queries().iter().enumerate() {
        for &a in query {
            entries[(j, a as usize)] += 1.0;
        }
    }
    if normalization == Normalization::CenteredScaled && m > 0 {
        let mean = graph.gamma() as f64 / n as f64;
        let scale = (m as f64).sqrt();
        entries.mapv_inplace(|v| (v - mean) / scale);
    }
    Ok(DesignMatrix {
        entries,
        normalization,
        gamma: graph.gamma(),
    })
}

/// Coordinate-wise denoiser family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Denoiser {
    /// `eta(x) = sign(x) * max(|x| - tau, 0)`; the threshold is constant over
    /// iterations (the `iteration` argument of [`denoise`] is the hook for
    /// schedules).
    SoftThreshold { tau: f64 },
    /// Posterior mean of a Bernoulli(`prior`) bit observed through additive
    /// Gaussian noise of variance `noise_var`. [`amp_step`] re-estimates
    /// `noise_var` from the current residual as `|z|^2 / m` before applying
    /// it.
    BayesBernoulli { prior: f64, noise_var: f64 },
}

impl Denoiser {
    /// The standard Bayes denoiser for a weight-`k` signal of length `n`.
    pub fn bayes(k: usize, n: usize) -> Denoiser {
        Denoiser::BayesBernoulli {
            prior: k as f64 / n as f64,
            noise_var: 1.0,
        }
    }
}

const MIN_NOISE_VAR: f64 = 1e-12;

/// Value and derivative of the denoiser at `x`.
///
/// Derivatives are analytic; at the soft-threshold kinks `|x| = tau` the
/// right derivative applies.
pub fn denoise(denoiser: &Denoiser, x: f64, _iteration: usize) -> (f64, f64) {
    match *denoiser {
        Denoiser::SoftThreshold { tau } => {
            if x.abs() > tau {
                (x.signum() * (x.abs() - tau), 1.0)
            } else {
                (0.0, 0.0)
            }
        }
        Denoiser::BayesBernoulli { prior, noise_var } => {
            let v = noise_var.max(MIN_NOISE_VAR);
            let pi = prior.clamp(MIN_NOISE_VAR, 1.0 - MIN_NOISE_VAR);
            // Posterior odds of bit 1 against bit 0 under x ~ N(bit, v).
            let exponent = ((1.0 - 2.0 * x) / (2.0 * v)).clamp(-500.0, 500.0);
            let value = 1.0 / (1.0 + (1.0 - pi) / pi * exponent.exp());
            let derivative = value * (1.0 - value) / v;
            (value, derivative)
        }
    }
}

/// One AMP iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    pub sigma_est: Array1<f64>,
    pub residual: Array1<f64>,
    pub iteration: usize,
    /// The Onsager scalar used in the current residual (0 at t = 0).
    pub onsager_last: f64,
}

impl AmpState {
    /// `sigma[0] = 0`, `z[0] = y`, no Onsager term yet.
    pub fn initial(a: &DesignMatrix, measurements: &[f64]) -> Result<AmpState> {
        if measurements.len() != a.m() {
            return Err(CoreError::DimensionMismatch(format!(
                "{} measurements for {} rows",
                measurements.len(),
                a.m()
            )));
        }
        Ok(AmpState {
            sigma_est: Array1::zeros(a.n()),
            residual: Array1::from(measurements.to_vec()),
            iteration: 0,
            onsager_last: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOptions {
    /// Disabling the Onsager correction degrades the iteration to a plain
    /// Landweber scheme; exists for tests and diagnostics.
    pub onsager: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions { onsager: true }
    }
}

/// One AMP step on the measurement vector `measurements` (already in the
/// matrix's normalization; see [`amp_run`]).
pub fn amp_step(
    state: &AmpState,
    a: &DesignMatrix,
    measurements: &QueryResults,
    denoiser: &Denoiser,
) -> Result<AmpState> {
    amp_step_with_options(state, a, measurements, denoiser, StepOptions::default())
}

pub fn amp_step_with_options(
    state: &AmpState,
    a: &DesignMatrix,
    measurements: &QueryResults,
    denoiser: &Denoiser,
    options: StepOptions,
) -> Result<AmpState> {
    let (m, n) = (a.m(), a.n());
    if measurements.values.len() != m {
        return Err(CoreError::DimensionMismatch(format!(
            "{} measurements for {} rows",
            measurements.values.len(),
            m
        )));
    }
    if state.sigma_est.len() != n || state.residual.len() != m {
        return Err(CoreError::DimensionMismatch(
            "state does not match the design matrix".into(),
        ));
    }

    let effective = match *denoiser {
        Denoiser::BayesBernoulli { prior, .. } if m > 0 => Denoiser::BayesBernoulli {
            prior,
            noise_var: (state.residual.dot(&state.residual) / m as f64).max(MIN_NOISE_VAR),
        },
        d => d,
    };

    let x = a.entries.t().dot(&state.residual) + &state.sigma_est;
    let mut sigma_next = Array1::zeros(n);
    let mut derivative_sum = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let (value, derivative) = denoise(&effective, xi, state.iteration);
        sigma_next[i] = value;
        derivative_sum += derivative;
    }
    let onsager = if options.onsager && m > 0 {
        derivative_sum / m as f64
    } else {
        0.0
    };

    let y = Array1::from(measurements.values.clone());
    let mut residual = y - a.entries.dot(&sigma_next);
    residual.scaled_add(onsager, &state.residual);

    let iteration = state.iteration + 1;
    if sigma_next.iter().any(|v| !v.is_finite()) || residual.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::Diverged { iteration });
    }
    Ok(AmpState {
        sigma_est: sigma_next,
        residual,
        iteration,
        onsager_last: onsager,
    })
}

/// Outcome of a full AMP run.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpRun {
    pub estimate: Estimate,
    /// Final iterate before the top-k cut.
    pub sigma: Vec<f64>,
    /// `|z|_2` after every iteration, starting with the initial residual.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
}

/// Run AMP to convergence and cut the final iterate to the top `k`
/// coordinates (ties by ascending index), so the declared weight is exactly
/// `k`.
///
/// `results` is the raw measurement vector; when the matrix is
/// centered-scaled it is transformed consistently to
/// `(value - gamma * k / n) / sqrt(m)`. Stops once
/// `|sigma[t+1] - sigma[t]|_2 / sqrt(n) < tol` or after `max_iters` steps.
pub fn amp_run(
    a: &DesignMatrix,
    results: &QueryResults,
    denoiser: &Denoiser,
    k: usize,
    max_iters: usize,
    tol: f64,
) -> Result<AmpRun> {
    if max_iters == 0 {
        return Err(CoreError::InvalidConfig("max_iters must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(CoreError::InvalidConfig(format!(
            "tol must be positive, got {tol}"
        )));
    }
    if k > a.n() {
        return Err(CoreError::InvalidConfig(format!(
            "k = {k} exceeds n = {}",
            a.n()
        )));
    }

    let m = a.m();
    let y = match a.normalization {
        Normalization::None => results.values.clone(),
        Normalization::CenteredScaled => {
            let shift = a.gamma() as f64 * k as f64 / a.n() as f64;
            let scale = (m.max(1) as f64).sqrt();
            results.values.iter().map(|&v| (v - shift) / scale).collect()
        }
    };
    let y = QueryResults { values: y };

    let sqrt_n = (a.n().max(1) as f64).sqrt();
    let mut state = AmpState::initial(a, &y.values)?;
    let mut residual_norms = vec![norm2(&state.residual)];
    for _ in 0..max_iters {
        let next = amp_step(&state, a, &y, denoiser)?;
        let change = (&next.sigma_est - &state.sigma_est)
            .mapv(|v| v * v)
            .sum()
            .sqrt()
            / sqrt_n;
        state = next;
        residual_norms.push(norm2(&state.residual));
        if change < tol {
            break;
        }
    }

    let sigma: Vec<f64> = state.sigma_est.to_vec();
    let estimate = declare_top_k(&sigma, k, RankMethod::ComparisonSort);
    Ok(AmpRun {
        estimate,
        sigma,
        residual_norms,
        iterations: state.iteration,
    })
}

fn norm2(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}
