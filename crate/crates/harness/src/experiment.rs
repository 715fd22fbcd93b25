//! Seeded batch experiments: required queries, success rates, overlap, and
//! the greedy/AMP comparison.
//!
//! Reproducibility contract: a trial's random stream is derived from
//! (master seed, grid-point index, trial index) and nothing else, so results
//! are independent of the worker count and, across algorithms, trials are
//! paired (both decoders see the same truth, graph, and noise). All
//! reductions run sequentially over per-trial outputs collected in trial
//! order.

use crate::error::{io_at, HarnessError, Result};
use crate::rows::{write_csv, ResultRow};
use pooled_core::amp::{amp_run, build_design_matrix, Denoiser, Normalization};
use pooled_core::greedy::{self, Estimate, RankMethod};
use pooled_core::model::{
    sample_ground_truth, sample_pooling_graph, sample_query, GroundTruth, PoolingGraph,
    ProblemConfig, Regime,
};
use pooled_core::noise::{
    measure, measure_with_draws, own_observed_contribution, second_neighborhood_count_oracle,
    NoiseModel, QueryResults,
};
use pooled_core::rng::RngHandle;
use pooled_core::theory::{
    required_queries_bound, ThresholdModel, ThresholdQuery, ThresholdRegime,
};
use pooled_core::CoreError;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const AMP_MAX_ITERS: usize = 200;
pub const AMP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Algorithm {
    Greedy,
    Amp,
}

impl Algorithm {
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::Amp => "amp",
        }
    }
}

/// Outcome of a single decode attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    /// Exact reconstruction (success-rate experiments count these).
    pub exact: bool,
    pub overlap: f64,
    pub margin: f64,
}

/// Aggregate over the trials of one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessStats {
    pub trials: usize,
    pub successes: usize,
    pub mean_overlap: f64,
    pub mean_margin: f64,
}

fn decode(
    graph: &PoolingGraph,
    results: &QueryResults,
    k: usize,
    algorithm: Algorithm,
) -> Result<Option<Estimate>> {
    match algorithm {
        Algorithm::Greedy => {
            let (_, estimate) = greedy::reconstruct(graph, results, k, RankMethod::ComparisonSort)?;
            Ok(Some(estimate))
        }
        Algorithm::Amp => {
            let design = build_design_matrix(graph, Normalization::CenteredScaled)?;
            match amp_run(
                &design,
                results,
                &Denoiser::bayes(k, graph.n()),
                k,
                AMP_MAX_ITERS,
                AMP_TOL,
            ) {
                Ok(run) => Ok(Some(run.estimate)),
                Err(CoreError::Diverged { .. }) => Ok(None),
                Err(e) => Err(e.into()),
            }
        }
    }
}

/// Check the per-agent decomposition of the neighborhood sum into the
/// second-neighborhood count plus the agent's own observed contribution.
/// `Exact` and `NoisyChannel` measurements satisfy it identically.
pub fn verify_decomposition(
    graph: &PoolingGraph,
    truth: &GroundTruth,
    results: &QueryResults,
    draws: &pooled_core::noise::ChannelDraws,
) -> Result<()> {
    let psi = greedy::neighborhood_sums(graph, results)?;
    for agent in 0..graph.n() {
        let xi = second_neighborhood_count_oracle(graph, truth, agent, draws)?;
        let own = own_observed_contribution(graph, agent, draws)?;
        if psi[agent] != (xi + own) as f64 {
            return Err(HarnessError::OracleCheck(format!(
                "agent {agent}: psi = {}, xi + own = {}",
                psi[agent],
                xi + own
            )));
        }
    }
    Ok(())
}

/// One independent instance: fresh truth, graph, and noise from fixed
/// substreams of `handle`, decoded by `algorithm`. A diverged AMP run counts
/// as a failed trial, not an error.
pub fn run_trial(
    config: &ProblemConfig,
    model: &NoiseModel,
    algorithm: Algorithm,
    handle: RngHandle,
    oracle: bool,
) -> Result<TrialOutcome> {
    let truth = sample_ground_truth(config, &handle.substream(0))?;
    let graph = sample_pooling_graph(config, &handle.substream(1))?;
    let noise = handle.substream(2);
    let results = if oracle && !matches!(model, NoiseModel::NoisyQuery { .. }) {
        let (results, draws) = measure_with_draws(&graph, &truth, model, &noise)?;
        verify_decomposition(&graph, &truth, &results, &draws)?;
        results
    } else {
        measure(&graph, &truth, model, &noise)?
    };
    let Some(estimate) = decode(&graph, &results, config.k, algorithm)? else {
        return Ok(TrialOutcome {
            exact: false,
            overlap: 0.0,
            margin: 0.0,
        });
    };
    let (exact, overlap) = greedy::evaluate(&estimate, &truth)?;
    Ok(TrialOutcome {
        exact,
        overlap,
        margin: estimate.separation_margin,
    })
}

/// Success rate at the fixed query count `config.m`: counts exact
/// reconstructions over independent trials and averages overlap and margin.
pub fn success_rate(
    config: &ProblemConfig,
    model: &NoiseModel,
    trials: usize,
    algorithm: Algorithm,
    handle: RngHandle,
    oracle: bool,
) -> Result<SuccessStats> {
    if trials == 0 {
        return Err(HarnessError::Config("trials must be >= 1".into()));
    }
    config.validate()?;
    model.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(config, model, algorithm, handle.substream(t as u64), oracle))
        .collect::<Result<Vec<_>>>()?;

    let mut successes = 0usize;
    let (mut overlap_sum, mut margin_sum) = (0.0f64, 0.0f64);
    for outcome in &outcomes {
        successes += outcome.exact as usize;
        overlap_sum += outcome.overlap;
        margin_sum += outcome.margin;
    }
    Ok(SuccessStats {
        trials,
        successes,
        mean_overlap: overlap_sum / trials as f64,
        mean_margin: margin_sum / trials as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RequiredOptions {
    /// Stop and flag the trial after this many queries; `None` derives
    /// 50 x the sufficiency bound at eps = 0.1.
    pub cap: Option<usize>,
    /// Check the stopping rule every `stride` queries, then backtrack to
    /// single-step resolution inside the last window. Strides above 1 can
    /// miss a transient success that opened and closed strictly inside an
    /// earlier window; the default of 1 is exact.
    pub stride: usize,
}

impl Default for RequiredOptions {
    fn default() -> Self {
        RequiredOptions {
            cap: None,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequiredOutcome {
    pub m_star: usize,
    /// The cap was hit before the stopping rule fired; `m_star` is the cap.
    pub capped: bool,
    pub overlap: f64,
    pub margin: f64,
}

fn threshold_regime(config: &ProblemConfig) -> ThresholdRegime {
    match config.regime {
        Regime::Sublinear { theta } => ThresholdRegime::Sublinear { theta },
        Regime::Linear { zeta } => ThresholdRegime::Linear { zeta },
        Regime::ExplicitK => {
            // Fall back to the effective exponent of the explicit k.
            let theta = ((config.k as f64).ln() / (config.n as f64).ln())
                .clamp(1e-9, 1.0 - 1e-9);
            ThresholdRegime::Sublinear { theta }
        }
    }
}

fn threshold_model(model: &NoiseModel) -> ThresholdModel {
    match *model {
        NoiseModel::Exact => ThresholdModel::Noiseless,
        NoiseModel::NoisyChannel { p, q } if q == 0.0 => ThresholdModel::Z { p },
        NoiseModel::NoisyChannel { p, q } => ThresholdModel::Gnc { p, q },
        NoiseModel::NoisyQuery { lambda } => ThresholdModel::NoisyQuery { lambda },
    }
}

fn default_cap(config: &ProblemConfig, model: &NoiseModel) -> Result<usize> {
    let query = ThresholdQuery {
        n: config.n,
        regime: threshold_regime(config),
        model: threshold_model(model),
        eps: 0.1,
    };
    let bound = required_queries_bound(&query)?;
    Ok((bound as usize).saturating_mul(50).max(1))
}

fn measure_one<R: Rng>(
    query: &[u32],
    truth: &GroundTruth,
    model: &NoiseModel,
    rng: &mut R,
) -> f64 {
    match *model {
        NoiseModel::Exact => query
            .iter()
            .map(|&a| truth.bits[a as usize] as u32)
            .sum::<u32>() as f64,
        NoiseModel::NoisyChannel { p, q } => {
            let mut s = 0u32;
            for &a in query {
                let one = if truth.bits[a as usize] == 1 {
                    p == 0.0 || rng.gen_bool(1.0 - p)
                } else {
                    q > 0.0 && rng.gen_bool(q)
                };
                s += one as u32;
            }
            s as f64
        }
        NoiseModel::NoisyQuery { lambda } => {
            let exact = query
                .iter()
                .map(|&a| truth.bits[a as usize] as u32)
                .sum::<u32>() as f64;
            let normal = Normal::new(0.0, lambda).expect("validated lambda");
            exact + normal.sample(rng)
        }
    }
}

/// Streaming greedy state; scores are computed with the exact floating-point
/// expression of the batch path so the two agree bit for bit.
struct GreedyTracker {
    half_k: f64,
    psi: Vec<f64>,
    dstar: Vec<u32>,
    seen: Vec<u32>,
}

impl GreedyTracker {
    fn new(n: usize, k: usize) -> Self {
        GreedyTracker {
            half_k: k as f64 / 2.0,
            psi: vec![0.0; n],
            dstar: vec![0; n],
            seen: vec![u32::MAX; n],
        }
    }

    fn absorb(&mut self, j: usize, query: &[u32], value: f64) {
        let tag = j as u32;
        for &a in query {
            let a = a as usize;
            if self.seen[a] != tag {
                self.seen[a] = tag;
                self.psi[a] += value;
                self.dstar[a] += 1;
            }
        }
    }

    /// Margin between the worst one-agent score and the best zero-agent
    /// score; positive exactly when the declaration is correct and separated.
    fn margin(&self, truth: &GroundTruth) -> f64 {
        let mut ones_min = f64::INFINITY;
        let mut zeros_max = f64::NEG_INFINITY;
        for (i, &bit) in truth.bits.iter().enumerate() {
            let score = self.psi[i] - self.dstar[i] as f64 * self.half_k;
            if bit == 1 {
                ones_min = ones_min.min(score);
            } else {
                zeros_max = zeros_max.max(score);
            }
        }
        ones_min - zeros_max
    }
}

fn amp_prefix_outcome(
    n: usize,
    gamma: usize,
    k: usize,
    queries: &[Vec<u32>],
    values: &[f64],
    truth: &GroundTruth,
) -> Result<TrialOutcome> {
    let graph = PoolingGraph::from_queries(n, gamma, queries.to_vec())?;
    let results = QueryResults {
        values: values.to_vec(),
    };
    let Some(estimate) = decode(&graph, &results, k, Algorithm::Amp)? else {
        return Ok(TrialOutcome {
            exact: false,
            overlap: 0.0,
            margin: 0.0,
        });
    };
    let (exact, overlap) = greedy::evaluate(&estimate, truth)?;
    Ok(TrialOutcome {
        exact,
        overlap,
        margin: estimate.separation_margin,
    })
}

/// Smallest query count at which the decoder reproduces the truth exactly
/// with a strictly positive separation margin, growing the design one query
/// at a time (noise is drawn once per query and frozen).
///
/// The returned stopping point is confirmed by a full recomputation from
/// scratch; a disagreement with the incremental state is reported as an
/// error rather than silently accepted.
pub fn required_queries(
    config: &ProblemConfig,
    model: &NoiseModel,
    algorithm: Algorithm,
    handle: RngHandle,
    options: &RequiredOptions,
) -> Result<RequiredOutcome> {
    config.validate()?;
    model.validate()?;
    if options.stride == 0 {
        return Err(HarnessError::Config("stride must be >= 1".into()));
    }
    let (n, k, gamma) = (config.n, config.k, config.gamma);
    if k == 0 || k == n {
        return Ok(RequiredOutcome {
            m_star: 0,
            capped: false,
            overlap: 1.0,
            margin: f64::INFINITY,
        });
    }
    let cap = match options.cap {
        Some(cap) if cap >= 1 => cap,
        Some(_) => return Err(HarnessError::Config("cap must be >= 1".into())),
        None => default_cap(config, model)?,
    };

    let truth = sample_ground_truth(config, &handle.substream(0))?;
    let graph_handle = handle.substream(1);
    let noise_handle = handle.substream(2);

    let mut queries: Vec<Vec<u32>> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut tracker = GreedyTracker::new(n, k);
    let mut found: Option<usize> = None;

    for m in 1..=cap {
        let j = m - 1;
        let query = sample_query(n, gamma, &mut graph_handle.substream(j as u64).rng());
        let value = measure_one(&query, &truth, model, &mut noise_handle.substream(j as u64).rng());
        if algorithm == Algorithm::Greedy {
            tracker.absorb(j, &query, value);
        }
        queries.push(query);
        values.push(value);

        if m % options.stride != 0 && m != cap {
            continue;
        }
        let hit = match algorithm {
            Algorithm::Greedy => tracker.margin(&truth) > 0.0,
            Algorithm::Amp => {
                let outcome = amp_prefix_outcome(n, gamma, k, &queries, &values, &truth)?;
                outcome.exact && outcome.margin > 0.0
            }
        };
        if hit {
            found = Some(if options.stride == 1 {
                m
            } else {
                backtrack(
                    n,
                    gamma,
                    k,
                    algorithm,
                    &truth,
                    &queries,
                    &values,
                    m,
                    options.stride,
                )?
            });
            break;
        }
    }

    match found {
        Some(m_star) => {
            let outcome = recheck_from_scratch(
                config, algorithm, &truth, &queries[..m_star], &values[..m_star], &tracker,
                options.stride,
            )?;
            Ok(RequiredOutcome {
                m_star,
                capped: false,
                overlap: outcome.overlap,
                margin: outcome.margin,
            })
        }
        None => {
            let outcome = final_outcome(n, gamma, k, algorithm, &truth, &queries, &values)?;
            Ok(RequiredOutcome {
                m_star: cap,
                capped: true,
                overlap: outcome.overlap,
                margin: outcome.margin,
            })
        }
    }
}

fn final_outcome(
    n: usize,
    gamma: usize,
    k: usize,
    algorithm: Algorithm,
    truth: &GroundTruth,
    queries: &[Vec<u32>],
    values: &[f64],
) -> Result<TrialOutcome> {
    match algorithm {
        Algorithm::Amp => amp_prefix_outcome(n, gamma, k, queries, values, truth),
        Algorithm::Greedy => {
            let graph = PoolingGraph::from_queries(n, gamma, queries.to_vec())?;
            let results = QueryResults {
                values: values.to_vec(),
            };
            let (_, estimate) =
                greedy::reconstruct(&graph, &results, k, RankMethod::ComparisonSort)?;
            let (exact, overlap) = greedy::evaluate(&estimate, truth)?;
            Ok(TrialOutcome {
                exact,
                overlap,
                margin: estimate.separation_margin,
            })
        }
    }
}

/// Single-step through the last stride window for the first success.
#[allow(clippy::too_many_arguments)]
fn backtrack(
    n: usize,
    gamma: usize,
    k: usize,
    algorithm: Algorithm,
    truth: &GroundTruth,
    queries: &[Vec<u32>],
    values: &[f64],
    hi: usize,
    stride: usize,
) -> Result<usize> {
    let base = hi.saturating_sub(stride);
    match algorithm {
        Algorithm::Greedy => {
            let mut tracker = GreedyTracker::new(n, k);
            for j in 0..base {
                tracker.absorb(j, &queries[j], values[j]);
            }
            for j in base..hi {
                tracker.absorb(j, &queries[j], values[j]);
                if tracker.margin(truth) > 0.0 {
                    return Ok(j + 1);
                }
            }
        }
        Algorithm::Amp => {
            for m in (base + 1)..hi {
                let outcome =
                    amp_prefix_outcome(n, gamma, k, &queries[..m], &values[..m], truth)?;
                if outcome.exact && outcome.margin > 0.0 {
                    return Ok(m);
                }
            }
        }
    }
    Ok(hi)
}

/// The mandated from-scratch confirmation at the stopping point.
fn recheck_from_scratch(
    config: &ProblemConfig,
    algorithm: Algorithm,
    truth: &GroundTruth,
    queries: &[Vec<u32>],
    values: &[f64],
    tracker: &GreedyTracker,
    stride: usize,
) -> Result<TrialOutcome> {
    let (n, k, gamma) = (config.n, config.k, config.gamma);
    let graph = PoolingGraph::from_queries(n, gamma, queries.to_vec())?;
    let results = QueryResults {
        values: values.to_vec(),
    };
    let outcome = match algorithm {
        Algorithm::Greedy => {
            let (table, estimate) =
                greedy::reconstruct(&graph, &results, k, RankMethod::ComparisonSort)?;
            // Strides above 1 stop the scan past the stopping point, so the
            // live tracker has absorbed too many queries; rebuild the prefix.
            let rebuilt = (stride != 1).then(|| {
                let mut t = GreedyTracker::new(n, k);
                for (j, (query, &value)) in queries.iter().zip(values.iter()).enumerate() {
                    t.absorb(j, query, value);
                }
                t.psi
            });
            let incremental_psi = rebuilt.as_deref().unwrap_or(&tracker.psi);
            if incremental_psi != table.psi.as_slice() {
                return Err(HarnessError::OracleCheck(
                    "incremental neighborhood sums disagree with the batch recomputation".into(),
                ));
            }
            let (exact, overlap) = greedy::evaluate(&estimate, truth)?;
            TrialOutcome {
                exact,
                overlap,
                margin: estimate.separation_margin,
            }
        }
        Algorithm::Amp => amp_prefix_outcome(n, gamma, k, queries, values, truth)?,
    };
    if !(outcome.exact && outcome.margin > 0.0) {
        return Err(HarnessError::OracleCheck(format!(
            "stopping point failed the from-scratch confirmation (exact = {}, margin = {})",
            outcome.exact, outcome.margin
        )));
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    RequiredQueries,
    SuccessRate,
    Overlap,
    AmpCompare,
    ThresholdTable,
}

/// One point of the parameter grid. `m` is the fixed query count for rate
/// experiments and unused for required-queries and threshold tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub n: usize,
    pub regime: Regime,
    pub model: NoiseModel,
    pub m: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub points: Vec<GridPoint>,
    pub trials: usize,
    pub master_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub out_dir: Option<PathBuf>,
    /// 0 uses the library default worker count; results do not depend on it.
    pub workers: usize,
    pub oracle: bool,
    /// Record wall-clock time per row. Off by default: timing breaks the
    /// byte-identical output contract.
    pub timing: bool,
    /// Slack constant for threshold-table bounds.
    pub eps: f64,
    pub required: RequiredOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub files: Vec<PathBuf>,
    /// Every required-queries trial hit the cap (CLI exit code 3).
    pub all_capped: bool,
}

fn point_config(point: &GridPoint) -> Result<ProblemConfig> {
    let m = point.m.unwrap_or(0);
    let config = match point.regime {
        Regime::Sublinear { theta } => ProblemConfig::sublinear(point.n, theta, m)?,
        Regime::Linear { zeta } => ProblemConfig::linear(point.n, zeta, m)?,
        Regime::ExplicitK => {
            return Err(HarnessError::Config(
                "grid points need a sublinear or linear regime".into(),
            ));
        }
    };
    Ok(config)
}

fn validate_spec(spec: &ExperimentSpec) -> Result<()> {
    let rate_kind = matches!(
        spec.kind,
        ExperimentKind::SuccessRate | ExperimentKind::Overlap | ExperimentKind::AmpCompare
    );
    if spec.kind != ExperimentKind::ThresholdTable {
        if spec.trials == 0 {
            return Err(HarnessError::Config("trials must be >= 1".into()));
        }
        if spec.algorithms.is_empty() {
            return Err(HarnessError::Config("no algorithm selected".into()));
        }
    }
    if !(spec.eps >= 0.0) {
        return Err(HarnessError::Config(format!(
            "eps must be >= 0, got {}",
            spec.eps
        )));
    }
    for point in &spec.points {
        let config = point_config(point)?;
        config.validate()?;
        point.model.validate()?;
        if rate_kind && point.m.is_none() {
            return Err(HarnessError::Config(format!(
                "grid point n = {} needs a query count m",
                point.n
            )));
        }
    }
    Ok(())
}

fn model_fields(model: &NoiseModel) -> (f64, f64, f64) {
    match *model {
        NoiseModel::Exact => (0.0, 0.0, 0.0),
        NoiseModel::NoisyChannel { p, q } => (p, q, 0.0),
        NoiseModel::NoisyQuery { lambda } => (0.0, 0.0, lambda),
    }
}

/// Compact per-curve key, e.g. `z_p0.1` or `gauss_l2`.
pub fn model_key(model: &NoiseModel) -> String {
    match *model {
        NoiseModel::Exact => "none".into(),
        NoiseModel::NoisyChannel { p, q } if q == 0.0 => format!("z_p{p}"),
        NoiseModel::NoisyChannel { p, q } => format!("gnc_p{p}_q{q}"),
        NoiseModel::NoisyQuery { lambda } => format!("gauss_l{lambda}"),
    }
}

fn make_row(
    spec: &ExperimentSpec,
    point: &GridPoint,
    config: &ProblemConfig,
    algorithm: Algorithm,
    m: usize,
    trials: usize,
    successes: usize,
    mean_overlap: f64,
    margin_mean: f64,
    elapsed_ms: u64,
) -> ResultRow {
    let (p, q, lambda) = model_fields(&point.model);
    ResultRow {
        seed: spec.master_seed,
        n: point.n,
        k: config.k,
        regime: config.regime.label(),
        model: point.model.label().to_string(),
        p,
        q,
        lambda,
        algorithm: algorithm.label().to_string(),
        m,
        trials,
        successes,
        mean_overlap,
        separation_margin_mean: margin_mean,
        elapsed_ms,
    }
}

/// Run the whole grid and write outputs. Rows come back sorted by
/// (grid index, algorithm, trial); identical specs produce byte-identical
/// files.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    validate_spec(spec)?;
    let rows = if spec.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
        pool.install(|| collect_rows(spec))?
    } else {
        collect_rows(spec)?
    };
    let all_capped = spec.kind == ExperimentKind::RequiredQueries
        && !rows.is_empty()
        && rows.iter().all(|r| r.successes == 0);
    let files = write_outputs(spec, &rows)?;
    Ok(ExperimentOutput {
        rows,
        files,
        all_capped,
    })
}

fn collect_rows(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let master = RngHandle::new(spec.master_seed);
    match spec.kind {
        ExperimentKind::ThresholdTable => Ok(Vec::new()),
        ExperimentKind::RequiredQueries => {
            let mut tasks = Vec::new();
            for (pi, point) in spec.points.iter().enumerate() {
                for &algorithm in &spec.algorithms {
                    for trial in 0..spec.trials {
                        tasks.push((pi, *point, algorithm, trial));
                    }
                }
            }
            tasks
                .into_par_iter()
                .map(|(pi, point, algorithm, trial)| {
                    let config = point_config(&point)?;
                    let handle = master.substream(pi as u64).substream(trial as u64);
                    let started = Instant::now();
                    let outcome = required_queries(
                        &config,
                        &point.model,
                        algorithm,
                        handle,
                        &spec.required,
                    )?;
                    let elapsed = elapsed_ms(spec.timing, started);
                    Ok(make_row(
                        spec,
                        &point,
                        &config,
                        algorithm,
                        outcome.m_star,
                        1,
                        (!outcome.capped) as usize,
                        outcome.overlap,
                        outcome.margin,
                        elapsed,
                    ))
                })
                .collect()
        }
        ExperimentKind::SuccessRate | ExperimentKind::Overlap | ExperimentKind::AmpCompare => {
            let mut tasks = Vec::new();
            for (pi, point) in spec.points.iter().enumerate() {
                for &algorithm in &spec.algorithms {
                    tasks.push((pi, *point, algorithm));
                }
            }
            tasks
                .into_par_iter()
                .map(|(pi, point, algorithm)| {
                    let config = point_config(&point)?;
                    let handle = master.substream(pi as u64);
                    let started = Instant::now();
                    let stats = success_rate(
                        &config,
                        &point.model,
                        spec.trials,
                        algorithm,
                        handle,
                        spec.oracle,
                    )?;
                    let elapsed = elapsed_ms(spec.timing, started);
                    Ok(make_row(
                        spec,
                        &point,
                        &config,
                        algorithm,
                        config.m,
                        stats.trials,
                        stats.successes,
                        stats.mean_overlap,
                        stats.mean_margin,
                        elapsed,
                    ))
                })
                .collect()
        }
    }
}

fn elapsed_ms(timing: bool, started: Instant) -> u64 {
    if timing {
        started.elapsed().as_millis() as u64
    } else {
        0
    }
}

/// Success curves per (model key, n, algorithm), sorted by m. Only rate-kind
/// rows produce meaningful curves.
pub fn rate_curves(rows: &[ResultRow]) -> BTreeMap<(String, usize, String), Vec<(usize, f64)>> {
    let mut curves: BTreeMap<(String, usize, String), Vec<(usize, f64)>> = BTreeMap::new();
    for row in rows {
        let key = (row_model_key(row), row.n, row.algorithm.clone());
        curves
            .entry(key)
            .or_default()
            .push((row.m, row.successes as f64 / row.trials as f64));
    }
    for curve in curves.values_mut() {
        curve.sort_by_key(|&(m, _)| m);
    }
    curves
}

fn row_model_key(row: &ResultRow) -> String {
    match row.model.as_str() {
        "none" => "none".into(),
        "z" => format!("z_p{}", row.p),
        "gnc" => format!("gnc_p{}_q{}", row.p, row.q),
        "gauss" => format!("gauss_l{}", row.lambda),
        other => other.into(),
    }
}

fn median(sorted: &[usize]) -> f64 {
    let len = sorted.len();
    if len % 2 == 1 {
        sorted[len / 2] as f64
    } else {
        (sorted[len / 2 - 1] + sorted[len / 2]) as f64 / 2.0
    }
}

fn write_dat(path: &Path, header: &str, rows: &[(f64, f64)]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "# {header}").expect("in-memory write");
    for (x, y) in rows {
        writeln!(out, "{x} {y}").expect("in-memory write");
    }
    std::fs::write(path, out).map_err(io_at(path))
}

fn write_outputs(spec: &ExperimentSpec, rows: &[ResultRow]) -> Result<Vec<PathBuf>> {
    let Some(dir) = &spec.out_dir else {
        return Ok(Vec::new());
    };
    std::fs::create_dir_all(dir).map_err(io_at(dir.clone()))?;
    let mut files = Vec::new();

    // Threshold tables are pure bound curves; writing their (always empty)
    // CSV would clobber a sibling experiment's results in a shared directory.
    if spec.kind != ExperimentKind::ThresholdTable {
        let csv_path = dir.join("results.csv");
        write_csv(&csv_path, rows)?;
        files.push(csv_path);
    }

    match spec.kind {
        ExperimentKind::RequiredQueries => {
            // Median stopping point per n, one curve per model and algorithm.
            let mut groups: BTreeMap<(String, String), BTreeMap<usize, Vec<usize>>> =
                BTreeMap::new();
            for row in rows {
                groups
                    .entry((row_model_key(row), row.algorithm.clone()))
                    .or_default()
                    .entry(row.n)
                    .or_default()
                    .push(row.m);
            }
            for ((key, algorithm), by_n) in groups {
                let curve: Vec<(f64, f64)> = by_n
                    .into_iter()
                    .map(|(n, mut ms)| {
                        ms.sort_unstable();
                        (n as f64, median(&ms))
                    })
                    .collect();
                let path = dir.join(format!("required_{key}_{algorithm}.dat"));
                write_dat(
                    &path,
                    &format!("median required queries: n median_m model={key} algorithm={algorithm}"),
                    &curve,
                )?;
                files.push(path);
            }
        }
        ExperimentKind::SuccessRate | ExperimentKind::AmpCompare | ExperimentKind::Overlap => {
            let overlap = spec.kind == ExperimentKind::Overlap;
            let prefix = if overlap { "overlap" } else { "success" };
            let mut groups: BTreeMap<(String, usize, String), Vec<(f64, f64)>> = BTreeMap::new();
            for row in rows {
                let y = if overlap {
                    row.mean_overlap
                } else {
                    row.successes as f64 / row.trials as f64
                };
                groups
                    .entry((row_model_key(row), row.n, row.algorithm.clone()))
                    .or_default()
                    .push((row.m as f64, y));
            }
            for ((key, n, algorithm), mut curve) in groups {
                curve.sort_by(|a, b| a.0.total_cmp(&b.0));
                let path = dir.join(format!("{prefix}_n{n}_{key}_{algorithm}.dat"));
                write_dat(
                    &path,
                    &format!("{prefix} vs queries: m {prefix} n={n} model={key} algorithm={algorithm}"),
                    &curve,
                )?;
                files.push(path);
            }
        }
        ExperimentKind::ThresholdTable => {
            let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for point in &spec.points {
                let config = point_config(point)?;
                let query = ThresholdQuery {
                    n: point.n,
                    regime: threshold_regime(&config),
                    model: threshold_model(&point.model),
                    eps: spec.eps,
                };
                let bound = required_queries_bound(&query)?;
                groups
                    .entry(model_key(&point.model))
                    .or_default()
                    .push((point.n as f64, bound as f64));
            }
            for (key, mut curve) in groups {
                curve.sort_by(|a, b| a.0.total_cmp(&b.0));
                curve.dedup();
                let path = dir.join(format!("bound_{key}.dat"));
                write_dat(
                    &path,
                    &format!("sufficiency bound: n m model={key} eps={}", spec.eps),
                    &curve,
                )?;
                files.push(path);
            }
        }
    }
    Ok(files)
}
