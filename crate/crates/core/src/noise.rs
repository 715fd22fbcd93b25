//! Measurement of query results under the three noise models.
//!
//! * `Exact`: each query reports the multiplicity-weighted sum of the bits it
//!   drew.
//! * `NoisyChannel(p, q)`: every single draw is read through an asymmetric
//!   binary channel. A drawn one-bit is observed as 1 with probability
//!   `1 - p`, a drawn zero-bit as 1 with probability `q`, independently for
//!   every draw, including repeated draws of the same agent within one query.
//!   `q = 0` is the Z-channel.
//! * `NoisyQuery(lambda)`: the exact sum plus one independent `N(0, lambda^2)`
//!   variate per query. Results are deliberately not clamped to `[0, gamma]`;
//!   the model is unbounded and negative results are legitimate.

use crate::error::{CoreError, Result};
use crate::model::{GroundTruth, PoolingGraph};
use crate::rng::RngHandle;
use rand::Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    Exact,
    NoisyChannel { p: f64, q: f64 },
    NoisyQuery { lambda: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Exact => Ok(()),
            NoiseModel::NoisyChannel { p, q } => {
                if !(0.0..=1.0).contains(&p) || !(0.0..1.0).contains(&q) {
                    return Err(CoreError::InvalidConfig(format!(
                        "channel probabilities must satisfy p in [0,1], q in [0,1), got p = {p}, q = {q}"
                    )));
                }
                // p + q < 1 keeps the channel informative; the degenerate
                // Z-channel boundary p = 1, q = 0 stays measurable (every one
                // reads as zero) even though no decoder can use it.
                if p + q >= 1.0 && !(q == 0.0 && p == 1.0) {
                    return Err(CoreError::InvalidConfig(format!(
                        "channel needs p + q < 1, got p + q = {}",
                        p + q
                    )));
                }
                Ok(())
            }
            NoiseModel::NoisyQuery { lambda } => {
                if !(lambda >= 0.0 && lambda.is_finite()) {
                    return Err(CoreError::InvalidConfig(format!(
                        "lambda must be finite and >= 0, got {lambda}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Model tag used in result rows and file names: `none`, `z`, `gnc`, or
    /// `gauss`.
    pub fn label(&self) -> &'static str {
        match *self {
            NoiseModel::Exact => "none",
            NoiseModel::NoisyChannel { q, .. } if q == 0.0 => "z",
            NoiseModel::NoisyChannel { .. } => "gnc",
            NoiseModel::NoisyQuery { .. } => "gauss",
        }
    }
}

/// The measured results, one entry per query. Entries are integer-valued
/// under `Exact` and `NoisyChannel`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryResults {
    pub values: Vec<f64>,
}

impl QueryResults {
    pub fn m(&self) -> usize {
        self.values.len()
    }
}

/// The realized per-draw observed bits of a channel measurement, retained
/// only in debug/oracle mode: `observed[j][pos]` is what query `j` read from
/// its `pos`-th draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelDraws {
    pub observed: Vec<Vec<u8>>,
}

fn check_dims(graph: &PoolingGraph, truth: &GroundTruth) -> Result<()> {
    if graph.n() != truth.n() {
        return Err(CoreError::DimensionMismatch(format!(
            "graph has n = {}, truth has n = {}",
            graph.n(),
            truth.n()
        )));
    }
    Ok(())
}

/// Measure all queries of `graph` against `truth` under `model`.
///
/// Draws are consumed in stored order (query 0 first, within a query in draw
/// order), so a fixed handle fully determines the result.
pub fn measure(
    graph: &PoolingGraph,
    truth: &GroundTruth,
    model: &NoiseModel,
    handle: &RngHandle,
) -> Result<QueryResults> {
    check_dims(graph, truth)?;
    model.validate()?;
    let mut rng = handle.rng();
    let mut values = Vec::with_capacity(graph.m());
    match *model {
        NoiseModel::Exact => {
            for q in graph.queries() {
                values.push(exact_sum(q, truth));
            }
        }
        NoiseModel::NoisyChannel { p, q } => {
            // Degenerate probabilities skip the rng so that this consumes
            // draws exactly like `measure_with_draws` on the same handle.
            for query in graph.queries() {
                let mut s = 0u32;
                for &a in query {
                    let one = if truth.bits[a as usize] == 1 {
                        p == 0.0 || rng.gen_bool(1.0 - p)
                    } else {
                        q > 0.0 && rng.gen_bool(q)
                    };
                    s += one as u32;
                }
                values.push(s as f64);
            }
        }
        NoiseModel::NoisyQuery { lambda } => {
            let normal = Normal::new(0.0, lambda)
                .map_err(|e| CoreError::InvalidConfig(format!("bad lambda: {e}")))?;
            for q in graph.queries() {
                values.push(exact_sum(q, truth) + normal.sample(&mut rng));
            }
        }
    }
    Ok(QueryResults { values })
}

fn exact_sum(query: &[u32], truth: &GroundTruth) -> f64 {
    query
        .iter()
        .map(|&a| truth.bits[a as usize] as u32)
        .sum::<u32>() as f64
}

/// Like [`measure`], but also return the realized per-draw observed bits.
///
/// Only `Exact` (where the observed bit is the true bit) and `NoisyChannel`
/// have per-draw observations; `NoisyQuery` noise lives at the query level
/// and is rejected here.
pub fn measure_with_draws(
    graph: &PoolingGraph,
    truth: &GroundTruth,
    model: &NoiseModel,
    handle: &RngHandle,
) -> Result<(QueryResults, ChannelDraws)> {
    check_dims(graph, truth)?;
    model.validate()?;
    let (p, q) = match *model {
        NoiseModel::Exact => (0.0, 0.0),
        NoiseModel::NoisyChannel { p, q } => (p, q),
        NoiseModel::NoisyQuery { .. } => {
            return Err(CoreError::InvalidConfig(
                "per-draw observations exist only for Exact and NoisyChannel".into(),
            ));
        }
    };
    let mut rng = handle.rng();
    let mut values = Vec::with_capacity(graph.m());
    let mut observed = Vec::with_capacity(graph.m());
    for query in graph.queries() {
        let mut s = 0u32;
        let mut obs = Vec::with_capacity(query.len());
        for &a in query {
            let one = if truth.bits[a as usize] == 1 {
                p == 0.0 || rng.gen_bool(1.0 - p)
            } else {
                q > 0.0 && rng.gen_bool(q)
            };
            s += one as u32;
            obs.push(one as u8);
        }
        values.push(s as f64);
        observed.push(obs);
    }
    Ok((QueryResults { values }, ChannelDraws { observed }))
}

/// Count of observed ones in the second neighborhood of `agent`: all draws of
/// all distinct queries containing the agent, excluding the agent's own
/// draws. Together with [`own_observed_contribution`] this decomposes the
/// neighborhood sum: `psi[agent] = xi + own`.
pub fn second_neighborhood_count_oracle(
    graph: &PoolingGraph,
    truth: &GroundTruth,
    agent: usize,
    draws: &ChannelDraws,
) -> Result<u64> {
    check_dims(graph, truth)?;
    if agent >= graph.n() {
        return Err(CoreError::AgentOutOfRange {
            agent,
            n: graph.n(),
        });
    }
    if draws.observed.len() != graph.m() {
        return Err(CoreError::DimensionMismatch(format!(
            "draws cover {} queries, graph has {}",
            draws.observed.len(),
            graph.m()
        )));
    }
    let mut xi = 0u64;
    for &j in graph.distinct_membership(agent) {
        let query = graph.query(j as usize);
        let obs = &draws.observed[j as usize];
        for (pos, &a) in query.iter().enumerate() {
            if a as usize != agent {
                xi += obs[pos] as u64;
            }
        }
    }
    Ok(xi)
}

/// Sum of the agent's own observed bits over all its draws.
pub fn own_observed_contribution(
    graph: &PoolingGraph,
    agent: usize,
    draws: &ChannelDraws,
) -> Result<u64> {
    if agent >= graph.n() {
        return Err(CoreError::AgentOutOfRange {
            agent,
            n: graph.n(),
        });
    }
    let mut own = 0u64;
    for &j in graph.distinct_membership(agent) {
        let query = graph.query(j as usize);
        let obs = &draws.observed[j as usize];
        for (pos, &a) in query.iter().enumerate() {
            if a as usize == agent {
                own += obs[pos] as u64;
            }
        }
    }
    Ok(own)
}
