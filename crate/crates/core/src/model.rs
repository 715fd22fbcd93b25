//! Problem instances: configuration, ground truth, and the pooling multigraph.
//!
//! A problem instance consists of `n` agents, a hidden bit vector of Hamming
//! weight `k`, and `m` queries. Every query draws `gamma` agents uniformly at
//! random *with replacement*, so the design is a bipartite multigraph: agent
//! `i` appears `multi_degree[i]` times in total (counting repeats) and in
//! `distinct_degree[i]` distinct queries.

use crate::error::{CoreError, Result};
use crate::rng::RngHandle;
use rand::Rng;
use std::io::{BufRead, Write};

/// How `k` was derived; carried as metadata and used by threshold formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `k = round(n^theta)` with `theta` in (0,1).
    Sublinear { theta: f64 },
    /// `k = round(zeta * n)` with `zeta` in (0,1).
    Linear { zeta: f64 },
    /// `k` given directly.
    ExplicitK,
}

impl Regime {
    /// The `k` this regime prescribes for `n` agents.
    pub fn derive_k(&self, n: usize) -> Option<usize> {
        match *self {
            Regime::Sublinear { theta } => Some((n as f64).powf(theta).round() as usize),
            Regime::Linear { zeta } => Some((zeta * n as f64).round() as usize),
            Regime::ExplicitK => None,
        }
    }

    /// Compact descriptor used in result rows, e.g. `sublinear:0.25`.
    pub fn label(&self) -> String {
        match *self {
            Regime::Sublinear { theta } => format!("sublinear:{theta}"),
            Regime::Linear { zeta } => format!("linear:{zeta}"),
            Regime::ExplicitK => "explicit".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConfig {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    /// Query size; every query draws exactly `gamma` agents.
    pub gamma: usize,
    pub regime: Regime,
}

impl ProblemConfig {
    /// Explicit-`k` configuration with the default query size `gamma = n/2`.
    pub fn new(n: usize, k: usize, m: usize) -> Result<Self> {
        let cfg = ProblemConfig {
            n,
            k,
            m,
            gamma: n / 2,
            regime: Regime::ExplicitK,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sublinear regime, `k = round(n^theta)`, `gamma = n/2`.
    pub fn sublinear(n: usize, theta: f64, m: usize) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(CoreError::InvalidConfig(format!(
                "theta must lie in (0,1), got {theta}"
            )));
        }
        let regime = Regime::Sublinear { theta };
        let cfg = ProblemConfig {
            n,
            k: regime.derive_k(n).unwrap(),
            m,
            gamma: n / 2,
            regime,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Linear regime, `k = round(zeta * n)`, `gamma = n/2`.
    pub fn linear(n: usize, zeta: f64, m: usize) -> Result<Self> {
        if !(zeta > 0.0 && zeta < 1.0) {
            return Err(CoreError::InvalidConfig(format!(
                "zeta must lie in (0,1), got {zeta}"
            )));
        }
        let regime = Regime::Linear { zeta };
        let cfg = ProblemConfig {
            n,
            k: regime.derive_k(n).unwrap(),
            m,
            gamma: n / 2,
            regime,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_gamma(mut self, gamma: usize) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CoreError::InvalidConfig("n must be positive".into()));
        }
        if self.k > self.n {
            return Err(CoreError::InvalidConfig(format!(
                "k = {} exceeds n = {}",
                self.k, self.n
            )));
        }
        if self.gamma == 0 {
            return Err(CoreError::InvalidConfig(
                "gamma must be positive (n = 1 needs an explicit gamma)".into(),
            ));
        }
        if let Some(k) = self.regime.derive_k(self.n) {
            if k != self.k {
                return Err(CoreError::InvalidConfig(format!(
                    "k = {} does not match the regime's k = {k}",
                    self.k
                )));
            }
        }
        Ok(())
    }
}

/// The hidden bit vector; Hamming weight is exactly `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub bits: Vec<u8>,
}

impl GroundTruth {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(CoreError::InvalidConfig("bits must be 0 or 1".into()));
        }
        Ok(GroundTruth { bits })
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// Indices of the one-bits, ascending.
    pub fn ones(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (b == 1).then_some(i))
            .collect()
    }
}

/// Uniformly random weight-`k` bit vector.
pub fn sample_ground_truth(config: &ProblemConfig, handle: &RngHandle) -> Result<GroundTruth> {
    config.validate()?;
    let mut rng = handle.rng();
    let mut bits = vec![0u8; config.n];
    for idx in rand::seq::index::sample(&mut rng, config.n, config.k) {
        bits[idx] = 1;
    }
    Ok(GroundTruth { bits })
}

/// The bipartite pooling multigraph.
///
/// Queries keep their full ordered draw lists because per-edge channel noise
/// acts on individual draws; the distinct membership lists and both degree
/// vectors are derived once at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolingGraph {
    n: usize,
    gamma: usize,
    queries: Vec<Vec<u32>>,
    multi_degree: Vec<u32>,
    distinct_degree: Vec<u32>,
    distinct_membership: Vec<Vec<u32>>,
}

impl PoolingGraph {
    /// Build a graph from explicit draw lists. Every query must have exactly
    /// `gamma` draws and all indices must be below `n`.
    pub fn from_queries(n: usize, gamma: usize, queries: Vec<Vec<u32>>) -> Result<Self> {
        if n == 0 || gamma == 0 {
            return Err(CoreError::InvalidConfig(
                "graph needs n >= 1 and gamma >= 1".into(),
            ));
        }
        for (j, q) in queries.iter().enumerate() {
            if q.len() != gamma {
                return Err(CoreError::InvalidConfig(format!(
                    "query {j} has {} draws, expected gamma = {gamma}",
                    q.len()
                )));
            }
            if let Some(&bad) = q.iter().find(|&&a| a as usize >= n) {
                return Err(CoreError::AgentOutOfRange {
                    agent: bad as usize,
                    n,
                });
            }
        }

        let m = queries.len();
        let mut multi_degree = vec![0u32; n];
        let mut distinct_degree = vec![0u32; n];
        let mut distinct_membership = vec![Vec::new(); n];
        let mut seen = vec![u32::MAX; n];
        for (j, q) in queries.iter().enumerate() {
            for &a in q {
                multi_degree[a as usize] += 1;
                if seen[a as usize] != j as u32 {
                    seen[a as usize] = j as u32;
                    distinct_degree[a as usize] += 1;
                    distinct_membership[a as usize].push(j as u32);
                }
            }
        }
        debug_assert_eq!(
            multi_degree.iter().map(|&d| d as u64).sum::<u64>(),
            (m as u64) * (gamma as u64)
        );

        Ok(PoolingGraph {
            n,
            gamma,
            queries,
            multi_degree,
            distinct_degree,
            distinct_membership,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.queries.len()
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    /// Ordered draw list of query `j`.
    pub fn query(&self, j: usize) -> &[u32] {
        &self.queries[j]
    }

    pub fn queries(&self) -> &[Vec<u32>] {
        &self.queries
    }

    pub fn multi_degree(&self) -> &[u32] {
        &self.multi_degree
    }

    pub fn distinct_degree(&self) -> &[u32] {
        &self.distinct_degree
    }

    /// Sorted list of distinct query indices containing agent `i`.
    pub fn distinct_membership(&self, i: usize) -> &[u32] {
        &self.distinct_membership[i]
    }
}

/// One uniform with-replacement draw list of size `gamma`.
///
/// Shared by batch sampling and the incremental (query-at-a-time) harness so
/// both produce identically distributed queries from identical streams.
pub fn sample_query<R: Rng>(n: usize, gamma: usize, rng: &mut R) -> Vec<u32> {
    (0..gamma).map(|_| rng.gen_range(0..n as u32)).collect()
}

/// Sample the full `m`-query pooling graph for `config`.
pub fn sample_pooling_graph(config: &ProblemConfig, handle: &RngHandle) -> Result<PoolingGraph> {
    config.validate()?;
    let mut rng = handle.rng();
    let queries = (0..config.m)
        .map(|_| sample_query(config.n, config.gamma, &mut rng))
        .collect();
    PoolingGraph::from_queries(config.n, config.gamma, queries)
}

/// Aggregates of the degree sequences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeSummary {
    pub mean_multi: f64,
    pub mean_distinct: f64,
    pub min_multi: u32,
    pub max_multi: u32,
    pub min_distinct: u32,
    pub max_distinct: u32,
    /// Mean over agents of `distinct_degree / multi_degree`; agents with
    /// multi-degree zero are skipped.
    pub mean_ratio: f64,
}

pub fn degree_summary(graph: &PoolingGraph) -> Result<DegreeSummary> {
    if graph.m() == 0 {
        return Err(CoreError::EmptyGraph("degree ratios need m >= 1"));
    }
    let n = graph.n() as f64;
    let multi = graph.multi_degree();
    let distinct = graph.distinct_degree();
    let mut ratio_sum = 0.0;
    let mut ratio_count = 0usize;
    for (&d, &ds) in multi.iter().zip(distinct) {
        if d > 0 {
            ratio_sum += ds as f64 / d as f64;
            ratio_count += 1;
        }
    }
    Ok(DegreeSummary {
        mean_multi: multi.iter().map(|&d| d as f64).sum::<f64>() / n,
        mean_distinct: distinct.iter().map(|&d| d as f64).sum::<f64>() / n,
        min_multi: *multi.iter().min().unwrap(),
        max_multi: *multi.iter().max().unwrap(),
        min_distinct: *distinct.iter().min().unwrap(),
        max_distinct: *distinct.iter().max().unwrap(),
        mean_ratio: ratio_sum / ratio_count.max(1) as f64,
    })
}

/// Write a graph in the line-oriented text format: a header `n m gamma`,
/// then one line per query listing its `gamma` draws (0-based, space
/// separated).
pub fn write_graph<W: Write>(graph: &PoolingGraph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {} {}", graph.n(), graph.m(), graph.gamma())?;
    let mut line = String::new();
    for q in graph.queries() {
        line.clear();
        for (pos, a) in q.iter().enumerate() {
            if pos > 0 {
                line.push(' ');
            }
            line.push_str(&a.to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Read a graph from the text format produced by [`write_graph`].
pub fn read_graph<R: BufRead>(input: R) -> Result<PoolingGraph> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| CoreError::Parse("missing header line".into()))?
        .map_err(CoreError::from)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(CoreError::Parse(format!(
            "header must be `n m gamma`, got `{header}`"
        )));
    }
    let parse = |s: &str, what: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| CoreError::Parse(format!("bad {what}: `{s}`")))
    };
    let n = parse(fields[0], "n")?;
    let m = parse(fields[1], "m")?;
    let gamma = parse(fields[2], "gamma")?;

    let mut queries = Vec::with_capacity(m);
    for (j, line) in lines.enumerate() {
        let line = line.map_err(CoreError::from)?;
        if line.trim().is_empty() {
            continue;
        }
        let q: Result<Vec<u32>> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<u32>()
                    .map_err(|_| CoreError::Parse(format!("bad agent index `{s}` in query {j}")))
            })
            .collect();
        queries.push(q?);
    }
    if queries.len() != m {
        return Err(CoreError::Parse(format!(
            "header promises {m} queries, found {}",
            queries.len()
        )));
    }
    PoolingGraph::from_queries(n, gamma, queries)
}
