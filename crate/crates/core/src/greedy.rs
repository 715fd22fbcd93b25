//! The distributed greedy decoder.
//!
//! Phase I accumulates, for every agent, the sum `psi[i]` of the results of
//! all *distinct* queries containing it (a query that drew an agent twice
//! still contributes its result once). Phase II ranks agents by the score
//! `psi[i] - distinct_degree[i] * k / 2`, descending, ties broken by
//! ascending index, and declares the top `k` agents as ones. The ranking can
//! run through a Batcher bitonic sorting network, mirroring how a distributed
//! implementation would sort, or through an ordinary comparison sort; both
//! produce the identical permutation.

use crate::error::{CoreError, Result};
use crate::model::{GroundTruth, PoolingGraph};
use crate::noise::QueryResults;

/// Per-agent neighborhood sums and scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub psi: Vec<f64>,
    pub distinct_degree: Vec<u32>,
    pub score: Vec<f64>,
    pub k: usize,
}

/// A declared reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub bits: Vec<u8>,
    /// Agent indices in rank order (best score first).
    pub ranking: Vec<usize>,
    /// k-th largest score minus (k+1)-th largest; `+inf` when k is 0 or n.
    pub separation_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMethod {
    ComparisonSort,
    BitonicNetwork,
}

/// Phase I: `psi[i] = sum of results over the distinct queries containing i`.
///
/// Results are added in ascending query order per agent, which fixes the
/// floating-point summation order; an incremental query-at-a-time
/// accumulation in the same order reproduces these sums exactly.
pub fn neighborhood_sums(graph: &PoolingGraph, results: &QueryResults) -> Result<Vec<f64>> {
    if results.m() != graph.m() {
        return Err(CoreError::DimensionMismatch(format!(
            "{} results for {} queries",
            results.m(),
            graph.m()
        )));
    }
    let mut psi = vec![0.0; graph.n()];
    let mut seen = vec![u32::MAX; graph.n()];
    for (j, query) in graph.queries().iter().enumerate() {
        let value = results.values[j];
        for &a in query {
            if seen[a as usize] != j as u32 {
                seen[a as usize] = j as u32;
                psi[a as usize] += value;
            }
        }
    }
    Ok(psi)
}

/// Phase II scores: `psi[i] - distinct_degree[i] * k / 2`.
pub fn compute_scores(psi: &[f64], graph: &PoolingGraph, k: usize) -> Result<ScoreTable> {
    if psi.len() != graph.n() {
        return Err(CoreError::DimensionMismatch(format!(
            "{} sums for {} agents",
            psi.len(),
            graph.n()
        )));
    }
    if k > graph.n() {
        return Err(CoreError::InvalidConfig(format!(
            "k = {k} exceeds n = {}",
            graph.n()
        )));
    }
    let half_k = k as f64 / 2.0;
    let score = psi
        .iter()
        .zip(graph.distinct_degree())
        .map(|(&p, &d)| p - d as f64 * half_k)
        .collect();
    Ok(ScoreTable {
        psi: psi.to_vec(),
        distinct_degree: graph.distinct_degree().to_vec(),
        score,
        k,
    })
}

/// Rank order: higher score first, ties by ascending index. Total on finite
/// scores.
#[inline]
fn rank_before(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Rank agents by `scores` (descending, ties by ascending index) with a
/// comparison sort.
pub fn rank_by_scores(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&i, &j| {
        if rank_before((scores[i], i), (scores[j], j)) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    order
}

/// Build an [`Estimate`] by taking the top `k` of `scores`.
pub fn declare_top_k(scores: &[f64], k: usize, method: RankMethod) -> Estimate {
    let n = scores.len();
    let ranking = match method {
        RankMethod::ComparisonSort => rank_by_scores(scores),
        RankMethod::BitonicNetwork => {
            let keys: Vec<(f64, usize)> = scores.iter().copied().zip(0..n).collect();
            bitonic_sort(&keys)
        }
    };
    let mut bits = vec![0u8; n];
    for &i in &ranking[..k.min(n)] {
        bits[i] = 1;
    }
    let separation_margin = if k == 0 || k >= n {
        f64::INFINITY
    } else {
        scores[ranking[k - 1]] - scores[ranking[k]]
    };
    Estimate {
        bits,
        ranking,
        separation_margin,
    }
}

/// Phase II: rank the score table and declare the top `k` agents as ones.
pub fn rank_and_declare(scores: &ScoreTable, k: usize, method: RankMethod) -> Result<Estimate> {
    if k > scores.score.len() {
        return Err(CoreError::InvalidConfig(format!(
            "k = {k} exceeds n = {}",
            scores.score.len()
        )));
    }
    Ok(declare_top_k(&scores.score, k, method))
}

/// Batcher's bitonic sorting network on `(score, index)` keys.
///
/// The input is padded to the next power of two with sentinel keys that rank
/// last; the network then runs the full fixed comparator schedule, performing
/// `(len/2) * log2(len) * (log2(len)+1) / 2` compare-exchanges. Returns the
/// index components in rank order (best first).
pub fn bitonic_sort(keys: &[(f64, usize)]) -> Vec<usize> {
    bitonic_sort_counted(keys).0
}

/// [`bitonic_sort`] plus the number of compare-exchanges executed.
pub fn bitonic_sort_counted(keys: &[(f64, usize)]) -> (Vec<usize>, usize) {
    if keys.is_empty() {
        return (Vec::new(), 0);
    }
    let len = keys.len().next_power_of_two();
    let mut work: Vec<(f64, usize)> = Vec::with_capacity(len);
    work.extend_from_slice(keys);
    work.resize(len, (f64::NEG_INFINITY, usize::MAX));

    let mut comparators = 0usize;
    let mut k = 2;
    while k <= len {
        let mut j = k / 2;
        while j > 0 {
            for i in 0..len {
                let l = i ^ j;
                if l > i {
                    comparators += 1;
                    let ascending = i & k == 0;
                    if ascending == rank_before(work[l], work[i]) {
                        work.swap(i, l);
                    }
                }
            }
            j /= 2;
        }
        k *= 2;
    }

    let order = work
        .into_iter()
        .filter_map(|(_, idx)| (idx != usize::MAX).then_some(idx))
        .collect();
    (order, comparators)
}

/// Exact-match flag and overlap `|declared ones ∩ true ones| / k` (1.0 when
/// k = 0).
pub fn evaluate(estimate: &Estimate, truth: &GroundTruth) -> Result<(bool, f64)> {
    if estimate.bits.len() != truth.n() {
        return Err(CoreError::DimensionMismatch(format!(
            "estimate has n = {}, truth has n = {}",
            estimate.bits.len(),
            truth.n()
        )));
    }
    let k = truth.weight();
    let hits = estimate
        .bits
        .iter()
        .zip(&truth.bits)
        .filter(|&(&e, &t)| e == 1 && t == 1)
        .count();
    let exact = estimate.bits == truth.bits;
    let overlap = if k == 0 { 1.0 } else { hits as f64 / k as f64 };
    Ok((exact, overlap))
}

/// Full pipeline: sums, scores, ranking, declaration.
pub fn reconstruct(
    graph: &PoolingGraph,
    results: &QueryResults,
    k: usize,
    method: RankMethod,
) -> Result<(ScoreTable, Estimate)> {
    let psi = neighborhood_sums(graph, results)?;
    let table = compute_scores(&psi, graph, k)?;
    let estimate = rank_and_declare(&table, k, method)?;
    Ok((table, estimate))
}
