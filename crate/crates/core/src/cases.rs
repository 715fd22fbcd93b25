//! Small hand-checked instances shared across test suites.

use crate::model::{GroundTruth, PoolingGraph, ProblemConfig};

/// Seven agents, three of them ones, five queries of four draws each.
///
/// Worked quantities for this instance, used as oracles:
/// multi-degrees (2, 3, 3, 3, 3, 2, 4), distinct degrees
/// (2, 2, 3, 3, 3, 2, 3), exact results (2, 3, 1, 1, 1), neighborhood sums
/// (5, 3, 6, 4, 5, 4, 3), scores at k = 3
/// (2, 0, 1.5, -0.5, 0.5, 1, -1.5), declared set {0, 2, 5} with margin 0.5
/// and overlap 2/3 against the truth {0, 2, 4}.
pub fn seven_agent_case() -> (ProblemConfig, GroundTruth, PoolingGraph) {
    let config = ProblemConfig::new(7, 3, 5)
        .and_then(|c| c.with_gamma(4))
        .expect("static case is valid");
    let truth = GroundTruth::from_bits(vec![1, 0, 1, 0, 1, 0, 0]).expect("static case is valid");
    let queries = vec![
        vec![0, 1, 2, 3],
        vec![0, 2, 4, 5],
        vec![1, 1, 2, 6],
        vec![3, 4, 5, 6],
        vec![3, 4, 6, 6],
    ];
    let graph = PoolingGraph::from_queries(7, 4, queries).expect("static case is valid");
    (config, truth, graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrees_match_hand_count() {
        let (config, truth, graph) = seven_agent_case();
        assert_eq!((config.n, config.k, config.m, config.gamma), (7, 3, 5, 4));
        assert_eq!(truth.weight(), 3);
        assert_eq!(graph.multi_degree(), &[2, 3, 3, 3, 3, 2, 4]);
        assert_eq!(graph.distinct_degree(), &[2, 2, 3, 3, 3, 2, 3]);
    }
}
