//! Decoder invariances: incremental accumulation, rank stability, network
//! equivalence.

use pooled_core::greedy::{
    bitonic_sort, compute_scores, declare_top_k, neighborhood_sums, rank_by_scores, RankMethod,
};
use pooled_core::model::{sample_ground_truth, sample_pooling_graph, GroundTruth, ProblemConfig};
use pooled_core::noise::{measure, NoiseModel, QueryResults};
use pooled_core::rng::RngHandle;
use proptest::prelude::*;

fn random_instance(
    n: usize,
    gamma: usize,
    m: usize,
    k: usize,
    seed: u64,
) -> (GroundTruth, pooled_core::model::PoolingGraph) {
    let config = ProblemConfig::new(n, k.min(n), m)
        .and_then(|c| c.with_gamma(gamma))
        .unwrap();
    let handle = RngHandle::new(seed);
    let truth = sample_ground_truth(&config, &handle.substream(0)).unwrap();
    let graph = sample_pooling_graph(&config, &handle.substream(1)).unwrap();
    (truth, graph)
}

proptest! {
    /// Accumulating one query at a time reproduces the batch sums bit for
    /// bit, including under continuous-valued noisy results.
    #[test]
    fn incremental_psi_is_bit_identical(
        n in 2usize..25,
        gamma in 1usize..10,
        m in 0usize..15,
        k in 0usize..25,
        seed in any::<u64>(),
    ) {
        let (truth, graph) = random_instance(n, gamma, m, k, seed);
        let results = measure(
            &graph,
            &truth,
            &NoiseModel::NoisyQuery { lambda: 1.5 },
            &RngHandle::new(seed ^ 0xFEED),
        )
        .unwrap();
        let batch = neighborhood_sums(&graph, &results).unwrap();

        let mut incremental = vec![0.0f64; n];
        let mut seen = vec![u32::MAX; n];
        for (j, query) in graph.queries().iter().enumerate() {
            for &a in query {
                let a = a as usize;
                if seen[a] != j as u32 {
                    seen[a] = j as u32;
                    incremental[a] += results.values[j];
                }
            }
        }
        prop_assert_eq!(batch, incremental);
    }

    /// Shifting every score by a constant or scaling by a positive constant
    /// leaves the ranking unchanged (integer scores keep the arithmetic
    /// exact).
    #[test]
    fn ranking_is_affine_invariant(
        raw in prop::collection::vec(-50i32..50, 1..40),
        shift in -20i32..20,
        scale in 1u32..4,
    ) {
        let scores: Vec<f64> = raw.iter().map(|&v| v as f64).collect();
        let shifted: Vec<f64> = raw.iter().map(|&v| (v + shift) as f64).collect();
        let scaled: Vec<f64> = raw.iter().map(|&v| (v * scale as i32) as f64).collect();
        let base = rank_by_scores(&scores);
        prop_assert_eq!(&base, &rank_by_scores(&shifted));
        prop_assert_eq!(&base, &rank_by_scores(&scaled));
    }

    /// The sorting network and the comparison sort declare identical
    /// rankings, ties and all.
    #[test]
    fn bitonic_matches_comparison_sort(
        raw in prop::collection::vec(-5i32..5, 0..64),
    ) {
        let scores: Vec<f64> = raw.iter().map(|&v| v as f64).collect();
        let keys: Vec<(f64, usize)> = scores.iter().cloned().zip(0..).collect();
        let network = bitonic_sort(&keys);
        let comparison = rank_by_scores(&scores);
        prop_assert_eq!(network, comparison);
        for k in 0..=scores.len() {
            let a = declare_top_k(&scores, k, RankMethod::BitonicNetwork);
            let b = declare_top_k(&scores, k, RankMethod::ComparisonSort);
            prop_assert_eq!(a, b);
        }
    }

    /// Relabeling the agents permutes sums and scores exactly.
    #[test]
    fn scores_are_equivariant_under_relabeling(
        n in 2usize..20,
        gamma in 1usize..8,
        m in 0usize..12,
        k in 0usize..20,
        seed in any::<u64>(),
    ) {
        let (truth, graph) = random_instance(n, gamma, m, k, seed);
        let k = k.min(n);

        // Reverse is as good as any permutation and needs no extra sampling.
        let perm: Vec<usize> = (0..n).rev().collect();
        let permuted_queries: Vec<Vec<u32>> = graph
            .queries()
            .iter()
            .map(|q| q.iter().map(|&a| perm[a as usize] as u32).collect())
            .collect();
        let permuted_graph =
            pooled_core::model::PoolingGraph::from_queries(n, gamma, permuted_queries).unwrap();
        let mut permuted_bits = vec![0u8; n];
        for (i, &b) in truth.bits.iter().enumerate() {
            permuted_bits[perm[i]] = b;
        }
        let permuted_truth = GroundTruth::from_bits(permuted_bits).unwrap();

        // Same handle: each draw reads the same bit value in both labelings,
        // so the measured vectors coincide.
        let handle = RngHandle::new(seed ^ 0xBEEF);
        let model = NoiseModel::NoisyChannel { p: 0.25, q: 0.15 };
        let results = measure(&graph, &truth, &model, &handle).unwrap();
        let permuted_results = measure(&permuted_graph, &permuted_truth, &model, &handle).unwrap();
        prop_assert_eq!(&results.values, &permuted_results.values);

        let scores = compute_scores(&neighborhood_sums(&graph, &results).unwrap(), &graph, k)
            .unwrap();
        let permuted_scores = compute_scores(
            &neighborhood_sums(&permuted_graph, &permuted_results).unwrap(),
            &permuted_graph,
            k,
        )
        .unwrap();
        for i in 0..n {
            prop_assert_eq!(scores.score[i], permuted_scores.score[perm[i]]);
        }

        // With all scores distinct the declared set must map through the
        // permutation as well (ties break by index, which is not label
        // invariant).
        let mut sorted = scores.score.clone();
        sorted.sort_by(f64::total_cmp);
        let distinct = sorted.windows(2).all(|w| w[0] != w[1]);
        if distinct {
            let est = declare_top_k(&scores.score, k, RankMethod::ComparisonSort);
            let permuted_est =
                declare_top_k(&permuted_scores.score, k, RankMethod::ComparisonSort);
            for i in 0..n {
                prop_assert_eq!(est.bits[i], permuted_est.bits[perm[i]]);
            }
            prop_assert_eq!(est.separation_margin, permuted_est.separation_margin);
        }
    }

    /// score(k) - score(k') = distinct_degree * (k' - k) / 2, elementwise.
    #[test]
    fn score_depends_on_k_through_the_centering_term(
        n in 2usize..20,
        gamma in 1usize..8,
        m in 0usize..12,
        seed in any::<u64>(),
        k1 in 0usize..20,
        k2 in 0usize..20,
    ) {
        let (truth, graph) = random_instance(n, gamma, m, n / 2, seed);
        let results = measure(&graph, &truth, &NoiseModel::Exact, &RngHandle::new(3)).unwrap();
        let psi = neighborhood_sums(&graph, &results).unwrap();
        let (k1, k2) = (k1.min(n), k2.min(n));
        let s1 = compute_scores(&psi, &graph, k1).unwrap();
        let s2 = compute_scores(&psi, &graph, k2).unwrap();
        for i in 0..n {
            let gap = graph.distinct_degree()[i] as f64 * (k2 as f64 - k1 as f64) / 2.0;
            prop_assert_eq!(s1.score[i] - s2.score[i], gap);
        }
    }
}

/// Against a one-hot results vector, psi recovers distinct membership.
#[test]
fn one_hot_results_probe_membership() {
    let (_, graph) = random_instance(15, 6, 8, 5, 11);
    for j in 0..graph.m() {
        let mut values = vec![0.0; graph.m()];
        values[j] = 1.0;
        let psi = neighborhood_sums(&graph, &QueryResults { values }).unwrap();
        for i in 0..graph.n() {
            let member = graph.query(j).contains(&(i as u32));
            assert_eq!(psi[i], member as u8 as f64);
        }
    }
}
