//! Acceptance gate: one test per criterion. Every test prints a single
//! `criterion N: PASS/FAIL - details` line before asserting, so a full run
//! with `--nocapture` yields the whole scoreboard.

use pooled_core::amp::{
    amp_step, build_design_matrix, denoise, AmpState, Denoiser, Normalization,
};
use pooled_core::cases::seven_agent_case;
use pooled_core::greedy::{self, RankMethod};
use pooled_core::model::{sample_ground_truth, sample_pooling_graph, ProblemConfig, Regime};
use pooled_core::noise::{measure, measure_with_draws, NoiseModel, QueryResults};
use pooled_core::rng::RngHandle;
use pooled_core::theory::{
    required_queries_bound, ThresholdModel, ThresholdQuery, ThresholdRegime,
};
use pooled_harness::experiment::{
    rate_curves, run_experiment, success_rate, verify_decomposition, Algorithm, ExperimentKind,
    ExperimentSpec, GridPoint, RequiredOptions,
};
use pooled_harness::window::transition_window;
use rand::Rng;
use std::time::Instant;

fn report(criterion: u32, pass: bool, detail: &str) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} - {detail}");
    pass
}

fn sublinear_bound(n: usize, theta: f64, model: ThresholdModel, eps: f64) -> usize {
    required_queries_bound(&ThresholdQuery {
        n,
        regime: ThresholdRegime::Sublinear { theta },
        model,
        eps,
    })
    .unwrap() as usize
}

#[test]
fn criterion_1_seven_agent_fixture() {
    let started = Instant::now();
    let (config, truth, graph) = seven_agent_case();
    let results = measure(&graph, &truth, &NoiseModel::Exact, &RngHandle::new(0)).unwrap();
    let (table, estimate) =
        greedy::reconstruct(&graph, &results, config.k, RankMethod::ComparisonSort).unwrap();
    let (exact, overlap) = greedy::evaluate(&estimate, &truth).unwrap();
    let declared: Vec<usize> = estimate
        .bits
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| (b == 1).then_some(i))
        .collect();
    let elapsed = started.elapsed().as_secs_f64();
    let pass = results.values == vec![2.0, 3.0, 1.0, 1.0, 1.0]
        && table.psi == vec![5.0, 3.0, 6.0, 4.0, 5.0, 4.0, 3.0]
        && table.score == vec![2.0, 0.0, 1.5, -0.5, 0.5, 1.0, -1.5]
        && declared == vec![0, 2, 5]
        && !exact
        && overlap == 2.0 / 3.0
        && elapsed < 1.0;
    assert!(report(
        1,
        pass,
        &format!(
            "results {:?}, psi {:?}, scores {:?}, declared {declared:?}, overlap {overlap:.4}, {elapsed:.2}s",
            results.values, table.psi, table.score
        ),
    ));
}

#[test]
fn criterion_2_degree_concentration() {
    let started = Instant::now();
    let config = ProblemConfig::new(10_000, 10, 1000).unwrap();
    let handle = RngHandle::new(202);
    let (mut multi_total, mut distinct_total) = (0.0f64, 0.0f64);
    for g in 0..20 {
        let graph = sample_pooling_graph(&config, &handle.substream(g)).unwrap();
        multi_total += graph.multi_degree().iter().map(|&d| d as f64).sum::<f64>();
        distinct_total += graph
            .distinct_degree()
            .iter()
            .map(|&d| d as f64)
            .sum::<f64>();
    }
    let mean_multi = multi_total / (20.0 * config.n as f64);
    let ratio = distinct_total / multi_total;
    let elapsed = started.elapsed().as_secs_f64();
    let pass = (mean_multi - 500.0).abs() <= 5.0 && (0.78..=0.80).contains(&ratio) && elapsed < 60.0;
    assert!(report(
        2,
        pass,
        &format!("mean multi-degree {mean_multi:.3}, distinct/multi ratio {ratio:.5}, {elapsed:.1}s"),
    ));
}

#[test]
fn criterion_3_noiseless_recovery_phase() {
    let started = Instant::now();
    let (n, theta) = (10_000, 0.25);
    let m_hi = sublinear_bound(n, theta, ThresholdModel::Noiseless, 0.05);
    let m_lo = m_hi / 4;
    let handle = RngHandle::new(303);
    let hi = success_rate(
        &ProblemConfig::sublinear(n, theta, m_hi).unwrap(),
        &NoiseModel::Exact,
        100,
        Algorithm::Greedy,
        handle.substream(0),
        false,
    )
    .unwrap();
    let lo = success_rate(
        &ProblemConfig::sublinear(n, theta, m_lo).unwrap(),
        &NoiseModel::Exact,
        100,
        Algorithm::Greedy,
        handle.substream(1),
        false,
    )
    .unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let pass = hi.successes >= 90 && lo.successes <= 10 && elapsed < 600.0;
    assert!(report(
        3,
        pass,
        &format!(
            "m={m_hi}: {}/100 exact (want >= 90); m={m_lo}: {}/100 exact (want <= 10); {elapsed:.1}s",
            hi.successes, lo.successes
        ),
    ));
}

#[test]
fn criterion_4_z_channel_operating_point() {
    let started = Instant::now();
    let m = sublinear_bound(1000, 0.25, ThresholdModel::Z { p: 0.1 }, 0.1);
    let stats = success_rate(
        &ProblemConfig::sublinear(1000, 0.25, m).unwrap(),
        &NoiseModel::NoisyChannel { p: 0.1, q: 0.0 },
        100,
        Algorithm::Greedy,
        RngHandle::new(404),
        false,
    )
    .unwrap();
    let rate = stats.successes as f64 / 100.0;
    let elapsed = started.elapsed().as_secs_f64();
    let pass = (0.2..=0.6).contains(&rate) && stats.mean_overlap >= 0.8 && elapsed < 300.0;
    assert!(report(
        4,
        pass,
        &format!(
            "m={m}: rate {rate:.2} (want within [0.2, 0.6]), mean overlap {:.3} (want >= 0.8), {elapsed:.1}s",
            stats.mean_overlap
        ),
    ));
}

#[test]
fn criterion_5_gaussian_noise_two_sided() {
    let started = Instant::now();
    let m = sublinear_bound(1000, 0.25, ThresholdModel::NoisyQuery { lambda: 1.0 }, 0.1);
    let config = ProblemConfig::sublinear(1000, 0.25, m).unwrap();
    let handle = RngHandle::new(505);
    let mild = success_rate(
        &config,
        &NoiseModel::NoisyQuery { lambda: 1.0 },
        100,
        Algorithm::Greedy,
        handle.substream(0),
        false,
    )
    .unwrap();
    let heavy = success_rate(
        &config,
        &NoiseModel::NoisyQuery {
            lambda: (m as f64).sqrt(),
        },
        100,
        Algorithm::Greedy,
        handle.substream(1),
        false,
    )
    .unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let pass = mild.successes >= 50 && heavy.successes <= 90 && elapsed < 300.0;
    assert!(report(
        5,
        pass,
        &format!(
            "m={m}: lambda=1 rate {}/100 (want >= 50); lambda=sqrt(m) rate {}/100 (want <= 90); {elapsed:.1}s",
            mild.successes, heavy.successes
        ),
    ));
}

#[test]
fn criterion_6_threshold_regression() {
    let started = Instant::now();
    let z = sublinear_bound(1000, 0.25, ThresholdModel::Z { p: 0.1 }, 0.1);
    let z_degenerate = sublinear_bound(1000, 0.25, ThresholdModel::Z { p: 0.0 }, 0.1);
    let noiseless = sublinear_bound(1000, 0.25, ThresholdModel::Noiseless, 0.1);
    let linear = required_queries_bound(&ThresholdQuery {
        n: 100,
        regime: ThresholdRegime::Linear { zeta: 0.1 },
        model: ThresholdModel::Noiseless,
        eps: 0.0,
    })
    .unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let pass = z == 174 && z_degenerate == noiseless && noiseless == 157 && linear == 290
        && elapsed < 1.0;
    assert!(report(
        6,
        pass,
        &format!(
            "z(p=0.1) {z} (want 174); z(p=0) {z_degenerate} == noiseless {noiseless}; linear {linear} (want 290); {elapsed:.2}s"
        ),
    ));
}

fn first_step_matches_plain_denoising() -> (bool, f64) {
    let (config, truth, graph) = seven_agent_case();
    let design = build_design_matrix(&graph, Normalization::CenteredScaled).unwrap();
    let raw = measure(&graph, &truth, &NoiseModel::Exact, &RngHandle::new(0)).unwrap();
    let shift = design.gamma() as f64 * config.k as f64 / config.n as f64;
    let scale = (design.m() as f64).sqrt();
    let transformed = QueryResults {
        values: raw.values.iter().map(|v| (v - shift) / scale).collect(),
    };

    let mut worst = 0.0f64;
    for denoiser in [
        Denoiser::SoftThreshold { tau: 0.4 },
        Denoiser::bayes(config.k, config.n),
    ] {
        let state = AmpState::initial(&design, &transformed.values).unwrap();
        let next = amp_step(&state, &design, &transformed, &denoiser).unwrap();
        let y = ndarray::Array1::from(transformed.values.clone());
        let x = design.entries().t().dot(&y);
        let effective = match denoiser {
            Denoiser::BayesBernoulli { prior, .. } => Denoiser::BayesBernoulli {
                prior,
                noise_var: (y.dot(&y) / design.m() as f64).max(1e-12),
            },
            d => d,
        };
        for i in 0..config.n {
            let (expected, _) = denoise(&effective, x[i], 0);
            worst = worst.max((next.sigma_est[i] - expected).abs());
        }
    }
    (worst <= 1e-10, worst)
}

fn denoiser_derivatives_match_central_differences() -> (bool, f64) {
    let h = 1e-5;
    let cases = [
        (
            Denoiser::SoftThreshold { tau: 0.7 },
            vec![-2.0, -1.0, -0.3, 0.0, 0.25, 0.9, 1.8],
        ),
        (
            Denoiser::BayesBernoulli {
                prior: 0.006,
                noise_var: 0.37,
            },
            vec![-1.5, -0.4, 0.0, 0.35, 0.8, 1.2, 2.0],
        ),
        (
            Denoiser::BayesBernoulli {
                prior: 0.4,
                noise_var: 1.3,
            },
            vec![-2.0, -0.5, 0.1, 0.6, 1.4],
        ),
    ];
    let mut worst = 0.0f64;
    for (denoiser, xs) in &cases {
        for &x in xs {
            let (_, analytic) = denoise(denoiser, x, 3);
            let (up, _) = denoise(denoiser, x + h, 3);
            let (down, _) = denoise(denoiser, x - h, 3);
            worst = worst.max((analytic - (up - down) / (2.0 * h)).abs());
        }
    }
    (worst <= 1e-5, worst)
}

fn paired_transition_windows() -> (bool, f64, f64) {
    let spec = ExperimentSpec {
        kind: ExperimentKind::AmpCompare,
        points: (0..=30)
            .map(|i| GridPoint {
                n: 1000,
                regime: Regime::Sublinear { theta: 0.25 },
                model: NoiseModel::Exact,
                m: Some(10 * i),
            })
            .collect(),
        trials: 100,
        master_seed: 707,
        algorithms: vec![Algorithm::Greedy, Algorithm::Amp],
        out_dir: None,
        workers: 0,
        oracle: false,
        timing: false,
        eps: 0.1,
        required: RequiredOptions::default(),
    };
    let output = run_experiment(&spec).unwrap();
    let curves = rate_curves(&output.rows);
    let width = |algo: &str| {
        let curve = &curves[&("none".to_string(), 1000, algo.to_string())];
        let (m10, m90) = transition_window(curve).unwrap();
        m90 - m10
    };
    let (greedy, amp) = (width("greedy"), width("amp"));
    (amp <= greedy, greedy, amp)
}

#[test]
fn criterion_7_amp_sanity() {
    let started = Instant::now();
    let (first_ok, first_err) = first_step_matches_plain_denoising();
    let (deriv_ok, deriv_err) = denoiser_derivatives_match_central_differences();
    let (window_ok, greedy_width, amp_width) = paired_transition_windows();
    let elapsed = started.elapsed().as_secs_f64();
    let pass = first_ok && deriv_ok && window_ok && elapsed < 600.0;
    assert!(report(
        7,
        pass,
        &format!(
            "first-step error {first_err:.2e} (want <= 1e-10); derivative error {deriv_err:.2e} (want <= 1e-5); window width amp {amp_width} vs greedy {greedy_width} (want amp <= greedy); {elapsed:.1}s"
        ),
    ));
}

#[test]
fn criterion_8_byte_identical_repro() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &std::path::Path, workers: &str| {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_pooled"))
            .args([
                "repro", "--figure", "5", "--trials", "5", "--seed", "42", "--workers", workers,
            ])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success(), "repro run failed");
    };
    let first = dir.path().join("w1");
    let second = dir.path().join("w4");
    run(&first, "1");
    run(&second, "4");
    let a = std::fs::read(first.join("results.csv")).unwrap();
    let b = std::fs::read(second.join("results.csv")).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let pass = !a.is_empty() && a == b && elapsed < 120.0;
    assert!(report(
        8,
        pass,
        &format!(
            "results.csv {} bytes, workers 1 vs 4 identical: {}; {elapsed:.1}s",
            a.len(),
            a == b
        ),
    ));
}

#[test]
fn criterion_9_oracle_decomposition() {
    let started = Instant::now();
    let handle = RngHandle::new(909);
    let mut params = handle.substream(0).rng();
    let mut failures = Vec::new();
    for i in 0..50u64 {
        let n = params.gen_range(2..=20usize);
        let k = params.gen_range(0..=n);
        let m = params.gen_range(1..=15usize);
        let config = ProblemConfig::new(n, k, m).unwrap();
        let model = match i % 3 {
            0 => NoiseModel::Exact,
            1 => NoiseModel::NoisyChannel { p: 0.3, q: 0.0 },
            _ => NoiseModel::NoisyChannel { p: 0.2, q: 0.15 },
        };
        let sub = handle.substream(i + 1);
        let truth = sample_ground_truth(&config, &sub.substream(0)).unwrap();
        let graph = sample_pooling_graph(&config, &sub.substream(1)).unwrap();
        let (results, draws) =
            measure_with_draws(&graph, &truth, &model, &sub.substream(2)).unwrap();
        if let Err(e) = verify_decomposition(&graph, &truth, &results, &draws) {
            failures.push(format!("instance {i} (n={n}, k={k}, m={m}): {e}"));
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = failures.is_empty() && elapsed < 10.0;
    assert!(report(
        9,
        pass,
        &format!(
            "50 instances, {} decomposition failures{}{}; {elapsed:.2}s",
            failures.len(),
            if failures.is_empty() { "" } else { ": " },
            failures.join("; ")
        ),
    ));
}
