//! Canned experiment presets behind `pooled repro --figure N`.
//!
//! Each preset fixes the full parameter grid; trials, seed, output
//! directory, and worker count stay adjustable so quick spot checks and full
//! runs share one code path.

use crate::error::{HarnessError, Result};
use crate::experiment::{Algorithm, ExperimentKind, ExperimentSpec, GridPoint, RequiredOptions};
use pooled_core::model::Regime;
use pooled_core::noise::NoiseModel;
use std::path::PathBuf;

/// Adjustable knobs shared by every preset.
#[derive(Debug, Clone)]
pub struct PresetOptions {
    pub trials: Option<usize>,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub workers: usize,
    /// Bound slack; `None` keeps each preset's own default (0.05 for the
    /// required-queries presets, 0.1 for the rate presets).
    pub eps: Option<f64>,
    pub cap: Option<usize>,
    pub oracle: bool,
    pub timing: bool,
}

impl Default for PresetOptions {
    fn default() -> Self {
        PresetOptions {
            trials: None,
            seed: 42,
            out_dir: None,
            workers: 0,
            eps: None,
            cap: None,
            oracle: false,
            timing: false,
        }
    }
}

const N_GRID: [usize; 5] = [100, 316, 1000, 3162, 10_000];
const THETA: f64 = 0.25;

fn points_for(models: &[NoiseModel], m: Option<usize>) -> Vec<GridPoint> {
    let mut points = Vec::new();
    for &model in models {
        for &n in &N_GRID {
            points.push(GridPoint {
                n,
                regime: Regime::Sublinear { theta: THETA },
                model,
                m,
            });
        }
    }
    points
}

fn required_spec(models: &[NoiseModel], opts: &PresetOptions, default_dir: &str) -> ExperimentSpec {
    ExperimentSpec {
        kind: ExperimentKind::RequiredQueries,
        points: points_for(models, None),
        trials: opts.trials.unwrap_or(10),
        master_seed: opts.seed,
        algorithms: vec![Algorithm::Greedy],
        out_dir: Some(
            opts.out_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from(default_dir)),
        ),
        workers: opts.workers,
        oracle: opts.oracle,
        timing: opts.timing,
        eps: opts.eps.unwrap_or(0.05),
        required: RequiredOptions {
            cap: opts.cap,
            stride: 1,
        },
    }
}

/// The sufficiency-bound companion table for a preset, if it has one.
/// Returned as a second spec so the bound lands in the same output
/// directory.
fn bound_spec(models: &[NoiseModel], base: &ExperimentSpec) -> ExperimentSpec {
    ExperimentSpec {
        kind: ExperimentKind::ThresholdTable,
        points: points_for(models, None),
        trials: 1,
        algorithms: Vec::new(),
        ..base.clone()
    }
}

/// Median queries for exact recovery under Z-channel noise,
/// `p in {0.1, 0.3, 0.5}`, plus the sufficiency bound at `p = 0.1`.
pub fn figure2(opts: &PresetOptions) -> Vec<ExperimentSpec> {
    let models = [0.1, 0.3, 0.5]
        .map(|p| NoiseModel::NoisyChannel { p, q: 0.0 })
        .to_vec();
    let base = required_spec(&models, opts, "fig2");
    let bound = bound_spec(&[NoiseModel::NoisyChannel { p: 0.1, q: 0.0 }], &base);
    vec![base, bound]
}

/// Median queries under additive Gaussian noise, `lambda in {0, 1, 2, 3}`,
/// plus the noiseless sufficiency bound.
pub fn figure3(opts: &PresetOptions) -> Vec<ExperimentSpec> {
    let models = [0.0, 1.0, 2.0, 3.0]
        .map(|lambda| NoiseModel::NoisyQuery { lambda })
        .to_vec();
    let base = required_spec(&models, opts, "fig3");
    let bound = bound_spec(&[NoiseModel::Exact], &base);
    vec![base, bound]
}

/// Median queries under the symmetric general noisy channel,
/// `p = q in {1e-1 .. 1e-5}`.
pub fn figure4(opts: &PresetOptions) -> Vec<ExperimentSpec> {
    let models = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]
        .map(|r| NoiseModel::NoisyChannel { p: r, q: r })
        .to_vec();
    vec![required_spec(&models, opts, "fig4")]
}

fn rate_grid() -> Vec<usize> {
    (0..=600).step_by(25).collect()
}

fn rate_points(models: &[NoiseModel]) -> Vec<GridPoint> {
    let mut points = Vec::new();
    for &model in models {
        for m in rate_grid() {
            points.push(GridPoint {
                n: 1000,
                regime: Regime::Sublinear { theta: THETA },
                model,
                m: Some(m),
            });
        }
    }
    points
}

fn z_models() -> Vec<NoiseModel> {
    [0.1, 0.3, 0.5]
        .map(|p| NoiseModel::NoisyChannel { p, q: 0.0 })
        .to_vec()
}

/// Success rate vs query count at `n = 1000` under Z-channel noise, both
/// decoders, with the `p = 0.1` sufficiency bound alongside as a marker.
pub fn figure5(opts: &PresetOptions) -> Vec<ExperimentSpec> {
    let models = z_models();
    let base = ExperimentSpec {
        kind: ExperimentKind::SuccessRate,
        points: rate_points(&models),
        trials: opts.trials.unwrap_or(100),
        master_seed: opts.seed,
        algorithms: vec![Algorithm::Greedy, Algorithm::Amp],
        out_dir: Some(
            opts.out_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("fig5")),
        ),
        workers: opts.workers,
        oracle: opts.oracle,
        timing: opts.timing,
        eps: opts.eps.unwrap_or(0.1),
        required: RequiredOptions::default(),
    };
    let bound = ExperimentSpec {
        kind: ExperimentKind::ThresholdTable,
        points: vec![GridPoint {
            n: 1000,
            regime: Regime::Sublinear { theta: THETA },
            model: NoiseModel::NoisyChannel { p: 0.1, q: 0.0 },
            m: None,
        }],
        trials: 1,
        algorithms: Vec::new(),
        ..base.clone()
    };
    vec![base, bound]
}

/// Mean overlap on the same grid as [`figure5`].
pub fn figure6(opts: &PresetOptions) -> Vec<ExperimentSpec> {
    let mut specs = figure5(opts);
    specs[0].kind = ExperimentKind::Overlap;
    if opts.out_dir.is_none() {
        for spec in &mut specs {
            spec.out_dir = Some(PathBuf::from("fig6"));
        }
    }
    specs
}

pub fn preset(figure: u32, opts: &PresetOptions) -> Result<Vec<ExperimentSpec>> {
    match figure {
        2 => Ok(figure2(opts)),
        3 => Ok(figure3(opts)),
        4 => Ok(figure4(opts)),
        5 => Ok(figure5(opts)),
        6 => Ok(figure6(opts)),
        other => Err(HarnessError::Config(format!(
            "no preset for figure {other}; available: 2..=6"
        ))),
    }
}
