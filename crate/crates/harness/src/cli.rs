//! Command-line interface: subcommand parsing, spec construction, and the
//! top-level dispatcher used by the `pooled` binary.

use crate::error::{HarnessError, Result};
use crate::experiment::{
    model_key, rate_curves, run_experiment, Algorithm, ExperimentKind, ExperimentOutput,
    ExperimentSpec, GridPoint, RequiredOptions,
};
use crate::presets::{preset, PresetOptions};
use crate::window::transition_window;
use clap::{Args, Parser, Subcommand, ValueEnum};
use pooled_core::model::Regime;
use pooled_core::noise::NoiseModel;
use pooled_core::theory::{
    noisy_query_feasibility, required_queries_bound, Feasibility, ThresholdModel, ThresholdQuery,
    ThresholdRegime,
};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "pooled",
    version,
    about = "Seeded experiments for the noisy pooled data problem"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print sufficiency bounds (and Gaussian feasibility) for parameters.
    Threshold(ThresholdArgs),
    /// Grow the design one query at a time until exact separated recovery.
    Required(RequiredArgs),
    /// Exact-recovery rate at fixed query counts.
    Success(RateArgs),
    /// Mean overlap at fixed query counts.
    Overlap(RateArgs),
    /// Greedy vs AMP on paired instances, with transition windows.
    AmpCompare(RateArgs),
    /// Run a canned preset grid (figures 2-6).
    Repro(ReproArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    None,
    Z,
    Gnc,
    Gauss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Greedy,
    Amp,
    Both,
}

impl AlgoArg {
    fn algorithms(self) -> Vec<Algorithm> {
        match self {
            AlgoArg::Greedy => vec![Algorithm::Greedy],
            AlgoArg::Amp => vec![Algorithm::Amp],
            AlgoArg::Both => vec![Algorithm::Greedy, Algorithm::Amp],
        }
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Agent counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    pub n: Vec<usize>,

    /// Sublinear exponent, k = round(n^theta). Default 0.25.
    #[arg(long, conflicts_with = "zeta")]
    pub theta: Option<f64>,

    /// Linear density, k = round(zeta * n).
    #[arg(long)]
    pub zeta: Option<f64>,

    #[arg(long, value_enum, default_value_t = ModelArg::None)]
    pub model: ModelArg,

    /// One-to-zero flip probability (models z, gnc).
    #[arg(long, default_value_t = 0.0)]
    pub p: f64,

    /// Zero-to-one flip probability (model gnc).
    #[arg(long, default_value_t = 0.0)]
    pub q: f64,

    /// Additive noise level (model gauss).
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,

    #[arg(long, default_value_t = 100)]
    pub trials: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = AlgoArg::Greedy)]
    pub algo: AlgoArg,

    /// Output directory for results.csv and plot-data files.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads; 0 picks a default. Results never depend on this.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,

    /// Verify the neighborhood-sum decomposition on every trial.
    #[arg(long)]
    pub oracle: bool,

    /// Slack constant for printed/emitted bounds.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,

    /// Record wall-clock times in the elapsed_ms column (breaks
    /// byte-identical reruns).
    #[arg(long)]
    pub timing: bool,
}

impl CommonArgs {
    fn regime(&self) -> Result<Regime> {
        match (self.theta, self.zeta) {
            (Some(theta), None) => Ok(Regime::Sublinear { theta }),
            (None, Some(zeta)) => Ok(Regime::Linear { zeta }),
            (None, None) => Ok(Regime::Sublinear { theta: 0.25 }),
            (Some(_), Some(_)) => Err(HarnessError::Config(
                "choose one of --theta and --zeta".into(),
            )),
        }
    }

    fn noise_model(&self) -> Result<NoiseModel> {
        let model = match self.model {
            ModelArg::None => {
                if self.p != 0.0 || self.q != 0.0 || self.lambda != 0.0 {
                    return Err(HarnessError::Config(
                        "--model none takes no --p/--q/--lambda".into(),
                    ));
                }
                NoiseModel::Exact
            }
            ModelArg::Z => {
                if self.q != 0.0 {
                    return Err(HarnessError::Config(
                        "the z-channel has q = 0; use --model gnc for q > 0".into(),
                    ));
                }
                NoiseModel::NoisyChannel { p: self.p, q: 0.0 }
            }
            ModelArg::Gnc => NoiseModel::NoisyChannel {
                p: self.p,
                q: self.q,
            },
            ModelArg::Gauss => NoiseModel::NoisyQuery {
                lambda: self.lambda,
            },
        };
        model.validate()?;
        Ok(model)
    }

    fn points(&self, m_values: &[Option<usize>]) -> Result<Vec<GridPoint>> {
        let regime = self.regime()?;
        let model = self.noise_model()?;
        let mut points = Vec::new();
        for &n in &self.n {
            for &m in m_values {
                points.push(GridPoint {
                    n,
                    regime,
                    model,
                    m,
                });
            }
        }
        Ok(points)
    }
}

/// Inclusive arithmetic grid `start:step:stop`.
pub fn parse_m_grid(text: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, step, stop] = parts.as_slice() else {
        return Err(HarnessError::Config(format!(
            "--m-grid wants start:step:stop, got {text:?}"
        )));
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|e| HarnessError::Config(format!("--m-grid: bad number {s:?}: {e}")))
    };
    let (start, step, stop) = (parse(start)?, parse(step)?, parse(stop)?);
    if step == 0 {
        return Err(HarnessError::Config("--m-grid step must be >= 1".into()));
    }
    if start > stop {
        return Err(HarnessError::Config(format!(
            "--m-grid start {start} exceeds stop {stop}"
        )));
    }
    Ok((start..=stop).step_by(step).collect())
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Fixed query count.
    #[arg(long, conflicts_with = "m_grid")]
    pub m: Option<usize>,

    /// Query-count grid, start:step:stop inclusive.
    #[arg(long, value_name = "START:STEP:STOP")]
    pub m_grid: Option<String>,
}

impl RateArgs {
    fn m_values(&self) -> Result<Vec<usize>> {
        match (&self.m, &self.m_grid) {
            (Some(m), None) => Ok(vec![*m]),
            (None, Some(grid)) => parse_m_grid(grid),
            (None, None) => Err(HarnessError::Config(
                "set a query count with --m or --m-grid".into(),
            )),
            (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
        }
    }
}

#[derive(Debug, Args)]
pub struct RequiredArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Abort a trial after this many queries (default 50x the bound).
    #[arg(long)]
    pub cap: Option<usize>,

    /// Check the stopping rule every STRIDE queries with a final backtrack.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Query budget for the Gaussian feasibility check.
    #[arg(long)]
    pub m: Option<usize>,

    /// Feasibility constant: achievable when lambda^2 <= c_safe * m / ln n.
    #[arg(long, default_value_t = 1.0)]
    pub c_safe: f64,

    /// Feasibility constant: failing when lambda^2 >= c_fail * m.
    #[arg(long, default_value_t = 1.0)]
    pub c_fail: f64,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    /// Figure preset to reproduce (2-6).
    #[arg(long)]
    pub figure: u32,

    /// Trials per grid point; defaults to the preset's own count.
    #[arg(long)]
    pub trials: Option<usize>,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Output directory; defaults to fig<N>.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, default_value_t = 0)]
    pub workers: usize,

    /// Bound slack; defaults to the preset's figure caption value.
    #[arg(long)]
    pub eps: Option<f64>,

    /// Cap for required-queries presets.
    #[arg(long)]
    pub cap: Option<usize>,

    #[arg(long)]
    pub oracle: bool,

    #[arg(long)]
    pub timing: bool,
}

fn threshold_parts(regime: Regime, model: &NoiseModel) -> (ThresholdRegime, ThresholdModel) {
    let regime = match regime {
        Regime::Sublinear { theta } => ThresholdRegime::Sublinear { theta },
        Regime::Linear { zeta } => ThresholdRegime::Linear { zeta },
        Regime::ExplicitK => unreachable!("the CLI only builds derived regimes"),
    };
    let model = match *model {
        NoiseModel::Exact => ThresholdModel::Noiseless,
        NoiseModel::NoisyChannel { p, q } if q == 0.0 => ThresholdModel::Z { p },
        NoiseModel::NoisyChannel { p, q } => ThresholdModel::Gnc { p, q },
        NoiseModel::NoisyQuery { lambda } => ThresholdModel::NoisyQuery { lambda },
    };
    (regime, model)
}

fn run_threshold(args: &ThresholdArgs) -> Result<i32> {
    let regime = args.common.regime()?;
    let model = args.common.noise_model()?;
    let (t_regime, t_model) = threshold_parts(regime, &model);
    for &n in &args.common.n {
        let query = ThresholdQuery {
            n,
            regime: t_regime,
            model: t_model,
            eps: args.common.eps,
        };
        let bound = required_queries_bound(&query)?;
        println!(
            "threshold n={n} regime={} model={} eps={}: m >= {bound}",
            regime.label(),
            model_key(&model),
            args.common.eps
        );
        if let (NoiseModel::NoisyQuery { lambda }, Some(m)) = (&model, args.m) {
            let feasibility = noisy_query_feasibility(m, n, *lambda, args.c_safe, args.c_fail)?;
            let verdict = match feasibility {
                Feasibility::Achievable => "achievable",
                Feasibility::Indeterminate => "indeterminate",
                Feasibility::Failing => "failing",
            };
            println!("feasibility n={n} lambda={lambda} m={m}: {verdict}");
        }
    }
    if args.common.out.is_some() {
        let spec = ExperimentSpec {
            kind: ExperimentKind::ThresholdTable,
            points: args.common.points(&[None])?,
            trials: 1,
            master_seed: args.common.seed,
            algorithms: Vec::new(),
            out_dir: args.common.out.clone(),
            workers: args.common.workers,
            oracle: false,
            timing: false,
            eps: args.common.eps,
            required: RequiredOptions::default(),
        };
        let output = run_experiment(&spec)?;
        report_files(&output);
    }
    Ok(0)
}

fn build_spec(
    kind: ExperimentKind,
    common: &CommonArgs,
    m_values: &[Option<usize>],
    required: RequiredOptions,
) -> Result<ExperimentSpec> {
    Ok(ExperimentSpec {
        kind,
        points: common.points(m_values)?,
        trials: common.trials,
        master_seed: common.seed,
        algorithms: common.algo.algorithms(),
        out_dir: common.out.clone(),
        workers: common.workers,
        oracle: common.oracle,
        timing: common.timing,
        eps: common.eps,
        required,
    })
}

fn report_files(output: &ExperimentOutput) {
    for file in &output.files {
        println!("wrote {}", file.display());
    }
}

fn report_rate_rows(output: &ExperimentOutput) {
    for row in &output.rows {
        println!(
            "n={} m={} model={} algo={} rate={:.3} overlap={:.3}",
            row.n,
            row.m,
            row.model,
            row.algorithm,
            row.successes as f64 / row.trials as f64,
            row.mean_overlap
        );
    }
}

fn report_required_rows(output: &ExperimentOutput) {
    for row in &output.rows {
        let flag = if row.successes == 0 { " CAPPED" } else { "" };
        println!(
            "n={} model={} algo={} m*={}{flag}",
            row.n, row.model, row.algorithm, row.m
        );
    }
}

fn report_windows(output: &ExperimentOutput) {
    let curves = rate_curves(&output.rows);
    let mut seen: Vec<(String, usize)> = Vec::new();
    for (key, n, _) in curves.keys() {
        if !seen.contains(&(key.clone(), *n)) {
            seen.push((key.clone(), *n));
        }
    }
    for (key, n) in seen {
        let mut widths: Vec<(String, f64)> = Vec::new();
        for algo in ["greedy", "amp"] {
            let Some(curve) = curves.get(&(key.clone(), n, algo.to_string())) else {
                continue;
            };
            match transition_window(curve) {
                Ok((m10, m90)) => {
                    println!(
                        "window n={n} model={key} algo={algo}: m10={m10} m90={m90} width={}",
                        m90 - m10
                    );
                    widths.push((algo.to_string(), m90 - m10));
                }
                Err(e) => println!("window n={n} model={key} algo={algo}: undefined ({e})"),
            }
        }
        if let [(_, greedy), (_, amp)] = widths.as_slice() {
            let verdict = if amp <= greedy { "yes" } else { "no" };
            println!("window n={n} model={key}: amp width <= greedy width: {verdict}");
        }
    }
}

fn exit_code_for(outputs: &[ExperimentOutput]) -> i32 {
    if outputs.iter().any(|o| o.all_capped) {
        3
    } else {
        0
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    match &cli.command {
        Command::Threshold(args) => run_threshold(args),
        Command::Required(args) => {
            let spec = build_spec(
                ExperimentKind::RequiredQueries,
                &args.common,
                &[None],
                RequiredOptions {
                    cap: args.cap,
                    stride: args.stride,
                },
            )?;
            let output = run_experiment(&spec)?;
            report_required_rows(&output);
            report_files(&output);
            Ok(exit_code_for(std::slice::from_ref(&output)))
        }
        Command::Success(args) | Command::Overlap(args) | Command::AmpCompare(args) => {
            let kind = match &cli.command {
                Command::Success(_) => ExperimentKind::SuccessRate,
                Command::Overlap(_) => ExperimentKind::Overlap,
                _ => ExperimentKind::AmpCompare,
            };
            let m_values: Vec<Option<usize>> =
                args.m_values()?.into_iter().map(Some).collect();
            let spec = build_spec(kind, &args.common, &m_values, RequiredOptions::default())?;
            let output = run_experiment(&spec)?;
            report_rate_rows(&output);
            if kind == ExperimentKind::AmpCompare {
                report_windows(&output);
            }
            report_files(&output);
            Ok(0)
        }
        Command::Repro(args) => {
            let opts = PresetOptions {
                trials: args.trials,
                seed: args.seed,
                out_dir: args.out.clone(),
                workers: args.workers,
                eps: args.eps,
                cap: args.cap,
                oracle: args.oracle,
                timing: args.timing,
            };
            let specs = preset(args.figure, &opts)?;
            let mut outputs = Vec::new();
            for spec in &specs {
                let output = run_experiment(spec)?;
                report_files(&output);
                outputs.push(output);
            }
            Ok(exit_code_for(&outputs))
        }
    }
}
