//! Command-line front end for group-level causal discovery.
//!
//! Every subcommand reads one declarative TOML [`RunConfig`], applies the
//! `--seed` and `--out` overrides and writes its artifacts below the output
//! directory. Errors map to exit code 1 for usage and configuration problems
//! and 2 for failures while running.

pub mod config;
pub mod error;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gcause::forecaster::{self, gradient_check};
use gcause::invariance::{discover_with, evaluation_windows, MIN_WINDOWS};
use gcause::knockoff::{diagnostics, fit_gaussian, sample_knockoffs};
use gcause::plot::residual_histogram_svg;
use gcause::series::{make_windows, standardize};
use gcause::synth::{sample_instance, score_decisions, CausalGraph, Score};
use gcause::MultivariateSeries;
use rand::Rng as _;
use serde::Serialize;

pub use config::RunConfig;
use error::write_file;
pub use error::{CliError, CliResult};
use report::*;

/// Largest relative gradient error `grad-check` accepts.
pub const GRAD_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(
    name = "gcause",
    version,
    about = "Group-level causal discovery in multivariate time series"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for data generation, training and knockoff sampling.
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Write one residual histogram SVG per ordered group pair.
    #[arg(long, global = true)]
    pub emit_plots: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a ground-truth graph and simulate a series from it.
    Synth,
    /// Train, intervene and test every ordered group pair.
    Discover,
    /// Score reports against ground-truth graphs.
    Eval {
        /// A report.json; repeat together with --graph for several runs.
        #[arg(long = "report", required = true, value_name = "PATH")]
        reports: Vec<PathBuf>,
        /// The graph.json matching each --report, in the same order.
        #[arg(long = "graph", required = true, value_name = "PATH")]
        graphs: Vec<PathBuf>,
    },
    /// Synthesize, discover and score over a grid of densities and seeds.
    Benchmark,
    /// Fit knockoffs to the data and report exchangeability statistics.
    KnockoffDiag,
    /// Compare analytic and finite-difference gradients on a tiny model.
    GradCheck {
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 3)]
        vars: usize,
        #[arg(long, default_value_t = 4)]
        hidden: usize,
        #[arg(long, default_value_t = 5)]
        context: usize,
        #[arg(long, default_value_t = 3)]
        horizon: usize,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Help and version requests exit with 0.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let common = &cli.common;
    let cfg =
        RunConfig::load(common.config.as_deref())?.with_overrides(common.seed, common.out.clone());
    cfg.validate()?;
    match cli.command {
        Command::Synth => cmd_synth(&cfg),
        Command::Discover => {
            let report = cmd_discover(&cfg, &cfg.out_dir(), common.emit_plots)?;
            for link in &report.decisions.links {
                println!("{} {} {}", link.a, link.label, link.b);
            }
            if let Some(score) = report.score {
                println!(
                    "score: correct {:.2} wrong {:.2} no_inference {:.2}",
                    score.correct, score.wrong, score.no_inference
                );
            }
            Ok(())
        }
        Command::Eval { reports, graphs } => {
            let summary = cmd_eval(&reports, &graphs)?;
            let text = to_json(&summary)?;
            if let Some(out) = &cfg.out {
                write_file(out.join("eval.json"), &text)?;
            }
            print!("{text}");
            Ok(())
        }
        Command::Benchmark => {
            let report = cmd_benchmark(&cfg, &cfg.out_dir(), common.emit_plots)?;
            print!("{}", report.table());
            Ok(())
        }
        Command::KnockoffDiag => {
            let diag = cmd_knockoff_diag(&cfg, &cfg.out_dir())?;
            print!("{}", to_json(&diag)?);
            Ok(())
        }
        Command::GradCheck {
            step,
            vars,
            hidden,
            context,
            horizon,
        } => {
            let result = cmd_grad_check(&cfg, step, vars, hidden, context, horizon)?;
            let text = to_json(&result)?;
            if let Some(out) = &cfg.out {
                write_file(out.join("grad_check.json"), &text)?;
            }
            print!("{text}");
            if result.passed {
                Ok(())
            } else {
                Err(CliError::Runtime(format!(
                    "gradient check failed: relative error {:.3e} exceeds {GRAD_TOLERANCE:e}",
                    result.max_rel_error
                )))
            }
        }
    }
}

struct Data {
    series: MultivariateSeries,
    source: &'static str,
    graph: Option<CausalGraph>,
    rejected: Option<usize>,
}

fn load_data(cfg: &RunConfig) -> CliResult<Data> {
    match (&cfg.input, &cfg.synth) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "config has both [input] and [synth]; choose one".into(),
        )),
        (Some(_), None) => Ok(Data {
            series: cfg.load_input()?,
            source: "csv",
            graph: None,
            rejected: None,
        }),
        (None, Some(spec)) => {
            let instance =
                sample_instance(&spec.partition()?, spec.direction(), &spec.sim_config())?;
            Ok(Data {
                series: instance.series,
                source: "synth",
                graph: Some(instance.graph),
                rejected: Some(instance.rejected),
            })
        }
        (None, None) => Err(CliError::Usage(
            "config has neither [input] nor [synth]".into(),
        )),
    }
}

fn write_series(path: PathBuf, series: &MultivariateSeries) -> CliResult<()> {
    let mut buf = Vec::new();
    series
        .write_csv(&mut buf)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    write_file(path, buf)
}

/// Writes `graph.json` and `series.csv` for the `[synth]` section.
pub fn cmd_synth(cfg: &RunConfig) -> CliResult<()> {
    let spec = cfg.synth_spec()?;
    let instance = sample_instance(&spec.partition()?, spec.direction(), &spec.sim_config())?;
    let out = cfg.out_dir();
    write_file(out.join("graph.json"), instance.graph.to_json()? + "\n")?;
    write_series(out.join("series.csv"), &instance.series)?;
    let direction = match spec.direction() {
        Some((c, e)) => format!("G{} -> G{}", c + 1, e + 1),
        None => "independent".into(),
    };
    println!(
        "N = {}, T = {}, density = {}, direction: {direction}, edges: {}, rejected draws: {}",
        instance.graph.n_vars,
        instance.series.len(),
        spec.density,
        instance.graph.edges.len(),
        instance.rejected
    );
    Ok(())
}

/// Runs the whole pipeline and writes `report.json`, `timing.json`,
/// `model.json`, `loss.csv`, the generated data when synthetic, and
/// optionally `plots/*.svg`.
pub fn cmd_discover(cfg: &RunConfig, out: &Path, emit_plots: bool) -> CliResult<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut timing = Timing::default();

    let data = load_data(cfg)?;
    let partition = cfg.partition(&data.series)?;
    if let Some(graph) = &data.graph {
        write_file(out.join("graph.json"), graph.to_json()? + "\n")?;
        write_series(out.join("series.csv"), &data.series)?;
    }
    let (series, _) = standardize(&data.series, 0..data.series.len())?;
    let fcfg = &cfg.forecaster;
    let windows = evaluation_windows(series.len(), fcfg, &cfg.inference)?;
    if windows.len() < MIN_WINDOWS {
        return Err(gcause::Error::TooFewWindows(windows.len()).into());
    }
    let train_windows = make_windows(series.len(), fcfg.context, fcfg.horizon, fcfg.train_stride)?;
    timing.data_ms = start.elapsed().as_millis();

    let phase = Instant::now();
    let model = forecaster::train(&series, &train_windows, fcfg)?;
    timing.train_ms = phase.elapsed().as_millis();
    write_file(out.join("model.json"), model.to_json()?)?;
    let mut loss = Vec::new();
    model
        .write_loss_csv(&mut loss)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(out.join("loss.csv"), loss)?;

    let phase = Instant::now();
    let knockoffs = fit_gaussian(&series, cfg.inference.shrinkage, cfg.inference.s_method)?;
    timing.knockoff_ms = phase.elapsed().as_millis();

    let phase = Instant::now();
    let decisions = discover_with(
        &model,
        &knockoffs,
        &series,
        &windows,
        &partition,
        &cfg.inference,
    )?;
    timing.inference_ms = phase.elapsed().as_millis();

    if emit_plots {
        for pair in &decisions.pairs {
            if let Some(svg) = residual_histogram_svg(pair, series.names()) {
                let name = format!("{}_to_{}.svg", file_safe(&pair.src), file_safe(&pair.dst));
                write_file(out.join("plots").join(name), svg)?;
            }
        }
    }

    let score = match &data.graph {
        Some(graph) if !graph.direction.is_empty() => Some(score_decisions(&decisions, graph)?),
        _ => None,
    };
    let report = RunReport {
        schema: REPORT_SCHEMA.into(),
        tool_version: TOOL_VERSION.into(),
        config: cfg.clone(),
        data: DataSummary {
            source: data.source.into(),
            length: series.len(),
            names: series.names().to_vec(),
            rejected_graphs: data.rejected,
        },
        training: TrainingSummary {
            hidden: model.hidden,
            epochs: fcfg.epochs,
            final_loss: model.loss_trace.last().copied().unwrap_or(f64::NAN),
            best_epoch: model.best_epoch,
            best_validation_nll: model
                .best_epoch
                .and_then(|e| model.validation_trace.get(e - 1).copied()),
        },
        knockoffs: KnockoffSummary {
            shrinkage: knockoffs.shrinkage,
            method: knockoffs.method,
            s: knockoffs.s.clone(),
        },
        decisions,
        score,
    };
    timing.total_ms = start.elapsed().as_millis();
    write_file(out.join("timing.json"), to_json(&timing)?)?;
    // Written last: its presence marks a finished run.
    write_file(out.join("report.json"), to_json(&report)?)?;
    Ok(report)
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Scores each report against its graph and averages the fractions.
pub fn cmd_eval(reports: &[PathBuf], graphs: &[PathBuf]) -> CliResult<EvalSummary> {
    if reports.is_empty() {
        return Err(CliError::Usage("no reports to evaluate".into()));
    }
    if reports.len() != graphs.len() {
        return Err(CliError::Usage(format!(
            "{} reports but {} graphs",
            reports.len(),
            graphs.len()
        )));
    }
    let runs = reports
        .iter()
        .zip(graphs)
        .map(|(report_path, graph_path)| {
            let report = ReportDecisions::load(report_path)?;
            let text =
                std::fs::read_to_string(graph_path).map_err(|e| CliError::read(graph_path, e))?;
            let graph = CausalGraph::from_json(&text).map_err(|e| CliError::read(graph_path, e))?;
            let score = score_decisions(&report.decisions, &graph)?;
            Ok(EvalRun {
                report: report_path.display().to_string(),
                graph: graph_path.display().to_string(),
                score,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let scores: Vec<Score> = runs.iter().map(|r| r.score).collect();
    Ok(EvalSummary {
        aggregate: Score::aggregate(&scores)?.rounded(),
        runs,
    })
}

/// Configuration of one benchmark cell.
pub fn cell_config(base: &RunConfig, density: f64, seed: u64, dir: &Path) -> RunConfig {
    let mut cfg = base.clone();
    cfg.benchmark = None;
    cfg.seed = None;
    if let Some(synth) = &mut cfg.synth {
        synth.density = density;
    }
    cfg.with_overrides(Some(seed), Some(dir.to_path_buf()))
}

pub fn cell_dir(out: &Path, density: f64, seed: u64) -> PathBuf {
    out.join("cells").join(format!("d{density:.2}-s{seed}"))
}

/// A finished cell from an earlier, possibly interrupted, run.
fn finished_cell(dir: &Path, cfg: &RunConfig) -> Option<Score> {
    let text = std::fs::read_to_string(dir.join("report.json")).ok()?;
    let report: RunReport = serde_json::from_str(&text).ok()?;
    let mut expected = cfg.clone();
    expected.out = None;
    (report.schema == REPORT_SCHEMA && report.config == expected)
        .then_some(report.score)
        .flatten()
}

/// Runs every (density, seed) cell into its own directory, skipping cells
/// whose report already exists for the same configuration, and rewrites
/// `benchmark.json` after each cell.
pub fn cmd_benchmark(cfg: &RunConfig, out: &Path, emit_plots: bool) -> CliResult<BenchmarkReport> {
    let mut base = cfg.clone();
    let spec = base.synth.get_or_insert_with(Default::default);
    if spec.independent {
        return Err(CliError::Usage(
            "benchmark needs a causal direction in [synth]".into(),
        ));
    }
    if base.input.is_some() {
        return Err(CliError::Usage(
            "benchmark generates its own data; remove [input]".into(),
        ));
    }
    let bench = base.benchmark.clone().unwrap_or_default();
    base.validate()?;

    let mut report = BenchmarkReport {
        schema: BENCHMARK_SCHEMA.into(),
        tool_version: TOOL_VERSION.into(),
        complete: false,
        rows: Vec::new(),
        cells: Vec::new(),
    };
    for &density in &bench.densities {
        let mut scores = Vec::new();
        for k in 0..bench.seeds_per_density {
            let seed = bench.first_seed + k as u64;
            let dir = cell_dir(out, density, seed);
            let cell_cfg = cell_config(&base, density, seed, &dir);
            let result = match finished_cell(&dir, &cell_cfg) {
                Some(score) => Ok(score),
                None => cmd_discover(&cell_cfg, &dir, emit_plots).and_then(|r| {
                    r.score
                        .ok_or_else(|| CliError::Runtime("benchmark run produced no score".into()))
                }),
            };
            match result {
                Ok(score) => {
                    scores.push(score);
                    report.cells.push(BenchmarkCell {
                        density,
                        seed,
                        status: CellStatus::Done,
                        score: Some(score),
                        error: None,
                    });
                    write_file(out.join("benchmark.json"), to_json(&report)?)?;
                }
                Err(e) => {
                    report.cells.push(BenchmarkCell {
                        density,
                        seed,
                        status: CellStatus::Failed,
                        score: None,
                        error: Some(e.to_string()),
                    });
                    write_file(out.join("benchmark.json"), to_json(&report)?)?;
                    return Err(e);
                }
            }
        }
        let mean = Score::aggregate(&scores)?;
        report.rows.push(BenchmarkRow {
            density,
            runs: scores.len(),
            correct: mean.correct,
            wrong: mean.wrong,
            no_inference: mean.no_inference,
        });
    }
    report.complete = true;
    write_file(out.join("benchmark.json"), to_json(&report)?)?;
    write_file(out.join("table.txt"), report.table())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnockoffDiagReport {
    pub knockoff_corr_dev: f64,
    pub cross_corr_dev: f64,
    pub self_corr: Vec<f64>,
    /// `1 − s_j`, what `self_corr` estimates on standardized data.
    pub expected_self_corr: Vec<f64>,
    pub s: Vec<f64>,
    pub shrinkage: f64,
}

/// Fits knockoffs to the standardized data, samples one copy and writes
/// `knockoff_diag.json`.
pub fn cmd_knockoff_diag(cfg: &RunConfig, out: &Path) -> CliResult<KnockoffDiagReport> {
    let data = load_data(cfg)?;
    let (series, _) = standardize(&data.series, 0..data.series.len())?;
    let model = fit_gaussian(&series, cfg.inference.shrinkage, cfg.inference.s_method)?;
    let knockoffs = sample_knockoffs(&model, &series, cfg.inference.knockoff_seed)?;
    let diag = diagnostics(&series, &knockoffs)?;
    let report = KnockoffDiagReport {
        knockoff_corr_dev: diag.knockoff_corr_dev,
        cross_corr_dev: diag.cross_corr_dev,
        self_corr: diag.self_corr,
        expected_self_corr: model.s.iter().map(|s| 1.0 - s).collect(),
        s: model.s.clone(),
        shrinkage: model.shrinkage,
    };
    write_file(out.join("knockoff_diag.json"), to_json(&report)?)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub step: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Gradient check of a freshly initialized model on a random probe window.
pub fn cmd_grad_check(
    cfg: &RunConfig,
    step: f64,
    vars: usize,
    hidden: usize,
    context: usize,
    horizon: usize,
) -> CliResult<GradCheckReport> {
    if step.is_nan() || step <= 0.0 || vars == 0 {
        return Err(CliError::Usage(
            "step must be positive and vars at least 1".into(),
        ));
    }
    let fcfg = forecaster::ForecasterConfig {
        context,
        horizon,
        hidden: Some(hidden),
        ..cfg.forecaster.clone()
    };
    fcfg.validate()?;
    let mut rng = gcause::rng::stream(fcfg.seed, 7);
    let rows: Vec<Vec<f64>> = (0..context + horizon)
        .map(|_| (0..vars).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let probe = MultivariateSeries::from_rows(&rows)?;
    let max_rel_error = gradient_check(&fcfg, &probe, step)?;
    Ok(GradCheckReport {
        max_rel_error,
        step,
        tolerance: GRAD_TOLERANCE,
        passed: max_rel_error < GRAD_TOLERANCE,
    })
}
