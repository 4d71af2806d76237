//! The `adiarank` command-line front end.
//!
//! Every failure prints exactly one line, `error: <code>: <detail>`, and exits
//! with 2 (`usage`), 3 (`numerical`) or 4 (`io`). `ADIARANK_THREADS` caps the
//! worker pool (0 or unset = one worker per core). For experiment commands a
//! `--config` file is applied first and individual flags override it.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::adiabatic::{
    evolution_csv, evolve_recorded, fidelity_and_error, scan_csv, AdiabaticError, AdiabaticProblem, EvolveOptions,
    ScanSettings, Schedule, ScheduleKind,
};
use crate::experiments::{
    compare_fit_families, fit_scaling, log_spaced, run_error_vs_t, run_gap_ensemble, run_runtime_verification,
    svg_plot, Column, ExperimentConfig, ExperimentError, FitFamily, ScalingTable,
};
use crate::googlerank::{
    default_max_iter, google_matrix_of, inverse_pagerank, pagerank_csv, pagerank_mcmc, pagerank_power, uniform,
    McmcConfig, RankError,
};
use crate::measurement::{
    default_top_k, estimate_top_k, hoeffding_shots, quantum_state_from_pagerank, record_csv, sample_sites, swap_test,
    MeasureError,
};
use crate::par::{self, Execution};
use crate::stats::FitError;
use crate::webgraph::{generate, read_edgelist, to_edgelist_string, GraphError, GraphModel, GraphModelConfig};

pub const THREADS_ENV: &str = "ADIARANK_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    Usage,
    Numerical,
    Io,
}

impl ErrorCode {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCode::Usage => 2,
            ErrorCode::Numerical => 3,
            ErrorCode::Io => 4,
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorCode::Usage => "usage",
            ErrorCode::Numerical => "numerical",
            ErrorCode::Io => "io",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: ErrorCode,
    pub detail: String,
}

impl CliError {
    fn usage(detail: impl Into<String>) -> Self {
        CliError { code: ErrorCode::Usage, detail: detail.into() }
    }

    fn io(detail: impl Into<String>) -> Self {
        CliError { code: ErrorCode::Io, detail: detail.into() }
    }
}

impl fmt::Display for CliError {
    /// Always a single line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let detail = self.detail.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error: {}: {detail}", self.code)
    }
}

fn classify(code: ErrorCode, e: impl fmt::Display) -> CliError {
    CliError { code, detail: e.to_string() }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        let code = match e {
            GraphError::Io(_) | GraphError::Parse { .. } => ErrorCode::Io,
            _ => ErrorCode::Usage,
        };
        classify(code, e)
    }
}

impl From<RankError> for CliError {
    fn from(e: RankError) -> Self {
        let code = match e {
            RankError::NoConvergence { .. } | RankError::EigenFailure(_) => ErrorCode::Numerical,
            _ => ErrorCode::Usage,
        };
        classify(code, e)
    }
}

impl From<AdiabaticError> for CliError {
    fn from(e: AdiabaticError) -> Self {
        match e {
            AdiabaticError::Rank(r) => r.into(),
            AdiabaticError::InvalidParam(_)
            | AdiabaticError::SOutOfRange(_)
            | AdiabaticError::SizeCap { .. }
            | AdiabaticError::DimensionMismatch(..) => classify(ErrorCode::Usage, e),
            _ => classify(ErrorCode::Numerical, e),
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        let code = match e {
            MeasureError::InvalidParam(_) | MeasureError::DimensionMismatch(..) => ErrorCode::Usage,
            _ => ErrorCode::Numerical,
        };
        classify(code, e)
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        let code = match e {
            FitError::InsufficientData { .. } => ErrorCode::Usage,
            _ => ErrorCode::Numerical,
        };
        classify(code, e)
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Graph(g) => g.into(),
            ExperimentError::Rank(r) => r.into(),
            ExperimentError::Adiabatic(a) => a.into(),
            ExperimentError::Fit(f) => f.into(),
            ExperimentError::Io(_) | ExperimentError::Parse { .. } => classify(ErrorCode::Io, e),
            ExperimentError::TooManyExclusions { .. } => classify(ErrorCode::Numerical, e),
            ExperimentError::InvalidSpec(_) | ExperimentError::UnknownKey { .. } | ExperimentError::Config { .. } => {
                classify(ErrorCode::Usage, e)
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "adiarank", version, about = "Adiabatic quantum PageRank simulation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random graph and write it as an edge list.
    Gen(GenArgs),
    /// PageRank vector of a graph as CSV `node,p`.
    Pagerank(PagerankArgs),
    /// Gap profile of the interpolating Hamiltonian.
    Gapscan(GapscanArgs),
    /// Schrödinger evolution along a schedule.
    Evolve(EvolveArgs),
    /// Minimum-gap and lambda scaling over a graph ensemble.
    Ensemble(EnsembleArgs),
    /// Adiabatic error versus total evolution time.
    Errvst(ErrvstArgs),
    /// Check the error after the predicted run time against the target.
    VerifyRuntime(VerifyArgs),
    /// Sample site measurements of the quantum PageRank state.
    Measure(MeasureArgs),
    /// Emulated SWAP-test fidelity estimate.
    Swaptest(SwaptestArgs),
    /// Fit scaling laws to a column of an ensemble table.
    Fit(FitArgs),
    /// SVG plot of an ensemble table column with an optional fit.
    Plot(PlotArgs),
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("alpha must lie in (0, 1), got {a}"))
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: GraphModel,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p_copy: f64,
    #[arg(long, default_value_t = 3)]
    pub d0: usize,
    #[arg(long, default_value_t = 3.0)]
    pub mix_ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Complete graph without self-loops.
    #[arg(long)]
    pub no_self_loops: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_model(s: &str) -> Result<GraphModel, String> {
    s.parse().map_err(|e: GraphError| e.to_string())
}

#[derive(Debug, Args)]
pub struct GraphInput {
    /// Edge-list file.
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 0.85, value_parser = parse_alpha)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct PagerankArgs {
    #[command(flatten)]
    pub input: GraphInput,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Monte Carlo walks instead of the power method.
    #[arg(long)]
    pub walks: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// PageRank of the reversed graph.
    #[arg(long)]
    pub inverse: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GapscanArgs {
    #[command(flatten)]
    pub input: GraphInput,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub refine_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub input: GraphInput,
    /// Total evolution time T.
    #[arg(long)]
    pub time: f64,
    /// `linear` or `smooth:<a>`.
    #[arg(long, default_value = "linear")]
    pub schedule: String,
    #[arg(long, default_value_t = 10.0)]
    pub steps_per_unit: f64,
    /// Record every k-th step.
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
    #[arg(long)]
    pub no_verify: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Settings shared by the ensemble commands; each flag overrides the config file.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    /// Comma-separated sizes.
    #[arg(long)]
    pub n_list: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub refine_tol: Option<f64>,
    #[arg(long)]
    pub steps_per_unit: Option<f64>,
    #[arg(long)]
    pub mix_ratio: Option<f64>,
    #[arg(long)]
    pub p_copy: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub d0: Option<usize>,
    /// Run trials one after another instead of on the worker pool.
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(&self, extra: &[(&str, Option<String>)]) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            cfg.apply_file(&text)?;
        }
        let flags = [
            ("model", self.model.clone()),
            ("n_list", self.n_list.clone()),
            ("trials", self.trials.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("scan.grid", self.grid.map(|v| v.to_string())),
            ("scan.refine_tol", self.refine_tol.map(|v| v.to_string())),
            ("evolve.steps_per_unit", self.steps_per_unit.map(|v| v.to_string())),
            ("mix_ratio", self.mix_ratio.map(|v| v.to_string())),
            ("p_copy", self.p_copy.map(|v| v.to_string())),
            ("m", self.m.map(|v| v.to_string())),
            ("d0", self.d0.map(|v| v.to_string())),
        ];
        for (key, value) in flags.iter().chain(extra) {
            if let Some(v) = value {
                cfg.set(key, v).map_err(|e| CliError::usage(format!("--{}: {e}", key.replace(['.', '_'], "-"))))?;
            }
        }
        Ok(cfg)
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
}

#[derive(Debug, Args)]
pub struct ErrvstArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    /// Graph size (defaults to the first entry of n_list).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 10.0)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1e4)]
    pub t_max: f64,
    #[arg(long, default_value_t = 7)]
    pub t_points: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    #[arg(long)]
    pub b: Option<u32>,
    #[arg(long)]
    pub eps_target: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub input: GraphInput,
    /// Number of shots; defaults to the Hoeffding budget for --precision/--confidence.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long, default_value_t = 0.1)]
    pub precision: f64,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Append a `# top-k=` comment with the k most frequent sites (default ceil(ln n)).
    #[arg(long, num_args = 0..=1, default_missing_value = "0")]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SwaptestArgs {
    #[command(flatten)]
    pub input: GraphInput,
    /// Compare against the PageRank state of this graph...
    #[arg(long, conflicts_with = "time")]
    pub other: Option<PathBuf>,
    /// ...or against the state after a linear sweep of this duration.
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Ensemble CSV.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long, default_value = "inv_of_ave", value_parser = parse_column)]
    pub column: Column,
    /// A family name, or `all` to rank semilog, loglog and polylog_power.
    #[arg(long, default_value = "all")]
    pub family: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_column(s: &str) -> Result<Column, String> {
    s.parse()
}

fn parse_family(s: &str) -> Result<FitFamily, String> {
    s.parse()
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long, default_value = "inv_of_ave", value_parser = parse_column)]
    pub column: Column,
    #[arg(long, default_value = "semilog", value_parser = parse_family)]
    pub family: FitFamily,
    /// Skip the fitted line.
    #[arg(long)]
    pub no_fit: bool,
    #[arg(long)]
    pub out: PathBuf,
}

/// Compress clap's multi-line message to one line, dropping the usage block.
fn usage_detail(e: &clap::Error) -> String {
    let rendered = e.to_string();
    let lines: Vec<&str> = rendered
        .lines()
        .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    lines.join(" ").trim_start_matches("error: ").to_string()
}

pub fn threads_from_env(value: Option<&str>) -> Result<usize, CliError> {
    match value.map(str::trim) {
        None | Some("") => Ok(0),
        Some(v) => v.parse().map_err(|_| CliError::usage(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'"))),
    }
}

/// Parse and run; returns the process exit code. Normal output goes to `out`,
/// help text and error lines to `err`.
pub fn run<I, T>(argv: I, threads_env: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = write!(out, "{e}");
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
            }
            let _ = writeln!(err, "{}", CliError::usage(usage_detail(&e)));
            return 2;
        }
    };
    let result = threads_from_env(threads_env).and_then(|threads| {
        let mut buf = Vec::new();
        par::with_threads(threads, || dispatch(&cli.command, &mut buf)).map(|()| buf)
    });
    match result {
        Ok(buf) => match out.write_all(&buf) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "{}", CliError::io(e.to_string()));
                4
            }
        },
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.code.exit_code()
        }
    }
}

fn emit(text: &str, path: Option<&Path>, stdout: &mut Vec<u8>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
        None => {
            stdout.extend_from_slice(text.as_bytes());
            Ok(())
        }
    }
}

fn load_problem(input: &GraphInput) -> Result<(crate::googlerank::GoogleMatrix, AdiabaticProblem), CliError> {
    let graph = read_edgelist(&input.graph)?;
    let g = google_matrix_of(&graph, input.alpha)?;
    let prob = AdiabaticProblem::from_google(&g)?;
    Ok((g, prob))
}

fn parse_schedule(s: &str, total_time: f64) -> Result<Schedule, CliError> {
    let kind = match s.split_once(':') {
        None if s == "linear" => ScheduleKind::Linear,
        Some(("smooth", a)) => ScheduleKind::Smooth(
            a.parse().map_err(|_| CliError::usage(format!("--schedule: invalid smoothness order '{a}'")))?,
        ),
        _ => return Err(CliError::usage(format!("--schedule: expected 'linear' or 'smooth:<a>', got '{s}'"))),
    };
    Ok(Schedule::new(kind, total_time)?)
}

fn read_table(path: &Path) -> Result<ScalingTable, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(ScalingTable::from_csv(&text)?.0)
}

pub fn dispatch(cmd: &Command, stdout: &mut Vec<u8>) -> Result<(), CliError> {
    match cmd {
        Command::Gen(a) => {
            let cfg = GraphModelConfig {
                model: a.model,
                n: a.n,
                m: a.m,
                p_copy: a.p_copy,
                d0: a.d0,
                seed: a.seed,
                mix_ratio: a.mix_ratio,
                self_loops: !a.no_self_loops,
            };
            emit(&to_edgelist_string(&generate(&cfg)?), a.out.as_deref(), stdout)
        }
        Command::Pagerank(a) => {
            let graph = read_edgelist(&a.input.graph)?;
            let v = uniform(graph.n());
            let p = match (a.walks, a.inverse) {
                (Some(_), true) => return Err(CliError::usage("--walks and --inverse cannot be combined")),
                (Some(walks), false) => {
                    pagerank_mcmc(&graph, &v, &McmcConfig::new(a.input.alpha, walks, a.seed))?
                }
                (None, true) => inverse_pagerank(&graph, a.input.alpha, &v, a.tol)?,
                (None, false) => {
                    let g = google_matrix_of(&graph, a.input.alpha)?;
                    pagerank_power(&g, None, a.tol, default_max_iter(a.input.alpha, a.tol))?
                }
            };
            emit(&pagerank_csv(&p.p), a.out.as_deref(), stdout)
        }
        Command::Gapscan(a) => {
            let (_, prob) = load_problem(&a.input)?;
            let scan = prob.gap_scan_with(&ScanSettings { grid_points: a.grid, refine_tol: a.refine_tol }, Execution::Parallel)?;
            emit(&scan_csv(&scan), a.out.as_deref(), stdout)
        }
        Command::Evolve(a) => {
            let (_, prob) = load_problem(&a.input)?;
            let schedule = parse_schedule(&a.schedule, a.time)?;
            let opts = EvolveOptions { steps_per_unit: a.steps_per_unit, verify_step: !a.no_verify };
            let (psi, samples) = evolve_recorded(&prob, &schedule, &opts, a.stride)?;
            let (f, eps) = fidelity_and_error(&psi, &prob.problem_ground_state()?)?;
            let mut text = evolution_csv(&samples);
            text.push_str(&format!("# fidelity={f:.16e} eps={eps:.16e}\n"));
            emit(&text, a.out.as_deref(), stdout)
        }
        Command::Ensemble(a) => {
            let cfg = a.common.resolve(&[])?;
            let table = run_gap_ensemble(&cfg.ensemble_spec(a.common.execution()))?;
            emit(&table.to_csv(Some(&cfg.hash("ensemble"))), a.common.out.as_deref(), stdout)
        }
        Command::Errvst(a) => {
            let mut cfg = a.common.resolve(&[])?;
            if let Some(n) = a.n {
                cfg.n_list = vec![n];
            }
            if !(a.t_min > 0.0 && a.t_max > a.t_min) || a.t_points < 2 {
                return Err(CliError::usage("--t-min/--t-max/--t-points: need 0 < t_min < t_max and at least 2 points"));
            }
            let grid = log_spaced(a.t_min, a.t_max, a.t_points);
            let hash = {
                let mut keyed = cfg.clone();
                keyed.n_list.truncate(1);
                keyed.hash(&format!("errvst {:e} {:e} {}", a.t_min, a.t_max, a.t_points))
            };
            let table = run_error_vs_t(&cfg.error_spec(grid, a.common.execution()))?;
            emit(&table.to_csv(Some(&hash)), a.common.out.as_deref(), stdout)
        }
        Command::VerifyRuntime(a) => {
            let extra = [("b", a.b.map(|v| v.to_string())), ("eps_target", a.eps_target.map(|v| v.to_string()))];
            let cfg = a.common.resolve(&extra)?;
            let table = run_runtime_verification(&cfg.runtime_spec(a.common.execution()))?;
            emit(&table.to_csv(Some(&cfg.hash("verify-runtime"))), a.common.out.as_deref(), stdout)
        }
        Command::Measure(a) => {
            let graph = read_edgelist(&a.input.graph)?;
            let g = google_matrix_of(&graph, a.input.alpha)?;
            let p = pagerank_power(&g, None, 1e-13, default_max_iter(a.input.alpha, 1e-13))?;
            let state = quantum_state_from_pagerank(&p);
            let shots = match a.shots {
                Some(s) => s,
                None => hoeffding_shots(a.precision, a.confidence)?,
            };
            let record = sample_sites(&state, shots, a.seed)?;
            let mut text = record_csv(&record);
            if let Some(k) = a.top_k {
                let k = if k == 0 { default_top_k(state.n()) } else { k };
                let top = estimate_top_k(&record, k)?;
                let list = top.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
                text.push_str(&format!("# top-k={list}\n"));
            }
            emit(&text, a.out.as_deref(), stdout)
        }
        Command::Swaptest(a) => {
            let (_, prob) = load_problem(&a.input)?;
            let reference = prob.problem_ground_state()?;
            let other = match (&a.other, a.time) {
                (Some(path), _) => {
                    let g2 = google_matrix_of(&read_edgelist(path)?, a.input.alpha)?;
                    AdiabaticProblem::from_google(&g2)?.problem_ground_state()?
                }
                (None, Some(t)) => crate::adiabatic::evolve(&prob, &Schedule::linear(t)?, &EvolveOptions::default())?,
                (None, None) => return Err(CliError::usage("swaptest needs --other <graph> or --time <T>")),
            };
            let result = swap_test(&reference, &other, a.shots, a.seed)?;
            emit(&format!("{}\n", result.to_line()), None, stdout)
        }
        Command::Fit(a) => {
            let table = read_table(&a.table)?;
            let fits = if a.family == "all" {
                compare_fit_families(&table, a.column)?
            } else {
                vec![fit_scaling(&table, a.column, parse_family(&a.family).map_err(CliError::usage)?)?]
            };
            let mut text = String::from("family,column,a,b,r_squared\n");
            for f in &fits {
                text.push_str(f.to_csv(Some(a.column), None).lines().nth(1).unwrap_or_default());
                text.push('\n');
            }
            emit(&text, a.out.as_deref(), stdout)
        }
        Command::Plot(a) => {
            let table = read_table(&a.table)?;
            let fit = if a.no_fit { None } else { Some(fit_scaling(&table, a.column, a.family)?) };
            emit(&svg_plot(&table, a.column, a.family, fit.as_ref()), Some(&a.out), stdout)
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let threads = std::env::var(THREADS_ENV).ok();
    run(std::env::args_os(), threads.as_deref(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("adiarank").chain(args.iter().copied());
        let code = run(argv, None, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn gen_parses() {
        let cli = Cli::try_parse_from(["adiarank", "gen", "--model", "pa", "--n", "64", "--m", "2", "--seed", "7", "--out", "g.edges"]).unwrap();
        match cli.command {
            Command::Gen(a) => {
                assert_eq!((a.model, a.n, a.m, a.seed), (GraphModel::PreferentialAttachment, 64, 2, 7));
                assert_eq!(a.out.as_deref(), Some(Path::new("g.edges")));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn usage_errors_are_single_lines_naming_the_flag() {
        let (code, _, err) = run_args(&["gen", "--model", "pa"]);
        assert_eq!(code, 2);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("error: usage: ") && err.contains("--n"), "{err}");

        let (code, _, err) = run_args(&["pagerank", "--graph", "x", "--alpha", "1.5"]);
        assert_eq!(code, 2);
        assert!(err.contains("--alpha") && err.contains("(0, 1)"), "{err}");
        assert_eq!(err.lines().count(), 1);

        let (code, _, _) = run_args(&["frobnicate"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let (code, _, err) = run_args(&["pagerank", "--graph", "/nonexistent/graph.edges"]);
        assert_eq!(code, 4);
        assert!(err.starts_with("error: io: "), "{err}");
    }

    #[test]
    fn bad_thread_count_is_a_usage_error() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(["adiarank", "gen", "--model", "pa", "--n", "4"], Some("many"), &mut out, &mut err);
        assert_eq!(code, 2);
        assert!(String::from_utf8(err).unwrap().contains(THREADS_ENV));
        assert_eq!(threads_from_env(Some(" 3 ")), Ok(3));
        assert_eq!(threads_from_env(None), Ok(0));
    }

    #[test]
    fn error_lines_collapse_newlines() {
        let e = CliError { code: ErrorCode::Numerical, detail: "a\nb  c".into() };
        assert_eq!(e.to_string(), "error: numerical: a b c");
    }

    #[test]
    fn error_classification() {
        let num: CliError = AdiabaticError::StepTooCoarse(0.1).into();
        assert_eq!(num.code, ErrorCode::Numerical);
        let num: CliError = RankError::NoConvergence { iterations: 1, residual: 1.0 }.into();
        assert_eq!(num.code.exit_code(), 3);
        let io: CliError = GraphError::Parse { line: 3, detail: "x".into() }.into();
        assert_eq!(io.code.exit_code(), 4);
        let usage: CliError = ExperimentError::UnknownKey { line: 1, key: "k".into() }.into();
        assert_eq!(usage.code.exit_code(), 2);
    }

    #[test]
    fn schedule_flag() {
        assert_eq!(parse_schedule("linear", 2.0).unwrap().kind, ScheduleKind::Linear);
        assert_eq!(parse_schedule("smooth:2", 2.0).unwrap().kind, ScheduleKind::Smooth(2));
        assert!(parse_schedule("cubic", 2.0).is_err());
        assert!(parse_schedule("smooth:x", 2.0).is_err());
    }
}
