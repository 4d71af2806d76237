//! Seeded ensembles and scaling-law fits.
//!
//! Every trial draws its graph from `seed::split(master, n, trial)`, so a trial's
//! result does not depend on which other trials ran or in what order. Trials run
//! through [`Execution::map_indexed`] and are reduced sequentially in trial
//! order; tables are therefore bit-identical for any worker count.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::adiabatic::{
    evolve, fidelity_and_error, predicted_runtime, AdiabaticError, AdiabaticProblem, EvolveOptions, ScanSettings,
    Schedule,
};
use crate::googlerank::{google_matrix_of, RankError};
use crate::par::Execution;
use crate::seed;
use crate::stats::{self, FitError, LinearFit};
use crate::webgraph::{generate, BaseModel, GraphError, GraphModel, GraphModelConfig};

/// Default ensemble sizes for spectral and evolution experiments.
pub const DEFAULT_SPECTRAL_TRIALS: usize = 1000;
pub const DEFAULT_EVOLUTION_TRIALS: usize = 100;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Adiabatic(#[from] AdiabaticError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("{excluded} of {trials} trials failed at n = {n} (limit 1%); first failure: {first}")]
    TooManyExclusions { n: usize, trials: usize, excluded: usize, first: String },
    #[error("config line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: {detail}")]
    Config { line: usize, detail: String },
    #[error("{0}")]
    Io(String),
    #[error("CSV line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Io(e.to_string())
    }
}

fn validate_sizes(sizes: &[usize], trials: usize) -> Result<(), ExperimentError> {
    if sizes.is_empty() {
        return Err(ExperimentError::InvalidSpec("no sizes given".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::InvalidSpec(format!("sizes must be strictly increasing: {sizes:?}")));
    }
    if trials < 1 {
        return Err(ExperimentError::InvalidSpec("trials must be at least 1".into()));
    }
    Ok(())
}

fn validate_alpha(alpha: f64) -> Result<(), ExperimentError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ExperimentError::InvalidSpec(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn trial_problem(template: &GraphModelConfig, alpha: f64, n: usize, seed: u64) -> Result<AdiabaticProblem, ExperimentError> {
    let cfg = GraphModelConfig { n, seed, ..template.clone() };
    let graph = generate(&cfg)?;
    let g = google_matrix_of(&graph, alpha)?;
    Ok(AdiabaticProblem::from_google(&g)?)
}

// ---------------------------------------------------------------------------
// Gap ensembles

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    /// Graph family; `n` and `seed` are overwritten per trial.
    pub template: GraphModelConfig,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub alpha: f64,
    pub scan: ScanSettings,
    pub execution: Execution,
}

impl EnsembleSpec {
    pub fn new(model: GraphModel, sizes: Vec<usize>, trials: usize, master_seed: u64) -> Self {
        EnsembleSpec {
            template: GraphModelConfig::new(model, sizes.first().copied().unwrap_or(1)),
            sizes,
            trials,
            master_seed,
            alpha: 0.85,
            scan: ScanSettings::default(),
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        validate_sizes(&self.sizes, self.trials)?;
        validate_alpha(self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    /// Trials that contributed (requested minus excluded).
    pub trials: usize,
    pub excluded: usize,
    /// `[delta]_ave`.
    pub delta_ave: f64,
    pub delta_se: f64,
    /// `[1/delta]_ave`.
    pub inv_delta_ave: f64,
    pub inv_delta_se: f64,
    /// `1 / [delta]_ave`.
    pub inv_of_ave: f64,
    /// `[lambda]_ave`.
    pub lambda_ave: f64,
    pub lambda_se: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    DeltaAve,
    InvDeltaAve,
    InvOfAve,
    LambdaAve,
}

impl Column {
    pub fn name(self) -> &'static str {
        match self {
            Column::DeltaAve => "delta_ave",
            Column::InvDeltaAve => "inv_delta_ave",
            Column::InvOfAve => "inv_of_ave",
            Column::LambdaAve => "lambda_ave",
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Column {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Column::DeltaAve, Column::InvDeltaAve, Column::InvOfAve, Column::LambdaAve]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown column '{s}' (expected delta_ave, inv_delta_ave, inv_of_ave or lambda_ave)"))
    }
}

impl ScalingTable {
    pub fn sizes(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.n as f64).collect()
    }

    pub fn column(&self, column: Column) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match column {
                Column::DeltaAve => r.delta_ave,
                Column::InvDeltaAve => r.inv_delta_ave,
                Column::InvOfAve => r.inv_of_ave,
                Column::LambdaAve => r.lambda_ave,
            })
            .collect()
    }

    const HEADER: &'static str =
        "n,trials,excluded,delta_ave,delta_se,inv_delta_ave,inv_delta_se,inv_of_ave,lambda_ave,lambda_se";

    pub fn to_csv(&self, config_hash: Option<&str>) -> String {
        let mut out = hash_line(config_hash);
        out.push_str(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.n, r.trials, r.excluded, r.delta_ave, r.delta_se, r.inv_delta_ave, r.inv_delta_se, r.inv_of_ave,
                r.lambda_ave, r.lambda_se
            );
        }
        out
    }

    /// Inverse of [`ScalingTable::to_csv`]; also returns the config hash if present.
    pub fn from_csv(text: &str) -> Result<(Self, Option<String>), ExperimentError> {
        let (hash, records) = parse_csv(text, Self::HEADER)?;
        let rows = records
            .into_iter()
            .map(|(line, f)| {
                Ok(ScalingRow {
                    n: field(&f, 0, line)?,
                    trials: field(&f, 1, line)?,
                    excluded: field(&f, 2, line)?,
                    delta_ave: field(&f, 3, line)?,
                    delta_se: field(&f, 4, line)?,
                    inv_delta_ave: field(&f, 5, line)?,
                    inv_delta_se: field(&f, 6, line)?,
                    inv_of_ave: field(&f, 7, line)?,
                    lambda_ave: field(&f, 8, line)?,
                    lambda_se: field(&f, 9, line)?,
                })
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        Ok((ScalingTable { rows }, hash))
    }
}

/// Minimum gap and `||h_p - h_i||` for each trial, then both averaging orders.
/// Trials whose eigensolver fails (or whose gap vanishes) are excluded and
/// counted; more than 1% exclusions at any size fail the run.
pub fn run_gap_ensemble(spec: &EnsembleSpec) -> Result<ScalingTable, ExperimentError> {
    spec.validate()?;
    let tasks: Vec<(usize, usize)> = spec.sizes.iter().flat_map(|&n| (0..spec.trials).map(move |t| (n, t))).collect();
    let results = spec.execution.map_indexed(tasks.len(), |k| {
        let (n, trial) = tasks[k];
        let seed = seed::split(spec.master_seed, n as u64, trial as u64);
        gap_trial(spec, n, seed)
    });
    let mut rows = Vec::with_capacity(spec.sizes.len());
    for (i, &n) in spec.sizes.iter().enumerate() {
        let chunk = &results[i * spec.trials..(i + 1) * spec.trials];
        // Configuration errors are not eigensolver failures: surface them directly.
        if let Some(Err(TrialFailure::Fatal(msg))) = chunk.iter().find(|r| matches!(r, Err(TrialFailure::Fatal(_)))) {
            return Err(ExperimentError::InvalidSpec(msg.clone()));
        }
        let ok: Vec<(f64, f64)> = chunk.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
        let excluded = spec.trials - ok.len();
        if excluded * 100 > spec.trials || ok.is_empty() {
            let first = chunk.iter().find_map(|r| r.as_ref().err()).map(|e| e.to_string()).unwrap_or_default();
            return Err(ExperimentError::TooManyExclusions { n, trials: spec.trials, excluded, first });
        }
        let deltas: Vec<f64> = ok.iter().map(|r| r.0).collect();
        let inverses: Vec<f64> = deltas.iter().map(|d| 1.0 / d).collect();
        let lambdas: Vec<f64> = ok.iter().map(|r| r.1).collect();
        let delta_ave = stats::mean(&deltas);
        rows.push(ScalingRow {
            n,
            trials: ok.len(),
            excluded,
            delta_ave,
            delta_se: stats::std_error(&deltas),
            inv_delta_ave: stats::mean(&inverses),
            inv_delta_se: stats::std_error(&inverses),
            inv_of_ave: 1.0 / delta_ave,
            lambda_ave: stats::mean(&lambdas),
            lambda_se: stats::std_error(&lambdas),
        });
    }
    Ok(ScalingTable { rows })
}

#[derive(Debug, Clone)]
enum TrialFailure {
    Excluded(String),
    Fatal(String),
}

impl fmt::Display for TrialFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrialFailure::Excluded(m) | TrialFailure::Fatal(m) => f.write_str(m),
        }
    }
}

fn gap_trial(spec: &EnsembleSpec, n: usize, seed: u64) -> Result<(f64, f64), TrialFailure> {
    let fatal = |e: ExperimentError| TrialFailure::Fatal(e.to_string());
    let cfg = GraphModelConfig { n, seed, ..spec.template.clone() };
    let graph = generate(&cfg).map_err(|e| fatal(e.into()))?;
    let g = google_matrix_of(&graph, spec.alpha).map_err(|e| fatal(e.into()))?;
    let excluded = |e: AdiabaticError| TrialFailure::Excluded(format!("seed {seed:#x}: {e}"));
    let prob = AdiabaticProblem::from_google(&g).map_err(excluded)?;
    let scan = prob.gap_scan(&spec.scan).map_err(excluded)?;
    if !(scan.delta_min > 0.0) {
        return Err(TrialFailure::Excluded(format!("seed {seed:#x}: vanishing gap at s = {}", scan.s_star)));
    }
    let lambda = prob.lambda_norm().map_err(excluded)?;
    Ok((scan.delta_min, lambda))
}

// ---------------------------------------------------------------------------
// Evolution experiments

/// Which trials re-run their evolution at half the step as a discretization check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepCheck {
    All,
    /// Only trial 0 of each configuration.
    #[default]
    FirstTrial,
    Off,
}

impl StepCheck {
    fn options(self, base: EvolveOptions, trial: usize) -> EvolveOptions {
        let verify_step = match self {
            StepCheck::All => true,
            StepCheck::FirstTrial => trial == 0,
            StepCheck::Off => false,
        };
        EvolveOptions { verify_step, ..base }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorVsTSpec {
    pub template: GraphModelConfig,
    pub n: usize,
    pub t_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
    pub evolve: EvolveOptions,
    pub step_check: StepCheck,
    pub execution: Execution,
}

impl ErrorVsTSpec {
    pub fn new(model: GraphModel, n: usize, t_grid: Vec<f64>, trials: usize, seed: u64) -> Self {
        ErrorVsTSpec {
            template: GraphModelConfig::new(model, n),
            n,
            t_grid,
            trials,
            seed,
            alpha: 0.85,
            evolve: EvolveOptions::default(),
            step_check: StepCheck::default(),
            execution: Execution::default(),
        }
    }
}

/// `count` points log-spaced over `[lo, hi]`, endpoints included.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|k| {
                if k == count - 1 {
                    hi
                } else {
                    lo * (hi / lo).powf(k as f64 / (count - 1) as f64)
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub t: f64,
    pub trials: usize,
    pub eps_ave: f64,
    pub eps_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub n: usize,
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    const HEADER: &'static str = "n,T,trials,eps_ave,eps_se";

    pub fn to_csv(&self, config_hash: Option<&str>) -> String {
        let mut out = hash_line(config_hash);
        out.push_str(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{:e},{},{:e},{:e}", self.n, r.t, r.trials, r.eps_ave, r.eps_se);
        }
        out
    }

    /// Power-law fit `eps_ave ~ T^b`.
    pub fn exponent_fit(&self) -> Result<ScalingFit, ExperimentError> {
        let ts: Vec<f64> = self.rows.iter().map(|r| r.t).collect();
        let eps: Vec<f64> = self.rows.iter().map(|r| r.eps_ave).collect();
        fit_points(&ts, &eps, FitFamily::Loglog)
    }
}

/// Adiabatic error after a linear sweep, averaged over random graphs, for every `T` in the grid.
pub fn run_error_vs_t(spec: &ErrorVsTSpec) -> Result<ErrorTable, ExperimentError> {
    if spec.trials < 1 {
        return Err(ExperimentError::InvalidSpec("trials must be at least 1".into()));
    }
    validate_alpha(spec.alpha)?;
    if spec.t_grid.is_empty() || spec.t_grid.windows(2).any(|w| w[0] >= w[1]) || !(spec.t_grid[0] > 0.0) {
        return Err(ExperimentError::InvalidSpec("T grid must be positive and strictly increasing".into()));
    }
    let per_trial = spec
        .execution
        .map_indexed(spec.trials, |trial| -> Result<Vec<f64>, ExperimentError> {
            let prob = trial_problem(&spec.template, spec.alpha, spec.n, seed::split(spec.seed, spec.n as u64, trial as u64))?;
            let target = prob.problem_ground_state()?;
            let opts = spec.step_check.options(spec.evolve, trial);
            spec.t_grid
                .iter()
                .map(|&t| {
                    let psi = evolve(&prob, &Schedule::linear(t)?, &opts)?;
                    Ok(fidelity_and_error(&psi, &target)?.1)
                })
                .collect()
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let rows = spec
        .t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let eps: Vec<f64> = per_trial.iter().map(|row| row[k]).collect();
            ErrorRow { t, trials: eps.len(), eps_ave: stats::mean(&eps), eps_se: stats::std_error(&eps) }
        })
        .collect();
    Ok(ErrorTable { n: spec.n, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeSpec {
    pub template: GraphModelConfig,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
    pub b: u32,
    pub eps_target: f64,
    pub evolve: EvolveOptions,
    pub step_check: StepCheck,
    pub execution: Execution,
}

impl RuntimeSpec {
    pub fn new(model: GraphModel, sizes: Vec<usize>, trials: usize, seed: u64, b: u32, eps_target: f64) -> Self {
        RuntimeSpec {
            template: GraphModelConfig::new(model, sizes.first().copied().unwrap_or(1)),
            sizes,
            trials,
            seed,
            alpha: 0.85,
            b,
            eps_target,
            evolve: EvolveOptions::default(),
            step_check: StepCheck::default(),
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeRow {
    pub b: u32,
    pub n: usize,
    /// The predicted run time used for every trial at this size.
    pub runtime: f64,
    pub trials: usize,
    pub passes: usize,
    pub max_eps: f64,
}

impl RuntimeRow {
    pub fn pass_rate(&self) -> f64 {
        self.passes as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeTable {
    pub eps_target: f64,
    pub rows: Vec<RuntimeRow>,
}

impl RuntimeTable {
    const HEADER: &'static str = "b,n,eps_target,T,trials,passes,pass_rate,max_eps";

    pub fn overall_pass_rate(&self) -> f64 {
        let passes: usize = self.rows.iter().map(|r| r.passes).sum();
        let trials: usize = self.rows.iter().map(|r| r.trials).sum();
        passes as f64 / trials as f64
    }

    pub fn to_csv(&self, config_hash: Option<&str>) -> String {
        let mut out = hash_line(config_hash);
        out.push_str(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:e},{:e},{},{},{:e},{:e}",
                r.b, r.n, self.eps_target, r.runtime, r.trials, r.passes, r.pass_rate(), r.max_eps
            );
        }
        out
    }
}

/// Evolve each instance for the predicted run time and check `eps <= eps_target`.
pub fn run_runtime_verification(spec: &RuntimeSpec) -> Result<RuntimeTable, ExperimentError> {
    validate_sizes(&spec.sizes, spec.trials)?;
    validate_alpha(spec.alpha)?;
    if !matches!(spec.b, 2 | 3) {
        return Err(ExperimentError::InvalidSpec(format!("b must be 2 or 3, got {}", spec.b)));
    }
    if !(spec.eps_target > 0.0 && spec.eps_target < 1.0) {
        return Err(ExperimentError::InvalidSpec(format!("eps_target must lie in (0, 1), got {}", spec.eps_target)));
    }
    let runtimes = spec
        .sizes
        .iter()
        .map(|&n| predicted_runtime(n, spec.eps_target, spec.b))
        .collect::<Result<Vec<_>, _>>()?;
    let tasks: Vec<(usize, usize)> = (0..spec.sizes.len()).flat_map(|i| (0..spec.trials).map(move |t| (i, t))).collect();
    let eps = spec
        .execution
        .map_indexed(tasks.len(), |k| -> Result<f64, ExperimentError> {
            let (i, trial) = tasks[k];
            let n = spec.sizes[i];
            let prob = trial_problem(&spec.template, spec.alpha, n, seed::split(spec.seed, n as u64, trial as u64))?;
            let target = prob.problem_ground_state()?;
            let psi = evolve(&prob, &Schedule::linear(runtimes[i])?, &spec.step_check.options(spec.evolve, trial))?;
            Ok(fidelity_and_error(&psi, &target)?.1)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let rows = spec
        .sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let chunk = &eps[i * spec.trials..(i + 1) * spec.trials];
            RuntimeRow {
                b: spec.b,
                n,
                runtime: runtimes[i],
                trials: spec.trials,
                passes: chunk.iter().filter(|&&e| e <= spec.eps_target).count(),
                max_eps: chunk.iter().fold(0.0, |m: f64, &e| m.max(e)),
            }
        })
        .collect();
    Ok(RuntimeTable { eps_target: spec.eps_target, rows })
}

// ---------------------------------------------------------------------------
// Scaling fits

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitFamily {
    /// `y = a + b log10 n`
    Semilog,
    /// `y = a n^b`, fitted as `log10 y = log10 a + b log10 n`
    Loglog,
    /// `y = a + b ln ln n`
    Polyloglog,
    /// `y = a (log10 n)^b`, fitted as `ln y = ln a + b ln log10 n`
    PolylogPower,
}

impl FitFamily {
    pub const ALL: [FitFamily; 4] = [FitFamily::Semilog, FitFamily::Loglog, FitFamily::Polyloglog, FitFamily::PolylogPower];

    pub fn name(self) -> &'static str {
        match self {
            FitFamily::Semilog => "semilog",
            FitFamily::Loglog => "loglog",
            FitFamily::Polyloglog => "polyloglog",
            FitFamily::PolylogPower => "polylog_power",
        }
    }

    /// Coordinates in which the family is a straight line.
    pub fn transform(self, n: f64, y: f64) -> (f64, f64) {
        match self {
            FitFamily::Semilog => (n.log10(), y),
            FitFamily::Loglog => (n.log10(), y.log10()),
            FitFamily::Polyloglog => (n.ln().ln(), y),
            FitFamily::PolylogPower => (n.log10().ln(), y.ln()),
        }
    }

    fn axis_labels(self) -> (&'static str, &'static str) {
        match self {
            FitFamily::Semilog => ("log10 n", "y"),
            FitFamily::Loglog => ("log10 n", "log10 y"),
            FitFamily::Polyloglog => ("ln ln n", "y"),
            FitFamily::PolylogPower => ("ln log10 n", "ln y"),
        }
    }
}

impl fmt::Display for FitFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FitFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown fit family '{s}' (expected semilog, loglog, polyloglog or polylog_power)"))
    }
}

/// A fitted law in its natural parameters (see [`FitFamily`]); `r_squared` is
/// measured in the family's linearizing coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub family: FitFamily,
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
}

impl ScalingFit {
    pub fn predict(&self, n: f64) -> f64 {
        match self.family {
            FitFamily::Semilog => self.a + self.b * n.log10(),
            FitFamily::Loglog => self.a * n.powf(self.b),
            FitFamily::Polyloglog => self.a + self.b * n.ln().ln(),
            FitFamily::PolylogPower => self.a * n.log10().powf(self.b),
        }
    }

    /// The fitted line in linearizing coordinates: `(intercept, slope)`.
    fn line(&self) -> (f64, f64) {
        match self.family {
            FitFamily::Semilog | FitFamily::Polyloglog => (self.a, self.b),
            FitFamily::Loglog => (self.a.log10(), self.b),
            FitFamily::PolylogPower => (self.a.ln(), self.b),
        }
    }

    pub fn to_csv(&self, column: Option<Column>, config_hash: Option<&str>) -> String {
        let mut out = hash_line(config_hash);
        out.push_str("family,column,a,b,r_squared\n");
        let col = column.map(Column::name).unwrap_or("");
        let _ = writeln!(out, "{},{col},{:e},{:e},{:e}", self.family, self.a, self.b, self.r_squared);
        out
    }
}

/// Least squares of `y` against `n` in the family's coordinates.
pub fn fit_points(ns: &[f64], ys: &[f64], family: FitFamily) -> Result<ScalingFit, ExperimentError> {
    if ns.len() < 3 {
        return Err(FitError::InsufficientData { needed: 3, got: ns.len() }.into());
    }
    let (xs, ts): (Vec<f64>, Vec<f64>) = ns.iter().zip(ys).map(|(&n, &y)| family.transform(n, y)).unzip();
    let line = LinearFit::fit(&xs, &ts)?;
    let (a, b) = match family {
        FitFamily::Semilog | FitFamily::Polyloglog => (line.intercept, line.slope),
        FitFamily::Loglog => (10f64.powf(line.intercept), line.slope),
        FitFamily::PolylogPower => (line.intercept.exp(), line.slope),
    };
    Ok(ScalingFit { family, a, b, r_squared: line.r_squared })
}

pub fn fit_scaling(table: &ScalingTable, column: Column, family: FitFamily) -> Result<ScalingFit, ExperimentError> {
    fit_points(&table.sizes(), &table.column(column), family)
}

/// Semilog, loglog and polylog_power fits ranked by R² (best first; ties keep that order).
pub fn compare_fit_families(table: &ScalingTable, column: Column) -> Result<Vec<ScalingFit>, ExperimentError> {
    if table.rows.len() < 4 {
        return Err(FitError::InsufficientData { needed: 4, got: table.rows.len() }.into());
    }
    let mut fits = [FitFamily::Semilog, FitFamily::Loglog, FitFamily::PolylogPower]
        .into_iter()
        .map(|f| fit_scaling(table, column, f))
        .collect::<Result<Vec<_>, _>>()?;
    fits.sort_by(|x, y| y.r_squared.total_cmp(&x.r_squared));
    Ok(fits)
}

// ---------------------------------------------------------------------------
// CSV plumbing

fn hash_line(config_hash: Option<&str>) -> String {
    config_hash.map(|h| format!("# config-hash={h}\n")).unwrap_or_default()
}

type Records = Vec<(usize, Vec<String>)>;

fn parse_csv(text: &str, header: &str) -> Result<(Option<String>, Records), ExperimentError> {
    let mut hash = None;
    let mut seen_header = false;
    let mut records = Vec::new();
    let width = header.split(',').count();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(comment) = l.strip_prefix('#') {
            if let Some(h) = comment.trim().strip_prefix("config-hash=") {
                hash = Some(h.to_string());
            }
            continue;
        }
        if !seen_header {
            if l != header {
                return Err(ExperimentError::Parse { line, detail: format!("expected header '{header}'") });
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<String> = l.split(',').map(|s| s.trim().to_string()).collect();
        if fields.len() != width {
            return Err(ExperimentError::Parse { line, detail: format!("expected {width} fields, got {}", fields.len()) });
        }
        records.push((line, fields));
    }
    if !seen_header {
        return Err(ExperimentError::Parse { line: 0, detail: "missing header".into() });
    }
    Ok((hash, records))
}

fn field<T: FromStr>(fields: &[String], k: usize, line: usize) -> Result<T, ExperimentError> {
    fields[k]
        .parse()
        .map_err(|_| ExperimentError::Parse { line, detail: format!("cannot parse field {} ('{}')", k + 1, fields[k]) })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ExperimentError> {
    fs::write(path, text).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// SVG plot

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Single-panel plot of one table column in the coordinates of `family`
/// (the fit's family when a fit is given), with the fitted line overlaid.
pub fn svg_plot(table: &ScalingTable, column: Column, family: FitFamily, fit: Option<&ScalingFit>) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    let family = fit.map(|f| f.family).unwrap_or(family);
    let points: Vec<(f64, f64)> = table
        .sizes()
        .into_iter()
        .zip(table.column(column))
        .map(|(n, y)| family.transform(n, y))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = points.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if points.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let fit_line = fit.map(|f| {
        let (c, s) = f.line();
        [(x0, c + s * x0), (x1, c + s * x1)]
    });
    if let Some(l) = &fit_line {
        for &(_, y) in l {
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    if x1 - x0 <= 0.0 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    if y1 - y0 <= 0.0 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let polyline = |pts: &[(f64, f64)]| {
        pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect::<Vec<_>>().join(" ")
    };
    let (xl, yl) = family.axis_labels();
    let ylabel = yl.replace('y', column.name());

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"  <rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"  <line x1="{M}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#,
        b = H - M,
        r = W - M
    );
    let _ = writeln!(s, r#"  <line x1="{M}" y1="{M}" x2="{M}" y2="{b}" stroke="black"/>"#, b = H - M);
    let _ = writeln!(s, r#"  <text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 15.0, xml_escape(xl));
    let _ = writeln!(
        s,
        r#"  <text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        xml_escape(&ylabel)
    );
    for (v, x, y, anchor) in [
        (x0, px(x0), H - M + 18.0, "middle"),
        (x1, px(x1), H - M + 18.0, "middle"),
        (y0, M - 8.0, py(y0), "end"),
        (y1, M - 8.0, py(y1), "end"),
    ] {
        let _ = writeln!(s, r#"  <text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="11">{v:.3}</text>"#);
    }
    let _ = writeln!(s, r#"  <polyline class="data" fill="none" stroke="steelblue" points="{}"/>"#, polyline(&points));
    for &(x, y) in &points {
        let _ = writeln!(s, r#"  <circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, px(x), py(y));
    }
    if let (Some(f), Some(l)) = (fit, fit_line) {
        let _ = writeln!(
            s,
            r#"  <polyline class="fit" fill="none" stroke="crimson" stroke-dasharray="6 3" points="{}"/>"#,
            polyline(&l)
        );
        let _ = writeln!(
            s,
            r#"  <text x="{}" y="{}" font-size="13">{} fit: a = {:.4}, b = {:.4}, R² = {:.4}</text>"#,
            M + 10.0,
            M + 5.0,
            f.family,
            f.a,
            f.b,
            f.r_squared
        );
    }
    s.push_str("</svg>\n");
    s
}

// ---------------------------------------------------------------------------
// Config files

/// The effective settings of an experiment run, from defaults, an optional
/// config file, and command-line overrides applied in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: GraphModel,
    pub n_list: Vec<usize>,
    /// `None` means the experiment's default.
    pub trials: Option<usize>,
    pub seed: u64,
    pub alpha: f64,
    pub scan: ScanSettings,
    pub steps_per_unit: f64,
    pub mix_ratio: f64,
    pub p_copy: f64,
    pub m: usize,
    pub d0: usize,
    pub b: u32,
    pub eps_target: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let g = GraphModelConfig::default();
        ExperimentConfig {
            model: GraphModel::Mixed(BaseModel::PreferentialAttachment),
            n_list: (2..=9).map(|k| 1usize << k).collect(),
            trials: None,
            seed: 0,
            alpha: 0.85,
            scan: ScanSettings::default(),
            steps_per_unit: EvolveOptions::default().steps_per_unit,
            mix_ratio: g.mix_ratio,
            p_copy: g.p_copy,
            m: g.m,
            d0: g.d0,
            b: 2,
            eps_target: 0.1,
        }
    }
}

pub const CONFIG_KEYS: [&str; 14] = [
    "model",
    "n_list",
    "trials",
    "seed",
    "alpha",
    "scan.grid",
    "scan.refine_tol",
    "evolve.steps_per_unit",
    "mix_ratio",
    "p_copy",
    "m",
    "d0",
    "b",
    "eps_target",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("invalid value '{value}' for {key}"))
}

impl ExperimentConfig {
    /// Set one key. `Ok(false)` means the key is unknown.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, String> {
        let v = value.trim();
        match key {
            "model" => self.model = v.parse().map_err(|e: GraphError| e.to_string())?,
            "n_list" => {
                self.n_list = v
                    .split([',', ' '])
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_value(key, s))
                    .collect::<Result<_, _>>()?
            }
            "trials" => self.trials = Some(parse_value(key, v)?),
            "seed" => self.seed = parse_value(key, v)?,
            "alpha" => {
                let a: f64 = parse_value(key, v)?;
                if !(a > 0.0 && a < 1.0) {
                    return Err(format!("alpha must lie in (0, 1), got {a}"));
                }
                self.alpha = a;
            }
            "scan.grid" => self.scan.grid_points = parse_value(key, v)?,
            "scan.refine_tol" => self.scan.refine_tol = parse_value(key, v)?,
            "evolve.steps_per_unit" => self.steps_per_unit = parse_value(key, v)?,
            "mix_ratio" => self.mix_ratio = parse_value(key, v)?,
            "p_copy" => self.p_copy = parse_value(key, v)?,
            "m" => self.m = parse_value(key, v)?,
            "d0" => self.d0 = parse_value(key, v)?,
            "b" => self.b = parse_value(key, v)?,
            "eps_target" => self.eps_target = parse_value(key, v)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Apply a flat `key = value` file. `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ExperimentError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let (key, value) = l
                .split_once('=')
                .ok_or_else(|| ExperimentError::Config { line, detail: format!("expected 'key = value', got '{l}'") })?;
            let key = key.trim();
            match self.set(key, value) {
                Ok(true) => {}
                Ok(false) => return Err(ExperimentError::UnknownKey { line, key: key.to_string() }),
                Err(detail) => return Err(ExperimentError::Config { line, detail }),
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg = Self::default();
        cfg.apply_file(text)?;
        Ok(cfg)
    }

    /// All keys in a fixed order; the basis of [`ExperimentConfig::hash`].
    pub fn canonical(&self) -> String {
        let mut map = BTreeMap::new();
        map.insert("model", self.model.to_string());
        map.insert("n_list", self.n_list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
        map.insert("trials", self.trials.map(|t| t.to_string()).unwrap_or_else(|| "default".into()));
        map.insert("seed", self.seed.to_string());
        map.insert("alpha", format!("{:e}", self.alpha));
        map.insert("scan.grid", self.scan.grid_points.to_string());
        map.insert("scan.refine_tol", format!("{:e}", self.scan.refine_tol));
        map.insert("evolve.steps_per_unit", format!("{:e}", self.steps_per_unit));
        map.insert("mix_ratio", format!("{:e}", self.mix_ratio));
        map.insert("p_copy", format!("{:e}", self.p_copy));
        map.insert("m", self.m.to_string());
        map.insert("d0", self.d0.to_string());
        map.insert("b", self.b.to_string());
        map.insert("eps_target", format!("{:e}", self.eps_target));
        map.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// First 16 hex digits of SHA-256 over the experiment name and the canonical config.
    pub fn hash(&self, experiment: &str) -> String {
        let mut h = Sha256::new();
        h.update(experiment.as_bytes());
        h.update(b"\n");
        h.update(self.canonical().as_bytes());
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn graph_template(&self) -> GraphModelConfig {
        GraphModelConfig {
            model: self.model,
            n: self.n_list.first().copied().unwrap_or(1),
            m: self.m,
            p_copy: self.p_copy,
            d0: self.d0,
            mix_ratio: self.mix_ratio,
            ..GraphModelConfig::default()
        }
    }

    fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions { steps_per_unit: self.steps_per_unit, ..EvolveOptions::default() }
    }

    pub fn ensemble_spec(&self, execution: Execution) -> EnsembleSpec {
        EnsembleSpec {
            template: self.graph_template(),
            sizes: self.n_list.clone(),
            trials: self.trials.unwrap_or(DEFAULT_SPECTRAL_TRIALS),
            master_seed: self.seed,
            alpha: self.alpha,
            scan: self.scan,
            execution,
        }
    }

    /// Uses the first entry of `n_list` as the size.
    pub fn error_spec(&self, t_grid: Vec<f64>, execution: Execution) -> ErrorVsTSpec {
        let n = self.n_list.first().copied().unwrap_or(16);
        ErrorVsTSpec {
            template: self.graph_template(),
            n,
            t_grid,
            trials: self.trials.unwrap_or(DEFAULT_EVOLUTION_TRIALS),
            seed: self.seed,
            alpha: self.alpha,
            evolve: self.evolve_options(),
            step_check: StepCheck::default(),
            execution,
        }
    }

    pub fn runtime_spec(&self, execution: Execution) -> RuntimeSpec {
        RuntimeSpec {
            template: self.graph_template(),
            sizes: self.n_list.clone(),
            trials: self.trials.unwrap_or(DEFAULT_EVOLUTION_TRIALS),
            seed: self.seed,
            alpha: self.alpha,
            b: self.b,
            eps_target: self.eps_target,
            evolve: self.evolve_options(),
            step_check: StepCheck::default(),
            execution,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::googlerank::google_matrix_of;
    use crate::webgraph::complete_graph;
    use proptest::prelude::*;

    fn small_mixed(sizes: Vec<usize>, trials: usize) -> EnsembleSpec {
        EnsembleSpec::new(GraphModel::Mixed(BaseModel::PreferentialAttachment), sizes, trials, 17)
    }

    #[test]
    fn complete_graph_ensemble_has_unit_gap() {
        let spec = EnsembleSpec::new(GraphModel::Complete, vec![4], 1, 0);
        let table = run_gap_ensemble(&spec).unwrap();
        // Oracle: one dense scan of the same problem.
        let g = google_matrix_of(&complete_graph(4, true), 0.85).unwrap();
        let prob = AdiabaticProblem::from_google(&g).unwrap().with_route(crate::adiabatic::SpectralRoute::Dense);
        let scan = prob.gap_scan(&ScanSettings::default()).unwrap();
        let row = &table.rows[0];
        assert!((row.delta_ave - scan.delta_min).abs() < 1e-10);
        assert!((row.delta_ave - 1.0).abs() < 1e-10);
        assert_eq!((row.trials, row.excluded), (1, 0));
    }

    #[test]
    fn rows_obey_jensen_and_match_single_trials() {
        let spec = small_mixed(vec![8, 16, 32], 12);
        let table = run_gap_ensemble(&spec).unwrap();
        for r in &table.rows {
            assert!(r.inv_delta_ave >= r.inv_of_ave, "{r:?}");
            assert!(r.delta_se >= 0.0 && r.lambda_ave > 0.0);
        }
        // Row 1, recomputed trial by trial.
        let n = 16;
        let deltas: Vec<f64> = (0..12)
            .map(|t| {
                let p = trial_problem(&spec.template, 0.85, n, seed::split(17, n as u64, t)).unwrap();
                p.gap_scan(&spec.scan).unwrap().delta_min
            })
            .collect();
        assert_eq!(table.rows[1].delta_ave, stats::mean(&deltas));
    }

    #[test]
    fn ensemble_is_independent_of_execution() {
        let mut spec = small_mixed(vec![8, 16], 6);
        let par = run_gap_ensemble(&spec).unwrap();
        spec.execution = Execution::Sequential;
        let seq = run_gap_ensemble(&spec).unwrap();
        assert_eq!(par.to_csv(None), seq.to_csv(None));
        let one = crate::par::with_threads(1, || run_gap_ensemble(&spec).unwrap());
        assert_eq!(one, seq);
    }

    #[test]
    fn ensemble_spec_validation() {
        assert!(run_gap_ensemble(&small_mixed(vec![16, 8], 2)).is_err());
        assert!(run_gap_ensemble(&small_mixed(vec![8], 0)).is_err());
        assert!(run_gap_ensemble(&small_mixed(vec![], 1)).is_err());
        let mut spec = small_mixed(vec![8], 1);
        spec.template.m = 0;
        assert!(matches!(run_gap_ensemble(&spec), Err(ExperimentError::InvalidSpec(_))));
    }

    #[test]
    fn planted_semilog_law() {
        let ns = [4.0, 16.0, 64.0, 256.0];
        let ys: Vec<f64> = ns.iter().map(|n: &f64| 2.0 + 5.0 * n.log10()).collect();
        let f = fit_points(&ns, &ys, FitFamily::Semilog).unwrap();
        assert!((f.a - 2.0).abs() < 1e-12 && (f.b - 5.0).abs() < 1e-12);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn planted_laws_recovered_in_each_family() {
        let ns = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
        let cases: [(FitFamily, fn(f64) -> f64, f64, f64); 3] = [
            (FitFamily::Loglog, |n| 3.0 * n.powf(0.65), 3.0, 0.65),
            (FitFamily::Polyloglog, |n| 1.5 + 3.0 * n.ln().ln(), 1.5, 3.0),
            (FitFamily::PolylogPower, |n| 2.0 * n.log10().powf(2.7), 2.0, 2.7),
        ];
        for (family, law, a, b) in cases {
            let ys: Vec<f64> = ns.iter().map(|&n| law(n)).collect();
            let f = fit_points(&ns, &ys, family).unwrap();
            assert!((f.a - a).abs() < 1e-9 && (f.b - b).abs() < 1e-9, "{f:?}");
            assert!(f.r_squared > 1.0 - 1e-12);
            assert!((f.predict(50.0) - law(50.0)).abs() < 1e-9);
        }
    }

    fn table_from(ns: &[usize], ys: &[f64]) -> ScalingTable {
        ScalingTable {
            rows: ns
                .iter()
                .zip(ys)
                .map(|(&n, &y)| ScalingRow {
                    n,
                    trials: 1,
                    excluded: 0,
                    delta_ave: 1.0 / y,
                    delta_se: 0.0,
                    inv_delta_ave: y,
                    inv_delta_se: 0.0,
                    inv_of_ave: y,
                    lambda_ave: 1.0,
                    lambda_se: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn power_law_ranks_first_when_planted() {
        let ns = [4, 8, 16, 32, 64];
        let ys: Vec<f64> = ns.iter().map(|&n| 0.7 * (n as f64).powf(0.8)).collect();
        let ranked = compare_fit_families(&table_from(&ns, &ys), Column::InvOfAve).unwrap();
        assert_eq!(ranked[0].family, FitFamily::Loglog);
        assert!(ranked[0].r_squared > 1.0 - 1e-12);
        assert_eq!(ranked.len(), 3);
        assert!(compare_fit_families(&table_from(&ns[..3], &ys[..3]), Column::InvOfAve).is_err());
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            fit_points(&[4.0, 8.0], &[1.0, 2.0], FitFamily::Semilog),
            Err(ExperimentError::Fit(FitError::InsufficientData { needed: 3, got: 2 }))
        ));
        assert!(matches!(
            fit_points(&[8.0, 8.0, 8.0], &[1.0, 2.0, 3.0], FitFamily::Semilog),
            Err(ExperimentError::Fit(FitError::SingularFit))
        ));
        assert!(fit_points(&[4.0, 8.0, 16.0], &[1.0, -2.0, 3.0], FitFamily::Loglog).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let spec = small_mixed(vec![8, 16, 32], 3);
        let table = run_gap_ensemble(&spec).unwrap();
        let csv = table.to_csv(Some("00ff00ff00ff00ff"));
        assert!(csv.starts_with("# config-hash=00ff00ff00ff00ff\nn,trials,"));
        let (back, hash) = ScalingTable::from_csv(&csv).unwrap();
        assert_eq!(back, table);
        assert_eq!(hash.as_deref(), Some("00ff00ff00ff00ff"));
        let bad = csv.replace("\n16,", "\n16,x,");
        assert!(matches!(ScalingTable::from_csv(&bad), Err(ExperimentError::Parse { line: 4, .. })));
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let ns = [4, 8, 16, 32];
        let table = table_from(&ns, &[1.0, 2.0, 3.1, 3.9]);
        let fit = fit_scaling(&table, Column::InvOfAve, FitFamily::Semilog).unwrap();
        let svg = svg_plot(&table, Column::InvOfAve, FitFamily::Semilog, Some(&fit));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("R² = "));
        assert!(svg.contains(">log10 n<") && svg.contains(">inv_of_ave<"));
        assert_eq!(svg.matches("<svg").count(), 1);
        assert!(svg.trim_end().ends_with("</svg>"));
        let bare = svg_plot(&table, Column::InvOfAve, FitFamily::Loglog, None);
        assert_eq!(bare.matches("<polyline").count(), 1);
        assert!(bare.contains(">log10 inv_of_ave<"));
    }

    #[test]
    fn error_vs_t_small() {
        let spec = ErrorVsTSpec {
            step_check: StepCheck::All,
            ..ErrorVsTSpec::new(GraphModel::Mixed(BaseModel::PreferentialAttachment), 8, vec![5.0, 20.0, 80.0], 4, 3)
        };
        let table = run_error_vs_t(&spec).unwrap();
        let eps: Vec<f64> = table.rows.iter().map(|r| r.eps_ave).collect();
        assert!(eps[0] > eps[1] && eps[1] > eps[2], "{eps:?}");
        assert!(table.to_csv(None).starts_with("n,T,trials,eps_ave,eps_se\n8,5e0,4,"));
        let bad = ErrorVsTSpec { t_grid: vec![10.0, 5.0], ..spec };
        assert!(run_error_vs_t(&bad).is_err());
    }

    #[test]
    fn zero_time_limit_is_the_unevolved_state() {
        let spec = ErrorVsTSpec::new(GraphModel::Mixed(BaseModel::PreferentialAttachment), 8, vec![1e-9], 2, 3);
        let table = run_error_vs_t(&spec).unwrap();
        let expected: Vec<f64> = (0..2)
            .map(|t| {
                let p = trial_problem(&spec.template, 0.85, 8, seed::split(3, 8, t)).unwrap();
                let uniform = crate::adiabatic::QuantumState::uniform(8);
                fidelity_and_error(&uniform, &p.problem_ground_state().unwrap()).unwrap().1
            })
            .collect();
        assert!((table.rows[0].eps_ave - stats::mean(&expected)).abs() < 1e-8);
    }

    #[test]
    fn runtime_verification_small() {
        let spec = RuntimeSpec::new(GraphModel::Mixed(BaseModel::PreferentialAttachment), vec![6, 8], 3, 5, 2, 0.9);
        let table = run_runtime_verification(&spec).unwrap();
        assert_eq!(table.overall_pass_rate(), 1.0);
        assert_eq!(table.rows[0].runtime, predicted_runtime(6, 0.9, 2).unwrap());
        assert!(table.to_csv(None).starts_with("b,n,eps_target,T,trials,passes,pass_rate,max_eps\n2,6,"));
        for bad in [RuntimeSpec { b: 4, ..spec.clone() }, RuntimeSpec { eps_target: 1.0, ..spec.clone() }] {
            assert!(matches!(run_runtime_verification(&bad), Err(ExperimentError::InvalidSpec(_))));
        }
    }

    #[test]
    fn pass_rate_monotone_in_target() {
        let rates: Vec<f64> = [0.05, 0.1, 0.2]
            .iter()
            .map(|&eps| {
                let mut spec = RuntimeSpec::new(GraphModel::Mixed(BaseModel::PreferentialAttachment), vec![8], 4, 9, 2, eps);
                spec.step_check = StepCheck::Off;
                run_runtime_verification(&spec).unwrap().overall_pass_rate()
            })
            .collect();
        assert!(rates.windows(2).all(|w| w[0] <= w[1]), "{rates:?}");
    }

    #[test]
    fn log_spacing() {
        let g = log_spaced(10.0, 1e4, 7);
        assert_eq!(g.len(), 7);
        assert_eq!((g[0], g[6]), (10.0, 1e4));
        assert!((g[2] - 100.0).abs() < 1e-9);
        assert_eq!(log_spaced(3.0, 5.0, 1), vec![3.0]);
    }

    #[test]
    fn config_parsing() {
        let text = "# ensemble\nmodel = mixed-copying\nn_list = 4, 8,16\ntrials = 5\nseed = 9\nscan.grid = 32  # coarse\n\np_copy = 0.3\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.model, GraphModel::Mixed(BaseModel::Copying));
        assert_eq!(cfg.n_list, vec![4, 8, 16]);
        assert_eq!((cfg.trials, cfg.seed, cfg.scan.grid_points, cfg.p_copy), (Some(5), 9, 32, 0.3));
        let spec = cfg.ensemble_spec(Execution::Sequential);
        assert_eq!((spec.trials, spec.template.p_copy), (5, 0.3));
        assert_eq!(ExperimentConfig::default().ensemble_spec(Execution::Sequential).trials, DEFAULT_SPECTRAL_TRIALS);

        match ExperimentConfig::parse("seed = 1\nmodle = pa\n") {
            Err(ExperimentError::UnknownKey { line: 2, key }) => assert_eq!(key, "modle"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(ExperimentConfig::parse("alpha = 1.5"), Err(ExperimentError::Config { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("trials"), Err(ExperimentError::Config { line: 1, .. })));
        for key in CONFIG_KEYS.into_iter().filter(|k| !matches!(*k, "model" | "alpha")) {
            assert_eq!(ExperimentConfig::default().set(key, "1"), Ok(true), "{key}");
        }
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash("ensemble"), b.hash("ensemble"));
        assert_eq!(a.hash("ensemble").len(), 16);
        b.seed = 1;
        assert_ne!(a.hash("ensemble"), b.hash("ensemble"));
        assert_ne!(a.hash("ensemble"), a.hash("errvst"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fits_are_deterministic_with_bounded_r2(
            ys in proptest::collection::vec(0.1f64..50.0, 4..9),
            family in prop_oneof![
                Just(FitFamily::Semilog), Just(FitFamily::Loglog),
                Just(FitFamily::Polyloglog), Just(FitFamily::PolylogPower)
            ],
        ) {
            let ns: Vec<f64> = (0..ys.len()).map(|k| (4usize << k) as f64).collect();
            let f1 = fit_points(&ns, &ys, family).unwrap();
            let f2 = fit_points(&ns, &ys, family).unwrap();
            prop_assert_eq!(f1, f2);
            prop_assert!((0.0..=1.0).contains(&f1.r_squared));
        }

        #[test]
        fn jensen_on_arbitrary_gaps(deltas in proptest::collection::vec(1e-3f64..10.0, 1..40)) {
            let inv: Vec<f64> = deltas.iter().map(|d| 1.0 / d).collect();
            prop_assert!(stats::mean(&inv) >= (1.0 / stats::mean(&deltas)) * (1.0 - 1e-12));
        }
    }
}
