//! Run configuration with three layers: built-in defaults, an optional TOML
//! file, and command-line flags. Later layers win field by field.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use vpal_core::problems::{build_problem, Family, ProblemInstance, Regularizer};
use vpal_core::{Chi2Config, SolverOptions};

use crate::error::CliError;

/// What to run; stored in the config too so a file alone can name it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    /// Run one solver on one instance and log every iteration.
    Solve,
    /// Run both solvers on the same instance and tabulate costs side by side.
    Compare,
    /// Solve over a logarithmic (mu, lambda) grid and record the quality map.
    Sweep,
    /// Pick mu (or lambda) automatically by bisection on a residual statistic.
    Autoselect,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Denoise,
    Blur,
    Tomo,
}

impl From<FamilyKind> for Family {
    fn from(value: FamilyKind) -> Family {
        match value {
            FamilyKind::Denoise => Family::Denoise,
            FamilyKind::Blur => Family::Blur,
            FamilyKind::Tomo => Family::Tomo,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RegKind {
    Tv,
    Laplacian,
    Identity,
}

impl From<RegKind> for Regularizer {
    fn from(value: RegKind) -> Regularizer {
        match value {
            RegKind::Tv => Regularizer::Tv,
            RegKind::Laplacian => Regularizer::Laplacian,
            RegKind::Identity => Regularizer::Identity,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Vpal,
    Admm,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Vpal => "vpal",
            SolverKind::Admm => "admm",
        }
    }
}

/// Which parameter the autoselect search moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SelectTarget {
    /// Search the penalty weight at fixed shrinkage threshold.
    Mu,
    /// Search the coupling weight at fixed penalty weight.
    Lambda,
}

impl SelectTarget {
    pub fn name(self) -> &'static str {
        match self {
            SelectTarget::Mu => "mu",
            SelectTarget::Lambda => "lambda",
        }
    }
}

/// Endpoints and point count of a logarithmically spaced grid, written
/// `lo:hi:count` on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, count: usize) -> Self {
        GridSpec { lo, hi, count }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let ratio = self.hi / self.lo;
        (0..self.count)
            .map(|i| self.lo * ratio.powf(i as f64 / (self.count - 1) as f64))
            .collect()
    }

    fn validate(&self, what: &str) -> Result<(), CliError> {
        if !(self.lo > 0.0 && self.lo.is_finite() && self.hi.is_finite() && self.hi >= self.lo) {
            return Err(CliError::usage(format!(
                "{what} must satisfy 0 < lo <= hi, got {self}"
            )));
        }
        if self.count == 0 {
            return Err(CliError::usage(format!("{what} needs at least one point")));
        }
        Ok(())
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected lo:hi:count, got '{s}'"));
        }
        let lo = parts[0]
            .parse()
            .map_err(|_| format!("bad grid endpoint '{}'", parts[0]))?;
        let hi = parts[1]
            .parse()
            .map_err(|_| format!("bad grid endpoint '{}'", parts[1]))?;
        let count = parts[2]
            .parse()
            .map_err(|_| format!("bad grid count '{}'", parts[2]))?;
        Ok(GridSpec { lo, hi, count })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.count)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub family: FamilyKind,
    /// Image side length in pixels.
    pub size: usize,
    /// Noise fraction in (0, 1); 0.10 means 10% relative noise.
    pub noise: f64,
    pub reg: RegKind,
    pub seed: u64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            family: FamilyKind::Denoise,
            size: 16,
            noise: 0.1,
            reg: RegKind::Tv,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub solver: SolverKind,
    pub mu: f64,
    /// Coupling weight. Mutually exclusive with `gamma`; defaults to 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Shrinkage threshold `mu / lambda^2`, as an alternative way to pin
    /// the coupling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let base = SolverOptions::new(0.1, 1.0);
        SolverConfig {
            solver: SolverKind::Vpal,
            mu: base.mu,
            lambda: None,
            gamma: None,
            tol: base.tol,
            max_iter: base.max_outer,
        }
    }
}

impl SolverConfig {
    /// The coupling weight: explicit, derived from `gamma`, or 1.
    pub fn lambda(&self) -> Result<f64, CliError> {
        match (self.lambda, self.gamma) {
            (Some(_), Some(_)) => Err(CliError::usage("set --lambda or --gamma, not both")),
            (Some(l), None) => Ok(l),
            (None, Some(g)) => {
                if self.mu <= 0.0 {
                    return Err(CliError::usage("--gamma needs a positive --mu"));
                }
                Ok((self.mu / g).sqrt())
            }
            (None, None) => Ok(1.0),
        }
    }

    pub fn options(&self) -> Result<SolverOptions, CliError> {
        let mut opts = SolverOptions::new(self.mu, self.lambda()?);
        opts.tol = self.tol;
        opts.max_outer = self.max_iter;
        Ok(opts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectConfig {
    pub target: SelectTarget,
    /// Noise level; defaults to the generated instance's recorded value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Degrees of freedom of the residual target; defaults to the data length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dof: Option<usize>,
    pub eta: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub max_evals: usize,
}

impl Default for SelectConfig {
    fn default() -> Self {
        let base = Chi2Config::new(1.0, 1, 1.0);
        SelectConfig {
            target: SelectTarget::Mu,
            sigma: None,
            dof: None,
            eta: base.eta,
            tau1: base.tau1,
            tau2: base.tau2,
            max_evals: base.max_evals,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub grid_mu: GridSpec,
    pub grid_lambda: GridSpec,
    /// Thread cap for grid points; unset means one thread per core.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            grid_mu: GridSpec::new(1e-3, 1.0, 7),
            grid_lambda: GridSpec::new(0.1, 10.0, 5),
            jobs: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub out: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { out: PathBuf::from(".") }
    }
}

/// Everything a run needs. A run is a pure function of this value: all
/// randomness flows from the seeds inside it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
    pub select: SelectConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("a run config always serializes")
    }

    /// Folds set flags over the current values.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.problem {
            self.problem.family = v;
        }
        if let Some(v) = o.size {
            self.problem.size = v;
        }
        if let Some(v) = o.noise {
            self.problem.noise = v;
        }
        if let Some(v) = o.reg {
            self.problem.reg = v;
        }
        if let Some(v) = o.seed {
            self.problem.seed = v;
        }
        if let Some(v) = o.solver {
            self.solver.solver = v;
        }
        if let Some(v) = o.mu {
            self.solver.mu = v;
        }
        if let Some(v) = o.lambda {
            self.solver.lambda = Some(v);
            self.solver.gamma = None;
        }
        if let Some(v) = o.gamma {
            self.solver.gamma = Some(v);
            self.solver.lambda = None;
        }
        if let Some(v) = o.tol {
            self.solver.tol = v;
        }
        if let Some(v) = o.max_iter {
            self.solver.max_iter = v;
        }
        if let Some(v) = o.grid_mu {
            self.sweep.grid_mu = v;
        }
        if let Some(v) = o.grid_lambda {
            self.sweep.grid_lambda = v;
        }
        if let Some(v) = o.sigma {
            self.select.sigma = Some(v);
        }
        if let Some(v) = o.dof {
            self.select.dof = Some(v);
        }
        if let Some(v) = o.eta {
            self.select.eta = v;
        }
        if let Some(v) = o.tau1 {
            self.select.tau1 = v;
        }
        if let Some(v) = o.tau2 {
            self.select.tau2 = v;
        }
        if let Some(v) = o.max_evals {
            self.select.max_evals = v;
        }
        if let Some(v) = o.target {
            self.select.target = v;
        }
        if let Some(v) = o.jobs {
            self.sweep.jobs = Some(v);
        }
        if let Some(v) = &o.out {
            self.output.out = v.clone();
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: &str| Err(CliError::usage(m.to_string()));
        if self.problem.size < 8 {
            return usage("--size must be at least 8");
        }
        if !(self.problem.noise > 0.0 && self.problem.noise < 1.0) {
            return usage("--noise is a fraction in (0, 1); e.g. 0.1 for 10% noise");
        }
        let s = &self.solver;
        if !(s.mu >= 0.0 && s.mu.is_finite()) {
            return usage("--mu must be finite and nonnegative");
        }
        if s.lambda.is_some() && s.gamma.is_some() {
            return usage("set --lambda or --gamma, not both");
        }
        if let Some(l) = s.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return usage("--lambda must be finite and positive");
            }
        }
        if let Some(g) = s.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return usage("--gamma must be finite and positive");
            }
            if s.mu <= 0.0 {
                return usage("--gamma needs a positive --mu");
            }
        }
        if !(s.tol > 0.0 && s.tol.is_finite()) {
            return usage("--tol must be finite and positive");
        }
        if s.max_iter == 0 {
            return usage("--max-iter must be at least 1");
        }
        let t = &self.select;
        if let Some(x) = t.sigma {
            if !(x > 0.0 && x.is_finite()) {
                return usage("--sigma must be finite and positive");
            }
        }
        if t.dof == Some(0) {
            return usage("--dof must be at least 1");
        }
        for (value, name) in [(t.eta, "--eta"), (t.tau1, "--tau1"), (t.tau2, "--tau2")] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CliError::usage(format!("{name} must be finite and positive")));
            }
        }
        if t.max_evals < 2 {
            return usage("--max-evals must be at least 2 (both bracket ends get evaluated)");
        }
        self.sweep.grid_mu.validate("--grid-mu")?;
        self.sweep.grid_lambda.validate("--grid-lambda")?;
        if self.sweep.jobs == Some(0) {
            return usage("--jobs must be at least 1");
        }
        Ok(())
    }

    pub fn build_problem(&self) -> Result<ProblemInstance, CliError> {
        Ok(build_problem(
            self.problem.family.into(),
            self.problem.size,
            self.problem.noise,
            self.problem.reg.into(),
            self.problem.seed,
            None,
        )?)
    }
}

/// Every tunable as an optional flag; set ones override the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// Problem family to generate.
    #[arg(long = "problem", global = true, value_enum)]
    pub problem: Option<FamilyKind>,
    /// Image side length in pixels (at least 8).
    #[arg(long, global = true)]
    pub size: Option<usize>,
    /// Noise fraction in (0, 1); 0.10 means 10% relative noise.
    #[arg(long, global = true)]
    pub noise: Option<f64>,
    /// Regularization operator.
    #[arg(long, global = true, value_enum)]
    pub reg: Option<RegKind>,
    /// Which solver runs the reconstructions.
    #[arg(long, global = true, value_enum)]
    pub solver: Option<SolverKind>,
    /// Weight of the l1 penalty.
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Shrinkage threshold mu / lambda^2 (alternative to --lambda).
    #[arg(long, global = true, conflicts_with = "lambda")]
    pub gamma: Option<f64>,
    /// Coupling weight of the splitting.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Outer stopping tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Outer iteration cap.
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Instance seed; drives both the phantom and the noise.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Penalty-weight grid for sweeps, as lo:hi:count (log spaced).
    #[arg(long, global = true)]
    pub grid_mu: Option<GridSpec>,
    /// Coupling-weight grid for sweeps, as lo:hi:count (log spaced).
    #[arg(long, global = true)]
    pub grid_lambda: Option<GridSpec>,
    /// Noise level for selection; defaults to the instance's recorded value.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Degrees of freedom of the residual target; defaults to the data length.
    #[arg(long, global = true)]
    pub dof: Option<usize>,
    /// Safety factor on the residual target.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Absolute bracket-width stop for bisection.
    #[arg(long, global = true)]
    pub tau1: Option<f64>,
    /// Relative bracket-width and flat-statistic stop for bisection.
    #[arg(long, global = true)]
    pub tau2: Option<f64>,
    /// Solver-run budget for bisection.
    #[arg(long, global = true)]
    pub max_evals: Option<usize>,
    /// Which parameter autoselect searches; lambda keeps mu fixed.
    #[arg(long, global = true, value_enum)]
    pub target: Option<SelectTarget>,
    /// Thread cap for sweep grid points.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory for CSV, images and the resolved config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}
