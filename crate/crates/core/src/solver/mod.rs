//! The optimization core: shrinkage, two alternating solvers, objective
//! evaluations, step-size rules, and the shared stopping criterion.
//!
//! Both solvers minimize `1/2 ||A x - b||^2 + mu ||D x||_1` through the
//! augmented splitting `y ~ D x` with scaled multiplier `c`. They differ in
//! the x-update: [`vpal_solve`] takes cheap projected-gradient steps while
//! [`admm_solve`] solves each x-subproblem with an inner least-squares
//! iteration. Everything is expressed through [`LinearOperator`], so no
//! matrix is ever formed.
//!
//! [`LinearOperator`]: crate::linops::LinearOperator

mod admm;
mod lsqr;
mod objective;
mod shrinkage;
mod step;
mod vpal;

pub use admm::admm_solve;
pub use lsqr::{lsqr, LsqrResult};
pub use objective::Objective;
pub use shrinkage::{shrink, shrink_scalar, shrinkage_map};
pub use step::{exact_line_search, linearized_step};
pub use vpal::vpal_solve;

use crate::linops::MatvecCounter;
use crate::problems::ProblemInstance;
use crate::vecmath::{norm2, norm_inf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver options: {0}")]
    BadOptions(String),
    #[error("update direction lies in the null space of the stacked operator")]
    DegenerateDirection,
    #[error("line search kept descending after {0} bracket doublings")]
    UnboundedDirection(usize),
    #[error("iterate became non-finite at outer iteration {iteration}")]
    NonFinite { iteration: usize },
}

/// Policy for the x/y updates inside one outer iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerMode {
    /// One gradient step and one shrinkage per outer iteration. This is the
    /// practical variant and the default.
    SingleStep,
    /// Repeat the inner update until the projected objective stalls (relative
    /// decrease below `inner_tol`) or `max_inner` steps.
    IterateToTol,
}

/// How the gradient step length is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepRule {
    /// Closed-form step for the quadratic model, `g.g / h.h`.
    Linearized,
    /// Golden-section search on the projected objective along the step ray.
    ExactLineSearch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationLimit,
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::IterationLimit => "iteration_limit",
        }
    }
}

/// Tuning knobs shared by both solvers.
#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Weight of the l1 penalty. Zero is allowed and reduces the problem to
    /// plain least squares.
    pub mu: f64,
    /// Coupling weight of the splitting; the shrinkage threshold is
    /// `mu / lambda^2`.
    pub lambda: f64,
    /// Outer stopping tolerance.
    pub tol: f64,
    pub max_outer: usize,
    pub inner_mode: InnerMode,
    /// Stall tolerance for `InnerMode::IterateToTol`.
    pub inner_tol: f64,
    /// Inner step cap for `InnerMode::IterateToTol`.
    pub max_inner: usize,
    /// Iteration cap for the least-squares solves inside `admm_solve`.
    pub admm_inner_max: usize,
    /// Normal-equation tolerance for those solves.
    pub admm_inner_tol: f64,
    pub step_rule: StepRule,
}

impl SolverOptions {
    pub fn new(mu: f64, lambda: f64) -> Self {
        SolverOptions {
            mu,
            lambda,
            tol: 1e-6,
            max_outer: 1000,
            inner_mode: InnerMode::SingleStep,
            inner_tol: 1e-6,
            max_inner: 50,
            // The least-squares subproblems must be solved noticeably more
            // accurately than the outer tolerance, or their error becomes
            // the floor on how close the multiplier scheme can get.
            admm_inner_max: 200,
            admm_inner_tol: 1e-8,
            step_rule: StepRule::Linearized,
        }
    }

    /// Construct from the penalty weight and the shrinkage threshold
    /// `gamma = mu / lambda^2`, the parameterization used when `gamma` is
    /// held fixed while `mu` varies.
    pub fn from_shrinkage(mu: f64, gamma: f64) -> Self {
        assert!(mu > 0.0 && mu.is_finite(), "mu must be positive to derive lambda");
        assert!(gamma > 0.0 && gamma.is_finite(), "gamma must be positive");
        Self::new(mu, (mu / gamma).sqrt())
    }

    /// Shrinkage threshold implied by the current weights.
    pub fn gamma(&self) -> f64 {
        self.mu / (self.lambda * self.lambda)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |what: &str| Err(SolverError::BadOptions(what.to_string()));
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return bad("mu must be finite and nonnegative");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and positive");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol must be finite and positive");
        }
        if self.max_outer == 0 {
            return bad("max_outer must be at least 1");
        }
        if !(self.inner_tol > 0.0 && self.inner_tol.is_finite()) {
            return bad("inner_tol must be finite and positive");
        }
        if self.max_inner == 0 {
            return bad("max_inner must be at least 1");
        }
        if self.admm_inner_max == 0 {
            return bad("admm_inner_max must be at least 1");
        }
        if !(self.admm_inner_tol > 0.0 && self.admm_inner_tol.is_finite()) {
            return bad("admm_inner_tol must be finite and positive");
        }
        Ok(())
    }
}

/// Snapshot of how many times each operator has been applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MatvecCounts {
    pub a_forward: u64,
    pub a_adjoint: u64,
    pub d_forward: u64,
    pub d_adjoint: u64,
}

impl MatvecCounts {
    pub fn total(&self) -> u64 {
        self.a_forward + self.a_adjoint + self.d_forward + self.d_adjoint
    }

    pub(crate) fn snapshot(a: &MatvecCounter, d: &MatvecCounter) -> Self {
        MatvecCounts {
            a_forward: a.forward_count(),
            a_adjoint: a.adjoint_count(),
            d_forward: d.forward_count(),
            d_adjoint: d.adjoint_count(),
        }
    }
}

/// Everything a solve produces. All histories have one entry for the initial
/// zero state plus one per outer iteration.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub x_hat: Vec<f64>,
    /// Composite objective `1/2 ||A x - b||^2 + mu ||D x||_1` per iteration.
    pub objective_history: Vec<f64>,
    /// Relative error against the true signal, when the problem carries one.
    pub error_history: Option<Vec<f64>>,
    /// Relative residual `||A x - b|| / ||b||` per iteration.
    pub residual_history: Vec<f64>,
    /// Cumulative operator-application counts per iteration.
    pub matvec_history: Vec<MatvecCounts>,
    pub outer_iterations: usize,
    pub total_inner_iterations: usize,
    pub matvecs: MatvecCounts,
    pub converged: bool,
    pub termination: Termination,
}

/// The shared stopping rule: both the objective decrease and the iterate
/// movement must be small,
///
/// ```text
/// f_prev - f_curr <= tau (1 + f_curr)   and
/// ||x_prev - x_curr||_inf <= sqrt(tau) (1 + ||x_curr||_inf)
/// ```
///
/// with inclusive comparisons on both.
pub fn outer_stop(f_prev: f64, f_curr: f64, x_prev: &[f64], x_curr: &[f64], tau: f64) -> bool {
    assert!(tau > 0.0, "stopping tolerance must be positive");
    assert_eq!(x_prev.len(), x_curr.len());
    if f_prev - f_curr > tau * (1.0 + f_curr) {
        return false;
    }
    let mut max_move: f64 = 0.0;
    for (p, c) in x_prev.iter().zip(x_curr) {
        max_move = max_move.max((p - c).abs());
    }
    max_move <= tau.sqrt() * (1.0 + norm_inf(x_curr))
}

/// History recorder shared by the solvers.
pub(crate) struct Trace<'a> {
    objective: Vec<f64>,
    error: Option<Vec<f64>>,
    residual: Vec<f64>,
    matvecs: Vec<MatvecCounts>,
    x_true: Option<&'a [f64]>,
    x_true_norm: f64,
    fit_denom: f64,
}

impl<'a> Trace<'a> {
    pub(crate) fn new(problem: &'a ProblemInstance, capacity: usize) -> Self {
        let b_norm = norm2(&problem.b);
        let x_true = problem.x_true.as_deref().filter(|t| norm2(t) > 0.0);
        Trace {
            objective: Vec::with_capacity(capacity),
            error: x_true.map(|_| Vec::with_capacity(capacity)),
            residual: Vec::with_capacity(capacity),
            matvecs: Vec::with_capacity(capacity),
            x_true,
            x_true_norm: x_true.map_or(1.0, norm2),
            fit_denom: if b_norm > 0.0 { b_norm } else { 1.0 },
        }
    }

    pub(crate) fn push(&mut self, objective: f64, fit_norm: f64, x: &[f64], counts: MatvecCounts) {
        self.objective.push(objective);
        self.residual.push(fit_norm / self.fit_denom);
        if let (Some(err), Some(truth)) = (self.error.as_mut(), self.x_true) {
            let mut diff_sq = 0.0;
            for (xi, ti) in x.iter().zip(truth) {
                diff_sq += (xi - ti) * (xi - ti);
            }
            err.push(diff_sq.sqrt() / self.x_true_norm);
        }
        self.matvecs.push(counts);
    }

    pub(crate) fn into_result(
        self,
        x_hat: Vec<f64>,
        outer_iterations: usize,
        total_inner_iterations: usize,
        termination: Termination,
    ) -> SolveResult {
        let matvecs = self.matvecs.last().copied().unwrap_or_default();
        SolveResult {
            x_hat,
            objective_history: self.objective,
            error_history: self.error,
            residual_history: self.residual,
            matvec_history: self.matvecs,
            outer_iterations,
            total_inner_iterations,
            matvecs,
            converged: termination == Termination::Converged,
            termination,
        }
    }
}
