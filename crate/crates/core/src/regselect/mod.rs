//! Automatic choice of the penalty weight from a known noise level.
//!
//! Hand-tuning `mu` is the usual obstacle to using an l1 penalty in practice.
//! This module offers two data-driven rules. The first matches the penalized
//! residual `F(mu) = ||A x(mu) - b||^2 + mu ||D x(mu)||_1` to its expected
//! value `eta * dof * sigma^2` under Gaussian noise of known level `sigma`.
//! The second, the classical discrepancy principle, drives the plain residual
//! `||A x - b||^2` toward the noise floor `m sigma^2` by varying the coupling
//! weight `lambda` at a fixed `mu`.
//!
//! Both rules reduce to finding the root of a scalar statistic over a
//! positive parameter that plausibly spans decades, so the shared driver
//! bisects in log space: the bracket widens a whole decade at a time until
//! the statistic changes sign, and every probe lands on the geometric mean of
//! the bracket endpoints. Each probe costs a full solve, so a hard evaluation
//! budget is enforced throughout, bracketing included.

use crate::linops::LinearOperator;
use crate::problems::ProblemInstance;
use crate::solver::{vpal_solve, SolveResult, SolverError, SolverOptions};
use crate::vecmath::{norm1, norm_inf};
use thiserror::Error;

/// Widest allowed search: the bracket never exceeds ten-to-the-eight on
/// either side of its anchor.
const MAX_BRACKET_EXPONENT: f64 = 8.0;

/// Failures raised during parameter selection.
#[derive(Debug, Error)]
pub enum SelectError {
    /// The data cannot anchor or scale the search.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// The statistic kept one sign over the widest bracket the caps and the
    /// evaluation budget allowed. Usually means the noise level or the
    /// degrees of freedom are misspecified.
    #[error(
        "no sign change in [{lo:.6e}, {hi:.6e}] (statistic endpoints {g_lo:.6e} and {g_hi:.6e}) \
         after {expansions} widenings"
    )]
    BracketFailure {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
        expansions: usize,
    },

    /// An inner solve failed.
    #[error(transparent)]
    Solver(#[from] SolverError),

    /// Rejected configuration.
    #[error("bad selection config: {0}")]
    BadConfig(String),
}

/// Settings for selecting the penalty weight from a known noise level.
#[derive(Clone, Debug)]
pub struct Chi2Config {
    /// Per-sample noise standard deviation. Always an input, never estimated
    /// from the data.
    pub sigma: f64,
    /// Degrees of freedom of the residual target `eta * dof * sigma^2`;
    /// conventionally the data length.
    pub dof: usize,
    /// Safety factor on the target. Callers wanting a confidence shift
    /// `zeta` can pass `(dof + zeta) / dof`.
    pub eta: f64,
    /// Shrinkage threshold held fixed across evaluations; each trial weight
    /// `mu` solves at coupling `lambda = sqrt(mu / gamma)`.
    pub gamma: f64,
    /// Absolute bracket-width stop.
    pub tau1: f64,
    /// Relative bracket-width stop; also scales the flat-statistic stop.
    pub tau2: f64,
    /// Hard cap on solver evaluations, bracketing included.
    pub max_evals: usize,
    /// Half-width of the initial bracket in decades around the anchor.
    pub bracket_exponent: f64,
}

impl Chi2Config {
    /// Defaults: `eta = 1`, `tau1 = 0.01`, `tau2 = 0.02`, `max_evals = 10`,
    /// and a one-decade initial bracket.
    pub fn new(sigma: f64, dof: usize, gamma: f64) -> Self {
        Chi2Config {
            sigma,
            dof,
            eta: 1.0,
            gamma,
            tau1: 0.01,
            tau2: 0.02,
            max_evals: 10,
            bracket_exponent: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SelectError> {
        let bad = |msg: &str| Err(SelectError::BadConfig(msg.to_string()));
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be positive and finite");
        }
        if self.dof == 0 {
            return bad("dof must be at least 1");
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad("eta must be positive and finite");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be positive and finite");
        }
        if !(self.tau1 > 0.0 && self.tau1.is_finite()) {
            return bad("tau1 must be positive and finite");
        }
        if !(self.tau2 > 0.0 && self.tau2.is_finite()) {
            return bad("tau2 must be positive and finite");
        }
        if self.max_evals < 2 {
            return bad("max_evals must be at least 2 (both bracket ends cost one)");
        }
        if !(self.bracket_exponent > 0.0 && self.bracket_exponent.is_finite()) {
            return bad("bracket_exponent must be positive and finite");
        }
        Ok(())
    }

    /// Residual target `eta * dof * sigma^2`.
    fn target(&self) -> f64 {
        self.eta * self.dof as f64 * self.sigma * self.sigma
    }

    /// How many decade widenings remain before the bracket half-width cap.
    fn widening_budget(&self) -> usize {
        if self.bracket_exponent >= MAX_BRACKET_EXPONENT {
            0
        } else {
            (MAX_BRACKET_EXPONENT - self.bracket_exponent).floor() as usize
        }
    }
}

/// How a bisection run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BisectTermination {
    /// Bracket width fell below the relative tolerance.
    IntervalRel,
    /// Statistic is flat across the bracket, or a probe hit an exact zero.
    StatisticFlat,
    /// Bracket width fell below the absolute tolerance.
    IntervalAbs,
    /// Evaluation budget ran out with a sign change still in hand.
    EvalBudget,
    /// No sign change found; reported through [`SelectError::BracketFailure`].
    BracketFailure,
}

impl BisectTermination {
    pub fn name(self) -> &'static str {
        match self {
            BisectTermination::IntervalRel => "interval_rel",
            BisectTermination::StatisticFlat => "statistic_flat",
            BisectTermination::IntervalAbs => "interval_abs",
            BisectTermination::EvalBudget => "eval_budget",
            BisectTermination::BracketFailure => "bracket_failure",
        }
    }
}

/// One solver run inside a bisection, in evaluation order.
#[derive(Clone, Debug)]
pub struct Evaluation {
    /// Trial parameter (penalty weight or coupling weight).
    pub parameter: f64,
    /// Raw statistic at the trial point (penalized residual or normalized
    /// discrepancy).
    pub value: f64,
    /// Centered statistic whose root is sought.
    pub statistic: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
}

impl Evaluation {
    fn of(parameter: f64, value: f64, statistic: f64, solve: &SolveResult) -> Self {
        Evaluation {
            parameter,
            value,
            statistic,
            outer_iterations: solve.outer_iterations,
            inner_iterations: solve.total_inner_iterations,
            converged: solve.converged,
        }
    }
}

/// Result of a bisection search.
#[derive(Clone, Debug)]
pub struct BisectionOutcome {
    /// Chosen parameter: the final bracket endpoint whose statistic is
    /// smaller in magnitude (or an exact root when a probe hit one).
    pub selected: f64,
    /// Every solver evaluation in order, bracketing included.
    pub evaluations: Vec<Evaluation>,
    pub termination: BisectTermination,
    /// Final bracket (low, high).
    pub bracket: (f64, f64),
}

/// Anchors the penalty-weight search on the data itself.
///
/// Returns `(sigma^2 / beta, beta)` where `beta = std(D b) / sqrt(2)` is the
/// spread of the filtered data, read as the scale of a Laplacian prior on
/// `D x`. Requires `D b` to have at least two entries and panics when `D`
/// does not apply to `b`; zero spread (constant `D b`) is reported as
/// [`SelectError::DegenerateData`] because it leaves the weight scale-free.
pub fn estimate_mu_map(
    b: &[f64],
    d: &dyn LinearOperator,
    sigma: f64,
) -> Result<(f64, f64), SelectError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(SelectError::BadConfig(
            "sigma must be positive and finite".to_string(),
        ));
    }
    assert_eq!(d.cols(), b.len(), "filter must apply to the data vector");
    let db = d.forward(b);
    assert!(db.len() >= 2, "need at least two filtered values");

    let mean = db.iter().sum::<f64>() / db.len() as f64;
    let ss: f64 = db.iter().map(|&v| (v - mean) * (v - mean)).sum();
    let std = (ss / (db.len() - 1) as f64).sqrt();
    let beta = std / std::f64::consts::SQRT_2;
    if beta == 0.0 {
        return Err(SelectError::DegenerateData(
            "filtered data has zero spread, no scale for the penalty weight".to_string(),
        ));
    }
    Ok((sigma * sigma / beta, beta))
}

/// Penalized residual `F(mu) = ||A x - b||^2 + mu ||D x - 0||_1` at the
/// solution for trial weight `mu`, solved with `lambda = sqrt(mu / gamma)` so
/// the shrinkage threshold stays at `gamma`.
///
/// Both terms are recomputed from the returned solution with fresh operator
/// applications rather than read off solver history.
pub fn chi2_statistic(
    problem: &ProblemInstance,
    gamma: f64,
    mu: f64,
    solver_opts: &SolverOptions,
) -> Result<(f64, SolveResult), SelectError> {
    assert!(
        mu > 0.0 && mu.is_finite(),
        "trial penalty weight must be positive and finite"
    );
    assert!(
        gamma > 0.0 && gamma.is_finite(),
        "shrinkage threshold must be positive and finite"
    );
    let (result, fit_sq) = solve_at(problem, mu, (mu / gamma).sqrt(), solver_opts)?;
    let dx = problem.d.forward(&result.x_hat);
    Ok((fit_sq + mu * norm1(&dx), result))
}

/// Normalized discrepancy `H = ||A x - b||^2 / (m sigma^2) - 1` at the
/// solution for the pair `(mu_fixed, lambda)`, using the noise level carried
/// by the problem itself.
///
/// `H` is negative when the solution fits the data more tightly than the
/// noise explains (overfitting) and positive when it fits more loosely.
pub fn discrepancy_statistic(
    problem: &ProblemInstance,
    mu_fixed: f64,
    lambda: f64,
    solver_opts: &SolverOptions,
) -> Result<(f64, SolveResult), SelectError> {
    if !(problem.sigma > 0.0 && problem.sigma.is_finite()) {
        return Err(SelectError::BadConfig(
            "problem carries no positive noise level, discrepancy target undefined".to_string(),
        ));
    }
    assert!(
        mu_fixed >= 0.0 && mu_fixed.is_finite(),
        "penalty weight must be nonnegative and finite"
    );
    assert!(
        lambda > 0.0 && lambda.is_finite(),
        "coupling weight must be positive and finite"
    );
    let (result, fit_sq) = solve_at(problem, mu_fixed, lambda, solver_opts)?;
    let m = problem.rows() as f64;
    let h = fit_sq / (m * problem.sigma * problem.sigma) - 1.0;
    Ok((h, result))
}

/// Selects the penalty weight by driving the penalized residual to the
/// target `eta * dof * sigma^2`.
///
/// The bracket is anchored at `sigma^2 / beta` from [`estimate_mu_map`] and
/// spans `bracket_exponent` decades on each side. When that anchor is
/// unavailable (`D` does not apply to `b`, or the filtered data has zero
/// spread) the bracket falls back to `[1e-8 mu0, mu0]` with
/// `mu0 = 2 ||A' b||_inf`, above which the zero solution is already optimal
/// for the identity filter. `mu`/`lambda` in `solver_opts` are overridden at
/// every trial; the remaining options (tolerance, iteration caps, step rule)
/// are used as given.
pub fn bisect_mu(
    problem: &ProblemInstance,
    config: &Chi2Config,
    solver_opts: &SolverOptions,
) -> Result<BisectionOutcome, SelectError> {
    config.validate()?;

    let anchor = if problem.d.cols() == problem.b.len() {
        match estimate_mu_map(&problem.b, problem.d.as_ref(), config.sigma) {
            Ok((mu_map, _)) => Some(mu_map),
            Err(SelectError::DegenerateData(_)) => None,
            Err(other) => return Err(other),
        }
    } else {
        None
    };

    let q = config.bracket_exponent;
    let (lo, hi, max_widenings) = match anchor {
        Some(mu_map) => (
            mu_map * 10f64.powf(-q),
            mu_map * 10f64.powf(q),
            config.widening_budget(),
        ),
        None => {
            let mu0 = 2.0 * norm_inf(&problem.a.adjoint(&problem.b));
            if !(mu0 > 0.0 && mu0.is_finite()) {
                return Err(SelectError::DegenerateData(
                    "A'b vanishes, no usable scale for the penalty weight".to_string(),
                ));
            }
            (1e-8 * mu0, mu0, MAX_BRACKET_EXPONENT as usize)
        }
    };

    let target = config.target();
    let params = BisectParams {
        tau1: config.tau1,
        tau2: config.tau2,
        // The flat test compares statistic differences, which carry the scale
        // of the target; normalize so tau2 stays dimensionless.
        flat_tol: config.tau2 * config.dof as f64 * config.sigma * config.sigma,
        max_evals: config.max_evals,
        max_widenings,
    };
    bisect_log(
        |mu| {
            let (f, solve) = chi2_statistic(problem, config.gamma, mu, solver_opts)?;
            Ok(Evaluation::of(mu, f, f - target, &solve))
        },
        lo,
        hi,
        &params,
    )
}

/// Selects the coupling weight at a fixed penalty weight by driving the
/// normalized discrepancy `||A x - b||^2 / (dof sigma^2) - 1` to zero, with
/// `sigma` and `dof` taken from `config`.
///
/// The bracket is anchored at `sqrt(mu_fixed / gamma)`, the coupling that
/// realizes the configured shrinkage threshold at this weight. The
/// discrepancy is already dimensionless, so the flat-statistic stop uses
/// `tau2` unscaled.
pub fn bisect_lambda(
    problem: &ProblemInstance,
    mu_fixed: f64,
    config: &Chi2Config,
    solver_opts: &SolverOptions,
) -> Result<BisectionOutcome, SelectError> {
    config.validate()?;
    assert!(
        mu_fixed > 0.0 && mu_fixed.is_finite(),
        "fixed penalty weight must be positive and finite"
    );

    let lambda0 = (mu_fixed / config.gamma).sqrt();
    let q = config.bracket_exponent;
    let params = BisectParams {
        tau1: config.tau1,
        tau2: config.tau2,
        flat_tol: config.tau2,
        max_evals: config.max_evals,
        max_widenings: config.widening_budget(),
    };
    let denom = config.dof as f64 * config.sigma * config.sigma;
    bisect_log(
        |lambda| {
            let (solve, fit_sq) = solve_at(problem, mu_fixed, lambda, solver_opts)?;
            let h = fit_sq / denom - 1.0;
            Ok(Evaluation::of(lambda, h, h, &solve))
        },
        lambda0 * 10f64.powf(-q),
        lambda0 * 10f64.powf(q),
        &params,
    )
}

/// Runs the solver at `(mu, lambda)` and recomputes the squared data fit
/// `||A x - b||^2` from the solution with a fresh forward application.
fn solve_at(
    problem: &ProblemInstance,
    mu: f64,
    lambda: f64,
    solver_opts: &SolverOptions,
) -> Result<(SolveResult, f64), SelectError> {
    let mut opts = solver_opts.clone();
    opts.mu = mu;
    opts.lambda = lambda;
    let result = vpal_solve(problem, &opts)?;
    let ax = problem.a.forward(&result.x_hat);
    let fit_sq = ax
        .iter()
        .zip(&problem.b)
        .map(|(&ai, &bi)| (ai - bi) * (ai - bi))
        .sum();
    Ok((result, fit_sq))
}

struct BisectParams {
    tau1: f64,
    tau2: f64,
    /// Threshold for the flat-statistic stop, already scaled by the caller.
    flat_tol: f64,
    max_evals: usize,
    max_widenings: usize,
}

/// Probes the statistic at `parameter` if the budget allows, recording the
/// evaluation. `Ok(None)` means the budget is exhausted.
fn probe<E>(
    eval: &mut E,
    parameter: f64,
    log: &mut Vec<Evaluation>,
    max_evals: usize,
) -> Result<Option<f64>, SelectError>
where
    E: FnMut(f64) -> Result<Evaluation, SelectError>,
{
    if log.len() >= max_evals {
        return Ok(None);
    }
    let e = eval(parameter)?;
    let g = e.statistic;
    log.push(e);
    Ok(Some(g))
}

/// Log-space bisection for a root of the statistic over `[lo0, hi0]`.
///
/// First widens the bracket a decade at a time (low end first, then high)
/// until the statistic changes sign, erroring out when `max_widenings` or the
/// evaluation budget runs out first. Then bisects at geometric means,
/// stopping on the first of, in this order: bracket width below
/// `tau2 * (1 + low)` (relative), endpoint statistics within `flat_tol` of
/// each other (flat), width below `tau1` (absolute), or the budget. An exact
/// zero anywhere returns that parameter immediately. Ties at the end go to
/// the endpoint with the smaller statistic magnitude.
fn bisect_log<E>(
    mut eval: E,
    lo0: f64,
    hi0: f64,
    params: &BisectParams,
) -> Result<BisectionOutcome, SelectError>
where
    E: FnMut(f64) -> Result<Evaluation, SelectError>,
{
    assert!(
        lo0.is_finite() && hi0.is_finite() && lo0 > 0.0 && hi0 > lo0,
        "bracket must satisfy 0 < lo < hi"
    );
    assert!(params.max_evals >= 2, "budget must cover both bracket ends");

    let done = |selected: f64,
                evaluations: Vec<Evaluation>,
                termination: BisectTermination,
                bracket: (f64, f64)| {
        Ok(BisectionOutcome {
            selected,
            evaluations,
            termination,
            bracket,
        })
    };

    let mut evaluations = Vec::new();
    let (mut lo, mut hi) = (lo0, hi0);
    // The first two probes always fit the budget (max_evals >= 2).
    let mut g_lo = probe(&mut eval, lo, &mut evaluations, params.max_evals)?
        .expect("budget admits the first probe");
    let mut g_hi = probe(&mut eval, hi, &mut evaluations, params.max_evals)?
        .expect("budget admits the second probe");

    // Widen until the statistic changes sign across the bracket.
    let mut widenings = 0usize;
    loop {
        if g_lo == 0.0 {
            return done(lo, evaluations, BisectTermination::StatisticFlat, (lo, hi));
        }
        if g_hi == 0.0 {
            return done(hi, evaluations, BisectTermination::StatisticFlat, (lo, hi));
        }
        if g_lo * g_hi < 0.0 {
            break;
        }
        if widenings == params.max_widenings {
            return Err(SelectError::BracketFailure {
                lo,
                hi,
                g_lo,
                g_hi,
                expansions: widenings,
            });
        }
        let cand = lo / 10.0;
        match probe(&mut eval, cand, &mut evaluations, params.max_evals)? {
            None => {
                return Err(SelectError::BracketFailure {
                    lo,
                    hi,
                    g_lo,
                    g_hi,
                    expansions: widenings,
                })
            }
            Some(g) => {
                lo = cand;
                g_lo = g;
            }
        }
        if g_lo == 0.0 || g_lo * g_hi < 0.0 {
            widenings += 1;
            continue;
        }
        let cand = hi * 10.0;
        match probe(&mut eval, cand, &mut evaluations, params.max_evals)? {
            None => {
                return Err(SelectError::BracketFailure {
                    lo,
                    hi,
                    g_lo,
                    g_hi,
                    expansions: widenings,
                })
            }
            Some(g) => {
                hi = cand;
                g_hi = g;
            }
        }
        widenings += 1;
    }

    // Bisect at geometric means, keeping the sign change in the bracket.
    let termination = loop {
        if hi - lo < params.tau2 * (1.0 + lo.abs()) {
            break BisectTermination::IntervalRel;
        }
        if (g_hi - g_lo).abs() < params.flat_tol {
            break BisectTermination::StatisticFlat;
        }
        if hi - lo < params.tau1 {
            break BisectTermination::IntervalAbs;
        }
        if evaluations.len() >= params.max_evals {
            break BisectTermination::EvalBudget;
        }
        let mid = (lo * hi).sqrt();
        let e = eval(mid)?;
        let g_mid = e.statistic;
        evaluations.push(e);
        if g_mid == 0.0 {
            return done(mid, evaluations, BisectTermination::StatisticFlat, (lo, hi));
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    };

    let selected = if g_lo.abs() <= g_hi.abs() { lo } else { hi };
    done(selected, evaluations, termination, (lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{DenseOperator, FiniteDifference2d, Identity};
    use crate::problems::{build_problem, piecewise_phantom, Family, ProblemInstance, Regularizer};
    use crate::solver::shrink;
    use crate::test_oracles::sample_std;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn identity_problem(b: Vec<f64>) -> ProblemInstance {
        let n = b.len();
        ProblemInstance::custom(Arc::new(Identity::new(n)), Arc::new(Identity::new(n)), b)
    }

    fn stub_params(tau1: f64, tau2: f64, flat_tol: f64, max_evals: usize) -> BisectParams {
        BisectParams {
            tau1,
            tau2,
            flat_tol,
            max_evals,
            max_widenings: 7,
        }
    }

    fn stub_eval(statistic: impl Fn(f64) -> f64) -> impl FnMut(f64) -> Result<Evaluation, SelectError> {
        move |p| {
            let g = statistic(p);
            Ok(Evaluation {
                parameter: p,
                value: g,
                statistic: g,
                outer_iterations: 0,
                inner_iterations: 0,
                converged: true,
            })
        }
    }

    fn statistic_at(outcome: &BisectionOutcome, parameter: f64) -> f64 {
        outcome
            .evaluations
            .iter()
            .find(|e| e.parameter == parameter)
            .expect("bracket endpoint was evaluated")
            .statistic
    }

    #[test]
    fn map_anchor_matches_the_unit_case() {
        // Filtered data [1, -1]: sample std sqrt(2), so beta = 1 and the
        // anchor collapses to sigma^2.
        let d = Identity::new(2);
        let (mu_map, beta) = estimate_mu_map(&[1.0, -1.0], &d, 2.0).unwrap();
        assert_relative_eq!(beta, 1.0, max_relative = 1e-12);
        assert_relative_eq!(mu_map, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn map_anchor_requires_spread() {
        let d = FiniteDifference2d::new(3, 3);
        let err = estimate_mu_map(&[0.0; 9], &d, 1.0).unwrap_err();
        assert!(matches!(err, SelectError::DegenerateData(_)));

        // A nonzero constant image still has spread through the boundary
        // rows of the difference operator.
        let ok = estimate_mu_map(&[0.7; 9], &d, 1.0);
        assert!(ok.is_ok());
        let (mu_map, beta) = ok.unwrap();
        assert!(beta > 0.0 && mu_map > 0.0);
    }

    #[test]
    fn map_anchor_matches_a_direct_spread_computation() {
        let mut rng = ChaCha8Rng::seed_from_u64(401);
        let b: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let entries: Vec<f64> = (0..15 * 20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d = DenseOperator::new(15, 20, entries).unwrap();

        let db = d.forward(&b);
        let want_beta = sample_std(&db) / std::f64::consts::SQRT_2;
        let sigma = 0.3;

        let (mu_map, beta) = estimate_mu_map(&b, &d, sigma).unwrap();
        assert_relative_eq!(beta, want_beta, max_relative = 1e-12);
        assert_relative_eq!(mu_map, sigma * sigma / want_beta, max_relative = 1e-12);
    }

    #[test]
    fn map_anchor_rejects_a_bad_noise_level() {
        let d = Identity::new(2);
        assert!(matches!(
            estimate_mu_map(&[1.0, -1.0], &d, 0.0),
            Err(SelectError::BadConfig(_))
        ));
        assert!(matches!(
            estimate_mu_map(&[1.0, -1.0], &d, f64::NAN),
            Err(SelectError::BadConfig(_))
        ));
    }

    #[test]
    fn config_validation_rejects_each_bad_field() {
        assert!(Chi2Config::new(0.1, 64, 0.5).validate().is_ok());

        let mut c = Chi2Config::new(0.0, 64, 0.5);
        assert!(c.validate().is_err());
        c = Chi2Config::new(0.1, 0, 0.5);
        assert!(c.validate().is_err());
        c = Chi2Config::new(0.1, 64, -1.0);
        assert!(c.validate().is_err());
        c = Chi2Config::new(0.1, 64, 0.5);
        c.eta = 0.0;
        assert!(c.validate().is_err());
        c = Chi2Config::new(0.1, 64, 0.5);
        c.tau1 = 0.0;
        assert!(c.validate().is_err());
        c = Chi2Config::new(0.1, 64, 0.5);
        c.tau2 = -0.02;
        assert!(c.validate().is_err());
        c = Chi2Config::new(0.1, 64, 0.5);
        c.max_evals = 1;
        assert!(c.validate().is_err());
        c = Chi2Config::new(0.1, 64, 0.5);
        c.bracket_exponent = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn penalized_residual_matches_a_shrinkage_oracle() {
        // With both operators the identity the minimizer is soft
        // thresholding of the data, so the statistic has a closed form.
        let b = vec![1.5, -0.2, 0.05, 3.0];
        let problem = identity_problem(b.clone());
        let mut opts = SolverOptions::new(1.0, 1.0);
        opts.tol = 1e-12;
        opts.max_outer = 100_000;

        let (mu, gamma) = (0.3, 0.5);
        let (f, result) = chi2_statistic(&problem, gamma, mu, &opts).unwrap();

        let x_want = shrink(&b, mu);
        let fit: f64 = x_want
            .iter()
            .zip(&b)
            .map(|(&xi, &bi)| (xi - bi) * (xi - bi))
            .sum();
        let want = fit + mu * x_want.iter().map(|v| v.abs()).sum::<f64>();
        assert_relative_eq!(f, want, max_relative = 1e-5);
        assert!(f > 0.0);
        for (got, want) in result.x_hat.iter().zip(&x_want) {
            assert!((got - want).abs() <= 1e-5, "{got} vs {want}");
        }
    }

    #[test]
    fn penalized_residual_grows_with_the_weight_on_clean_data() {
        // Noise-free data: at a vanishing weight the fit is exact and the
        // statistic is dominated by the small penalty term, so it increases
        // with the weight near zero.
        let clean = piecewise_phantom(8, 3).pixels;
        let problem = ProblemInstance::custom(
            Arc::new(Identity::new(64)),
            Arc::new(FiniteDifference2d::new(8, 8)),
            clean,
        );
        let mut opts = SolverOptions::new(1.0, 1.0);
        opts.tol = 1e-10;
        opts.max_outer = 50_000;

        let (f_small, _) = chi2_statistic(&problem, 0.1, 1e-4, &opts).unwrap();
        let (f_large, _) = chi2_statistic(&problem, 0.1, 1e-2, &opts).unwrap();
        assert!(f_small > 0.0);
        assert!(
            f_small < f_large,
            "penalized residual should grow with the weight near zero: {f_small} vs {f_large}"
        );
        assert!(f_small < 0.05, "near-zero weight should fit clean data tightly");
    }

    #[test]
    fn bisection_finds_the_root_of_a_linear_statistic() {
        // Statistic mu - 1 has its root at 1; the absolute interval stop
        // pins the selection within tau1 of it.
        let params = stub_params(0.01, 1e-9, 1e-12, 100);
        let outcome = bisect_log(stub_eval(|mu| mu - 1.0), 0.1, 20.0, &params).unwrap();

        assert!((outcome.selected - 1.0).abs() <= 0.01);
        assert_eq!(outcome.termination, BisectTermination::IntervalAbs);
        assert!(outcome.evaluations.len() >= 3);
        for e in &outcome.evaluations {
            assert!(e.parameter >= 0.1 && e.parameter <= 20.0);
        }
        // The first probe after the endpoints is the geometric mean.
        assert_relative_eq!(
            outcome.evaluations[2].parameter,
            (0.1f64 * 20.0).sqrt(),
            max_relative = 1e-12
        );
        // The final bracket still straddles the root and the selection is
        // the endpoint with the smaller magnitude.
        let (lo, hi) = outcome.bracket;
        assert!(lo <= outcome.selected && outcome.selected <= hi);
        let (g_lo, g_hi) = (statistic_at(&outcome, lo), statistic_at(&outcome, hi));
        assert!(g_lo < 0.0 && g_hi > 0.0);
        let best = if g_lo.abs() <= g_hi.abs() { lo } else { hi };
        assert_eq!(outcome.selected, best);
    }

    #[test]
    fn bisection_reports_exact_roots_immediately() {
        // sqrt(0.1 * 10) is exactly 1, so the third probe hits the root.
        let params = stub_params(0.01, 1e-9, 1e-12, 100);
        let outcome = bisect_log(stub_eval(|mu| mu - 1.0), 0.1, 10.0, &params).unwrap();
        assert_eq!(outcome.evaluations.len(), 3);
        assert_eq!(outcome.selected, 1.0);
        assert_eq!(outcome.termination, BisectTermination::StatisticFlat);
    }

    #[test]
    fn bisection_respects_the_evaluation_budget() {
        let params = stub_params(1e-9, 1e-15, 1e-18, 3);
        let outcome = bisect_log(stub_eval(|mu| mu - 1.0), 0.1, 20.0, &params).unwrap();
        assert_eq!(outcome.evaluations.len(), 3);
        assert_eq!(outcome.termination, BisectTermination::EvalBudget);
        let (lo, hi) = outcome.bracket;
        assert!(lo <= outcome.selected && outcome.selected <= hi);
    }

    #[test]
    fn bisection_stops_when_the_statistic_is_flat() {
        // A nearly constant statistic that still changes sign: the flat rule
        // fires right after bracketing, before any midpoint probe.
        let params = stub_params(0.01, 0.02, 1e-3, 100);
        let outcome = bisect_log(stub_eval(|mu| 1e-6 * (mu - 1.0)), 0.1, 20.0, &params).unwrap();
        assert_eq!(outcome.termination, BisectTermination::StatisticFlat);
        assert_eq!(outcome.evaluations.len(), 2);
        // 0.1 sits closer to the root, so its statistic magnitude wins.
        assert_eq!(outcome.selected, 0.1);
    }

    #[test]
    fn bisection_fails_without_a_sign_change() {
        // Strictly positive statistic: widening runs to its cap and the
        // search reports the widest bracket it looked at.
        let params = stub_params(0.01, 1e-9, 1e-12, 100);
        let err = bisect_log(stub_eval(|mu| mu + 9.0), 0.1, 10.0, &params).unwrap_err();
        match err {
            SelectError::BracketFailure {
                lo,
                hi,
                g_lo,
                g_hi,
                expansions,
            } => {
                assert_eq!(expansions, 7);
                assert_relative_eq!(lo, 1e-8, max_relative = 1e-9);
                assert_relative_eq!(hi, 1e8, max_relative = 1e-9);
                assert!(g_lo > 0.0 && g_hi > 0.0);
            }
            other => panic!("expected a bracket failure, got {other:?}"),
        }
    }

    #[test]
    fn bisection_fails_when_the_budget_dies_while_widening() {
        // Budget of 4: both endpoints, then one full widening round, then
        // the next round cannot start.
        let params = stub_params(0.01, 1e-9, 1e-12, 4);
        let err = bisect_log(stub_eval(|mu| mu + 9.0), 0.1, 10.0, &params).unwrap_err();
        match err {
            SelectError::BracketFailure { expansions, .. } => assert_eq!(expansions, 1),
            other => panic!("expected a bracket failure, got {other:?}"),
        }
    }

    #[test]
    fn bisection_finds_the_root_of_a_logarithmic_statistic() {
        let params = stub_params(1e-3, 1e-9, 1e-12, 100);
        let outcome = bisect_log(stub_eval(|l: f64| l.log10()), 0.05, 30.0, &params).unwrap();
        assert!((outcome.selected - 1.0).abs() <= 1e-3);
        assert_eq!(outcome.termination, BisectTermination::IntervalAbs);
    }

    #[test]
    fn chi2_bisection_matches_the_noise_level_on_denoise() {
        let problem = build_problem(Family::Denoise, 16, 0.10, Regularizer::Tv, 11, None).unwrap();
        let m = problem.rows();
        let mut config = Chi2Config::new(problem.sigma, m, 0.1);
        // The default interval widths are coarse next to the small parameter
        // scale of a denoising weight, so tighten them and let the evaluation
        // budget set the resolution of the selection.
        config.tau1 = 1e-6;
        config.tau2 = 1e-4;
        let mut opts = SolverOptions::new(1.0, 1.0);
        opts.tol = 1e-6;
        opts.max_outer = 5000;

        let outcome = bisect_mu(&problem, &config, &opts).unwrap();

        assert!(outcome.evaluations.len() <= config.max_evals);
        let (lo, hi) = outcome.bracket;
        assert!(lo <= outcome.selected && outcome.selected <= hi);

        // Selection lands inside the configured anchor bracket (no widening
        // should be needed when sigma is honest).
        let (mu_map, _) =
            estimate_mu_map(&problem.b, problem.d.as_ref(), problem.sigma).unwrap();
        assert!(outcome.selected >= mu_map / 10.0 && outcome.selected <= mu_map * 10.0);

        // Self-consistency: the penalized residual at the selection sits
        // near its expected value under the noise model.
        let f_sel = outcome
            .evaluations
            .iter()
            .find(|e| e.parameter == outcome.selected)
            .expect("selected parameter was evaluated")
            .value;
        let target = m as f64 * problem.sigma * problem.sigma;
        assert!(
            (f_sel - target).abs() <= 0.05 * target,
            "penalized residual {f_sel} should match the noise target {target}"
        );
    }

    #[test]
    fn discrepancy_is_minus_one_at_a_perfect_fit() {
        let mut problem = identity_problem(vec![0.4, -1.2, 0.8]);
        problem.sigma = 0.25;
        let mut opts = SolverOptions::new(0.0, 1.0);
        opts.tol = 1e-12;
        opts.max_outer = 10_000;

        // Zero penalty on an identity operator reproduces the data exactly.
        let (h, result) = discrepancy_statistic(&problem, 0.0, 1.0, &opts).unwrap();
        assert!(result.converged);
        assert_relative_eq!(h, -1.0, epsilon = 1e-6);
    }

    #[test]
    fn discrepancy_is_one_when_the_residual_doubles_the_noise() {
        // Heavy penalty forces the zero solution, so the residual is the
        // data itself: with ||b||^2 = 2 m sigma^2 the statistic is exactly 1.
        let b = vec![1.0, 1.0];
        let mut problem = identity_problem(b);
        problem.sigma = 0.5f64.sqrt();
        let mut opts = SolverOptions::new(1.0, 1.0);
        opts.tol = 1e-14;
        opts.max_outer = 100_000;

        let (h, result) = discrepancy_statistic(&problem, 10.0, 2.0, &opts).unwrap();
        assert!(crate::vecmath::norm_inf(&result.x_hat) <= 1e-5);
        assert_relative_eq!(h, 1.0, epsilon = 1e-5);
    }

    #[test]
    fn discrepancy_requires_a_noise_level() {
        let problem = identity_problem(vec![1.0, 2.0]);
        let opts = SolverOptions::new(0.1, 1.0);
        assert!(matches!(
            discrepancy_statistic(&problem, 0.1, 1.0, &opts),
            Err(SelectError::BadConfig(_))
        ));
    }

    #[test]
    fn lambda_bisection_balances_the_discrepancy_on_denoise() {
        let problem = build_problem(Family::Denoise, 8, 0.20, Regularizer::Tv, 9, None).unwrap();
        let mu_fixed = 0.2;
        let mut opts = SolverOptions::new(1.0, 1.0);
        opts.tol = 1e-4;
        opts.max_outer = 1000;

        // At a fixed penalty weight the fully converged solution does not
        // depend on the coupling, so under a finite budget the statistic
        // varies through the stopping rule: a weak coupling stalls the
        // multiplier and leaves the iterate at the data (overfit, negative),
        // while a strong one enforces the penalty (underfit, positive).
        let (h_lo, _) = discrepancy_statistic(&problem, mu_fixed, 1e-3, &opts).unwrap();
        let (h_hi, _) = discrepancy_statistic(&problem, mu_fixed, 10.0, &opts).unwrap();
        assert!(
            h_lo < 0.0 && h_hi > 0.0,
            "expected a sign change: H(0.001) = {h_lo}, H(10) = {h_hi}"
        );

        let mut config = Chi2Config::new(problem.sigma, problem.rows(), mu_fixed);
        config.max_evals = 14;
        let outcome = bisect_lambda(&problem, mu_fixed, &config, &opts).unwrap();

        // Anchor: sqrt(mu / gamma) = 1, one decade each side.
        assert_relative_eq!(outcome.evaluations[0].parameter, 0.1, max_relative = 1e-12);
        assert_relative_eq!(outcome.evaluations[1].parameter, 10.0, max_relative = 1e-12);

        assert!(outcome.evaluations.len() <= 14);
        let (lo, hi) = outcome.bracket;
        assert!(lo <= outcome.selected && outcome.selected <= hi);
        let h_sel = outcome
            .evaluations
            .iter()
            .find(|e| e.parameter == outcome.selected)
            .unwrap()
            .value;
        let interval_stop = matches!(
            outcome.termination,
            BisectTermination::IntervalRel | BisectTermination::IntervalAbs
        );
        assert!(
            h_sel.abs() <= config.tau2 || interval_stop,
            "selection should balance the discrepancy or stop on the interval rules; \
             got H = {h_sel}, termination {:?}",
            outcome.termination
        );
    }

    #[test]
    fn lambda_bisection_flags_an_overstated_noise_level() {
        // With sigma inflated a hundredfold the residual can never reach the
        // claimed noise floor (the statistic stays negative everywhere), so
        // the bracket search must fail rather than pick something.
        let problem = build_problem(Family::Denoise, 8, 0.10, Regularizer::Tv, 13, None).unwrap();
        let mut config = Chi2Config::new(100.0 * problem.sigma, problem.rows(), 0.2);
        config.max_evals = 20;
        let mut opts = SolverOptions::new(1.0, 1.0);
        opts.tol = 1e-6;
        opts.max_outer = 300;

        let err = bisect_lambda(&problem, 0.2, &config, &opts).unwrap_err();
        match err {
            SelectError::BracketFailure {
                g_lo,
                g_hi,
                expansions,
                ..
            } => {
                assert!(g_lo < 0.0 && g_hi < 0.0);
                assert_eq!(expansions, 7);
            }
            other => panic!("expected a bracket failure, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn bisection_selects_the_best_endpoint_of_a_sign_changing_bracket(
            root_exp in -3.0f64..3.0,
            slope in 0.1f64..10.0,
        ) {
            // Monotone statistic with a root inside the initial bracket.
            let root = 10f64.powf(root_exp);
            let params = stub_params(1e-6, 1e-9, 0.0, 200);
            let outcome = bisect_log(
                stub_eval(move |p: f64| slope * (p.log10() - root.log10())),
                1e-4,
                1e4,
                &params,
            )
            .unwrap();

            prop_assert!(outcome.evaluations.len() <= 200);
            for e in &outcome.evaluations {
                prop_assert!(e.parameter >= 1e-4 && e.parameter <= 1e4);
            }
            // No widening happens, so the third probe is the geometric mean
            // of the initial bracket.
            prop_assert!((outcome.evaluations[2].parameter - 1.0).abs() <= 1e-12);

            let (lo, hi) = outcome.bracket;
            prop_assert!(lo <= outcome.selected && outcome.selected <= hi);
            let g_lo = slope * (lo.log10() - root.log10());
            let g_hi = slope * (hi.log10() - root.log10());
            prop_assert!(g_lo * g_hi < 0.0);
            let best = if g_lo.abs() <= g_hi.abs() { lo } else { hi };
            prop_assert!(outcome.selected == best);
        }
    }
}
