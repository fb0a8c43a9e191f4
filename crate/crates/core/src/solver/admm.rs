//! Reference alternating-direction solver with iterative inner solves.

use crate::linops::{Counted, LinearOperator, MatvecCounter, StackedOperator};
use crate::problems::ProblemInstance;
use crate::solver::lsqr::lsqr;
use crate::solver::shrinkage::shrink_scalar;
use crate::solver::{
    outer_stop, MatvecCounts, SolveResult, SolverError, SolverOptions, Termination, Trace,
};
use crate::vecmath::{norm1, norm2_sq};

/// Solves the same problem as [`vpal_solve`] with the classical scheme: each
/// outer iteration solves the x-subproblem
///
/// ```text
/// min_x 1/2 ||A x - b||^2 + lambda^2/2 ||D x - (y - c)||^2
/// ```
///
/// as a stacked least-squares system via an inner bidiagonalization solver
/// (warm-started at the current iterate, capped by `admm_inner_max`, stopped
/// at `admm_inner_tol`), then applies the shrinkage and multiplier updates.
/// Starts from zero vectors and uses the same stopping rule as
/// [`vpal_solve`] so the two are directly comparable.
///
/// [`vpal_solve`]: crate::solver::vpal_solve
pub fn admm_solve(
    problem: &ProblemInstance,
    opts: &SolverOptions,
) -> Result<SolveResult, SolverError> {
    opts.validate()?;
    let a_counter = MatvecCounter::new();
    let d_counter = MatvecCounter::new();
    let a = Counted::new(problem.a.as_ref(), &a_counter);
    let d = Counted::new(problem.d.as_ref(), &d_counter);
    let b = problem.b.as_slice();
    assert_eq!(a.rows(), b.len(), "data length must match operator rows");
    assert_eq!(a.cols(), d.cols(), "operators disagree on unknown count");

    let n = a.cols();
    let m = a.rows();
    let l = d.rows();
    let (mu, lambda) = (opts.mu, opts.lambda);
    let gamma = opts.gamma();
    let stacked = StackedOperator::new(a, d, lambda)
        .expect("validated options and consistent operators cannot fail to stack");

    let mut x = vec![0.0; n];
    let mut x_prev = vec![0.0; n];
    let mut y = vec![0.0; l];
    let mut c = vec![0.0; l];
    let mut rhs = vec![0.0; m + l];
    rhs[..m].copy_from_slice(b);

    let mut trace = Trace::new(problem, opts.max_outer + 1);
    let b_norm_sq = norm2_sq(b);
    trace.push(
        0.5 * b_norm_sq,
        b_norm_sq.sqrt(),
        &x,
        MatvecCounts::snapshot(&a_counter, &d_counter),
    );
    let mut f_split_prev = 0.5 * b_norm_sq;

    let mut total_inner = 0usize;
    let mut outer = 0usize;
    let mut termination = Termination::IterationLimit;

    for k in 0..opts.max_outer {
        x_prev.copy_from_slice(&x);

        for (slot, (&yi, &ci)) in rhs[m..].iter_mut().zip(y.iter().zip(&c)) {
            *slot = lambda * (yi - ci);
        }
        let inner = lsqr(&stacked, &rhs, &x, opts.admm_inner_tol, opts.admm_inner_max);
        x = inner.x;
        total_inner += inner.iterations;

        let dx = d.forward(&x);
        for (yi, (&di, &ci)) in y.iter_mut().zip(dx.iter().zip(&c)) {
            *yi = shrink_scalar(di + ci, gamma);
        }
        for (ci, (&di, &yi)) in c.iter_mut().zip(dx.iter().zip(&y)) {
            *ci += di - yi;
        }

        let ax = a.forward(&x);
        let fit_sq: f64 = ax.iter().zip(b).map(|(&ai, &bi)| (ai - bi) * (ai - bi)).sum();
        let f_composite = 0.5 * fit_sq + mu * norm1(&dx);
        if !f_composite.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite { iteration: k + 1 });
        }
        trace.push(
            f_composite,
            fit_sq.sqrt(),
            &x,
            MatvecCounts::snapshot(&a_counter, &d_counter),
        );
        outer = k + 1;

        let f_split = 0.5 * fit_sq + mu * norm1(&y);
        if outer_stop(f_split_prev, f_split, &x_prev, &x, opts.tol) {
            termination = Termination::Converged;
            break;
        }
        f_split_prev = f_split;
    }

    Ok(trace.into_result(x, outer, total_inner, termination))
}
