//! The projected-gradient alternating solver.

use crate::linops::{Counted, LinearOperator, MatvecCounter};
use crate::problems::ProblemInstance;
use crate::solver::objective::{joint_from_products, projected_along};
use crate::solver::shrinkage::shrink_scalar;
use crate::solver::step::{minimize_along, step_from_products};
use crate::solver::{
    outer_stop, InnerMode, MatvecCounts, SolveResult, SolverError, SolverOptions, StepRule,
    Termination, Trace,
};
use crate::vecmath::{dot, norm1, norm2_sq};

/// Solves `min_x 1/2 ||A x - b||^2 + mu ||D x||_1` by alternating a gradient
/// step on the coupled objective, an exact shrinkage update of the auxiliary
/// variable, and a multiplier update. Starts from zero vectors.
///
/// The per-iteration cost is fixed and low: each inner step applies `A` and
/// `D` forward twice (once for the iterate, once for the direction) and each
/// adjoint once (the gradient); all other updates reuse maintained products.
/// The objective need not fall monotonically across outer iterations; the
/// stopping rule watches both its stagnation and the iterate movement.
pub fn vpal_solve(
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
    let l = d.rows();
    let (mu, lambda) = (opts.mu, opts.lambda);
    let gamma = opts.gamma();
    let inner_cap = match opts.inner_mode {
        InnerMode::SingleStep => 1,
        InnerMode::IterateToTol => opts.max_inner,
    };

    let mut x = vec![0.0; n];
    let mut x_prev = vec![0.0; n];
    let mut y = vec![0.0; l];
    let mut c = vec![0.0; l];

    let mut trace = Trace::new(problem, opts.max_outer + 1);
    let b_norm_sq = norm2_sq(b);
    trace.push(
        0.5 * b_norm_sq,
        b_norm_sq.sqrt(),
        &x,
        MatvecCounts::snapshot(&a_counter, &d_counter),
    );
    // The stopping rule watches the split objective
    // 1/2 ||A x - b||^2 + mu ||y||_1, which the iteration actually drives.
    let mut f_split_prev = 0.5 * b_norm_sq;

    let mut total_inner = 0usize;
    let mut outer = 0usize;
    let mut termination = Termination::IterationLimit;

    for k in 0..opts.max_outer {
        x_prev.copy_from_slice(&x);

        // Products of the current iterate. Assigned on the first inner pass
        // (the loop always runs at least once) and kept in sync with `x`
        // afterwards, so the updates below never reapply the operators.
        let mut ax = Vec::new();
        let mut dx = Vec::new();
        let mut f_inner_prev = f64::INFINITY;

        for _ in 0..inner_cap {
            ax = a.forward(&x);
            dx = d.forward(&x);

            let mut g = {
                let r_top: Vec<f64> = ax.iter().zip(b).map(|(&ai, &bi)| ai - bi).collect();
                a.adjoint(&r_top)
            };
            {
                let r_bot: Vec<f64> = dx
                    .iter()
                    .zip(y.iter().zip(&c))
                    .map(|(&di, (&yi, &ci))| lambda * (di - yi + ci))
                    .collect();
                let g_bot = d.adjoint(&r_bot);
                for (gi, &ti) in g.iter_mut().zip(&g_bot) {
                    *gi += lambda * ti;
                }
            }

            let gg = dot(&g, &g);
            if gg == 0.0 {
                // Stationary in x for the current splitting state; refresh y
                // and hand control back to the multiplier update.
                for (yi, (&di, &ci)) in y.iter_mut().zip(dx.iter().zip(&c)) {
                    *yi = shrink_scalar(di + ci, gamma);
                }
                break;
            }

            let ag = a.forward(&g);
            let dg = d.forward(&g);
            let alpha = {
                let lin = match step_from_products(gg, &ag, &dg, lambda) {
                    Ok(alpha) => alpha,
                    // g lies in the stacked null space: no step along it can
                    // change anything, so end the inner loop.
                    Err(SolverError::DegenerateDirection) => {
                        for (yi, (&di, &ci)) in y.iter_mut().zip(dx.iter().zip(&c)) {
                            *yi = shrink_scalar(di + ci, gamma);
                        }
                        break;
                    }
                    Err(other) => return Err(other),
                };
                match opts.step_rule {
                    StepRule::Linearized => lin,
                    StepRule::ExactLineSearch => minimize_along(
                        |al| projected_along(al, &ax, &ag, &dx, &dg, &c, b, mu, lambda),
                        lin,
                    )?,
                }
            };

            for (xi, &gi) in x.iter_mut().zip(&g) {
                *xi -= alpha * gi;
            }
            for (axi, &agi) in ax.iter_mut().zip(&ag) {
                *axi -= alpha * agi;
            }
            for (dxi, &dgi) in dx.iter_mut().zip(&dg) {
                *dxi -= alpha * dgi;
            }
            for (yi, (&di, &ci)) in y.iter_mut().zip(dx.iter().zip(&c)) {
                *yi = shrink_scalar(di + ci, gamma);
            }
            total_inner += 1;

            if inner_cap > 1 {
                let f_now = joint_from_products(&ax, &dx, &y, &c, b, mu, lambda);
                if f_inner_prev - f_now <= opts.inner_tol * (1.0 + f_now.abs()) {
                    break;
                }
                f_inner_prev = f_now;
            }
        }

        for (ci, (&di, &yi)) in c.iter_mut().zip(dx.iter().zip(&y)) {
            *ci += di - yi;
        }

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
