//! Step-size rules for the gradient update of the inner loop.

use crate::linops::LinearOperator;
use crate::solver::objective::Objective;
use crate::solver::SolverError;
use crate::vecmath::dot;

const MAX_DOUBLINGS: usize = 60;
const ALPHA_TOL: f64 = 1e-8;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Step size from already-applied pieces of `h = [A g; lambda D g]`:
/// `alpha = (g.g) / (h.h)`. The solvers call this with products they
/// already hold so the step costs no extra operator applications.
pub(crate) fn step_from_products(
    gg: f64,
    ag: &[f64],
    dg: &[f64],
    lambda: f64,
) -> Result<f64, SolverError> {
    let hh = dot(ag, ag) + lambda * lambda * dot(dg, dg);
    if hh == 0.0 {
        return Err(SolverError::DegenerateDirection);
    }
    Ok(gg / hh)
}

/// Closed-form step along `-g` for the quadratic model: with
/// `h = [A; lambda D] g`, returns `(g.g)/(h.h)`.
///
/// Fails with a degenerate-direction error if `h = 0`, which can only happen
/// when `g` lies in the null space of the stacked operator.
pub fn linearized_step(
    g: &[f64],
    a: &dyn LinearOperator,
    d: &dyn LinearOperator,
    lambda: f64,
) -> Result<f64, SolverError> {
    assert_eq!(a.cols(), g.len(), "direction length must match operator columns");
    assert_eq!(d.cols(), g.len(), "direction length must match operator columns");
    assert!(lambda >= 0.0 && lambda.is_finite(), "lambda must be finite and nonnegative");
    let gg = dot(g, g);
    assert!(gg > 0.0, "step rule needs a nonzero direction");
    let ag = a.forward(g);
    let dg = d.forward(g);
    step_from_products(gg, &ag, &dg, lambda)
}

/// Golden-section minimization of a one-dimensional objective over a bracket
/// grown from the closed-form step: start with `[0, 2 alpha_init]` and double
/// the right edge until the function turns upward, then shrink the bracket to
/// width `1e-8`. The returned point never does worse than `alpha_init` or
/// standing still.
pub(crate) fn minimize_along(
    phi: impl Fn(f64) -> f64,
    alpha_init: f64,
) -> Result<f64, SolverError> {
    assert!(alpha_init > 0.0 && alpha_init.is_finite(), "bracket seed must be positive");
    let mut hi = 2.0 * alpha_init;
    let mut phi_mid = phi(alpha_init);
    let mut phi_hi = phi(hi);
    let mut doublings = 0;
    while phi_hi <= phi_mid {
        if doublings == MAX_DOUBLINGS {
            return Err(SolverError::UnboundedDirection(MAX_DOUBLINGS));
        }
        doublings += 1;
        phi_mid = phi_hi;
        hi *= 2.0;
        phi_hi = phi(hi);
    }

    let (mut lo, mut up) = (0.0, hi);
    let mut x1 = up - INV_PHI * (up - lo);
    let mut x2 = lo + INV_PHI * (up - lo);
    let mut f1 = phi(x1);
    let mut f2 = phi(x2);
    let mut rounds = 0;
    while up - lo > ALPHA_TOL && rounds < 256 {
        if f1 <= f2 {
            up = x2;
            x2 = x1;
            f2 = f1;
            x1 = up - INV_PHI * (up - lo);
            f1 = phi(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (up - lo);
            f2 = phi(x2);
        }
        rounds += 1;
    }
    let refined = if f1 <= f2 { x1 } else { x2 };

    let mut best = (phi(refined), refined);
    for cand in [alpha_init, 0.0] {
        let value = phi(cand);
        if value < best.0 {
            best = (value, cand);
        }
    }
    Ok(best.1)
}

/// Step minimizing the projected objective along `-g` from `x` at fixed `c`.
///
/// The one-dimensional function is evaluated from precomputed products of
/// `x` and `g` under both operators, so the whole search costs two forward
/// applications of each operator and nothing more.
pub fn exact_line_search(
    obj: &Objective,
    x: &[f64],
    g: &[f64],
    c: &[f64],
) -> Result<f64, SolverError> {
    let gg = dot(g, g);
    assert!(gg > 0.0, "line search needs a nonzero direction");
    let ax = obj.a.forward(x);
    let dx = obj.d.forward(x);
    let ag = obj.a.forward(g);
    let dg = obj.d.forward(g);
    let alpha_init = step_from_products(gg, &ag, &dg, obj.lambda)?;
    let phi = |alpha: f64| {
        crate::solver::objective::projected_along(
            alpha, &ax, &ag, &dx, &dg, c, obj.b, obj.mu, obj.lambda,
        )
    };
    minimize_along(phi, alpha_init)
}
