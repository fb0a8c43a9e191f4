//! Iterative least squares via Golub-Kahan bidiagonalization.

use crate::linops::LinearOperator;
use crate::vecmath::norm2;

/// Outcome of an iterative least-squares solve.
pub struct LsqrResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Approximately minimize `||op x - rhs||` starting from `x0`, stopping when
/// the normal-equation residual satisfies
/// `||op^T (op x - rhs)|| <= tol * ||op^T rhs||` or after `max_iter` steps.
///
/// A nonzero `x0` warm-starts the solve by shifting to the system with right
/// side `rhs - op x0`; the normal-equation residual is unchanged by the
/// shift, so the stopping rule still measures the original problem. Hitting
/// the iteration cap is a normal outcome reported through `converged`, not
/// an error.
pub fn lsqr(
    op: &dyn LinearOperator,
    rhs: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> LsqrResult {
    assert_eq!(rhs.len(), op.rows(), "right side length must match operator rows");
    assert_eq!(x0.len(), op.cols(), "start vector length must match operator columns");
    assert!(tol > 0.0, "tolerance must be positive");

    let mut x = x0.to_vec();
    let cold = x0.iter().all(|&v| v == 0.0);
    let mut u = if cold {
        rhs.to_vec()
    } else {
        let ax = op.forward(x0);
        rhs.iter().zip(&ax).map(|(&ri, &ai)| ri - ai).collect()
    };
    let mut beta = norm2(&u);
    if beta == 0.0 {
        // Residual is already zero, nothing to do.
        return LsqrResult { x, iterations: 0, converged: true };
    }
    for ui in &mut u {
        *ui /= beta;
    }
    let mut v = op.adjoint(&u);
    let mut alpha = norm2(&v);
    if alpha == 0.0 {
        // op^T r = 0: the start point already satisfies the normal equations.
        return LsqrResult { x, iterations: 0, converged: true };
    }
    for vi in &mut v {
        *vi /= alpha;
    }

    // The stopping rule is relative to the unshifted problem, which for a
    // cold start equals alpha * beta and otherwise costs one extra adjoint.
    let atrhs_norm = if cold { alpha * beta } else { norm2(&op.adjoint(rhs)) };
    let threshold = tol * atrhs_norm;
    if alpha * beta <= threshold {
        return LsqrResult { x, iterations: 0, converged: true };
    }

    let mut w = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iter {
        iterations += 1;

        let av = op.forward(&v);
        for (ui, &avi) in u.iter_mut().zip(&av) {
            *ui = avi - alpha * *ui;
        }
        beta = norm2(&u);
        if beta > 0.0 {
            for ui in &mut u {
                *ui /= beta;
            }
        }
        let atu = op.adjoint(&u);
        for (vi, &ti) in v.iter_mut().zip(&atu) {
            *vi = ti - beta * *vi;
        }
        alpha = norm2(&v);
        if alpha > 0.0 {
            for vi in &mut v {
                *vi /= alpha;
            }
        }

        // Plane rotation eliminating the subdiagonal entry.
        let rho = rhobar.hypot(beta);
        let cs = rhobar / rho;
        let sn = beta / rho;
        let theta = sn * alpha;
        rhobar = -cs * alpha;
        let phi = cs * phibar;
        phibar = sn * phibar;

        let t1 = phi / rho;
        let t2 = -theta / rho;
        for i in 0..x.len() {
            x[i] += t1 * w[i];
            w[i] = v[i] + t2 * w[i];
        }

        // Running estimate of ||op^T (op x - rhs)||.
        let mat_resid = alpha * (sn * phi).abs();
        if mat_resid <= threshold {
            converged = true;
            break;
        }
    }

    LsqrResult { x, iterations, converged }
}
