//! Small, independent reference implementations used only by tests.
//!
//! These are deliberately written in the most pedestrian way possible
//! (dense Gaussian elimination, plain proximal gradient) so they share no
//! code path with the solvers they check.

/// Solve `M x = rhs` for a dense row-major `n x n` matrix by Gaussian
/// elimination with partial pivoting. Panics on a singular pivot.
pub fn solve_dense(n: usize, m: &[f64], rhs: &[f64]) -> Vec<f64> {
    assert_eq!(m.len(), n * n);
    assert_eq!(rhs.len(), n);
    let mut a = m.to_vec();
    let mut x = rhs.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap())
            .unwrap();
        assert!(a[pivot_row * n + col].abs() > 1e-12, "singular system in test oracle");
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            x.swap(col, pivot_row);
        }
        for row in col + 1..n {
            let factor = a[row * n + col] / a[col * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s -= a[col * n + k] * x[k];
        }
        x[col] = s / a[col * n + col];
    }
    x
}

/// Least-squares solution of a dense `rows x cols` system via its normal
/// equations. Only suitable for the tiny well-conditioned systems tests use.
pub fn least_squares(rows: usize, cols: usize, entries: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(entries.len(), rows * cols);
    assert_eq!(b.len(), rows);
    let mut normal = vec![0.0; cols * cols];
    let mut rhs = vec![0.0; cols];
    for i in 0..cols {
        for j in 0..cols {
            let mut s = 0.0;
            for k in 0..rows {
                s += entries[k * cols + i] * entries[k * cols + j];
            }
            normal[i * cols + j] = s;
        }
        let mut s = 0.0;
        for k in 0..rows {
            s += entries[k * cols + i] * b[k];
        }
        rhs[i] = s;
    }
    solve_dense(cols, &normal, &rhs)
}

/// Reference minimizer of `1/2 ||A x - b||^2 + mu ||x||_1` by proximal
/// gradient descent with a power-iteration step size, run to a very tight
/// fixed point. Slow and simple on purpose.
pub fn ista_lasso(rows: usize, cols: usize, entries: &[f64], b: &[f64], mu: f64) -> Vec<f64> {
    assert_eq!(entries.len(), rows * cols);
    assert_eq!(b.len(), rows);
    let matvec = |x: &[f64]| -> Vec<f64> {
        (0..rows)
            .map(|i| (0..cols).map(|j| entries[i * cols + j] * x[j]).sum())
            .collect()
    };
    let rmatvec = |y: &[f64]| -> Vec<f64> {
        (0..cols)
            .map(|j| (0..rows).map(|i| entries[i * cols + j] * y[i]).sum())
            .collect()
    };

    // Largest eigenvalue of A^T A by power iteration.
    let mut v = vec![1.0; cols];
    let mut lip = 1.0;
    for _ in 0..500 {
        let w = rmatvec(&matvec(&v));
        lip = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if lip == 0.0 {
            return vec![0.0; cols];
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / lip;
        }
    }
    let step = 1.0 / (lip * 1.01);

    let mut x = vec![0.0; cols];
    for _ in 0..2_000_000 {
        let mut r = matvec(&x);
        for (ri, &bi) in r.iter_mut().zip(b) {
            *ri -= bi;
        }
        let g = rmatvec(&r);
        let mut change: f64 = 0.0;
        for j in 0..cols {
            let t = x[j] - step * g[j];
            let thr = step * mu;
            let new = if t > thr {
                t - thr
            } else if t < -thr {
                t + thr
            } else {
                0.0
            };
            change = change.max((new - x[j]).abs());
            x[j] = new;
        }
        if change <= 1e-14 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            break;
        }
    }
    x
}

/// Two-pass sample standard deviation (n - 1 in the denominator).
pub fn sample_std(values: &[f64]) -> f64 {
    assert!(values.len() >= 2);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve_by_hand() {
        // [2 1; 1 3] x = [3; 5] has solution [4/5, 7/5].
        let x = solve_dense(2, &[2.0, 1.0, 1.0, 3.0], &[3.0, 5.0]);
        assert!((x[0] - 0.8).abs() <= 1e-14);
        assert!((x[1] - 1.4).abs() <= 1e-14);
    }

    #[test]
    fn least_squares_of_square_system_is_exact_solve() {
        let entries = [1.0, 2.0, 3.0, 4.0];
        let x = least_squares(2, 2, &entries, &[5.0, 11.0]);
        assert!((x[0] - 1.0).abs() <= 1e-10);
        assert!((x[1] - 2.0).abs() <= 1e-10);
    }

    #[test]
    fn lasso_oracle_with_identity_matrix_is_shrinkage() {
        let entries = [1.0, 0.0, 0.0, 1.0];
        let x = ista_lasso(2, 2, &entries, &[2.0, -0.5], 1.0);
        assert!((x[0] - 1.0).abs() <= 1e-10, "got {}", x[0]);
        assert!(x[1].abs() <= 1e-10, "got {}", x[1]);
    }

    #[test]
    fn std_by_hand() {
        assert!((sample_std(&[1.0, -1.0]) - std::f64::consts::SQRT_2).abs() <= 1e-15);
        assert_eq!(sample_std(&[3.0, 3.0, 3.0]), 0.0);
    }
}
