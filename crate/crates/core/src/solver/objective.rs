//! The coupled objective behind the alternating scheme and its gradient.

use crate::linops::LinearOperator;
use crate::solver::shrinkage::{shrink_scalar, shrinkage_map};

/// Parameter bundle for the penalized least-squares objective
///
/// ```text
/// f(x, y, c) = 1/2 ||A x - b||^2 + lambda^2/2 ||D x - y + c||^2 + mu ||y||_1
/// ```
///
/// where `y` is the auxiliary copy of `D x` and `c` the scaled multiplier.
/// Minimizing over `y` exactly (see [`shrinkage_map`]) gives the projected
/// objective of `x` alone that the line search works with.
pub struct Objective<'a> {
    pub a: &'a dyn LinearOperator,
    pub d: &'a dyn LinearOperator,
    pub b: &'a [f64],
    pub mu: f64,
    pub lambda: f64,
}

impl<'a> Objective<'a> {
    pub fn new(
        a: &'a dyn LinearOperator,
        d: &'a dyn LinearOperator,
        b: &'a [f64],
        mu: f64,
        lambda: f64,
    ) -> Self {
        assert_eq!(a.rows(), b.len(), "data length must match operator rows");
        assert_eq!(a.cols(), d.cols(), "fit and penalty operators disagree on unknown count");
        assert!(mu >= 0.0 && mu.is_finite(), "mu must be finite and nonnegative");
        assert!(lambda > 0.0 && lambda.is_finite(), "lambda must be finite and positive");
        Objective { a, d, b, mu, lambda }
    }

    /// Shrinkage threshold implied by the penalty weights.
    pub fn gamma(&self) -> f64 {
        self.mu / (self.lambda * self.lambda)
    }

    /// The joint objective at explicit `(x, y, c)`.
    pub fn joint(&self, x: &[f64], y: &[f64], c: &[f64]) -> f64 {
        let ax = self.a.forward(x);
        let dx = self.d.forward(x);
        joint_from_products(&ax, &dx, y, c, self.b, self.mu, self.lambda)
    }

    /// The exact minimizer of the joint objective over `y` at fixed `(x, c)`.
    pub fn eliminate_y(&self, x: &[f64], c: &[f64]) -> Vec<f64> {
        shrinkage_map(x, c, self.d, self.gamma())
    }

    /// Objective with `y` eliminated: `joint(x, eliminate_y(x, c), c)`.
    ///
    /// Implemented as exactly that composition, so the identity holds to the
    /// last bit, not just to rounding.
    pub fn projected(&self, x: &[f64], c: &[f64]) -> f64 {
        let y = self.eliminate_y(x, c);
        self.joint(x, &y, c)
    }

    /// Stacked residual and gradient of the smooth part of the joint
    /// objective in `x`:
    ///
    /// ```text
    /// r = [A x - b, lambda (D x - y + c)],    g = A^T r_top + lambda D^T r_bot
    /// ```
    pub fn residual_and_gradient(&self, x: &[f64], y: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.a.rows();
        let ax = self.a.forward(x);
        let dx = self.d.forward(x);
        assert_eq!(y.len(), dx.len(), "auxiliary length mismatch");
        assert_eq!(c.len(), dx.len(), "multiplier length mismatch");

        let mut r = Vec::with_capacity(m + dx.len());
        r.extend(ax.iter().zip(self.b).map(|(&ai, &bi)| ai - bi));
        r.extend(
            dx.iter()
                .zip(y.iter().zip(c))
                .map(|(&di, (&yi, &ci))| self.lambda * (di - yi + ci)),
        );

        let mut g = self.a.adjoint(&r[..m]);
        let tail = self.d.adjoint(&r[m..]);
        for (gi, ti) in g.iter_mut().zip(&tail) {
            *gi += self.lambda * ti;
        }
        (r, g)
    }

    /// The quantity actually being minimized once the splitting converges:
    /// `1/2 ||A x - b||^2 + mu ||D x||_1`.
    pub fn composite(&self, x: &[f64]) -> f64 {
        let ax = self.a.forward(x);
        let dx = self.d.forward(x);
        let fit: f64 = ax.iter().zip(self.b).map(|(&ai, &bi)| (ai - bi) * (ai - bi)).sum();
        let l1: f64 = dx.iter().map(|v| v.abs()).sum();
        0.5 * fit + self.mu * l1
    }
}

/// Joint objective evaluated from already-applied operator products.
/// Solvers maintain `A x` and `D x` incrementally and call this instead of
/// touching the operators again.
pub(crate) fn joint_from_products(
    ax: &[f64],
    dx: &[f64],
    y: &[f64],
    c: &[f64],
    b: &[f64],
    mu: f64,
    lambda: f64,
) -> f64 {
    let fit: f64 = ax.iter().zip(b).map(|(&ai, &bi)| (ai - bi) * (ai - bi)).sum();
    let mut quad = 0.0;
    let mut l1 = 0.0;
    for ((&di, &yi), &ci) in dx.iter().zip(y).zip(c) {
        let t = di - yi + ci;
        quad += t * t;
        l1 += yi.abs();
    }
    0.5 * fit + 0.5 * lambda * lambda * quad + mu * l1
}

/// Projected objective along a ray, evaluated from maintained products:
/// the value of the joint objective at `x - alpha g` after eliminating `y`,
/// using `A x`, `D x`, `A g`, `D g` so no operator applications are needed.
pub(crate) fn projected_along(
    alpha: f64,
    ax: &[f64],
    ag: &[f64],
    dx: &[f64],
    dg: &[f64],
    c: &[f64],
    b: &[f64],
    mu: f64,
    lambda: f64,
) -> f64 {
    let gamma = mu / (lambda * lambda);
    let mut fit = 0.0;
    for ((&axi, &agi), &bi) in ax.iter().zip(ag).zip(b) {
        let r = axi - alpha * agi - bi;
        fit += r * r;
    }
    let mut quad = 0.0;
    let mut l1 = 0.0;
    for ((&dxi, &dgi), &ci) in dx.iter().zip(dg).zip(c) {
        let moved = dxi - alpha * dgi;
        let z = shrink_scalar(moved + ci, gamma);
        let t = moved - z + ci;
        quad += t * t;
        l1 += z.abs();
    }
    0.5 * fit + 0.5 * lambda * lambda * quad + mu * l1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{DenseOperator, Identity};
    use crate::test_oracles::solve_dense;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(rows: usize, cols: usize, seed: u64) -> DenseOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        DenseOperator::new(rows, cols, entries).unwrap()
    }

    #[test]
    fn joint_value_by_hand() {
        let a = Identity::new(2);
        let d = Identity::new(2);
        let b = [1.0, 0.0];
        let obj = Objective::new(&a, &d, &b, 1.0, 1.0);
        // fit 1/2 * (0 + 1), coupling 1/2 * (1 + 1), penalty 0
        assert_eq!(obj.joint(&[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0]), 1.5);
        // with y = x the coupling vanishes and the l1 term appears
        assert_eq!(obj.joint(&[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0]), 2.5);
        assert_eq!(obj.composite(&[1.0, 1.0]), 2.5);
    }

    #[test]
    fn projected_is_joint_after_elimination_bitwise() {
        let a = random_dense(7, 5, 11);
        let d = random_dense(6, 5, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let b: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let obj = Objective::new(&a, &d, &b, 0.7, 1.3);
        for _ in 0..10 {
            let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = obj.eliminate_y(&x, &c);
            assert_eq!(
                obj.projected(&x, &c).to_bits(),
                obj.joint(&x, &y, &c).to_bits(),
                "projected objective must be the literal composition"
            );
        }
    }

    #[test]
    fn gradient_at_origin_is_negative_normal_vector() {
        let a = random_dense(6, 4, 21);
        let d = random_dense(5, 4, 22);
        let b: Vec<f64> = (0..6).map(|i| (i as f64) - 2.0).collect();
        let obj = Objective::new(&a, &d, &b, 0.5, 2.0);
        let (r, g) = obj.residual_and_gradient(&[0.0; 4], &[0.0; 5], &[0.0; 5]);

        let want_r: Vec<f64> = b.iter().map(|&v| -v).collect();
        assert_eq!(&r[..6], &want_r[..], "top residual block is -b at the origin");
        assert!(r[6..].iter().all(|&v| v == 0.0), "coupling block vanishes at the origin");

        let atb = a.adjoint(&b);
        for (gi, ti) in g.iter().zip(&atb) {
            assert!((gi + ti).abs() <= 1e-14, "gradient should be -A^T b");
        }
    }

    #[test]
    fn gradient_matches_dense_formula() {
        let a = random_dense(6, 4, 31);
        let d = random_dense(5, 4, 32);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let b: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lambda = 1.7;
        let obj = Objective::new(&a, &d, &b, 0.4, lambda);

        let (_, g) = obj.residual_and_gradient(&x, &y, &c);

        // Explicit A^T (A x - b) + lambda^2 D^T (D x - y + c).
        let mut top = a.forward(&x);
        for (t, &bi) in top.iter_mut().zip(&b) {
            *t -= bi;
        }
        let mut bot = d.forward(&x);
        for ((t, &yi), &ci) in bot.iter_mut().zip(&y).zip(&c) {
            *t = *t - yi + ci;
        }
        let ga = a.adjoint(&top);
        let gd = d.adjoint(&bot);
        for i in 0..4 {
            let want = ga[i] + lambda * lambda * gd[i];
            assert!((g[i] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn gradient_vanishes_at_stacked_least_squares_solution() {
        // With y, c fixed, the smooth part is a plain least-squares problem in
        // x for the stacked operator [A; lambda D]. Solve its normal equations
        // densely and check the gradient there.
        let (m, n, l) = (6, 4, 5);
        let a = random_dense(m, n, 41);
        let d = random_dense(l, n, 42);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..l).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..l).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lambda = 0.9;
        let obj = Objective::new(&a, &d, &b, 0.3, lambda);

        // Normal matrix A^T A + lambda^2 D^T D and right side A^T b + lambda^2 D^T (y - c).
        let mut normal = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..m {
                    s += a.entry(k, i) * a.entry(k, j);
                }
                for k in 0..l {
                    s += lambda * lambda * d.entry(k, i) * d.entry(k, j);
                }
                normal[i * n + j] = s;
            }
        }
        let mut rhs = a.adjoint(&b);
        let ymc: Vec<f64> = y.iter().zip(&c).map(|(&yi, &ci)| yi - ci).collect();
        let dt = d.adjoint(&ymc);
        for i in 0..n {
            rhs[i] += lambda * lambda * dt[i];
        }
        let x_star = solve_dense(n, &normal, &rhs);

        let (_, g) = obj.residual_and_gradient(&x_star, &y, &c);
        for gi in g {
            assert!(gi.abs() <= 1e-10, "stationary point should zero the gradient, got {gi}");
        }
    }

    #[test]
    fn projected_along_matches_direct_evaluation() {
        let a = random_dense(6, 4, 51);
        let d = random_dense(5, 4, 52);
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let b: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (mu, lambda) = (0.6, 1.2);
        let obj = Objective::new(&a, &d, &b, mu, lambda);

        let ax = a.forward(&x);
        let ag = a.forward(&g);
        let dx = d.forward(&x);
        let dg = d.forward(&g);
        for &alpha in &[0.0, 0.25, 1.0, 3.5] {
            let moved: Vec<f64> = x.iter().zip(&g).map(|(&xi, &gi)| xi - alpha * gi).collect();
            let direct = obj.projected(&moved, &c);
            let fast = projected_along(alpha, &ax, &ag, &dx, &dg, &c, &b, mu, lambda);
            assert!(
                (direct - fast).abs() <= 1e-12 * (1.0 + direct.abs()),
                "alpha = {alpha}: {direct} vs {fast}"
            );
        }
    }

    proptest! {
        #[test]
        fn projection_never_exceeds_joint(
            seed in 0u64..1000,
            ys in proptest::collection::vec(-3.0f64..3.0, 5),
        ) {
            let a = random_dense(6, 4, seed.wrapping_add(1));
            let d = random_dense(5, 4, seed.wrapping_add(2));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let obj = Objective::new(&a, &d, &b, 0.8, 1.1);
            prop_assert!(obj.projected(&x, &c) <= obj.joint(&x, &ys, &c) + 1e-12);
        }
    }
}
