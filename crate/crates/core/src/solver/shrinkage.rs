//! Soft thresholding, the workhorse of every l1 update here.

use crate::linops::LinearOperator;

/// Soft threshold of one value: `sign(d) * max(|d| - gamma, 0)`.
///
/// This is the exact minimizer over `y` of `gamma |y| + 1/2 (d - y)^2`,
/// equivalently of `mu |y| + lambda^2/2 (d - y)^2` with
/// `gamma = mu / lambda^2`. The convention `sign(0) = 0` makes the zero
/// case unambiguous; with `gamma = 0` the input passes through unchanged.
#[inline]
pub fn shrink_scalar(d: f64, gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0);
    if d > gamma {
        d - gamma
    } else if d < -gamma {
        d + gamma
    } else {
        0.0
    }
}

/// Elementwise soft threshold of a vector.
pub fn shrink(d: &[f64], gamma: f64) -> Vec<f64> {
    assert!(gamma >= 0.0, "shrinkage threshold must be nonnegative");
    d.iter().map(|&v| shrink_scalar(v, gamma)).collect()
}

/// The partial minimizer of the coupled objective in `y`:
/// `shrink(D x + c, gamma)`. Eliminating `y` through this map is what turns
/// the joint objective into a function of `x` alone.
pub fn shrinkage_map(x: &[f64], c: &[f64], d: &dyn LinearOperator, gamma: f64) -> Vec<f64> {
    assert!(gamma >= 0.0, "shrinkage threshold must be nonnegative");
    let mut t = d.forward(x);
    assert_eq!(t.len(), c.len(), "multiplier length mismatch");
    for (ti, ci) in t.iter_mut().zip(c) {
        *ti = shrink_scalar(*ti + ci, gamma);
    }
    t
}
