//! Matrix-free linear operators.
//!
//! Everything downstream (solvers, parameter selection, test problems) talks
//! to measurement and regularization operators through [`LinearOperator`],
//! which only asks for forward and adjoint applications. No operator here
//! stores a dense matrix unless it genuinely is one.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::vecmath::dot;

mod blur;
mod dense;
mod diff;
mod stacked;
mod tomo;

pub use blur::GaussianBlur;
pub use dense::DenseOperator;
pub use diff::{FiniteDifference2d, Laplacian2d};
pub use stacked::StackedOperator;
pub use tomo::ParallelBeamTomo;

/// Construction errors for the concrete operators.
#[derive(Debug, Error, PartialEq)]
pub enum LinopError {
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("expected {expected} entries for a {rows}x{cols} matrix, got {got}")]
    EntryCount {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("matrix entries must be finite")]
    NonFiniteEntries,
    #[error("stacked operators must share a column count (top {top}, bottom {bottom})")]
    ColumnMismatch { top: usize, bottom: usize },
    #[error("stack scale must be finite and nonnegative, got {0}")]
    BadScale(f64),
    #[error("blur kernel of side {kernel} does not fit a {height}x{width} image")]
    KernelTooLarge {
        kernel: usize,
        height: usize,
        width: usize,
    },
    #[error("blur width must be positive and finite, got {0}")]
    BadBlurWidth(f64),
    #[error("scan geometry needs at least one projection angle and one detector")]
    EmptyGeometry,
    #[error("projection angles must be finite")]
    NonFiniteAngle,
}

/// A linear map applied without materializing its matrix.
///
/// Implementations must be genuine adjoint pairs: for all `u`, `v` of the
/// right sizes, `<forward(u), v> == <u, adjoint(v)>` up to roundoff. The
/// solvers rely on this identity, and the test suite checks it for every
/// operator family with randomized probes.
///
/// `forward` and `adjoint` panic on slices of the wrong length; sizes are
/// fixed at construction time and a mismatch is a caller bug.
pub trait LinearOperator: Send + Sync {
    /// Output dimension of `forward`.
    fn rows(&self) -> usize;

    /// Input dimension of `forward` (and output dimension of `adjoint`).
    fn cols(&self) -> usize;

    /// Computes `A * x`.
    fn forward(&self, x: &[f64]) -> Vec<f64>;

    /// Computes `A^T * y`.
    fn adjoint(&self, y: &[f64]) -> Vec<f64>;
}

impl<Op: LinearOperator + ?Sized> LinearOperator for &Op {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (**self).forward(x)
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        (**self).adjoint(y)
    }
}

impl<Op: LinearOperator + ?Sized> LinearOperator for Arc<Op> {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (**self).forward(x)
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        (**self).adjoint(y)
    }
}

impl<Op: LinearOperator + ?Sized> LinearOperator for Box<Op> {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (**self).forward(x)
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        (**self).adjoint(y)
    }
}

/// The identity map on `n`-vectors. Useful as a measurement operator for
/// denoising problems and as a regularizer for plain lasso.
#[derive(Clone, Debug)]
pub struct Identity {
    n: usize,
}

impl Identity {
    /// Identity on vectors of length `n`. Panics if `n` is zero.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "identity operator needs a positive dimension");
        Identity { n }
    }
}

impl LinearOperator for Identity {
    fn rows(&self) -> usize {
        self.n
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "identity input length mismatch");
        x.to_vec()
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n, "identity input length mismatch");
        y.to_vec()
    }
}

/// Thread-safe tally of forward and adjoint applications.
///
/// Solvers report their per-operator work through these counters, which is
/// how the cost comparison between methods is measured. Wrap an operator
/// with [`Counted`] to make every application tick the tally.
#[derive(Debug, Default)]
pub struct MatvecCounter {
    forward: AtomicU64,
    adjoint: AtomicU64,
}

impl MatvecCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward_count(&self) -> u64 {
        self.forward.load(Ordering::Relaxed)
    }

    pub fn adjoint_count(&self) -> u64 {
        self.adjoint.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.forward.store(0, Ordering::Relaxed);
        self.adjoint.store(0, Ordering::Relaxed);
    }

    fn bump_forward(&self) {
        self.forward.fetch_add(1, Ordering::Relaxed);
    }

    fn bump_adjoint(&self) {
        self.adjoint.fetch_add(1, Ordering::Relaxed);
    }
}

/// Borrowed view of an operator that counts every application.
///
/// Each call to `forward` increments the forward tally by exactly one, and
/// likewise for `adjoint`; the wrapper adds no caching or batching.
#[derive(Clone, Copy)]
pub struct Counted<'a> {
    op: &'a dyn LinearOperator,
    counter: &'a MatvecCounter,
}

impl<'a> Counted<'a> {
    pub fn new(op: &'a dyn LinearOperator, counter: &'a MatvecCounter) -> Self {
        Counted { op, counter }
    }
}

impl LinearOperator for Counted<'_> {
    fn rows(&self) -> usize {
        self.op.rows()
    }
    fn cols(&self) -> usize {
        self.op.cols()
    }
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.counter.bump_forward();
        self.op.forward(x)
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.counter.bump_adjoint();
        self.op.adjoint(y)
    }
}

/// Relative defect of the adjoint identity for one probe pair:
/// `|<A u, v> - <u, A^T v>| / (1 + |<A u, v>|)`.
///
/// A correct adjoint pair keeps this at roundoff level (around 1e-10 is
/// used as the acceptance threshold by the test suite).
pub fn adjoint_gap(op: &dyn LinearOperator, u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), op.cols(), "probe u must match operator columns");
    assert_eq!(v.len(), op.rows(), "probe v must match operator rows");
    let au_v = dot(&op.forward(u), v);
    let u_atv = dot(u, &op.adjoint(v));
    (au_v - u_atv).abs() / (1.0 + au_v.abs())
}
