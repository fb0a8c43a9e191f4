//! Vertical stack of two operators with a scale on the lower block.

use super::{LinearOperator, LinopError};

/// The block operator `[A; s * D]` for a shared input dimension.
///
/// `forward` stacks `A x` on top of `s * (D x)`; `adjoint` of a stacked
/// vector `[u; w]` is `A^T u + s * (D^T w)`. The augmented least-squares
/// subproblems solved here all have this shape, with `s` playing the role
/// of the coupling weight.
#[derive(Clone, Debug)]
pub struct StackedOperator<Top, Bottom> {
    top: Top,
    bottom: Bottom,
    scale: f64,
}

impl<Top: LinearOperator, Bottom: LinearOperator> StackedOperator<Top, Bottom> {
    /// Stacks `top` over `scale * bottom`.
    ///
    /// The operators must agree on their input dimension, and `scale` must
    /// be finite and nonnegative (zero is allowed and simply blanks the
    /// lower block).
    pub fn new(top: Top, bottom: Bottom, scale: f64) -> Result<Self, LinopError> {
        if top.cols() != bottom.cols() {
            return Err(LinopError::ColumnMismatch {
                top: top.cols(),
                bottom: bottom.cols(),
            });
        }
        if !scale.is_finite() || scale < 0.0 {
            return Err(LinopError::BadScale(scale));
        }
        Ok(StackedOperator { top, bottom, scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Rows contributed by the upper block.
    pub fn top_rows(&self) -> usize {
        self.top.rows()
    }
}

impl<Top: LinearOperator, Bottom: LinearOperator> LinearOperator
    for StackedOperator<Top, Bottom>
{
    fn rows(&self) -> usize {
        self.top.rows() + self.bottom.rows()
    }

    fn cols(&self) -> usize {
        self.top.cols()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.top.forward(x);
        out.reserve(self.bottom.rows());
        out.extend(self.bottom.forward(x).iter().map(|v| self.scale * v));
        out
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows(), "stacked adjoint input length mismatch");
        let (u, w) = y.split_at(self.top.rows());
        let mut out = self.top.adjoint(u);
        for (o, v) in out.iter_mut().zip(self.bottom.adjoint(w)) {
            *o += self.scale * v;
        }
        out
    }
}
