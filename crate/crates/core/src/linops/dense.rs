//! Dense matrix wrapped as a [`LinearOperator`].
//!
//! Mostly for small reference problems and tests; the point of the rest of
//! this module is to avoid dense storage.

use super::{LinearOperator, LinopError};

/// Explicit `rows x cols` matrix in row-major order.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseOperator {
    /// Wraps `entries` (row-major, length `rows * cols`) as an operator.
    ///
    /// Rejects empty shapes, a length mismatch, and non-finite entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self, LinopError> {
        if rows == 0 || cols == 0 {
            return Err(LinopError::EmptyMatrix);
        }
        if entries.len() != rows * cols {
            return Err(LinopError::EntryCount {
                rows,
                cols,
                expected: rows * cols,
                got: entries.len(),
            });
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(LinopError::NonFiniteEntries);
        }
        Ok(DenseOperator {
            rows,
            cols,
            entries,
        })
    }

    /// Entry at row `i`, column `j`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }
}

impl LinearOperator for DenseOperator {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "dense forward input length mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, xj)| a * xj).sum())
            .collect()
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "dense adjoint input length mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }
}
