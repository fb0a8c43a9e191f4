//! First and second order difference operators on 2-d images.
//!
//! Images are row-major `height x width` grids flattened to vectors. Both
//! operators use zero (Dirichlet) boundaries: pixels outside the image are
//! treated as zero, so differencing against the outside is kept as a row
//! rather than dropped. That keeps the row count at a fixed multiple of the
//! pixel count and penalizes nonzero intensity on the image border.

use super::LinearOperator;

/// Forward differences in both grid directions, stacked vertically.
///
/// The output has `2 * height * width` entries: first the down-column
/// differences `x[i+1, j] - x[i, j]` for every pixel, then the along-row
/// differences `x[i, j+1] - x[i, j]`, each against an implicit zero outside
/// the image. This is the usual anisotropic total-variation operator.
#[derive(Clone, Debug)]
pub struct FiniteDifference2d {
    height: usize,
    width: usize,
}

impl FiniteDifference2d {
    /// Differences for a `height x width` image. Panics on an empty shape.
    pub fn new(height: usize, width: usize) -> Self {
        assert!(height >= 1 && width >= 1, "image must be nonempty");
        FiniteDifference2d { height, width }
    }
}

impl LinearOperator for FiniteDifference2d {
    fn rows(&self) -> usize {
        2 * self.height * self.width
    }

    fn cols(&self) -> usize {
        self.height * self.width
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (h, w) = (self.height, self.width);
        assert_eq!(x.len(), h * w, "difference input length mismatch");
        let mut out = vec![0.0; 2 * h * w];
        for i in 0..h {
            for j in 0..w {
                let p = i * w + j;
                let below = if i + 1 < h { x[p + w] } else { 0.0 };
                let right = if j + 1 < w { x[p + 1] } else { 0.0 };
                out[p] = below - x[p];
                out[h * w + p] = right - x[p];
            }
        }
        out
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let (h, w) = (self.height, self.width);
        assert_eq!(y.len(), 2 * h * w, "difference adjoint length mismatch");
        let (vert, horiz) = y.split_at(h * w);
        let mut out = vec![0.0; h * w];
        for i in 0..h {
            for j in 0..w {
                let p = i * w + j;
                out[p] -= vert[p] + horiz[p];
                if i + 1 < h {
                    out[p + w] += vert[p];
                }
                if j + 1 < w {
                    out[p + 1] += horiz[p];
                }
            }
        }
        out
    }
}

/// Five-point discrete Laplacian, `4 x[i,j]` minus the four neighbors,
/// with zero boundaries. Square and symmetric.
#[derive(Clone, Debug)]
pub struct Laplacian2d {
    height: usize,
    width: usize,
}

impl Laplacian2d {
    /// Laplacian for a `height x width` image. Panics on an empty shape.
    pub fn new(height: usize, width: usize) -> Self {
        assert!(height >= 1 && width >= 1, "image must be nonempty");
        Laplacian2d { height, width }
    }
}

impl LinearOperator for Laplacian2d {
    fn rows(&self) -> usize {
        self.height * self.width
    }

    fn cols(&self) -> usize {
        self.height * self.width
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (h, w) = (self.height, self.width);
        assert_eq!(x.len(), h * w, "laplacian input length mismatch");
        let mut out = vec![0.0; h * w];
        for i in 0..h {
            for j in 0..w {
                let p = i * w + j;
                let mut v = 4.0 * x[p];
                if i > 0 {
                    v -= x[p - w];
                }
                if i + 1 < h {
                    v -= x[p + w];
                }
                if j > 0 {
                    v -= x[p - 1];
                }
                if j + 1 < w {
                    v -= x[p + 1];
                }
                out[p] = v;
            }
        }
        out
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        // The stencil matrix is symmetric, so the adjoint is the same map.
        self.forward(y)
    }
}
