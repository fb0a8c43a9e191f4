//! Gaussian blur as a matrix-free convolution.

use super::{LinearOperator, LinopError};

/// Convolution with a truncated, normalized Gaussian point-spread function
/// and zero boundary conditions.
///
/// The kernel covers offsets `-radius..=radius` in both directions and is
/// scaled to sum to one, so a constant image stays constant away from the
/// border while intensity leaks out near it (the outside is treated as
/// black). The kernel is even, which makes the operator symmetric, but the
/// adjoint is still written as an explicit correlation.
#[derive(Clone, Debug)]
pub struct GaussianBlur {
    height: usize,
    width: usize,
    radius: usize,
    kernel: Vec<f64>,
}

impl GaussianBlur {
    /// Blur for a `height x width` image with spread `sigma` (in pixels)
    /// truncated at `radius`. The kernel side `2 * radius + 1` must fit
    /// inside both image dimensions.
    pub fn new(height: usize, width: usize, sigma: f64, radius: usize) -> Result<Self, LinopError> {
        assert!(height >= 1 && width >= 1, "image must be nonempty");
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(LinopError::BadBlurWidth(sigma));
        }
        if radius < 1 {
            return Err(LinopError::KernelTooLarge {
                kernel: 0,
                height,
                width,
            });
        }
        let side = 2 * radius + 1;
        if side > height || side > width {
            return Err(LinopError::KernelTooLarge {
                kernel: side,
                height,
                width,
            });
        }

        let mut kernel = Vec::with_capacity(side * side);
        for di in -(radius as isize)..=radius as isize {
            for dj in -(radius as isize)..=radius as isize {
                let d2 = (di * di + dj * dj) as f64;
                kernel.push((-d2 / (2.0 * sigma * sigma)).exp());
            }
        }
        let total: f64 = kernel.iter().sum();
        for k in &mut kernel {
            *k /= total;
        }

        Ok(GaussianBlur {
            height,
            width,
            radius,
            kernel,
        })
    }

    fn kernel_at(&self, di: isize, dj: isize) -> f64 {
        let r = self.radius as isize;
        self.kernel[((di + r) * (2 * r + 1) + (dj + r)) as usize]
    }
}

impl LinearOperator for GaussianBlur {
    fn rows(&self) -> usize {
        self.height * self.width
    }

    fn cols(&self) -> usize {
        self.height * self.width
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (h, w, r) = (self.height as isize, self.width as isize, self.radius as isize);
        assert_eq!(x.len(), self.cols(), "blur input length mismatch");
        let mut out = vec![0.0; x.len()];
        for i in 0..h {
            for j in 0..w {
                let mut acc = 0.0;
                for di in -r..=r {
                    let si = i - di;
                    if si < 0 || si >= h {
                        continue;
                    }
                    for dj in -r..=r {
                        let sj = j - dj;
                        if sj < 0 || sj >= w {
                            continue;
                        }
                        acc += self.kernel_at(di, dj) * x[(si * w + sj) as usize];
                    }
                }
                out[(i * w + j) as usize] = acc;
            }
        }
        out
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let (h, w, r) = (self.height as isize, self.width as isize, self.radius as isize);
        assert_eq!(y.len(), self.rows(), "blur adjoint length mismatch");
        let mut out = vec![0.0; y.len()];
        for i in 0..h {
            for j in 0..w {
                let mut acc = 0.0;
                for di in -r..=r {
                    let si = i + di;
                    if si < 0 || si >= h {
                        continue;
                    }
                    for dj in -r..=r {
                        let sj = j + dj;
                        if sj < 0 || sj >= w {
                            continue;
                        }
                        acc += self.kernel_at(di, dj) * y[(si * w + sj) as usize];
                    }
                }
                out[(i * w + j) as usize] = acc;
            }
        }
        out
    }
}
