//! Parallel-beam tomography with exact ray-pixel intersection lengths.

use super::{LinearOperator, LinopError};

/// Parallel-beam projection of a `height x width` image on a unit pixel
/// grid.
///
/// For each angle a uniform array of detectors spans the image diagonal,
/// and each detector collects the line integral of the image along its ray,
/// computed by walking the grid-line crossings (Siddon traversal) so the
/// weight on a pixel is the exact chord length through it. The forward map
/// therefore has `angles * detectors` rows and the adjoint spreads detector
/// values back along the rays (unfiltered backprojection).
///
/// Angles are in radians; 0 shoots rays along image rows, pi/2 along
/// columns. Weights are recomputed on the fly, nothing is stored.
#[derive(Clone, Debug)]
pub struct ParallelBeamTomo {
    height: usize,
    width: usize,
    angles: Vec<f64>,
    detectors: usize,
}

impl ParallelBeamTomo {
    pub fn new(
        height: usize,
        width: usize,
        angles: Vec<f64>,
        detectors: usize,
    ) -> Result<Self, LinopError> {
        assert!(height >= 1 && width >= 1, "image must be nonempty");
        if angles.is_empty() || detectors == 0 {
            return Err(LinopError::EmptyGeometry);
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(LinopError::NonFiniteAngle);
        }
        Ok(ParallelBeamTomo {
            height,
            width,
            angles,
            detectors,
        })
    }

    /// Evenly spaced angles in `[0, pi)`, the usual scan geometry.
    pub fn uniform_angles(count: usize) -> Vec<f64> {
        (0..count)
            .map(|k| k as f64 * std::f64::consts::PI / count as f64)
            .collect()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn detectors(&self) -> usize {
        self.detectors
    }

    /// Walks one ray and reports `(pixel index, chord length)` pairs.
    fn trace(&self, angle_idx: usize, detector_idx: usize, mut visit: impl FnMut(usize, f64)) {
        let (h, w) = (self.height as f64, self.width as f64);
        let theta = self.angles[angle_idx];
        let (dir_u, dir_v) = (theta.cos(), theta.sin());
        // Detector offsets are cell centered on the image diagonal.
        let span = (h * h + w * w).sqrt();
        let t = (detector_idx as f64 + 0.5) * span / self.detectors as f64 - span / 2.0;
        // Ray passes through the image center shifted along the normal.
        let p_u = w / 2.0 - t * dir_v;
        let p_v = h / 2.0 + t * dir_u;

        // Clip the ray parameter to the image box, one slab per axis.
        let mut s_min = f64::NEG_INFINITY;
        let mut s_max = f64::INFINITY;
        for (p, d, hi) in [(p_u, dir_u, w), (p_v, dir_v, h)] {
            if d.abs() > 1e-12 {
                let (a, b) = ((0.0 - p) / d, (hi - p) / d);
                s_min = s_min.max(a.min(b));
                s_max = s_max.min(a.max(b));
            } else if p < 0.0 || p > hi {
                return;
            }
        }
        if s_min >= s_max {
            return;
        }

        // Every grid-line crossing between entry and exit, in order.
        let mut cuts = vec![s_min, s_max];
        for (p, d, hi) in [(p_u, dir_u, w), (p_v, dir_v, h)] {
            if d.abs() > 1e-12 {
                for line in 0..=hi as usize {
                    let s = (line as f64 - p) / d;
                    if s > s_min && s < s_max {
                        cuts.push(s);
                    }
                }
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

        for pair in cuts.windows(2) {
            let len = pair[1] - pair[0];
            if len <= 1e-12 {
                continue;
            }
            let mid = 0.5 * (pair[0] + pair[1]);
            let col = ((p_u + mid * dir_u).floor() as isize).clamp(0, self.width as isize - 1);
            let row = ((p_v + mid * dir_v).floor() as isize).clamp(0, self.height as isize - 1);
            visit(row as usize * self.width + col as usize, len);
        }
    }
}

impl LinearOperator for ParallelBeamTomo {
    fn rows(&self) -> usize {
        self.angles.len() * self.detectors
    }

    fn cols(&self) -> usize {
        self.height * self.width
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols(), "projection input length mismatch");
        let mut out = vec![0.0; self.rows()];
        for a in 0..self.angles.len() {
            for d in 0..self.detectors {
                let mut acc = 0.0;
                self.trace(a, d, |pixel, weight| acc += weight * x[pixel]);
                out[a * self.detectors + d] = acc;
            }
        }
        out
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows(), "backprojection input length mismatch");
        let mut out = vec![0.0; self.cols()];
        for a in 0..self.angles.len() {
            for d in 0..self.detectors {
                let ray_value = y[a * self.detectors + d];
                if ray_value != 0.0 {
                    self.trace(a, d, |pixel, weight| out[pixel] += weight * ray_value);
                }
            }
        }
        out
    }
}
