//! Synthetic ground-truth images.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A flat, row-major grayscale image with intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Phantom {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl Phantom {
    /// Wraps pixel data, clamping every value into `[0, 1]`.
    pub fn new(height: usize, width: usize, mut pixels: Vec<f64>) -> Self {
        assert_eq!(pixels.len(), height * width, "pixel count mismatch");
        for p in &mut pixels {
            *p = p.clamp(0.0, 1.0);
        }
        Phantom {
            height,
            width,
            pixels,
        }
    }
}

/// The ten ellipses of the Shepp-Logan head phantom with the usual
/// "modified" intensities (rescaled for visual contrast, peak value 1):
/// (intensity, semi-axis a, semi-axis b, center x, center y, tilt degrees).
const SHEPP_LOGAN_ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Rasterizes the standard Shepp-Logan head phantom on an `n_side` square
/// grid over `[-1, 1]^2`, sampling at pixel centers.
///
/// Pixel (0, 0) is the top-left corner (y = +1 side). Values are the sum of
/// the intensities of the ellipses covering the pixel center, clamped to
/// `[0, 1]`. Requires `n_side >= 8`; anything coarser is not a useful image.
pub fn shepp_logan_2d(n_side: usize) -> Phantom {
    assert!(n_side >= 8, "phantom needs a side of at least 8 pixels");
    let step = 2.0 / n_side as f64;
    let mut pixels = Vec::with_capacity(n_side * n_side);
    for i in 0..n_side {
        let y = 1.0 - (i as f64 + 0.5) * step;
        for j in 0..n_side {
            let x = -1.0 + (j as f64 + 0.5) * step;
            let mut value = 0.0;
            for &(intensity, a, b, x0, y0, tilt) in &SHEPP_LOGAN_ELLIPSES {
                let (sin_t, cos_t) = tilt.to_radians().sin_cos();
                let dx = x - x0;
                let dy = y - y0;
                let xr = dx * cos_t + dy * sin_t;
                let yr = -dx * sin_t + dy * cos_t;
                if (xr / a).powi(2) + (yr / b).powi(2) <= 1.0 {
                    value += intensity;
                }
            }
            pixels.push(value);
        }
    }
    Phantom::new(n_side, n_side, pixels)
}

/// Default number of shapes drawn by [`piecewise_phantom`].
pub const DEFAULT_SHAPE_COUNT: usize = 5;

/// Seeded piecewise-constant test image: random constant-intensity
/// rectangles and ellipses over a flat background.
///
/// Because the image is flat between shape boundaries, its finite
/// differences are sparse, which is the regime total-variation
/// regularization is designed for. Identical seeds give bit-identical
/// images.
pub fn piecewise_phantom(n_side: usize, seed: u64) -> Phantom {
    piecewise_phantom_config(n_side, seed, DEFAULT_SHAPE_COUNT, 0.0)
}

/// [`piecewise_phantom`] with an explicit shape count and background
/// intensity. Zero shapes gives a constant image, handy for degenerate-case
/// tests.
pub fn piecewise_phantom_config(
    n_side: usize,
    seed: u64,
    shapes: usize,
    background: f64,
) -> Phantom {
    assert!(n_side >= 8, "phantom needs a side of at least 8 pixels");
    assert!(
        (0.0..=1.0).contains(&background),
        "background intensity must lie in [0, 1]"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_side as f64;
    let mut pixels = vec![background; n_side * n_side];

    for _ in 0..shapes {
        let intensity = rng.gen_range(0.15..=1.0);
        let cx = rng.gen_range(0.2 * n..0.8 * n);
        let cy = rng.gen_range(0.2 * n..0.8 * n);
        let half_w = rng.gen_range(0.08 * n..0.18 * n);
        let half_h = rng.gen_range(0.08 * n..0.18 * n);
        let is_ellipse = rng.gen_bool(0.5);

        for i in 0..n_side {
            let y = i as f64 + 0.5;
            for j in 0..n_side {
                let x = j as f64 + 0.5;
                let inside = if is_ellipse {
                    ((x - cx) / half_w).powi(2) + ((y - cy) / half_h).powi(2) <= 1.0
                } else {
                    (x - cx).abs() <= half_w && (y - cy).abs() <= half_h
                };
                if inside {
                    pixels[i * n_side + j] = intensity;
                }
            }
        }
    }
    Phantom::new(n_side, n_side, pixels)
}
