//! Reproducible inverse-problem test instances and evaluation metrics.
//!
//! A [`ProblemInstance`] bundles the measurement operator `A`, the
//! regularization operator `D`, noisy data `b = A x_true + eps`, the ground
//! truth, and the noise level sigma. Instances are pure functions of their
//! seeds, so two builds with the same arguments are bit-identical.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linops::{
    FiniteDifference2d, GaussianBlur, Identity, Laplacian2d, LinearOperator, LinopError,
    ParallelBeamTomo,
};
use crate::vecmath::norm2;

mod image_io;
mod phantom;

pub use image_io::{read_f64le, write_f64le, write_pgm};
pub use phantom::{
    piecewise_phantom, piecewise_phantom_config, shepp_logan_2d, Phantom, DEFAULT_SHAPE_COUNT,
};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("noise-free data is identically zero; cannot scale noise against it")]
    ZeroCleanData,
    #[error("noise fraction must lie in (0, 1), got {0}")]
    BadNoisePercent(f64),
    #[error("invalid geometry: {0}")]
    Geometry(#[from] LinopError),
}

/// Which measurement operator the instance uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// `A = I`: recover an image from a noisy copy of itself.
    Denoise,
    /// `A` is a Gaussian blur.
    Blur,
    /// `A` is a parallel-beam projection.
    Tomo,
}

/// Which regularization operator `D` the instance uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularizer {
    /// First differences in both directions (anisotropic total variation).
    Tv,
    /// Five-point Laplacian.
    Laplacian,
    /// `D = I` (plain lasso).
    Identity,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Denoise => "denoise",
            Family::Blur => "blur",
            Family::Tomo => "tomo",
        }
    }
}

impl Regularizer {
    pub fn name(self) -> &'static str {
        match self {
            Regularizer::Tv => "tv",
            Regularizer::Laplacian => "laplacian",
            Regularizer::Identity => "identity",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "denoise" => Ok(Family::Denoise),
            "blur" => Ok(Family::Blur),
            "tomo" => Ok(Family::Tomo),
            other => Err(format!(
                "unknown problem family '{other}' (expected denoise, blur or tomo)"
            )),
        }
    }
}

impl FromStr for Regularizer {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tv" => Ok(Regularizer::Tv),
            "laplacian" => Ok(Regularizer::Laplacian),
            "identity" => Ok(Regularizer::Identity),
            other => Err(format!(
                "unknown regularizer '{other}' (expected tv, laplacian or identity)"
            )),
        }
    }
}

/// Shape of the data relative to the unknowns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Determinedness {
    Underdetermined,
    Square,
    Overdetermined,
}

impl Determinedness {
    fn of(rows: usize, cols: usize) -> Self {
        match rows.cmp(&cols) {
            std::cmp::Ordering::Less => Determinedness::Underdetermined,
            std::cmp::Ordering::Equal => Determinedness::Square,
            std::cmp::Ordering::Greater => Determinedness::Overdetermined,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Determinedness::Underdetermined => "underdetermined",
            Determinedness::Square => "square",
            Determinedness::Overdetermined => "overdetermined",
        }
    }
}

/// Operator-specific knobs for [`build_problem`]. The defaults give a
/// square (`m = n`) system at every size; tomography becomes under- or
/// overdetermined by changing the number of angles or detectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    /// Blur spread in pixels.
    pub blur_sigma: f64,
    /// Blur kernel truncation radius in pixels.
    pub blur_radius: usize,
    /// Number of projection angles, uniform over `[0, pi)`.
    pub tomo_angles: usize,
    /// Detectors per angle.
    pub tomo_detectors: usize,
}

impl Geometry {
    /// Defaults for an `n_side` image: a mild 5x5 blur and a square
    /// tomography system (`n_side` angles times `n_side` detectors).
    pub fn default_for(n_side: usize) -> Self {
        Geometry {
            blur_sigma: 1.0,
            blur_radius: 2,
            tomo_angles: n_side,
            tomo_detectors: n_side,
        }
    }
}

/// What was generated and how; travels with the instance into reports.
#[derive(Clone, Debug, PartialEq)]
pub struct Descriptor {
    pub family: Family,
    pub regularizer: Regularizer,
    pub n_side: usize,
    pub noise_percent: f64,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub determinedness: Determinedness,
    pub snr: f64,
}

/// One inverse problem: minimize
/// `1/2 ||A x - b||^2 + mu ||D x||_1` against data `b`.
#[derive(Clone)]
pub struct ProblemInstance {
    pub a: Arc<dyn LinearOperator>,
    pub d: Arc<dyn LinearOperator>,
    pub b: Vec<f64>,
    pub x_true: Option<Vec<f64>>,
    /// Per-sample noise standard deviation, chosen so `||eps||^2 = m sigma^2`.
    pub sigma: f64,
    pub noise_seed: u64,
    /// Generation provenance; absent for hand-assembled instances.
    pub descriptor: Option<Descriptor>,
}

impl ProblemInstance {
    /// Wraps user-supplied operators and data, with no ground truth and no
    /// noise model attached.
    pub fn custom(a: Arc<dyn LinearOperator>, d: Arc<dyn LinearOperator>, b: Vec<f64>) -> Self {
        assert_eq!(a.rows(), b.len(), "data length must match operator rows");
        assert_eq!(a.cols(), d.cols(), "operators disagree on unknown count");
        ProblemInstance {
            a,
            d,
            b,
            x_true: None,
            sigma: 0.0,
            noise_seed: 0,
            descriptor: None,
        }
    }

    /// Number of data values (rows of `A`).
    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    /// Number of unknowns (columns of `A` and `D`).
    pub fn cols(&self) -> usize {
        self.a.cols()
    }
}

/// Salt for deriving the noise stream from the instance seed, so phantom
/// geometry and noise never replay the same random sequence.
const NOISE_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Assembles a complete, deterministic problem instance.
///
/// The denoise and blur families use the piecewise-constant phantom (their
/// ground truth should be difference-sparse); tomography uses the
/// Shepp-Logan head. Noise is scaled to an exact `noise_percent` fraction
/// of the clean data norm, see [`add_noise`].
pub fn build_problem(
    family: Family,
    n_side: usize,
    noise_percent: f64,
    reg: Regularizer,
    seed: u64,
    geometry: Option<Geometry>,
) -> Result<ProblemInstance, ProblemError> {
    let geo = geometry.unwrap_or_else(|| Geometry::default_for(n_side));
    let phantom = match family {
        Family::Denoise | Family::Blur => piecewise_phantom(n_side, seed),
        Family::Tomo => shepp_logan_2d(n_side),
    };
    let n = n_side * n_side;

    let a: Arc<dyn LinearOperator> = match family {
        Family::Denoise => Arc::new(Identity::new(n)),
        Family::Blur => Arc::new(GaussianBlur::new(
            n_side,
            n_side,
            geo.blur_sigma,
            geo.blur_radius,
        )?),
        Family::Tomo => Arc::new(ParallelBeamTomo::new(
            n_side,
            n_side,
            ParallelBeamTomo::uniform_angles(geo.tomo_angles),
            geo.tomo_detectors,
        )?),
    };
    let d: Arc<dyn LinearOperator> = match reg {
        Regularizer::Tv => Arc::new(FiniteDifference2d::new(n_side, n_side)),
        Regularizer::Laplacian => Arc::new(Laplacian2d::new(n_side, n_side)),
        Regularizer::Identity => Arc::new(Identity::new(n)),
    };

    let clean = a.forward(&phantom.pixels);
    let noise_seed = seed ^ NOISE_SEED_SALT;
    let (b, sigma, snr) = add_noise(&clean, noise_percent, noise_seed)?;

    let descriptor = Descriptor {
        family,
        regularizer: reg,
        n_side,
        noise_percent,
        seed,
        rows: a.rows(),
        cols: a.cols(),
        determinedness: Determinedness::of(a.rows(), a.cols()),
        snr,
    };
    Ok(ProblemInstance {
        a,
        d,
        b,
        x_true: Some(phantom.pixels),
        sigma,
        noise_seed,
        descriptor: Some(descriptor),
    })
}

/// Adds seeded Gaussian noise scaled to an exact fraction of the signal.
///
/// Draws `eps` from a seeded standard normal and rescales it so that
/// `||eps|| = noise_percent * ||clean||` holds exactly, rather than only in
/// expectation. Returns `(b, sigma, snr)` with
/// `sigma = noise_percent * ||clean|| / sqrt(m)` (so `||eps||^2 = m sigma^2`
/// exactly) and `snr = -20 log10(noise_percent)`.
pub fn add_noise(
    clean: &[f64],
    noise_percent: f64,
    seed: u64,
) -> Result<(Vec<f64>, f64, f64), ProblemError> {
    if !(noise_percent > 0.0 && noise_percent < 1.0) {
        return Err(ProblemError::BadNoisePercent(noise_percent));
    }
    let clean_norm = norm2(clean);
    if clean_norm == 0.0 {
        return Err(ProblemError::ZeroCleanData);
    }
    let m = clean.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let scale = noise_percent * clean_norm / norm2(&eps);
    let b = clean
        .iter()
        .zip(&eps)
        .map(|(c, e)| c + scale * e)
        .collect();
    let sigma = noise_percent * clean_norm / (m as f64).sqrt();
    let snr = -20.0 * noise_percent.log10();
    Ok((b, sigma, snr))
}

/// `||x - x_true|| / ||x_true||`. Panics if `x_true` is zero.
pub fn relative_error(x: &[f64], x_true: &[f64]) -> f64 {
    assert_eq!(x.len(), x_true.len(), "length mismatch");
    let denom = norm2(x_true);
    assert!(denom > 0.0, "relative error is undefined for a zero truth");
    let diff: f64 = x
        .iter()
        .zip(x_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    diff / denom
}

/// `||A x - b|| / ||b||`. Panics if `b` is zero.
pub fn relative_residual(x: &[f64], a: &dyn LinearOperator, b: &[f64]) -> f64 {
    let denom = norm2(b);
    assert!(denom > 0.0, "relative residual is undefined for zero data");
    let ax = a.forward(x);
    let diff: f64 = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    diff / denom
}
