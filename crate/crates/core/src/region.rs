//! Localized region statistics, the per-angle feature function, and its
//! projection onto the B-spline coefficients.
//!
//! For each contour sample the image is split by the current contour inside
//! a disk of radius `R` around the sample. With `u`, `v` the inside and
//! outside means, `A_u`, `A_v` the pixel counts and `I` the image value at
//! the sample,
//!
//! ```text
//! g(theta) = (I - u)^2 / A_u - (I - v)^2 / A_v
//! dE/dc[k] = integral over theta of g(theta) * beta_d(t(theta) - k)
//! ```
//!
//! Positive `g` means the point looks like the outside, so descent pulls the
//! boundary inward there.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bspline::BSplineContour;
use crate::descent::{DescentProblem, Term};
use crate::error::{BeasError, Result};
use crate::geometry::{
    bilinear, local_neighborhood, rasterize_inside, sample_contour, Image, Mask, PolarFrame,
    SampledContour,
};

/// Statistics of one localization window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalStats {
    pub inside_mean: f64,
    pub outside_mean: f64,
    pub inside_area: usize,
    pub outside_area: usize,
    /// Image value at the window center.
    pub intensity: f64,
}

impl LocalStats {
    /// True when either side of the window is empty, so a mean is undefined.
    pub fn is_degenerate(&self) -> bool {
        self.inside_area == 0 || self.outside_area == 0
    }

    /// Feature value for an arbitrary intensity, using this window's means
    /// and areas. Zero for degenerate windows.
    pub fn feature_at(&self, intensity: f64) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        let di = intensity - self.inside_mean;
        let dv = intensity - self.outside_mean;
        di * di / self.inside_area as f64 - dv * dv / self.outside_area as f64
    }
}

/// Window statistics by direct scan of every pixel in the neighborhood.
pub fn local_stats(image: &Image, inside: &Mask, point: [f64; 2], radius: f64) -> LocalStats {
    let hood = local_neighborhood(point, radius, image.dim());
    let (mut sum_in, mut sum_out) = (0.0, 0.0);
    let (mut n_in, mut n_out) = (0usize, 0usize);
    for px in hood.pixels() {
        if inside[px] {
            sum_in += image[px];
            n_in += 1;
        } else {
            sum_out += image[px];
            n_out += 1;
        }
    }
    LocalStats {
        inside_mean: if n_in > 0 { sum_in / n_in as f64 } else { 0.0 },
        outside_mean: if n_out > 0 {
            sum_out / n_out as f64
        } else {
            0.0
        },
        inside_area: n_in,
        outside_area: n_out,
        intensity: bilinear(image, point[0], point[1]),
    }
}

/// Localized Yezzi feature at one contour sample.
pub fn yezzi_feature(stats: &LocalStats) -> f64 {
    stats.feature_at(stats.intensity)
}

/// Gradient of an energy with respect to the B-spline coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyGradient(pub Vec<f64>);

impl EnergyGradient {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self += weight * other`
    pub fn add_scaled(&mut self, other: &EnergyGradient, weight: f64) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += weight * b;
        }
    }

    pub fn scaled(mut self, weight: f64) -> Self {
        self.0.iter_mut().for_each(|v| *v *= weight);
        self
    }
}

/// Quadrature of `g(theta_i) * beta_d(t_i - k) * dtheta` over the samples.
pub fn energy_gradient(
    features: &[f64],
    contour: &BSplineContour,
    samples: &SampledContour,
) -> Result<EnergyGradient> {
    if features.len() != samples.len() {
        return Err(BeasError::Config(format!(
            "{} feature values for {} contour samples",
            features.len(),
            samples.len()
        )));
    }
    let dtheta = samples.spacing();
    let mut grad = EnergyGradient::zeros(contour.n_knots());
    for (&g, &theta) in features.iter().zip(&samples.thetas) {
        if g == 0.0 {
            continue;
        }
        for (k, w) in contour.basis_weights_at(theta) {
            grad.0[k] += g * w * dtheta;
        }
    }
    Ok(grad)
}

/// Per-row inclusive prefix sums over a rectangular window of the image, so
/// any row span inside the window sums in O(1).
#[derive(Clone, Debug)]
pub(crate) struct RowPrefix {
    origin: (usize, usize),
    data: Array2<f64>,
}

/// Half-open pixel rectangle `rows x cols`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Window {
    pub(crate) rows: (usize, usize),
    pub(crate) cols: (usize, usize),
}

impl Window {
    pub(crate) fn full(shape: (usize, usize)) -> Self {
        Self {
            rows: (0, shape.0),
            cols: (0, shape.1),
        }
    }

    /// Bounding box of disks of `radius` around `points`, clipped to the image.
    pub(crate) fn around(points: &[[f64; 2]], radius: f64, shape: (usize, usize)) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for p in points {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        let clip = |lo: f64, hi: f64, n: usize| {
            let a = (lo - radius).floor().max(0.0).min(n as f64) as usize;
            let b = ((hi + radius).ceil() + 1.0).max(0.0).min(n as f64) as usize;
            (a, b.max(a))
        };
        Self {
            rows: clip(y0, y1, shape.0),
            cols: clip(x0, x1, shape.1),
        }
    }

    pub(crate) fn dim(&self) -> (usize, usize) {
        (self.rows.1 - self.rows.0, self.cols.1 - self.cols.0)
    }
}

impl RowPrefix {
    pub(crate) fn from_fn(shape: (usize, usize), f: impl Fn(usize, usize) -> f64) -> Self {
        Self::over(Window::full(shape), f)
    }

    /// Prefix sums of `f(row, col)` over `window`, in absolute coordinates.
    pub(crate) fn over(window: Window, f: impl Fn(usize, usize) -> f64) -> Self {
        let (rows, cols) = window.dim();
        let mut data = Array2::zeros((rows, cols + 1));
        for r in 0..rows {
            let mut acc = 0.0;
            for c in 0..cols {
                acc += f(r + window.rows.0, c + window.cols.0);
                data[[r, c + 1]] = acc;
            }
        }
        Self {
            origin: (window.rows.0, window.cols.0),
            data,
        }
    }

    #[inline]
    fn span(&self, row: usize, start: usize, end: usize) -> f64 {
        let r = row - self.origin.0;
        let (a, b) = (start - self.origin.1, end - self.origin.1);
        self.data[[r, b + 1]] - self.data[[r, a]]
    }
}

/// Fast window statistics for one image under one mask.
pub(crate) struct StatsTable<'a> {
    image: &'a Image,
    intensity: &'a RowPrefix,
    count: &'a RowPrefix,
    masked: RowPrefix,
}

impl<'a> StatsTable<'a> {
    /// `mask` may cover only `window`; lookups must stay inside it.
    pub(crate) fn new(
        image: &'a Image,
        intensity: &'a RowPrefix,
        mask: &Mask,
        window: Window,
        count: &'a RowPrefix,
    ) -> Self {
        let masked = RowPrefix::over(window, |r, c| {
            if mask[[r - window.rows.0, c - window.cols.0]] {
                image[[r, c]]
            } else {
                0.0
            }
        });
        Self {
            image,
            intensity,
            count,
            masked,
        }
    }

    pub(crate) fn stats_at(&self, point: [f64; 2], radius: f64) -> LocalStats {
        let hood = local_neighborhood(point, radius, self.image.dim());
        let (mut total, mut sum_in, mut n_in, mut n) = (0.0, 0.0, 0.0, 0usize);
        for s in hood.spans() {
            total += self.intensity.span(s.row, s.start, s.end);
            sum_in += self.masked.span(s.row, s.start, s.end);
            n_in += self.count.span(s.row, s.start, s.end);
            n += s.end - s.start + 1;
        }
        let inside_area = n_in.round() as usize;
        let outside_area = n - inside_area;
        LocalStats {
            inside_mean: if inside_area > 0 {
                sum_in / inside_area as f64
            } else {
                0.0
            },
            outside_mean: if outside_area > 0 {
                (total - sum_in) / outside_area as f64
            } else {
                0.0
            },
            inside_area,
            outside_area,
            intensity: bilinear(self.image, point[0], point[1]),
        }
    }

    pub(crate) fn stats_along(&self, samples: &SampledContour, radius: f64) -> Vec<LocalStats> {
        samples
            .points
            .par_iter()
            .map(|&p| self.stats_at(p, radius))
            .collect()
    }
}

/// Feature values at every sample of the contour, with the mask recomputed
/// from the contour.
pub fn feature_values(
    image: &Image,
    contour: &BSplineContour,
    frame: &PolarFrame,
    radius: f64,
    samples: &SampledContour,
) -> Vec<f64> {
    let mask = rasterize_inside(contour, frame, image.dim());
    samples
        .points
        .par_iter()
        .map(|&p| yezzi_feature(&local_stats(image, &mask, p, radius)))
        .collect()
}

/// Region-energy gradient for the contour on one image, sampling the contour
/// `samples_per_knot` times per knot.
pub fn region_gradient(
    image: &Image,
    contour: &BSplineContour,
    frame: &PolarFrame,
    radius: f64,
    samples_per_knot: usize,
) -> Result<EnergyGradient> {
    let samples = sample_contour(contour, frame, samples_per_knot * contour.n_knots())?;
    let g = feature_values(image, contour, frame, radius, &samples);
    energy_gradient(&g, contour, &samples)
}

/// Step and stopping rule of the coefficient descent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveParams {
    /// Localization radius `R` in pixels.
    pub radius: f64,
    /// Largest coefficient move per iteration, in pixels.
    pub step: f64,
    pub max_iters: usize,
    /// Convergence threshold on the largest radius change at the knots.
    pub tol: f64,
    pub samples_per_knot: usize,
}

impl Default for EvolveParams {
    fn default() -> Self {
        Self {
            radius: 100.0,
            step: 0.5,
            max_iters: 200,
            tol: 0.05,
            samples_per_knot: 4,
        }
    }
}

impl EvolveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(BeasError::Config(format!(
                "step {} must be positive",
                self.step
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(BeasError::Config(format!(
                "tol {} must be positive",
                self.tol
            )));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(BeasError::Config(format!(
                "neighborhood radius {} must be positive",
                self.radius
            )));
        }
        if self.samples_per_knot == 0 {
            return Err(BeasError::Config(
                "samples_per_knot must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOutcome {
    pub contour: BSplineContour,
    pub iterations: usize,
    pub converged: bool,
    /// Largest knot-radius change of the final iteration.
    pub last_displacement: f64,
}

/// Gradient descent on the localized region energy of a single image.
pub fn evolve(
    contour: &BSplineContour,
    frame: &PolarFrame,
    image: &Image,
    params: &EvolveParams,
) -> Result<EvolveOutcome> {
    params.validate()?;
    frame.validate(image.dim())?;
    let problem = DescentProblem::new(*frame, image.dim(), *params, vec![Term::new(image, 1.0)]);
    problem.run(contour, params.max_iters)
}
