//! Periodic uniform B-splines and the explicit contour function.
//!
//! A closed star-convex contour is stored as the radius about a fixed origin
//! written as a function of the polar angle:
//!
//! ```text
//! rho(theta) = sum_k c[k mod N] * beta_d(t - k),   t = theta * N / (2 pi)
//! ```
//!
//! where `beta_d` is the centered uniform B-spline of degree `d`. Evaluation
//! happens in knot-index space, so knot `k` sits at angle `2 pi k / N`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{BeasError, Result};

/// Smallest radius the contour may take, in pixels.
pub const MIN_RADIUS: f64 = 1.0;

/// Highest supported spline degree.
pub const MAX_DEGREE: u8 = 3;

/// Centered uniform B-spline of degree `degree` at `x`.
///
/// The degree-0 spline is the indicator of `[-1/2, 1/2)`; higher degrees are
/// its repeated self-convolutions, evaluated in closed form.
pub fn basis(x: f64, degree: u8) -> Result<f64> {
    if degree > MAX_DEGREE {
        return Err(BeasError::Config(format!(
            "unsupported spline degree {degree}, expected 0..={MAX_DEGREE}"
        )));
    }
    Ok(basis_unchecked(x, degree))
}

#[inline]
pub(crate) fn basis_unchecked(x: f64, degree: u8) -> f64 {
    let a = x.abs();
    match degree {
        0 => {
            if (-0.5..0.5).contains(&x) {
                1.0
            } else {
                0.0
            }
        }
        1 => {
            if a < 1.0 {
                1.0 - a
            } else {
                0.0
            }
        }
        2 => {
            if a < 0.5 {
                0.75 - a * a
            } else if a < 1.5 {
                let u = 1.5 - a;
                0.5 * u * u
            } else {
                0.0
            }
        }
        3 => {
            if a < 1.0 {
                2.0 / 3.0 - a * a + 0.5 * a * a * a
            } else if a < 2.0 {
                let u = 2.0 - a;
                u * u * u / 6.0
            } else {
                0.0
            }
        }
        _ => unreachable!("degree validated by caller"),
    }
}

/// Nonzero basis weights at one angle, as `(knot index, weight)` pairs.
pub type BasisWeights = SmallVec<[(usize, f64); 4]>;

/// Closed contour `rho = psi(theta)` as a periodic B-spline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawContour", into = "RawContour")]
pub struct BSplineContour {
    coefficients: Vec<f64>,
    degree: u8,
    scale: f64,
}

#[derive(Serialize, Deserialize)]
struct RawContour {
    coefficients: Vec<f64>,
    degree: u8,
    scale: f64,
}

impl TryFrom<RawContour> for BSplineContour {
    type Error = BeasError;

    fn try_from(raw: RawContour) -> Result<Self> {
        BSplineContour::with_scale(raw.coefficients, raw.degree, raw.scale)
    }
}

impl From<BSplineContour> for RawContour {
    fn from(c: BSplineContour) -> Self {
        RawContour {
            coefficients: c.coefficients,
            degree: c.degree,
            scale: c.scale,
        }
    }
}

impl BSplineContour {
    pub fn new(coefficients: Vec<f64>, degree: u8) -> Result<Self> {
        Self::with_scale(coefficients, degree, 1.0)
    }

    /// Builds a contour with an explicit knot spacing.
    ///
    /// Only unit spacing keeps the function 2π-periodic when N knots span the
    /// full turn, so any other value is rejected.
    pub fn with_scale(coefficients: Vec<f64>, degree: u8, scale: f64) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(BeasError::Config(format!(
                "unsupported spline degree {degree}, expected 0..={MAX_DEGREE}"
            )));
        }
        let n = coefficients.len();
        let min_knots = 2 * degree as usize + 1;
        if n < min_knots.max(1) {
            return Err(BeasError::Config(format!(
                "{n} knots is too few for degree {degree} (need at least {min_knots})"
            )));
        }
        if scale != 1.0 {
            return Err(BeasError::Config(format!(
                "knot scale {scale} is not supported; N knots over a full turn require unit scale"
            )));
        }
        if let Some(bad) = coefficients.iter().find(|c| !c.is_finite()) {
            return Err(BeasError::Config(format!("non-finite coefficient {bad}")));
        }
        Ok(Self {
            coefficients,
            degree,
            scale,
        })
    }

    /// Constant-coefficient contour, i.e. a circle of the given radius.
    pub fn circle(n_knots: usize, degree: u8, radius: f64) -> Result<Self> {
        Self::new(vec![radius; n_knots], degree)
    }

    pub fn n_knots(&self) -> usize {
        self.coefficients.len()
    }

    pub fn degree(&self) -> u8 {
        self.degree
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }

    /// Angle of knot `k`.
    pub fn knot_angle(&self, k: usize) -> f64 {
        TAU * k as f64 / self.n_knots() as f64
    }

    /// Position of `theta` in knot-index space, after wrapping into `[0, 2π)`.
    pub fn knot_position(&self, theta: f64) -> f64 {
        let theta = wrap_angle(theta);
        theta * self.n_knots() as f64 / (TAU * self.scale)
    }

    /// The nonzero `(k, beta_d(t - k))` pairs at `theta`. Weights sum to one.
    pub fn basis_weights_at(&self, theta: f64) -> BasisWeights {
        let t = self.knot_position(theta);
        let n = self.n_knots() as i64;
        let half = (self.degree as f64 + 1.0) / 2.0;
        let lo = (t - half).floor() as i64;
        let hi = (t + half).ceil() as i64;
        let mut out = BasisWeights::new();
        for k in lo..=hi {
            let w = basis_unchecked(t - k as f64, self.degree);
            if w != 0.0 {
                out.push((k.rem_euclid(n) as usize, w));
            }
        }
        out
    }

    /// Unclamped spline value at `theta`.
    pub fn raw_value(&self, theta: f64) -> f64 {
        self.basis_weights_at(theta)
            .iter()
            .map(|&(k, w)| self.coefficients[k] * w)
            .sum()
    }

    /// Contour radius at `theta`, never below [`MIN_RADIUS`].
    pub fn evaluate(&self, theta: f64) -> f64 {
        self.raw_value(theta).max(MIN_RADIUS)
    }

    /// Bounds on `evaluate` over the whole turn, from the convex-hull
    /// property of the basis.
    pub fn radius_bounds(&self) -> (f64, f64) {
        let (lo, hi) = self
            .coefficients
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| {
                (lo.min(c), hi.max(c))
            });
        (lo.max(MIN_RADIUS), hi.max(MIN_RADIUS))
    }

    /// Bounds on `evaluate` over each unit interval `[j, j + 1)` of knot
    /// position, indexed by `j`.
    pub(crate) fn interval_bounds(&self) -> Vec<(f64, f64)> {
        let n = self.n_knots() as i64;
        let count = (n as f64 / self.scale).ceil() as i64 + 1;
        let reach = (self.degree as i64 + 1) / 2 + 1;
        (0..count)
            .map(|j| {
                (j - reach..=j + reach).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| {
                    let c = self.coefficients[k.rem_euclid(n) as usize];
                    (lo.min(c), hi.max(c))
                })
            })
            .map(|(lo, hi)| (lo.max(MIN_RADIUS), hi.max(MIN_RADIUS)))
            .collect()
    }

    /// Radii at the knot angles.
    pub fn knot_radii(&self) -> Vec<f64> {
        (0..self.n_knots())
            .map(|k| self.evaluate(self.knot_angle(k)))
            .collect()
    }

    /// Returns a copy with `delta` added to the coefficients, each clamped to
    /// stay at or above [`MIN_RADIUS`].
    pub fn displaced(&self, delta: &[f64], factor: f64) -> Self {
        debug_assert_eq!(delta.len(), self.n_knots());
        let coefficients = self
            .coefficients
            .iter()
            .zip(delta)
            .map(|(&c, &d)| (c + factor * d).max(MIN_RADIUS))
            .collect();
        Self {
            coefficients,
            degree: self.degree,
            scale: self.scale,
        }
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}
