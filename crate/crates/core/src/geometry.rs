//! Polar frame, contour sampling, and pixel-level geometry.

use std::f64::consts::TAU;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bspline::{wrap_angle, BSplineContour};
use crate::error::{BeasError, Result};

/// Grayscale image, indexed `[[row, col]]`, intensities as reals.
pub type Image = Array2<f64>;

/// Binary mask, `true` for inside.
pub type Mask = Array2<bool>;

/// Fixed origin and initial radius of the polar parameterization, in pixel
/// coordinates (`x` along columns, `y` along rows).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarFrame {
    pub origin: [f64; 2],
    pub initial_radius: f64,
}

impl PolarFrame {
    pub fn new(origin: [f64; 2], initial_radius: f64, shape: (usize, usize)) -> Result<Self> {
        let frame = Self {
            origin,
            initial_radius,
        };
        frame.validate(shape)?;
        Ok(frame)
    }

    pub fn validate(&self, (rows, cols): (usize, usize)) -> Result<()> {
        let [x, y] = self.origin;
        let inside = x.is_finite()
            && y.is_finite()
            && x >= 0.0
            && y >= 0.0
            && x <= cols as f64 - 1.0
            && y <= rows as f64 - 1.0;
        if !inside {
            return Err(BeasError::InputRange(format!(
                "origin ({x}, {y}) lies outside the {cols}x{rows} image"
            )));
        }
        if !(self.initial_radius > 0.0 && self.initial_radius.is_finite()) {
            return Err(BeasError::InputRange(format!(
                "initial radius {} must be positive",
                self.initial_radius
            )));
        }
        Ok(())
    }

    /// Polar coordinates `(rho, theta)` of an image point, theta in `[0, 2π)`.
    pub fn to_polar(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = x - self.origin[0];
        let dy = y - self.origin[1];
        (dx.hypot(dy), wrap_angle(dy.atan2(dx)))
    }

    pub fn to_cartesian(&self, rho: f64, theta: f64) -> [f64; 2] {
        [
            self.origin[0] + rho * theta.cos(),
            self.origin[1] + rho * theta.sin(),
        ]
    }
}

/// The contour evaluated at `M` uniformly spaced angles.
#[derive(Clone, Debug)]
pub struct SampledContour {
    pub thetas: Vec<f64>,
    pub radii: Vec<f64>,
    pub points: Vec<[f64; 2]>,
}

impl SampledContour {
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Angular quadrature weight of each sample.
    pub fn spacing(&self) -> f64 {
        TAU / self.len() as f64
    }
}

/// Samples the contour at `theta_i = 2 pi i / count`.
pub fn sample_contour(
    contour: &BSplineContour,
    frame: &PolarFrame,
    count: usize,
) -> Result<SampledContour> {
    if count < contour.n_knots() {
        return Err(BeasError::Config(format!(
            "{count} samples is fewer than the {} knots",
            contour.n_knots()
        )));
    }
    let thetas: Vec<f64> = (0..count).map(|i| TAU * i as f64 / count as f64).collect();
    let radii: Vec<f64> = thetas.iter().map(|&t| contour.evaluate(t)).collect();
    let points = thetas
        .iter()
        .zip(&radii)
        .map(|(&t, &r)| frame.to_cartesian(r, t))
        .collect();
    Ok(SampledContour {
        thetas,
        radii,
        points,
    })
}

/// Pixels strictly closer to the origin than the contour at their own polar
/// angle. Pixels exactly on the contour are outside.
pub fn rasterize_inside(
    contour: &BSplineContour,
    frame: &PolarFrame,
    shape: (usize, usize),
) -> Mask {
    rasterize_region(contour, frame, (0, 0), shape, None)
}

/// Polar angle and knot position of a block of pixels about a fixed origin,
/// computed once for repeated rasterization of contours with one knot layout.
pub(crate) struct AngleTable {
    offset: (usize, usize),
    polar: Array2<(f64, f64)>,
}

impl AngleTable {
    pub(crate) fn new(
        contour: &BSplineContour,
        frame: &PolarFrame,
        offset: (usize, usize),
        shape: (usize, usize),
    ) -> Self {
        let [ox, oy] = frame.origin;
        let polar = Array2::from_shape_fn(shape, |(r, c)| {
            let theta = ((r + offset.0) as f64 - oy).atan2((c + offset.1) as f64 - ox);
            (theta, contour.knot_position(theta))
        });
        Self { offset, polar }
    }

    fn get(&self, row: usize, col: usize) -> Option<(f64, f64)> {
        let r = row.checked_sub(self.offset.0)?;
        let c = col.checked_sub(self.offset.1)?;
        self.polar.get((r, c)).copied()
    }
}

/// [`rasterize_inside`] restricted to the `shape`-sized block of pixels whose
/// top-left corner is `offset` (row, col).
pub(crate) fn rasterize_region(
    contour: &BSplineContour,
    frame: &PolarFrame,
    offset: (usize, usize),
    shape: (usize, usize),
    angles: Option<&AngleTable>,
) -> Mask {
    let (lo, hi) = contour.radius_bounds();
    let (lo2, hi2) = (lo * lo, hi * hi);
    let [ox, oy] = frame.origin;
    let bounds = contour.interval_bounds();
    let classify = |row: usize, col: usize| {
        let dx = col as f64 - ox;
        let dy = row as f64 - oy;
        let r2 = dx * dx + dy * dy;
        if r2 < lo2 {
            return true;
        }
        if r2 >= hi2 {
            return false;
        }
        let (theta, t) = angles.and_then(|a| a.get(row, col)).unwrap_or_else(|| {
            let theta = dy.atan2(dx);
            (theta, contour.knot_position(theta))
        });
        let j = (t as usize).min(bounds.len() - 1);
        let (lo, hi) = bounds[j];
        let r = r2.sqrt();
        if r < lo {
            true
        } else if r >= hi {
            false
        } else {
            r < contour.evaluate(theta)
        }
    };
    // Block columns whose pixel centers lie within `half` of the origin
    // column, widened (`pad > 0`) or narrowed (`pad < 0`) by `pad` pixels.
    let span = |half: f64, pad: f64| -> (usize, usize) {
        let clip = |v: f64| v.clamp(0.0, shape.1 as f64) as usize;
        let a = (ox - half - pad).ceil() - offset.1 as f64;
        let b = (ox + half + pad).floor() + 1.0 - offset.1 as f64;
        (clip(a), clip(b).max(clip(a)))
    };
    let mut mask = Mask::from_elem(shape, false);
    mask.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(row, mut line)| {
            let dy = (row + offset.0) as f64 - oy;
            let dy2 = dy * dy;
            if dy2 >= hi2 {
                return;
            }
            let (a, b) = span((hi2 - dy2).sqrt(), 1.0);
            let (ia, ib) = if dy2 < lo2 {
                let (ia, ib) = span((lo2 - dy2).sqrt(), -1.0);
                (ia.clamp(a, b), ib.clamp(a, b).max(ia.clamp(a, b)))
            } else {
                (b, b)
            };
            for col in (a..ia).chain(ib..b) {
                line[col] = classify(row + offset.0, col + offset.1);
            }
            line.slice_mut(ndarray::s![ia..ib]).fill(true);
        });
    mask
}

/// Pixels within Euclidean distance `radius` of a point, clipped to the
/// image, stored as one column span per row.
#[derive(Clone, Debug)]
pub struct Neighborhood {
    spans: Vec<RowSpan>,
}

/// Inclusive column range `[start, end]` on one row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowSpan {
    pub row: usize,
    pub start: usize,
    pub end: usize,
}

impl Neighborhood {
    pub fn spans(&self) -> &[RowSpan] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.spans.iter().map(|s| s.end - s.start + 1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// `(row, col)` pairs in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.spans
            .iter()
            .flat_map(|s| (s.start..=s.end).map(move |c| (s.row, c)))
    }
}

pub fn local_neighborhood(point: [f64; 2], radius: f64, shape: (usize, usize)) -> Neighborhood {
    let (rows, cols) = shape;
    let [cx, cy] = point;
    let mut spans = Vec::new();
    if rows == 0 || cols == 0 || radius <= 0.0 {
        return Neighborhood { spans };
    }
    let r2 = radius * radius;
    let first = (cy - radius).ceil().max(0.0);
    let last = (cy + radius).floor().min(rows as f64 - 1.0);
    if first > last {
        return Neighborhood { spans };
    }
    for row in first as usize..=last as usize {
        let dy = row as f64 - cy;
        let rem = r2 - dy * dy;
        if rem < 0.0 {
            continue;
        }
        let half = rem.sqrt();
        let start = (cx - half).ceil().max(0.0);
        let end = (cx + half).floor().min(cols as f64 - 1.0);
        if start <= end {
            spans.push(RowSpan {
                row,
                start: start as usize,
                end: end as usize,
            });
        }
    }
    Neighborhood { spans }
}

/// Bilinear interpolation at `(x, y)`, clamped to the image border.
pub fn bilinear(image: &Image, x: f64, y: f64) -> f64 {
    let (rows, cols) = image.dim();
    let x = x.clamp(0.0, cols as f64 - 1.0);
    let y = y.clamp(0.0, rows as f64 - 1.0);
    let x0 = (x.floor() as usize).min(cols.saturating_sub(2));
    let y0 = (y.floor() as usize).min(rows.saturating_sub(2));
    let x1 = (x0 + 1).min(cols - 1);
    let y1 = (y0 + 1).min(rows - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let top = image[[y0, x0]] * (1.0 - fx) + image[[y0, x1]] * fx;
    let bottom = image[[y1, x0]] * (1.0 - fx) + image[[y1, x1]] * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Length of the image diagonal, the divergence limit for contour radii.
pub fn diagonal(shape: (usize, usize)) -> f64 {
    (shape.0 as f64).hypot(shape.1 as f64)
}
