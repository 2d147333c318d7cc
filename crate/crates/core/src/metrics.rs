//! Smoothness measures for comparing fitted contours with raw masks.

use std::f64::consts::TAU;

use crate::bspline::BSplineContour;
use crate::geometry::{Mask, PolarFrame};

/// Sum of absolute periodic second differences, `sum_k |r[k+1] - 2 r[k] + r[k-1]|`.
pub fn curvature_variation(radii: &[f64]) -> f64 {
    let n = radii.len();
    if n < 3 {
        return 0.0;
    }
    (0..n)
        .map(|k| (radii[(k + 1) % n] - 2.0 * radii[k] + radii[(k + n - 1) % n]).abs())
        .sum()
}

/// Curvature variation of a contour's radii at its knot angles.
pub fn contour_curvature_variation(contour: &BSplineContour) -> f64 {
    curvature_variation(&contour.knot_radii())
}

/// Line segment in pixel coordinates `(x, y)`.
pub type Segment = [[f64; 2]; 2];

/// Iso-line segments of a binary mask at level 1/2 by marching squares.
/// Cell corners are pixel centers; edge crossings sit at edge midpoints.
pub fn marching_squares(mask: &Mask) -> Vec<Segment> {
    let (rows, cols) = mask.dim();
    let mut out = Vec::new();
    if rows < 2 || cols < 2 {
        return out;
    }
    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            let tl = mask[[r, c]];
            let tr = mask[[r, c + 1]];
            let br = mask[[r + 1, c + 1]];
            let bl = mask[[r + 1, c]];
            let case = (tl as u8) << 3 | (tr as u8) << 2 | (br as u8) << 1 | bl as u8;
            let (x, y) = (c as f64, r as f64);
            let top = [x + 0.5, y];
            let right = [x + 1.0, y + 0.5];
            let bottom = [x + 0.5, y + 1.0];
            let left = [x, y + 0.5];
            match case {
                0 | 15 => {}
                1 | 14 => out.push([left, bottom]),
                2 | 13 => out.push([bottom, right]),
                3 | 12 => out.push([left, right]),
                4 | 11 => out.push([top, right]),
                6 | 9 => out.push([top, bottom]),
                7 | 8 => out.push([left, top]),
                5 => {
                    out.push([left, top]);
                    out.push([bottom, right]);
                }
                10 => {
                    out.push([top, right]);
                    out.push([left, bottom]);
                }
                _ => unreachable!(),
            }
        }
    }
    out
}

/// Radius of the outermost segment crossing along each ray, at `count`
/// evenly spaced angles. Rays that cross nothing report 0.
pub fn polygon_radius_profile(segments: &[Segment], frame: &PolarFrame, count: usize) -> Vec<f64> {
    let [ox, oy] = frame.origin;
    (0..count)
        .map(|j| {
            let theta = TAU * j as f64 / count as f64;
            let (dx, dy) = (theta.cos(), theta.sin());
            segments
                .iter()
                .filter_map(|&[a, b]| {
                    // solve o + t d = a + s (b - a)
                    let ex = b[0] - a[0];
                    let ey = b[1] - a[1];
                    let den = dx * ey - dy * ex;
                    if den.abs() < 1e-12 {
                        return None;
                    }
                    let ax = a[0] - ox;
                    let ay = a[1] - oy;
                    let t = (ax * ey - ay * ex) / den;
                    let s = (ax * dy - ay * dx) / den;
                    (t >= 0.0 && (0.0..=1.0).contains(&s)).then_some(t)
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Curvature variation of the marching-squares polygon of a mask, sampled
/// at the knot angles of an `n_knots` contour.
pub fn mask_curvature_variation(mask: &Mask, frame: &PolarFrame, n_knots: usize) -> f64 {
    let segs = marching_squares(mask);
    curvature_variation(&polygon_radius_profile(&segs, frame, n_knots))
}
