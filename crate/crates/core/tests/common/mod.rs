//! Reference implementations used as test oracles. Written independently of
//! the library: slow, direct, and easy to check by hand.
#![allow(dead_code)]

use std::f64::consts::TAU;

use beas::geometry::{Image, Mask, PolarFrame};
use beas::region::LocalStats;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 8-point Gauss-Legendre nodes and weights on [-1, 1].
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

pub fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    GL8.iter().map(|&(x, w)| w * f(m + h * x)).sum::<f64>() * h
}

/// Composite Gauss-Legendre over `pieces` equal sub-intervals.
pub fn gauss_composite(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|j| gauss(&f, a + j as f64 * h, a + (j + 1) as f64 * h))
        .sum()
}

/// Centered B-spline by repeated convolution with the unit box:
/// `beta_d(x) = integral of beta_{d-1} over [x - 1/2, x + 1/2]`, each piece
/// integrated exactly between the breakpoints of `beta_{d-1}`.
pub fn convolution_basis(x: f64, d: u8) -> f64 {
    if d == 0 {
        return if (-0.5..0.5).contains(&x) { 1.0 } else { 0.0 };
    }
    let (a, b) = (x - 0.5, x + 0.5);
    // beta_{d-1} is polynomial between these points
    let shift = if (d - 1).is_multiple_of(2) { 0.5 } else { 0.0 };
    let mut cuts = vec![a];
    let mut k = (a - shift).floor() + shift;
    while k < b {
        if k > a {
            cuts.push(k);
        }
        k += 1.0;
    }
    cuts.push(b);
    cuts.windows(2)
        .map(|w| gauss(|t| convolution_basis(t, d - 1), w[0], w[1]))
        .sum()
}

/// Centered B-spline from the truncated-power formula, degrees 1 and up.
pub fn truncated_power_basis(x: f64, d: u8) -> f64 {
    assert!(d >= 1);
    let d = d as i32;
    let mut fact = 1.0;
    for j in 2..=d {
        fact *= j as f64;
    }
    let mut binom = 1.0;
    let mut sum = 0.0;
    for j in 0..=d + 1 {
        let u = x + (d + 1) as f64 / 2.0 - j as f64;
        if u > 0.0 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * binom * u.powi(d);
        }
        binom = binom * (d + 1 - j) as f64 / (j + 1) as f64;
    }
    sum / fact
}

fn oracle_basis(x: f64, d: u8) -> f64 {
    if d == 0 {
        convolution_basis(x, 0)
    } else if x.abs() >= (d as f64 + 1.0) / 2.0 {
        // the power sum cancels to zero out here, but only up to rounding
        0.0
    } else {
        truncated_power_basis(x, d)
    }
}

/// Periodized basis: sum over every period image of the knot.
pub fn periodic_basis(t: f64, k: usize, n: usize, d: u8) -> f64 {
    (-3..=3)
        .map(|j| oracle_basis(t - k as f64 - (j * n as i64) as f64, d))
        .sum()
}

/// `psi(theta)` by summing over every coefficient (no sparsity).
pub fn dense_eval(coefs: &[f64], d: u8, theta: f64) -> f64 {
    let n = coefs.len();
    let t = theta * n as f64 / TAU;
    (0..n).map(|k| coefs[k] * periodic_basis(t, k, n, d)).sum()
}

/// `sum_i g_i beta(t_i - k) dtheta` by double loop over samples and knots.
pub fn dense_gradient(g: &[f64], thetas: &[f64], n: usize, d: u8) -> Vec<f64> {
    let dtheta = TAU / thetas.len() as f64;
    (0..n)
        .map(|k| {
            g.iter()
                .zip(thetas)
                .map(|(&gi, &th)| gi * periodic_basis(th * n as f64 / TAU, k, n, d) * dtheta)
                .sum()
        })
        .collect()
}

/// Inside/outside statistics by scanning every pixel of the image.
pub fn scan_stats(image: &Image, mask: &Mask, p: [f64; 2], radius: f64) -> LocalStats {
    let (mut si, mut so, mut ni, mut no) = (0.0, 0.0, 0usize, 0usize);
    for ((r, c), &v) in image.indexed_iter() {
        let (dx, dy) = (c as f64 - p[0], r as f64 - p[1]);
        if dx * dx + dy * dy <= radius * radius {
            if mask[[r, c]] {
                si += v;
                ni += 1;
            } else {
                so += v;
                no += 1;
            }
        }
    }
    LocalStats {
        inside_mean: if ni > 0 { si / ni as f64 } else { 0.0 },
        outside_mean: if no > 0 { so / no as f64 } else { 0.0 },
        inside_area: ni,
        outside_area: no,
        intensity: bilinear_oracle(image, p[0], p[1]),
    }
}

pub fn feature_oracle(s: &LocalStats, intensity: f64) -> f64 {
    if s.inside_area == 0 || s.outside_area == 0 {
        return 0.0;
    }
    (intensity - s.inside_mean).powi(2) / s.inside_area as f64
        - (intensity - s.outside_mean).powi(2) / s.outside_area as f64
}

/// Bilinear interpolation with coordinates clamped to the pixel grid.
pub fn bilinear_oracle(image: &Image, x: f64, y: f64) -> f64 {
    let (rows, cols) = image.dim();
    let x = x.clamp(0.0, (cols - 1) as f64);
    let y = y.clamp(0.0, (rows - 1) as f64);
    let (c0, r0) = (x.floor() as usize, y.floor() as usize);
    let (c1, r1) = ((c0 + 1).min(cols - 1), (r0 + 1).min(rows - 1));
    let (fx, fy) = (x - c0 as f64, y - r0 as f64);
    let top = image[[r0, c0]] * (1.0 - fx) + image[[r0, c1]] * fx;
    let bottom = image[[r1, c0]] * (1.0 - fx) + image[[r1, c1]] * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Mask of pixels strictly inside `psi`, by direct polar test.
pub fn polar_mask(coefs: &[f64], d: u8, frame: &PolarFrame, shape: (usize, usize)) -> Mask {
    Mask::from_shape_fn(shape, |(r, c)| {
        let (dx, dy) = (c as f64 - frame.origin[0], r as f64 - frame.origin[1]);
        let rho = dx.hypot(dy);
        let theta = dy.atan2(dx).rem_euclid(TAU);
        rho < dense_eval(coefs, d, theta).max(1.0)
    })
}

/// Change of the frozen-statistics region energy when the radius along ray
/// `i` moves from `from[i]` to `to[i]`:
/// `sum_i dtheta * integral_{from}^{to} g_i(I(r)) dr`.
pub fn frozen_energy_change(
    image: &Image,
    frame: &PolarFrame,
    stats: &[LocalStats],
    thetas: &[f64],
    from: &[f64],
    to: &[f64],
) -> f64 {
    let dtheta = TAU / thetas.len() as f64;
    let mut total = 0.0;
    for i in 0..thetas.len() {
        let (c, s) = (thetas[i].cos(), thetas[i].sin());
        let f = |r: f64| {
            let x = frame.origin[0] + r * c;
            let y = frame.origin[1] + r * s;
            feature_oracle(&stats[i], bilinear_oracle(image, x, y))
        };
        let pieces = ((to[i] - from[i]).abs() * 8.0).ceil().max(1.0) as usize;
        total += dtheta * gauss_composite(f, from[i], to[i], pieces);
    }
    total
}

/// Binary disk image, 1 inside `(x - cx)^2 + (y - cy)^2 < r^2`.
pub fn disk(shape: (usize, usize), center: [f64; 2], radius: f64) -> Image {
    Image::from_shape_fn(shape, |(r, c)| {
        let (dx, dy) = (c as f64 - center[0], r as f64 - center[1]);
        ((dx * dx + dy * dy) < radius * radius) as u8 as f64
    })
}

/// Smooth random image: a sum of Gaussian bumps.
pub fn smooth_random_image(seed: u64, shape: (usize, usize)) -> Image {
    let mut rng = rng(seed);
    let bumps: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.random_range(0.0..shape.1 as f64),
                rng.random_range(0.0..shape.0 as f64),
                rng.random_range(4.0..12.0),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    Image::from_shape_fn(shape, |(r, c)| {
        0.5 + bumps
            .iter()
            .map(|&(x, y, s, a)| {
                let d2 = (c as f64 - x).powi(2) + (r as f64 - y).powi(2);
                0.3 * a * (-d2 / (2.0 * s * s)).exp()
            })
            .sum::<f64>()
    })
}

pub fn sample_thetas(m: usize) -> Vec<f64> {
    (0..m).map(|i| TAU * i as f64 / m as f64).collect()
}
