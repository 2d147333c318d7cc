//! Synthetic star-convex phantoms standing in for an image plus an imperfect
//! network probability map.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{BeasError, Result};
use crate::geometry::{Image, Mask};
use crate::pipeline::ProbabilityMap;

/// How far the probability map departs from the truth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corruption {
    /// Amplitude of high-frequency radial boundary noise, pixels.
    pub jitter_px: f64,
    pub notches: usize,
    pub notch_depth_px: f64,
    /// Angular width of each notch, radians.
    pub notch_width: f64,
    /// Fraction of pixels whose probability is flipped `p -> 1 - p`.
    pub flip_fraction: f64,
}

impl Corruption {
    pub const NONE: Corruption = Corruption {
        jitter_px: 0.0,
        notches: 0,
        notch_depth_px: 0.0,
        notch_width: 0.0,
        flip_fraction: 0.0,
    };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    /// Side length of the square image.
    pub size: usize,
    pub inside_level: f64,
    pub outside_level: f64,
    pub noise_sigma: f64,
    /// Peak-to-peak amplitude of the linear illumination ramp.
    pub bias: f64,
    pub blur_sigma: f64,
    /// Corruption parameters indexed by corruption level.
    pub levels: Vec<Corruption>,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            size: 128,
            inside_level: 0.65,
            outside_level: 0.35,
            noise_sigma: 0.06,
            bias: 0.1,
            blur_sigma: 1.0,
            levels: vec![
                Corruption::NONE,
                Corruption {
                    jitter_px: 1.5,
                    notches: 1,
                    notch_depth_px: 3.0,
                    notch_width: 0.25,
                    flip_fraction: 0.10,
                },
                Corruption {
                    jitter_px: 3.0,
                    notches: 2,
                    notch_depth_px: 5.0,
                    notch_width: 0.3,
                    flip_fraction: 0.20,
                },
            ],
        }
    }
}

impl PhantomConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size < 32 {
            return Err(BeasError::Config(format!(
                "phantom size {} < 32",
                self.size
            )));
        }
        if self.levels.is_empty() {
            return Err(BeasError::Config("no phantom corruption levels".into()));
        }
        for c in &self.levels {
            if !(0.0..=1.0).contains(&c.flip_fraction) {
                return Err(BeasError::Config(format!(
                    "flip fraction {} outside [0, 1]",
                    c.flip_fraction
                )));
            }
        }
        Ok(())
    }

    pub fn level(&self, level: usize) -> Result<Corruption> {
        self.levels.get(level).copied().ok_or_else(|| {
            BeasError::Config(format!(
                "corruption level {level} not configured (0..{})",
                self.levels.len()
            ))
        })
    }
}

/// Low-order Fourier radius profile about an origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarShape {
    pub origin: [f64; 2],
    pub base_radius: f64,
    /// `(harmonic, amplitude as a fraction of base radius, phase)`
    pub harmonics: Vec<(u32, f64, f64)>,
}

impl StarShape {
    pub fn radius(&self, theta: f64) -> f64 {
        let mut r = 1.0;
        for &(j, a, phase) in &self.harmonics {
            r += a * (j as f64 * theta + phase).cos();
        }
        self.base_radius * r
    }

    pub fn min_radius(&self) -> f64 {
        (0..3600)
            .map(|i| self.radius(TAU * i as f64 / 3600.0))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mask(&self, shape: (usize, usize)) -> Mask {
        radial_mask(shape, self.origin, |t| self.radius(t))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Phantom {
    pub image: Image,
    pub prob_map: ProbabilityMap,
    pub truth: Mask,
    pub shape: StarShape,
}

/// Draws the star shape for a seed without rendering anything.
pub fn star_shape(seed: u64, config: &PhantomConfig) -> StarShape {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shape_from_rng(&mut rng, config.size as f64)
}

fn shape_from_rng(rng: &mut ChaCha8Rng, size: f64) -> StarShape {
    let center = size / 2.0;
    let origin = [
        center + rng.random_range(-0.08..0.08) * size,
        center + rng.random_range(-0.08..0.08) * size,
    ];
    let base_radius = rng.random_range(0.18..0.26) * size;
    let harmonics = (2..=4)
        .map(|j| (j, rng.random_range(-0.1..0.1), rng.random_range(0.0..TAU)))
        .collect();
    StarShape {
        origin,
        base_radius,
        harmonics,
    }
}

/// Renders a phantom at a configured corruption level. Deterministic per
/// seed; pixel values are quantized to 8 bits so they survive file I/O.
pub fn generate_phantom(seed: u64, level: usize, config: &PhantomConfig) -> Result<Phantom> {
    config.validate()?;
    let corruption = config.level(level)?;
    generate_phantom_with(seed, &corruption, config)
}

pub fn generate_phantom_with(
    seed: u64,
    corruption: &Corruption,
    config: &PhantomConfig,
) -> Result<Phantom> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = config.size;
    let dims = (size, size);
    let shape = shape_from_rng(&mut rng, size as f64);
    let truth = shape.mask(dims);

    // intensity image: two levels, illumination ramp, gaussian noise
    let ramp_angle = rng.random_range(0.0..TAU);
    let (rc, rs) = (ramp_angle.cos(), ramp_angle.sin());
    let noise = Normal::new(0.0, config.noise_sigma.max(0.0))
        .map_err(|e| BeasError::Config(e.to_string()))?;
    let mut image = Image::zeros(dims);
    for ((r, c), v) in image.indexed_iter_mut() {
        let base = if truth[[r, c]] {
            config.inside_level
        } else {
            config.outside_level
        };
        let u = ((c as f64 - size as f64 / 2.0) * rc + (r as f64 - size as f64 / 2.0) * rs)
            / size as f64;
        *v = quantize(base + config.bias * u + noise.sample(&mut rng));
    }

    // probability map: corrupted boundary, blurred, then flipped pixels
    let jitter: Vec<(f64, f64, f64)> = (6..=12)
        .map(|j| {
            (
                j as f64,
                rng.random_range(-1.0..1.0),
                rng.random_range(0.0..TAU),
            )
        })
        .collect();
    let jitter_norm: f64 = jitter.iter().map(|h| h.1.abs()).sum::<f64>().max(1e-12);
    let notches: Vec<f64> = (0..corruption.notches)
        .map(|_| rng.random_range(0.0..TAU))
        .collect();
    let corrupted = radial_mask(dims, shape.origin, |t| {
        let mut r = shape.radius(t);
        if corruption.jitter_px > 0.0 {
            let j: f64 = jitter.iter().map(|&(j, a, p)| a * (j * t + p).cos()).sum();
            r += corruption.jitter_px * j / jitter_norm;
        }
        for &center in &notches {
            let d = angular_distance(t, center);
            if d < corruption.notch_width / 2.0 {
                let s = (std::f64::consts::PI * d / corruption.notch_width).cos();
                r -= corruption.notch_depth_px * s * s;
            }
        }
        r
    });
    let soft = gaussian_blur(&corrupted.mapv(|b| b as u8 as f64), config.blur_sigma);
    let mut prob = soft;
    if corruption.flip_fraction > 0.0 {
        for p in prob.iter_mut() {
            if rng.random::<f64>() < corruption.flip_fraction {
                *p = 1.0 - *p;
            }
        }
    }
    prob.mapv_inplace(quantize);
    Ok(Phantom {
        image,
        prob_map: ProbabilityMap::new(prob)?,
        truth,
        shape,
    })
}

/// Binary disk `(x - cx)^2 + (y - cy)^2 < r^2` as a 0/1 image.
pub fn disk_image(shape: (usize, usize), center: [f64; 2], radius: f64) -> Image {
    radial_mask(shape, center, |_| radius).mapv(|b| b as u8 as f64)
}

fn radial_mask(shape: (usize, usize), origin: [f64; 2], radius: impl Fn(f64) -> f64) -> Mask {
    Mask::from_shape_fn(shape, |(r, c)| {
        let dx = c as f64 - origin[0];
        let dy = r as f64 - origin[1];
        dx.hypot(dy) < radius(dy.atan2(dx).rem_euclid(TAU))
    })
}

fn quantize(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Separable gaussian blur with edge clamping.
fn gaussian_blur(image: &Image, sigma: f64) -> Image {
    if sigma <= 0.0 {
        return image.clone();
    }
    let half = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-half..=half)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.iter().map(|k| k / total).collect();
    let (rows, cols) = image.dim();
    let pass = |src: &Image, horizontal: bool| {
        Image::from_shape_fn((rows, cols), |(r, c)| {
            kernel
                .iter()
                .enumerate()
                .map(|(i, k)| {
                    let o = i as isize - half;
                    let v = if horizontal {
                        src[[r, (c as isize + o).clamp(0, cols as isize - 1) as usize]]
                    } else {
                        src[[(r as isize + o).clamp(0, rows as isize - 1) as usize, c]]
                    };
                    k * v
                })
                .sum()
        })
    };
    let h = pass(image, true);
    pass(&h, false)
}
