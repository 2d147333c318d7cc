//! Normalized coefficient descent shared by batch evolution and interactive
//! refinement.
//!
//! Each iteration freezes the window statistics of the current contour,
//! builds the compound gradient, and moves the coefficients by
//! `-lambda * grad / (max|grad| + eps)`. The move is accepted only if it
//! lowers the energy with the statistics held fixed; otherwise `lambda` is
//! halved. With frozen statistics the energy change between two contours is
//! the integral of the feature along each ray between the old and new
//! radius, so a trial costs one pass over the samples.

use rayon::prelude::*;

use crate::bspline::BSplineContour;
use crate::error::{BeasError, Result};
use crate::geometry::{
    bilinear, diagonal, rasterize_region, sample_contour, AngleTable, Image, PolarFrame,
    SampledContour,
};
use crate::interaction::{anchor_energy, anchor_gradient, AnchorPoint};
use crate::region::{
    energy_gradient, EnergyGradient, EvolveOutcome, EvolveParams, LocalStats, RowPrefix,
    StatsTable, Window,
};

const NORMALIZATION_EPS: f64 = 1e-12;
/// Padding in pixels of the cached angle table around the starting window.
const ANGLE_MARGIN: f64 = 16.0;

/// One weighted localized-region energy term.
pub(crate) struct Term<'a> {
    image: &'a Image,
    weight: f64,
    intensity: RowPrefix,
}

impl<'a> Term<'a> {
    pub(crate) fn new(image: &'a Image, weight: f64) -> Self {
        let intensity = RowPrefix::from_fn(image.dim(), |r, c| image[[r, c]]);
        Self {
            image,
            weight,
            intensity,
        }
    }
}

pub(crate) struct DescentProblem<'a> {
    frame: PolarFrame,
    shape: (usize, usize),
    params: EvolveParams,
    terms: Vec<Term<'a>>,
    anchors: &'a [AnchorPoint],
    anchor_weight: f64,
}

/// Frozen state of one iteration.
pub(crate) struct Linearization {
    samples: SampledContour,
    /// Window statistics per term, `None` for terms with zero weight.
    stats: Vec<Option<Vec<LocalStats>>>,
    pub(crate) gradient: EnergyGradient,
}

pub(crate) struct Iteration {
    pub(crate) contour: BSplineContour,
    pub(crate) displacement: f64,
    pub(crate) converged: bool,
}

impl<'a> DescentProblem<'a> {
    pub(crate) fn new(
        frame: PolarFrame,
        shape: (usize, usize),
        params: EvolveParams,
        terms: Vec<Term<'a>>,
    ) -> Self {
        Self {
            frame,
            shape,
            params,
            terms,
            anchors: &[],
            anchor_weight: 0.0,
        }
    }

    pub(crate) fn with_anchors(mut self, anchors: &'a [AnchorPoint], weight: f64) -> Self {
        self.anchors = anchors;
        self.anchor_weight = weight;
        self
    }

    pub(crate) fn linearize(
        &self,
        contour: &BSplineContour,
        angles: Option<&AngleTable>,
    ) -> Result<Linearization> {
        let n = contour.n_knots();
        let samples = sample_contour(contour, &self.frame, self.params.samples_per_knot * n)?;
        let mut gradient = EnergyGradient::zeros(n);
        let mut stats = Vec::with_capacity(self.terms.len());
        if self.terms.iter().any(|t| t.weight != 0.0) {
            let window = Window::around(&samples.points, self.params.radius, self.shape);
            let mask = rasterize_region(
                contour,
                &self.frame,
                (window.rows.0, window.cols.0),
                window.dim(),
                angles,
            );
            let count = RowPrefix::over(window, |r, c| {
                mask[[r - window.rows.0, c - window.cols.0]] as u8 as f64
            });
            for term in &self.terms {
                if term.weight == 0.0 {
                    stats.push(None);
                    continue;
                }
                let table = StatsTable::new(term.image, &term.intensity, &mask, window, &count);
                let s = table.stats_along(&samples, self.params.radius);
                let g: Vec<f64> = s.iter().map(crate::region::yezzi_feature).collect();
                gradient.add_scaled(&energy_gradient(&g, contour, &samples)?, term.weight);
                stats.push(Some(s));
            }
        } else {
            stats.extend(self.terms.iter().map(|_| None));
        }
        if self.anchor_weight != 0.0 && !self.anchors.is_empty() {
            gradient.add_scaled(&anchor_gradient(contour, self.anchors), self.anchor_weight);
        }
        Ok(Linearization {
            samples,
            stats,
            gradient,
        })
    }

    /// Energy change from `current` to `trial` with the statistics of `lin`
    /// held fixed.
    fn energy_change(
        &self,
        lin: &Linearization,
        current: &BSplineContour,
        trial: &BSplineContour,
    ) -> f64 {
        let dtheta = lin.samples.spacing();
        let new_radii: Vec<f64> = lin
            .samples
            .thetas
            .iter()
            .map(|&t| trial.evaluate(t))
            .collect();
        let mut change = 0.0;
        for (term, stats) in self.terms.iter().zip(&lin.stats) {
            let Some(stats) = stats else { continue };
            let per_sample: Vec<f64> = (0..lin.samples.len())
                .into_par_iter()
                .map(|i| {
                    let (a, b) = (lin.samples.radii[i], new_radii[i]);
                    if a == b || stats[i].is_degenerate() {
                        return 0.0;
                    }
                    let theta = lin.samples.thetas[i];
                    let (cos, sin) = (theta.cos(), theta.sin());
                    let f = |r: f64| {
                        let x = self.frame.origin[0] + r * cos;
                        let y = self.frame.origin[1] + r * sin;
                        stats[i].feature_at(bilinear(term.image, x, y))
                    };
                    simpson(f, a, b)
                })
                .collect();
            change += term.weight * dtheta * per_sample.iter().sum::<f64>();
        }
        if self.anchor_weight != 0.0 && !self.anchors.is_empty() {
            change += self.anchor_weight
                * (anchor_energy(trial, self.anchors) - anchor_energy(current, self.anchors));
        }
        change
    }

    pub(crate) fn iterate(
        &self,
        contour: &BSplineContour,
        angles: Option<&AngleTable>,
    ) -> Result<Iteration> {
        let lin = self.linearize(contour, angles)?;
        let scale = lin.gradient.max_abs();
        if scale == 0.0 {
            return Ok(Iteration {
                contour: contour.clone(),
                displacement: 0.0,
                converged: true,
            });
        }
        let direction: Vec<f64> = lin
            .gradient
            .values()
            .iter()
            .map(|g| -g / (scale + NORMALIZATION_EPS))
            .collect();
        let before = contour.knot_radii();
        let limit = diagonal(self.shape);
        let mut step = self.params.step;
        loop {
            let trial = contour.displaced(&direction, step);
            let displacement = trial
                .knot_radii()
                .iter()
                .zip(&before)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if self.energy_change(&lin, contour, &trial) < 0.0 {
                let radius = trial.radius_bounds().1;
                if radius > limit {
                    return Err(BeasError::Divergence { radius, limit });
                }
                return Ok(Iteration {
                    contour: trial,
                    displacement,
                    converged: displacement < self.params.tol,
                });
            }
            if displacement < self.params.tol {
                return Ok(Iteration {
                    contour: contour.clone(),
                    displacement: 0.0,
                    converged: true,
                });
            }
            step *= 0.5;
        }
    }

    /// Pixel angles over the windows the contour can reach within one run,
    /// with a margin for movement. Pixels outside fall back to `atan2`.
    fn angle_table(&self, contour: &BSplineContour) -> Result<Option<AngleTable>> {
        if self.terms.iter().all(|t| t.weight == 0.0) {
            return Ok(None);
        }
        let samples = sample_contour(
            contour,
            &self.frame,
            self.params.samples_per_knot * contour.n_knots(),
        )?;
        let window = Window::around(
            &samples.points,
            self.params.radius + ANGLE_MARGIN,
            self.shape,
        );
        Ok(Some(AngleTable::new(
            contour,
            &self.frame,
            (window.rows.0, window.cols.0),
            window.dim(),
        )))
    }

    pub(crate) fn run(&self, contour: &BSplineContour, max_iters: usize) -> Result<EvolveOutcome> {
        let angles = self.angle_table(contour)?;
        let mut current = contour.clone();
        let mut last_displacement = 0.0;
        for it in 1..=max_iters {
            let step = self.iterate(&current, angles.as_ref())?;
            current = step.contour;
            last_displacement = step.displacement;
            if step.converged {
                return Ok(EvolveOutcome {
                    contour: current,
                    iterations: it,
                    converged: true,
                    last_displacement,
                });
            }
        }
        Ok(EvolveOutcome {
            contour: current,
            iterations: max_iters,
            converged: false,
            last_displacement,
        })
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}
