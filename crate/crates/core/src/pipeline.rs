//! Two-stage pipeline: frame initialization and smoothing from a probability
//! map, then an interactive refinement session on the image.

use std::f64::consts::TAU;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::bspline::BSplineContour;
use crate::config::Config;
use crate::error::{BeasError, Result};
use crate::geometry::{diagonal, rasterize_inside, Image, Mask, PolarFrame};
use crate::interaction::{check_anchor_radius, AnchorSet, EnergyWeights};
use crate::region::{evolve, EvolveParams};

/// Per-pixel foreground probability, all values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Image", into = "Image")]
pub struct ProbabilityMap(Image);

impl ProbabilityMap {
    pub fn new(values: Image) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(BeasError::InputRange(format!(
                "probability {bad} outside [0, 1]"
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &Image {
        &self.0
    }

    pub fn dim(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn threshold(&self, level: f64) -> Mask {
        self.0.mapv(|p| p >= level)
    }
}

impl TryFrom<Image> for ProbabilityMap {
    type Error = BeasError;

    fn try_from(values: Image) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ProbabilityMap> for Image {
    fn from(p: ProbabilityMap) -> Self {
        p.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameInit {
    pub frame: PolarFrame,
    /// The thresholded map had more than one connected component, so the
    /// origin is the centroid of all of them together.
    pub multiple_components: bool,
}

/// Components smaller than this fraction of the largest one are treated as
/// speckle and ignored when placing the frame.
pub const SPECKLE_FRACTION: f64 = 0.02;

/// Origin at the probability-weighted centroid of the thresholded map; the
/// initial radius is the mean distance to the last inside pixel along
/// `rays` evenly spaced rays. Speckle components are dropped first.
pub fn initialize_frame(prob: &ProbabilityMap, threshold: f64, rays: usize) -> Result<FrameInit> {
    let raw = prob.threshold(threshold);
    let (labels, sizes) = label_components(&raw);
    let largest = sizes.iter().copied().max().unwrap_or(0);
    if largest == 0 {
        return Err(BeasError::Initialization(format!(
            "no pixels at or above threshold {threshold}"
        )));
    }
    let keep: Vec<bool> = sizes
        .iter()
        .map(|&n| n as f64 >= SPECKLE_FRACTION * largest as f64)
        .collect();
    let mask = labels.mapv(|l| l > 0 && keep[l as usize - 1]);

    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for ((r, c), &p) in prob.values().indexed_iter() {
        if mask[[r, c]] {
            sx += p * c as f64;
            sy += p * r as f64;
            sw += p;
        }
    }
    if sw <= 0.0 {
        return Err(BeasError::Initialization(
            "thresholded map carries no probability mass".into(),
        ));
    }
    let origin = [sx / sw, sy / sw];
    let (rows, cols) = mask.dim();
    let step = 0.25;
    let mut total = 0.0;
    for j in 0..rays {
        let theta = TAU * j as f64 / rays as f64;
        let (dx, dy) = (theta.cos(), theta.sin());
        let mut last = 0.0;
        let mut t = 0.0;
        loop {
            let x = (origin[0] + t * dx).round();
            let y = (origin[1] + t * dy).round();
            if x < 0.0 || y < 0.0 || x >= cols as f64 || y >= rows as f64 {
                break;
            }
            if mask[[y as usize, x as usize]] {
                last = t;
            }
            t += step;
        }
        total += last;
    }
    let radius = total / rays as f64;
    if radius <= 0.0 {
        return Err(BeasError::Initialization(
            "thresholded map has no extent around its centroid".into(),
        ));
    }
    let frame = PolarFrame::new(origin, radius, mask.dim())
        .map_err(|e| BeasError::Initialization(e.to_string()))?;
    Ok(FrameInit {
        frame,
        multiple_components: keep.iter().filter(|&&k| k).count() > 1,
    })
}

/// 4-connected component labels (0 = background, components from 1) and
/// the pixel count of each component.
pub fn label_components(mask: &Mask) -> (Array2<u32>, Vec<usize>) {
    let (rows, cols) = mask.dim();
    let mut labels = Array2::<u32>::zeros(mask.dim());
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in mask.indexed_iter().filter(|(_, &v)| v).map(|(i, _)| i) {
        if labels[start] != 0 {
            continue;
        }
        sizes.push(0usize);
        let label = sizes.len() as u32;
        labels[start] = label;
        stack.push(start);
        while let Some((r, c)) = stack.pop() {
            sizes[label as usize - 1] += 1;
            let neighbors = [
                (r.wrapping_sub(1), c),
                (r + 1, c),
                (r, c.wrapping_sub(1)),
                (r, c + 1),
            ];
            for (nr, nc) in neighbors {
                if nr < rows && nc < cols && mask[[nr, nc]] && labels[[nr, nc]] == 0 {
                    labels[[nr, nc]] = label;
                    stack.push((nr, nc));
                }
            }
        }
    }
    (labels, sizes)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Smoothed {
    pub contour: BSplineContour,
    pub frame: PolarFrame,
    pub iterations: usize,
    pub converged: bool,
    pub multiple_components: bool,
}

/// Stage one: fit a contour to the probability map alone.
pub fn smooth(prob: &ProbabilityMap, config: &Config) -> Result<Smoothed> {
    config.validate()?;
    let init = initialize_frame(prob, config.threshold, config.frame_rays)?;
    let start = BSplineContour::with_scale(
        vec![init.frame.initial_radius; config.knots],
        config.degree,
        config.scale,
    )?;
    let out = evolve(
        &start,
        &init.frame,
        prob.values(),
        &config.smoothing_params(),
    )?;
    Ok(Smoothed {
        contour: out.contour,
        frame: init.frame,
        iterations: out.iterations,
        converged: out.converged,
        multiple_components: init.multiple_components,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Smoothing,
    Interactive,
}

/// How stage one went, kept for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageOne {
    pub iterations: usize,
    pub converged: bool,
    pub multiple_components: bool,
}

/// Mutable state of one editing session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineSession {
    image: Image,
    prob_map: ProbabilityMap,
    frame: PolarFrame,
    contour: BSplineContour,
    smoothed: BSplineContour,
    anchors: AnchorSet,
    weights: EnergyWeights,
    stage: Stage,
    params: EvolveParams,
    stage_one: StageOne,
}

/// Runs stage one and returns a session ready for interactive editing.
pub fn open_session(
    image: Image,
    prob_map: ProbabilityMap,
    config: &Config,
) -> Result<RefineSession> {
    if image.dim() != prob_map.dim() {
        return Err(BeasError::shape(prob_map.dim(), image.dim()));
    }
    let s = smooth(&prob_map, config)?;
    Ok(RefineSession {
        image,
        prob_map,
        frame: s.frame,
        contour: s.contour.clone(),
        smoothed: s.contour,
        anchors: AnchorSet::default(),
        weights: config.weights,
        stage: Stage::Interactive,
        params: config.interactive_params(),
        stage_one: StageOne {
            iterations: s.iterations,
            converged: s.converged,
            multiple_components: s.multiple_components,
        },
    })
}

impl RefineSession {
    pub fn image(&self) -> &Image {
        &self.image
    }

    pub fn prob_map(&self) -> &ProbabilityMap {
        &self.prob_map
    }

    pub fn frame(&self) -> &PolarFrame {
        &self.frame
    }

    pub fn contour(&self) -> &BSplineContour {
        &self.contour
    }

    /// The stage-one contour the session started from.
    pub fn smoothed(&self) -> &BSplineContour {
        &self.smoothed
    }

    pub fn anchors(&self) -> &AnchorSet {
        &self.anchors
    }

    pub fn weights(&self) -> &EnergyWeights {
        &self.weights
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn stage_one(&self) -> StageOne {
        self.stage_one
    }

    pub fn interactive_params(&self) -> EvolveParams {
        self.params
    }

    pub fn shape(&self) -> (usize, usize) {
        self.image.dim()
    }

    pub(crate) fn set_contour(&mut self, contour: BSplineContour) {
        self.contour = contour;
    }

    pub fn set_weights(&mut self, weights: EnergyWeights) -> Result<()> {
        weights.validate()?;
        self.weights = weights;
        Ok(())
    }

    /// Polar coordinates of an image point, rejecting points outside the
    /// image or too close to the origin.
    pub fn anchor_polar(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let (rows, cols) = self.shape();
        if !(x >= 0.0 && y >= 0.0 && x <= cols as f64 - 1.0 && y <= rows as f64 - 1.0) {
            return Err(BeasError::InputRange(format!(
                "anchor ({x}, {y}) outside the {cols}x{rows} image"
            )));
        }
        let (rho, theta) = self.frame.to_polar(x, y);
        check_anchor_radius(rho, diagonal(self.shape()))?;
        Ok((rho, theta))
    }

    /// Adds an anchor at image coordinates. Returns its id and the id of any
    /// anchor it replaced.
    pub fn add_anchor(&mut self, x: f64, y: f64) -> Result<(u64, Option<u64>)> {
        let (rho, theta) = self.anchor_polar(x, y)?;
        Ok(self.anchors.add(rho, theta, self.contour.n_knots()))
    }

    pub fn add_anchor_polar(&mut self, rho: f64, theta: f64) -> Result<(u64, Option<u64>)> {
        check_anchor_radius(rho, diagonal(self.shape()))?;
        Ok(self.anchors.add(rho, theta, self.contour.n_knots()))
    }

    pub fn move_anchor(&mut self, id: u64, x: f64, y: f64) -> Result<()> {
        if self.anchors.get(id).is_none() {
            return Err(BeasError::AnchorNotFound(id));
        }
        let (rho, theta) = self.anchor_polar(x, y)?;
        self.anchors.move_to(id, rho, theta)
    }

    pub fn remove_anchor(&mut self, id: u64) -> Result<()> {
        self.anchors.remove(id).map(|_| ())
    }

    /// Drops all anchors and returns to the stage-one contour.
    pub fn reset(&mut self) {
        self.anchors.clear();
        self.contour = self.smoothed.clone();
    }

    pub fn mask(&self) -> Mask {
        rasterize_inside(&self.contour, &self.frame, self.shape())
    }

    /// Checks invariants after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.image.dim() != self.prob_map.dim() {
            return Err(BeasError::shape(self.prob_map.dim(), self.image.dim()));
        }
        self.frame.validate(self.shape())?;
        self.weights.validate()?;
        self.params.validate()
    }
}

/// Dice overlap `2|A ∩ B| / (|A| + |B|)`; two empty masks score 1.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(BeasError::shape(a.dim(), b.dim()));
    }
    let (mut both, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.iter().zip(b.iter()) {
        both += (x && y) as usize;
        na += x as usize;
        nb += y as usize;
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}
