//! Batch runs over synthetic phantoms and their JSON report.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::Result;
use crate::geometry::rasterize_inside;
use crate::metrics::{contour_curvature_variation, mask_curvature_variation};
use crate::phantom::generate_phantom;
use crate::pipeline::{dice, smooth};

/// Bumped on any breaking change to the report layout.
pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool_version: String,
    /// Seconds since the Unix epoch when the run finished.
    pub created_unix: u64,
    pub corruption: usize,
    pub seeds: usize,
    pub image_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub seed: u64,
    /// Dice of the thresholded probability map against the truth.
    pub dice_before: f64,
    /// Dice of the smoothed contour against the truth.
    pub dice_after: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_ms: f64,
    /// Curvature variation of the smoothed contour at its knots.
    pub curvature_smoothed: f64,
    /// Curvature variation of the polygonized thresholded mask.
    pub curvature_mask: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return Self {
                mean: 0.0,
                std: 0.0,
            };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub dice_before: Summary,
    pub dice_after: Summary,
    pub iterations: Summary,
    pub wall_ms: Summary,
    pub converged_fraction: f64,
    /// Fraction of cases whose contour is at most as rough as the mask.
    pub smoother_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub metadata: ReportMetadata,
    pub cases: Vec<CaseResult>,
    pub aggregate: Aggregate,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn run_case(seed: u64, corruption: usize, config: &Config) -> Result<CaseResult> {
    let phantom = generate_phantom(seed, corruption, &config.phantom)?;
    let thresholded = phantom.prob_map.threshold(config.threshold);
    let start = Instant::now();
    let s = smooth(&phantom.prob_map, config)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let fitted = rasterize_inside(&s.contour, &s.frame, phantom.prob_map.dim());
    Ok(CaseResult {
        seed,
        dice_before: dice(&thresholded, &phantom.truth)?,
        dice_after: dice(&fitted, &phantom.truth)?,
        iterations: s.iterations,
        converged: s.converged,
        wall_ms,
        curvature_smoothed: contour_curvature_variation(&s.contour),
        curvature_mask: mask_curvature_variation(&thresholded, &s.frame, s.contour.n_knots()),
    })
}

/// Smooths phantoms for seeds `0..seeds` in parallel. Cases are reported in
/// seed order.
pub fn bench(seeds: usize, corruption: usize, config: &Config) -> Result<RunReport> {
    config.validate()?;
    let cases = (0..seeds as u64)
        .into_par_iter()
        .map(|seed| run_case(seed, corruption, config))
        .collect::<Result<Vec<_>>>()?;
    let n = cases.len().max(1) as f64;
    let aggregate = Aggregate {
        dice_before: Summary::of(cases.iter().map(|c| c.dice_before)),
        dice_after: Summary::of(cases.iter().map(|c| c.dice_after)),
        iterations: Summary::of(cases.iter().map(|c| c.iterations as f64)),
        wall_ms: Summary::of(cases.iter().map(|c| c.wall_ms)),
        converged_fraction: cases.iter().filter(|c| c.converged).count() as f64 / n,
        smoother_fraction: cases
            .iter()
            .filter(|c| c.curvature_smoothed <= c.curvature_mask)
            .count() as f64
            / n,
    };
    let created_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(RunReport {
        version: REPORT_VERSION,
        metadata: ReportMetadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix,
            corruption,
            seeds,
            image_size: config.phantom.size,
        },
        cases,
        aggregate,
    })
}
