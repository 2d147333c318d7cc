use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bspline::MAX_DEGREE;
use crate::error::{BeasError, Result};
use crate::interaction::EnergyWeights;
use crate::phantom::PhantomConfig;
use crate::region::EvolveParams;

/// Every tunable of the pipeline. Missing keys in a config file take the
/// defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub knots: usize,
    pub degree: u8,
    pub scale: f64,
    pub samples_per_knot: usize,
    /// Localization radius of the smoothing stage, pixels.
    pub stage1_radius: f64,
    /// Localization radius of interactive refinement, pixels.
    pub stage2_radius: f64,
    pub weights: EnergyWeights,
    pub step: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Iteration budget of one interactive step.
    pub interactive_iters: usize,
    pub threshold: f64,
    pub frame_rays: usize,
    pub phantom: PhantomConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            knots: 32,
            degree: 3,
            scale: 1.0,
            samples_per_knot: 4,
            stage1_radius: 100.0,
            stage2_radius: 10.0,
            weights: EnergyWeights::default(),
            step: 0.5,
            tol: 0.05,
            max_iters: 200,
            interactive_iters: 30,
            threshold: 0.5,
            frame_rays: 64,
            phantom: PhantomConfig::default(),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| BeasError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Config =
            serde_json::from_str(text).map_err(|e| BeasError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree > MAX_DEGREE {
            return Err(BeasError::Config(format!(
                "degree {} > {MAX_DEGREE}",
                self.degree
            )));
        }
        if self.knots < 2 * self.degree as usize + 1 {
            return Err(BeasError::Config(format!(
                "{} knots too few for degree {}",
                self.knots, self.degree
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(BeasError::Config(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if self.frame_rays == 0 {
            return Err(BeasError::Config("frame_rays must be positive".into()));
        }
        self.weights.validate()?;
        self.smoothing_params().validate()?;
        self.interactive_params().validate()?;
        self.phantom.validate()
    }

    pub fn smoothing_params(&self) -> EvolveParams {
        EvolveParams {
            radius: self.stage1_radius,
            step: self.step,
            max_iters: self.max_iters,
            tol: self.tol,
            samples_per_knot: self.samples_per_knot,
        }
    }

    pub fn interactive_params(&self) -> EvolveParams {
        EvolveParams {
            radius: self.stage2_radius,
            max_iters: self.interactive_iters,
            ..self.smoothing_params()
        }
    }
}
