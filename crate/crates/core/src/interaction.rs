//! Anchor points and the compound energy used during live editing.
//!
//! An anchor `(rho_user, theta_user)` adds `(psi(theta_user) - rho_user)^2`
//! to the energy. The Dirac weighting collapses the angular integral to the
//! anchor angle itself, so its coefficient gradient is exact:
//! `2 (psi(theta_user) - rho_user) beta_d(t_user - k)`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::bspline::{BSplineContour, MIN_RADIUS};
use crate::descent::{DescentProblem, Term};
use crate::error::{BeasError, Result};
use crate::geometry::{Image, PolarFrame};
use crate::pipeline::{ProbabilityMap, RefineSession};
use crate::region::{EnergyGradient, EvolveParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorPoint {
    pub id: u64,
    pub rho: f64,
    pub theta: f64,
}

/// Weights of the image, probability-map, and anchor energies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.3,
            gamma: 3.0,
        }
    }
}

impl EnergyWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let w = Self { alpha, beta, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(BeasError::Config(format!(
                "energy weights must be finite and non-negative, got {all:?}"
            )));
        }
        if all.iter().all(|&w| w == 0.0) {
            return Err(BeasError::Config("energy weights are all zero".into()));
        }
        Ok(())
    }
}

/// Sum of squared radial residuals at the anchor angles.
pub fn anchor_energy(contour: &BSplineContour, anchors: &[AnchorPoint]) -> f64 {
    anchors
        .iter()
        .map(|a| {
            let r = contour.evaluate(a.theta) - a.rho;
            r * r
        })
        .sum()
}

pub fn anchor_gradient(contour: &BSplineContour, anchors: &[AnchorPoint]) -> EnergyGradient {
    let mut grad = EnergyGradient::zeros(contour.n_knots());
    for a in anchors {
        let residual = contour.evaluate(a.theta) - a.rho;
        if residual == 0.0 {
            continue;
        }
        for (k, w) in contour.basis_weights_at(a.theta) {
            grad.0[k] += 2.0 * residual * w;
        }
    }
    grad
}

/// `alpha * grad E_image + beta * grad E_prob + gamma * grad E_anchor`, all
/// over the same contour samples and inside mask.
#[allow(clippy::too_many_arguments)]
pub fn compound_gradient(
    contour: &BSplineContour,
    frame: &PolarFrame,
    image: &Image,
    prob_map: &ProbabilityMap,
    anchors: &[AnchorPoint],
    weights: &EnergyWeights,
    radius: f64,
    samples_per_knot: usize,
) -> Result<EnergyGradient> {
    if image.dim() != prob_map.dim() {
        return Err(BeasError::shape(image.dim(), prob_map.dim()));
    }
    weights.validate()?;
    let params = EvolveParams {
        radius,
        samples_per_knot,
        ..Default::default()
    };
    params.validate()?;
    let problem = DescentProblem::new(
        *frame,
        image.dim(),
        params,
        vec![
            Term::new(image, weights.alpha),
            Term::new(prob_map.values(), weights.beta),
        ],
    )
    .with_anchors(anchors, weights.gamma);
    Ok(problem.linearize(contour, None)?.gradient)
}

/// Anchors of one session, keyed by stable ids.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet {
    anchors: Vec<AnchorPoint>,
    next_id: u64,
}

impl AnchorSet {
    pub fn as_slice(&self) -> &[AnchorPoint] {
        &self.anchors
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&AnchorPoint> {
        self.anchors.iter().find(|a| a.id == id)
    }

    /// Adds an anchor. Any existing anchor within `2π / (4N)` of the new
    /// angle is replaced; its id is returned alongside the new one.
    pub fn add(&mut self, rho: f64, theta: f64, n_knots: usize) -> (u64, Option<u64>) {
        let window = TAU / (4 * n_knots) as f64;
        let replaced = self
            .anchors
            .iter()
            .position(|a| angular_distance(a.theta, theta) < window)
            .map(|i| self.anchors.remove(i).id);
        self.next_id += 1;
        let id = self.next_id;
        self.anchors.push(AnchorPoint { id, rho, theta });
        (id, replaced)
    }

    pub fn move_to(&mut self, id: u64, rho: f64, theta: f64) -> Result<()> {
        let a = self
            .anchors
            .iter_mut()
            .find(|a| a.id == id)
            .ok_or(BeasError::AnchorNotFound(id))?;
        a.rho = rho;
        a.theta = theta;
        Ok(())
    }

    pub fn remove(&mut self, id: u64) -> Result<AnchorPoint> {
        let i = self
            .anchors
            .iter()
            .position(|a| a.id == id)
            .ok_or(BeasError::AnchorNotFound(id))?;
        Ok(self.anchors.remove(i))
    }

    pub fn clear(&mut self) {
        self.anchors.clear();
    }
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Checks that an anchor radius lies in `(MIN_RADIUS, limit)`.
pub(crate) fn check_anchor_radius(rho: f64, limit: f64) -> Result<()> {
    if !(rho > MIN_RADIUS && rho < limit) {
        return Err(BeasError::InputRange(format!(
            "anchor radius {rho:.2} outside ({MIN_RADIUS}, {limit:.2})"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// Largest knot-radius change over the whole step.
    pub displacement: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs a bounded number of compound-energy descent iterations from the
/// session's current contour and stores the result back into the session.
pub fn interactive_step(session: &mut RefineSession) -> Result<StepOutcome> {
    let params = session.interactive_params();
    let weights = *session.weights();
    let before = session.contour().knot_radii();
    let outcome = {
        let problem = DescentProblem::new(
            *session.frame(),
            session.image().dim(),
            params,
            vec![
                Term::new(session.image(), weights.alpha),
                Term::new(session.prob_map().values(), weights.beta),
            ],
        )
        .with_anchors(session.anchors().as_slice(), weights.gamma);
        problem.run(session.contour(), params.max_iters)?
    };
    let displacement = outcome
        .contour
        .knot_radii()
        .iter()
        .zip(&before)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let converged = outcome.converged;
    let iterations = outcome.iterations;
    session.set_contour(outcome.contour);
    Ok(StepOutcome {
        displacement,
        iterations,
        converged,
    })
}
