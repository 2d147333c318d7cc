//! B-spline explicit active contours for star-convex segmentation.
//!
//! A closed contour is the radius about a fixed origin written as a periodic
//! B-spline of the polar angle. The coefficients are fitted by descent on
//! localized region energies: first on a probability map to smooth it, then
//! interactively on the image with user anchor points pulling the contour.

pub mod bspline;
pub mod config;
mod descent;
pub mod error;
pub mod geometry;
pub mod interaction;
pub mod io;
pub mod metrics;
pub mod phantom;
pub mod pipeline;
pub mod region;
pub mod report;
pub mod service;

pub use bspline::{basis, BSplineContour, MIN_RADIUS};
pub use config::Config;
pub use error::{BeasError, Result};
pub use geometry::{Image, Mask, PolarFrame};
pub use interaction::{interactive_step, AnchorPoint, EnergyWeights, StepOutcome};
pub use pipeline::{dice, open_session, smooth, ProbabilityMap, RefineSession};
pub use region::{evolve, EnergyGradient, EvolveParams};
