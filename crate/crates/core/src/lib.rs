//! Two-phase variational segmentation: the Chan-Vese model with Euler
//! elastica and landmark constraints, solved by an alternating direction
//! method of multipliers.
//!
//! The model family (CV, CVL, CVE, CVEL) is selected by the landmark penalty
//! `mu` and the curvature coefficient `b` of [`ModelParams`].

pub mod error;
pub mod grid;
pub mod model;
pub mod pipeline;
pub mod regularizers;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{ScalarField, Scheme, Vec2, VectorField};
pub use model::{Landmark, LandmarkSet, Mode, ModelParams, Preset, RegionMeans};
pub use solver::{ConvergenceReport, SolverState};
