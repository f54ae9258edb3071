//! Numerical laboratory for sub-Riemannian geometry.
//!
//! This crate integrates the sub-Riemannian geodesic flow on a registry of
//! concrete model geometries (round spheres, the complex and quaternionic
//! Hopf fibrations, the Heisenberg group and general step-2 Carnot groups,
//! the Martinet structure, and a spherical band), certifies the two
//! reduction hypotheses that make the reduced unit bundle `{v = 0}` and its
//! Liouville volume flow-invariant, and uses Monte-Carlo integral geometry
//! to verify the Santaló-type boundary/interior balance together with the
//! Hardy-type, first-eigenvalue, and isoperimetric-type inequalities that
//! follow from it.
//!
//! # Layout
//!
//! - [`model`] — geometries: frames, brackets, volume, boundary normals.
//! - [`domain`] — bounded regions with defining functions and samplers.
//! - [`flow`] — adaptive geodesic integration and exit-length detection.
//! - [`reduction`] — H1/H2 certificates and fiber-measure quadrature.
//! - [`santalo`] — the two sides of the reduced Santaló formula.
//! - [`inequalities`] — Hardy, p-Hardy, λ₁, and isoperimetric checks.
//! - [`spectral`] — separated 1-D eigensolves on hemispheres.
//! - [`carnot`] — step-2 Carnot group algebra and the group corollaries.
//! - [`report`] — structured pass/fail records for the CLI run report.

pub mod carnot;
pub mod constants;
pub mod domain;
pub mod error;
pub mod flow;
pub mod inequalities;
pub mod model;
pub mod quadrature;
pub mod reduction;
pub mod report;
pub mod sampling;
pub mod santalo;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{FrameCovector, Model};
