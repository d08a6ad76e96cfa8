//! Construction and verification of two-dimensional spaces with curvature
//! bounded above.
//!
//! The crate is organized around a few concrete carriers:
//!
//! * [`model`] — exact geometry of the model plane of constant curvature κ
//!   (sphere / Euclidean plane / hyperbolic plane), including comparison
//!   triangles and comparison angles;
//! * [`complex`] — polyhedral metric complexes glued from model triangles,
//!   with link graphs and the gluing-condition audits;
//! * [`geodesics`] — intrinsic shortest paths on complexes and the ambient
//!   abstraction the ruled-surface engine runs on;
//! * [`ruled`] — ruled surfaces and their pullback metric computed through
//!   minimizing chains on decompositions of the ruling parameter;
//! * [`comparison`] — developed comparison polygons, stretched triangles, and
//!   sampled triangle-comparison testing;
//! * [`singular`] — extraction of the singular set as a metric graph with
//!   turn measures;
//! * [`generators`] — parametric builders for the cone / book / bumpy-strip
//!   families used throughout the test suite;
//! * [`gh`] — Gromov–Hausdorff bounds between finite metric nets.

pub mod comparison;
pub mod complex;
pub mod generators;
pub mod geodesics;
pub mod gh;
pub mod model;
pub mod ruled;
pub mod singular;
