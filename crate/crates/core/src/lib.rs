//! Moving-hyperplane geometry for bounded C¹ domains.
//!
//! The crate computes the support value `a(ν)` and the stopping parameter
//! `λ₁(ν)` of the moving plane method for domains given as level sets,
//! scans both quantities over directions to classify their continuity, and
//! checks the monotonicity of p-Laplacian torsion solutions against the
//! computed `λ₁(ν)`.
//!
//! Modules:
//! - [`geometry`]: implicit domains, boundary extraction, normals, reflections.
//! - [`moving_plane`]: the two stopping conditions and the sweep for `λ₁(ν)`.
//! - [`continuity`]: direction scans, jump classification, flat-side jump reports.
//! - [`plap`]: masked finite-difference p-Laplacian solver and monotonicity check.

pub mod continuity;
pub mod error;
pub mod geometry;
pub mod moving_plane;
pub mod numeric;
pub mod plap;

pub use error::{Error, Result};
pub use geometry::{Direction, ImplicitDomain, ShapeSpec};
pub use moving_plane::{Lambda1Result, PlaneSweep, SweepSettings};
