//! Numerical laboratory for the energy functional of invariant vector fields
//! on compact rotationally symmetric manifolds.
//!
//! A manifold is described by a warping profile `φ` over an interval (two
//! point orbits at the poles) or a circle. Principal orbits are round spheres
//! `{r} × S^{n-1}`, and every invariant vector field has the form `V = f(r) N`
//! with `N = ∂/∂r`. The crate computes orbit geometry and Ricci curvature,
//! evaluates the energy functional and the Bochner-type identities pointwise
//! and in integrated form, solves the radial eigenproblems of the rough and
//! scalar Laplacians, and checks the lower bound `F(V) ≥ κ²` together with its
//! rigidity diagnostics.
//!
//! ```
//! use cohomlab::{lab, warp::{PresetKind, WarpProfile}};
//!
//! let profile = WarpProfile::preset(PresetKind::Round { k: 1.0 }, 2).unwrap();
//! let report = lab::check_bound(&profile, &lab::LabOptions::with_grid(512)).unwrap();
//! assert_eq!(report.verdict, lab::Verdict::RoundSphereDetected);
//! ```

pub mod calculus;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod lab;
pub mod spectral;
pub mod spline;
pub mod tridiag;
pub mod warp;

pub use error::{LabError, Result};
