//! Warped-product profiles `M = [0, L] ×_φ S^{n-1}` (sphere-like) and
//! `S¹ ×_φ S^{n-1}` (periodic), their closure checks, and uniform radial grids.
//!
//! The radial coordinate `r` is the signed distance to a principal orbit, so
//! `N = ∂/∂r` is the unit normal of every orbit.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::spline::{CubicSpline, EndCondition};
use crate::{LabError, Result};

/// Closure tolerance for analytic profiles.
pub const ANALYTIC_TOL: f64 = 1e-10;
/// Closure tolerance for spline profiles.
pub const SPLINE_TOL: f64 = 1e-6;
/// Smallest admissible number of grid intervals.
pub const MIN_INTERVALS: usize = 16;

const POSITIVITY_SAMPLES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Interval orbit space; `φ` vanishes at both ends (point orbits).
    SphereLike,
    /// Circle orbit space; `φ > 0` everywhere.
    Periodic,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::SphereLike => f.write_str("sphere_like"),
            Topology::Periodic => f.write_str("periodic"),
        }
    }
}

/// Analytic profile families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PresetKind {
    /// Round sphere of curvature `k²`: `φ = sin(kr)/k` on `[0, π/k]`.
    Round { k: f64 },
    /// `φ = sin r · (1 + eps·sin² r)` on `[0, π]`.
    Bump { eps: f64 },
    /// `φ = c + a·sin(2πr/L)` on the circle of length `L = 2π`.
    PeriodicProduct { c: f64, a: f64 },
}

impl PresetKind {
    pub fn topology(&self) -> Topology {
        match self {
            PresetKind::Round { .. } | PresetKind::Bump { .. } => Topology::SphereLike,
            PresetKind::PeriodicProduct { .. } => Topology::Periodic,
        }
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresetKind::Round { k } => write!(f, "round(k={k})"),
            PresetKind::Bump { eps } => write!(f, "bump(eps={eps})"),
            PresetKind::PeriodicProduct { c, a } => write!(f, "periodic_product(c={c}, a={a})"),
        }
    }
}

/// Where a profile came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetTag {
    Analytic(PresetKind),
    Samples { count: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Round { k: f64 },
    Bump { eps: f64 },
    PeriodicProduct { c: f64, a: f64, freq: f64 },
    Spline(CubicSpline),
}

/// A warping function together with the dimension and topology of `M`.
///
/// Immutable after construction. The validation report is computed once and
/// downstream operations refuse profiles that fail it.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpProfile {
    dim: usize,
    topology: Topology,
    length: f64,
    shape: Shape,
    tag: PresetTag,
    report: ValidationReport,
}

impl WarpProfile {
    /// Builds an analytic preset. Parameters outside the admissible range are
    /// rejected with the invariant they would break.
    pub fn preset(kind: PresetKind, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let (shape, length) = match kind {
            PresetKind::Round { k } => {
                if !(k.is_finite() && k > 0.0) {
                    return Err(LabError::InvalidProfile {
                        invariant: "positivity".into(),
                        detail: format!("round preset needs k > 0, got {k}"),
                    });
                }
                (Shape::Round { k }, PI / k)
            }
            PresetKind::Bump { eps } => {
                if !(eps.is_finite() && eps > -1.0 && eps < 1.0) {
                    return Err(LabError::InvalidProfile {
                        invariant: "positivity".into(),
                        detail: format!(
                            "bump preset needs |eps| < 1 so that 1 + eps·sin²r > 0, got {eps}"
                        ),
                    });
                }
                (Shape::Bump { eps }, PI)
            }
            PresetKind::PeriodicProduct { c, a } => {
                if !(c.is_finite() && a.is_finite() && a >= 0.0 && a < c) {
                    return Err(LabError::InvalidProfile {
                        invariant: "positivity".into(),
                        detail: format!("periodic product needs 0 <= a < c, got c = {c}, a = {a}"),
                    });
                }
                let length = 2.0 * PI;
                (Shape::PeriodicProduct { c, a, freq: 2.0 * PI / length }, length)
            }
        };
        let profile = Self::assemble(dim, kind.topology(), length, shape, PresetTag::Analytic(kind));
        if !profile.report.usable() {
            return Err(LabError::InvalidProfile {
                invariant: profile.report.failed_names(),
                detail: format!("preset {kind} failed validation"),
            });
        }
        Ok(profile)
    }

    /// Builds a spline profile through `(r, phi)` samples; `r` must start at 0
    /// and its last entry is the domain length.
    ///
    /// Sphere-like samples are clamped to `φ'(0) = 1`, `φ'(L) = -1`; periodic
    /// samples use periodic end conditions. Sample sets that violate positivity
    /// or closure still produce a profile (so the report can be inspected) but
    /// it is marked unusable.
    pub fn from_samples(dim: usize, topology: Topology, r: &[f64], phi: &[f64]) -> Result<Self> {
        check_dim(dim)?;
        if r.first().copied() != Some(0.0) {
            return Err(LabError::InvalidArgument("sample abscissae must start at r = 0".into()));
        }
        let end = match topology {
            Topology::SphereLike => EndCondition::Clamped { start: 1.0, end: -1.0 },
            Topology::Periodic => EndCondition::Periodic,
        };
        let spline = CubicSpline::new(r, phi, end)?;
        let length = spline.span().1;
        Ok(Self::assemble(
            dim,
            topology,
            length,
            Shape::Spline(spline),
            PresetTag::Samples { count: r.len() },
        ))
    }

    fn assemble(dim: usize, topology: Topology, length: f64, shape: Shape, tag: PresetTag) -> Self {
        let mut profile = Self {
            dim,
            topology,
            length,
            shape,
            tag,
            report: ValidationReport::default(),
        };
        profile.report = validate(&profile);
        profile
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn tag(&self) -> &PresetTag {
        &self.tag
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn is_usable(&self) -> bool {
        self.report.usable()
    }

    pub fn is_spline(&self) -> bool {
        matches!(self.shape, Shape::Spline(_))
    }

    pub(crate) fn ensure_usable(&self) -> Result<()> {
        if self.is_usable() {
            Ok(())
        } else {
            Err(LabError::UnusableProfile { failed: self.report.failed_names() })
        }
    }

    /// `[φ(r), φ'(r), φ''(r)]`.
    pub fn jet(&self, r: f64) -> [f64; 3] {
        match &self.shape {
            Shape::Round { k } => {
                let (s, c) = (k * r).sin_cos();
                [s / k, c, -k * s]
            }
            Shape::Bump { eps } => {
                let (s, c) = r.sin_cos();
                let s2 = s * s;
                [
                    s * (1.0 + eps * s2),
                    c * (1.0 + 3.0 * eps * s2),
                    -s + 3.0 * eps * s * (2.0 * c * c - s2),
                ]
            }
            Shape::PeriodicProduct { c, a, freq } => {
                let (s, co) = (freq * r).sin_cos();
                [c + a * s, a * freq * co, -a * freq * freq * s]
            }
            Shape::Spline(spline) => spline.eval(r),
        }
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.jet(r)[0]
    }

    /// Volume weight `w = φ^{n-1}`.
    pub fn weight(&self, r: f64) -> f64 {
        self.phi(r).powi(self.dim as i32 - 1)
    }

    pub fn closure_tolerance(&self) -> f64 {
        if self.is_spline() {
            SPLINE_TOL
        } else {
            ANALYTIC_TOL
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(LabError::InvalidArgument(format!("dimension n must be >= 2, got {dim}")));
    }
    Ok(())
}

/// Outcome of a single invariant check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    /// Offending sample/node index and abscissa, when the check is local.
    pub location: Option<(usize, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn usable(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_names(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn push(&mut self, name: &str, residual: f64, tolerance: f64, location: Option<(usize, f64)>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed: residual.is_finite() && residual <= tolerance,
            residual,
            tolerance,
            location,
        });
    }
}

/// Positivity, closure and derivative-continuity checks.
pub fn validate(profile: &WarpProfile) -> ValidationReport {
    let mut report = ValidationReport::default();
    let tol = profile.closure_tolerance();
    let l = profile.length;

    // positivity: residual is the deficit below zero of the smallest sample
    let (min_value, location) = positivity_scan(profile);
    let deficit = if min_value > 0.0 { 0.0 } else { -min_value + f64::MIN_POSITIVE };
    report.push(
        "positivity",
        if min_value.is_finite() { deficit } else { f64::INFINITY },
        0.0,
        if min_value > 0.0 { None } else { location },
    );

    let start = profile.jet(0.0);
    let end = match &profile.shape {
        Shape::Spline(s) => s.eval_piece(s.knots().len() - 2, l),
        _ => profile.jet(l),
    };
    match profile.topology {
        Topology::SphereLike => {
            report.push("closure phi(0) = 0", start[0].abs(), tol, Some((0, 0.0)));
            report.push("closure phi(L) = 0", end[0].abs(), tol, None);
            report.push("closure phi'(0) = 1", (start[1] - 1.0).abs(), tol, Some((0, 0.0)));
            report.push("closure phi'(L) = -1", (end[1] + 1.0).abs(), tol, None);
        }
        Topology::Periodic => {
            report.push("closure phi(0) = phi(L)", (start[0] - end[0]).abs(), tol, None);
            report.push("closure phi'(0) = phi'(L)", (start[1] - end[1]).abs(), tol, None);
            report.push("closure phi''(0) = phi''(L)", (start[2] - end[2]).abs(), tol, None);
        }
    }

    let continuity = match &profile.shape {
        Shape::Spline(s) => s.curvature_jump(),
        _ => {
            let finite = (0..=POSITIVITY_SAMPLES)
                .map(|i| l * i as f64 / POSITIVITY_SAMPLES as f64)
                .all(|r| profile.jet(r).iter().all(|v| v.is_finite()));
            if finite {
                0.0
            } else {
                f64::INFINITY
            }
        }
    };
    report.push("derivative continuity", continuity, tol, None);
    report
}

fn positivity_scan(profile: &WarpProfile) -> (f64, Option<(usize, f64)>) {
    let interior = |i: usize, last: usize| match profile.topology {
        Topology::SphereLike => i > 0 && i < last,
        Topology::Periodic => true,
    };
    // samples: (index, r, φ); the first non-positive sample is reported
    let samples: Vec<(usize, f64, f64)> = match &profile.shape {
        Shape::Spline(s) => {
            let (knots, values) = (s.knots(), s.values());
            let last = knots.len() - 1;
            let at_knots = (0..=last).filter(|&i| interior(i, last)).map(|i| (i, knots[i], values[i]));
            let between = (0..last).map(|i| {
                let r = 0.5 * (knots[i] + knots[i + 1]);
                (i, r, s.eval(r)[0])
            });
            at_knots.chain(between).collect()
        }
        _ => {
            let last = POSITIVITY_SAMPLES;
            (0..=last)
                .filter(|&i| interior(i, last))
                .map(|i| {
                    let r = profile.length * i as f64 / last as f64;
                    (i, r, profile.phi(r))
                })
                .collect()
        }
    };
    if let Some(&(i, r, v)) = samples.iter().find(|(_, _, v)| !(*v > 0.0)) {
        let v = if v.is_finite() { v } else { f64::NEG_INFINITY };
        return (v, Some((i, r)));
    }
    let min = samples.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    (min, None)
}

/// Uniform grid `r_i = iΔ`, `Δ = L/N`, `i = 0..=N`.
///
/// For sphere-like profiles nodes `0` and `N` are the poles. For periodic ones
/// node `N` coincides with node `0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    intervals: usize,
    length: f64,
    topology: Topology,
}

impl RadialGrid {
    pub fn new(length: f64, topology: Topology, intervals: usize) -> Result<Self> {
        if intervals < MIN_INTERVALS {
            return Err(LabError::GridTooCoarse { n: intervals, min: MIN_INTERVALS });
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(LabError::InvalidArgument(format!("grid length must be positive, got {length}")));
        }
        Ok(Self { intervals, length, topology })
    }

    pub fn for_profile(profile: &WarpProfile, intervals: usize) -> Result<Self> {
        Self::new(profile.length(), profile.topology(), intervals)
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.intervals as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.length
        } else {
            i as f64 * self.spacing()
        }
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing()
    }

    /// All `N + 1` node abscissae.
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.intervals).map(|i| self.node(i)).collect()
    }

    /// Nodes where orbits are principal: `1..N` for sphere-like grids and the
    /// `N` distinct nodes `0..N` for periodic ones.
    pub fn regular_nodes(&self) -> std::ops::Range<usize> {
        match self.topology {
            Topology::SphereLike => 1..self.intervals,
            Topology::Periodic => 0..self.intervals,
        }
    }

    /// The grid with half as many intervals, whose nodes are the even nodes of
    /// this one.
    pub fn coarsen(&self) -> Result<Self> {
        if self.intervals % 2 != 0 {
            return Err(LabError::InvalidArgument(format!(
                "cannot coarsen a grid with an odd number of intervals ({})",
                self.intervals
            )));
        }
        Self::new(self.length, self.topology, self.intervals / 2)
    }

    pub(crate) fn ensure_matches(&self, other: &RadialGrid) -> Result<()> {
        if self.intervals != other.intervals
            || self.topology != other.topology
            || (self.length - other.length).abs() > 1e-12 * self.length
        {
            return Err(LabError::GridMismatch(format!(
                "N = {} / {}, L = {} / {}, {} / {}",
                self.intervals, other.intervals, self.length, other.length, self.topology, other.topology
            )));
        }
        Ok(())
    }

    pub(crate) fn ensure_fits(&self, profile: &WarpProfile) -> Result<()> {
        if self.topology != profile.topology() || (self.length - profile.length()).abs() > 1e-12 * self.length {
            return Err(LabError::GridMismatch(format!(
                "grid (L = {}, {}) does not cover profile (L = {}, {})",
                self.length,
                self.topology,
                profile.length(),
                profile.topology()
            )));
        }
        Ok(())
    }
}
