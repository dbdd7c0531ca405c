//! Extrinsic and intrinsic geometry of the principal orbits.
//!
//! Sign convention: with `N = +∂/∂r`, the mean curvature is `H = -φ'/φ`, so
//! that for an invariant function `Δh = N(f) - (n-1) f H` with `f = N(h)`.
//! Flipping `N` flips `H` but leaves `H²`, `|B|²`, `f·H` and every residual
//! built from them unchanged.

use serde::Serialize;

use crate::warp::{RadialGrid, Topology, WarpProfile};
use crate::{LabError, Result};

/// Per-node orbit quantities. `H` and `|B|²` live on the regular nodes only;
/// the volume weight `w = φ^{n-1}` is stored on all nodes (zero at poles) and
/// at the `N` interval midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitGeometry {
    grid: RadialGrid,
    dim: usize,
    phi: Vec<f64>,
    weight: Vec<f64>,
    half_weight: Vec<f64>,
    mean_curvature: Vec<f64>,
    b2: Vec<f64>,
}

impl OrbitGeometry {
    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index of the first regular node; arrays over regular nodes start here.
    pub fn first_regular(&self) -> usize {
        self.grid.regular_nodes().start
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    /// `w` at `r_{i+1/2}` for `i = 0..N`.
    pub fn half_weight(&self) -> &[f64] {
        &self.half_weight
    }

    pub fn mean_curvature(&self) -> &[f64] {
        &self.mean_curvature
    }

    pub fn b2(&self) -> &[f64] {
        &self.b2
    }

    /// `H` at grid node `i` (must be regular).
    pub fn h_at(&self, i: usize) -> f64 {
        self.mean_curvature[i - self.first_regular()]
    }

    pub fn b2_at(&self, i: usize) -> f64 {
        self.b2[i - self.first_regular()]
    }

    /// Cell quadrature of `|B|² w dr` at regular node `i`, written as
    /// `|w_{i+1/2} - w_{i-1/2}| |H_i|` through `|B|² w = w' φ'/φ`.
    ///
    /// Agrees with `|B|²_i w_i Δ` to second order, and unlike the nodal
    /// product it keeps the discrete vector operator exact on `f = r` next to
    /// a pole, for every dimension.
    pub fn cell_potential(&self, i: usize) -> f64 {
        let n = self.grid.intervals();
        let left = self.half_weight[(i + n - 1) % n];
        let right = self.half_weight[i % n];
        (right - left).abs() * self.h_at(i).abs()
    }

    /// Trapezoidal `∫ g w dr` with `g` given on regular nodes by `g(i)`.
    ///
    /// Sphere-like: the pole weights vanish, so the sum over regular nodes is
    /// the trapezoidal rule. Periodic: the periodic trapezoidal rule.
    pub fn integrate<F: Fn(usize) -> f64>(&self, g: F) -> f64 {
        let dr = self.grid.spacing();
        self.grid.regular_nodes().map(|i| g(i) * self.weight[i]).sum::<f64>() * dr
    }

    /// Geometry on the grid with half the intervals (every other node), read
    /// off from this one without re-evaluating the profile.
    pub fn coarsen(&self) -> Result<OrbitGeometry> {
        let grid = self.grid.coarsen()?;
        let nc = grid.intervals();
        let phi: Vec<f64> = (0..=nc).map(|j| self.phi[2 * j]).collect();
        let weight: Vec<f64> = (0..=nc).map(|j| self.weight[2 * j]).collect();
        let half_weight: Vec<f64> = (0..nc).map(|j| self.weight[2 * j + 1]).collect();
        let (mut h, mut b2) = (Vec::new(), Vec::new());
        for j in grid.regular_nodes() {
            h.push(self.h_at(2 * j));
            b2.push(self.b2_at(2 * j));
        }
        Ok(OrbitGeometry {
            grid,
            dim: self.dim,
            phi,
            weight,
            half_weight,
            mean_curvature: h,
            b2,
        })
    }
}

pub fn orbit_geometry(profile: &WarpProfile, grid: &RadialGrid) -> Result<OrbitGeometry> {
    profile.ensure_usable()?;
    grid.ensure_fits(profile)?;
    let n = profile.dim();
    let nodes = grid.nodes();
    let singular = |i: usize| grid.topology() == Topology::SphereLike && (i == 0 || i == grid.intervals());

    let mut phi = Vec::with_capacity(nodes.len());
    let mut weight = Vec::with_capacity(nodes.len());
    for (i, &r) in nodes.iter().enumerate() {
        if singular(i) {
            phi.push(0.0);
            weight.push(0.0);
        } else {
            let value = profile.phi(r);
            if !(value.is_finite() && value > 0.0) {
                return Err(LabError::NonFinite { quantity: "warping function", node: i, r });
            }
            phi.push(value);
            weight.push(value.powi(n as i32 - 1));
        }
    }
    let half_weight = (0..grid.intervals())
        .map(|i| {
            let r = grid.midpoint(i);
            let w = profile.weight(r);
            if w.is_finite() && w > 0.0 {
                Ok(w)
            } else {
                Err(LabError::NonFinite { quantity: "half-node weight", node: i, r })
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut mean_curvature = Vec::new();
    let mut b2 = Vec::new();
    for i in grid.regular_nodes() {
        let r = nodes[i];
        let [p, dp, _] = profile.jet(r);
        let ratio = dp / p;
        if !ratio.is_finite() {
            return Err(LabError::NonFinite { quantity: "mean curvature", node: i, r });
        }
        mean_curvature.push(-ratio);
        b2.push((n - 1) as f64 * ratio * ratio);
    }
    Ok(OrbitGeometry {
        grid: *grid,
        dim: n,
        phi,
        weight,
        half_weight,
        mean_curvature,
        b2,
    })
}

/// Ricci curvature in the adapted frame `(N, E_1, .., E_{n-1})`, where it is
/// diagonal; values on regular nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RicciProfile {
    pub ric_radial: Vec<f64>,
    pub ric_tangential: Vec<f64>,
    pub ric_min: f64,
    /// Best constant in `Ric ≥ (n-1) κ²`; may be zero or negative.
    pub kappa2: f64,
    /// Node where the minimum is attained, and its abscissa.
    pub argmin_node: usize,
    pub argmin_r: f64,
    #[serde(skip)]
    first: usize,
}

impl RicciProfile {
    pub fn radial_at(&self, i: usize) -> f64 {
        self.ric_radial[i - self.first]
    }

    pub fn tangential_at(&self, i: usize) -> f64 {
        self.ric_tangential[i - self.first]
    }

    /// The profile with every Ricci value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> RicciProfile {
        RicciProfile {
            ric_radial: self.ric_radial.iter().map(|v| v * c).collect(),
            ric_tangential: self.ric_tangential.iter().map(|v| v * c).collect(),
            ric_min: self.ric_min * c,
            kappa2: self.kappa2 * c,
            ..self.clone()
        }
    }
}

/// `Ric(N,N) = -(n-1) φ''/φ` and `Ric(E,E) = -φ''/φ + (n-2)(1 - φ'²)/φ²`.
///
/// Poles are omitted: smooth closure makes the curvature continuous there, so
/// the limits agree with the neighbouring interior values.
pub fn ricci_profile(profile: &WarpProfile, grid: &RadialGrid) -> Result<RicciProfile> {
    profile.ensure_usable()?;
    grid.ensure_fits(profile)?;
    let n = profile.dim() as f64;
    let mut radial = Vec::new();
    let mut tangential = Vec::new();
    let mut ric_min = f64::INFINITY;
    let mut argmin = grid.regular_nodes().start;
    for i in grid.regular_nodes() {
        let r = grid.node(i);
        let [p, dp, d2p] = profile.jet(r);
        let rad = -(n - 1.0) * d2p / p;
        let tan = -d2p / p + (n - 2.0) * (1.0 - dp * dp) / (p * p);
        if !rad.is_finite() || !tan.is_finite() {
            return Err(LabError::NonFinite { quantity: "Ricci curvature", node: i, r });
        }
        let local = rad.min(tan);
        if local < ric_min {
            ric_min = local;
            argmin = i;
        }
        radial.push(rad);
        tangential.push(tan);
    }
    Ok(RicciProfile {
        ric_radial: radial,
        ric_tangential: tangential,
        ric_min,
        kappa2: ric_min / (n - 1.0),
        argmin_node: argmin,
        argmin_r: grid.node(argmin),
        first: grid.regular_nodes().start,
    })
}
