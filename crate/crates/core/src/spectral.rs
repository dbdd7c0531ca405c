//! Radial eigenproblems for the rough Laplacian on invariant fields and the
//! scalar Laplacian on invariant functions.
//!
//! Both are discretised in flux form as `K x = λ W x` with `K` symmetric
//! tridiagonal (cyclic for periodic grids) and `W = diag(w_i Δ)`:
//!
//! ```text
//! (K x)_i = -(w_{i+1/2}(x_{i+1} - x_i) - w_{i-1/2}(x_i - x_{i-1})) / Δ + w_i |B|²_i Δ x_i
//! ```
//!
//! where the `|B|²` term is present for the vector problem only. In the strong
//! limit this is `-(w f')'/w + |B|² f = λ f`. The quadratic form of `K` is the
//! numerator of the energy functional, so discrete Rayleigh quotients are
//! bounded below by the smallest discrete eigenvalue.

use serde::{Deserialize, Serialize};

use crate::calculus::{self, InvariantField, InvariantFunction};
use crate::geometry::{orbit_geometry, OrbitGeometry};
use crate::tridiag;
use crate::warp::{RadialGrid, Topology, WarpProfile, MIN_INTERVALS};
use crate::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// Rough Laplacian `-div ∇` restricted to fields `V = fN`.
    RoughVector,
    /// `-Δ` on invariant functions.
    ScalarLaplacian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `f = 0` at the poles (invariant fields vanish on singular orbits).
    Dirichlet,
    /// Zero flux at the poles (smooth invariant functions).
    Neumann,
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    pub kind: OperatorKind,
    pub boundary: Boundary,
    pub diag: Vec<f64>,
    /// `offdiag[j]` couples unknowns `j` and `j+1`; for periodic operators the
    /// last entry couples the last unknown with the first.
    pub offdiag: Vec<f64>,
    /// Diagonal mass `w_i Δ`.
    pub weight: Vec<f64>,
    /// `w_{e}/Δ` for every edge between two unknowns, same layout as `offdiag`.
    conductance: Vec<f64>,
    /// `w_i |B|²_i Δ`, plus the conductance of Dirichlet pole edges.
    potential: Vec<f64>,
    first_node: usize,
    geometry: OrbitGeometry,
}

impl DiscreteOperator {
    pub fn grid(&self) -> &RadialGrid {
        self.geometry.grid()
    }

    pub fn geometry(&self) -> &OrbitGeometry {
        &self.geometry
    }

    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    /// Grid node carrying unknown `j`.
    pub fn node_of(&self, j: usize) -> usize {
        self.first_node + j
    }

    fn cyclic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        tridiag::multiply(&self.diag, &self.offdiag, self.cyclic(), x)
    }

    /// `xᵀ K x`, summed edge by edge so that no cancellation occurs.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let m = x.len();
        let edges: f64 = self
            .conductance
            .iter()
            .enumerate()
            .map(|(e, g)| {
                let d = x[(e + 1) % m] - x[e];
                g * d * d
            })
            .sum();
        edges + self.potential.iter().zip(x).map(|(p, xi)| p * xi * xi).sum::<f64>()
    }

    pub fn mass_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.weight.iter().zip(x.iter().zip(y)).map(|(w, (a, b))| w * a * b).sum()
    }

    fn shifted_solve(&self, shift: f64, rhs: &[f64]) -> std::result::Result<Vec<f64>, tridiag::SingularPivot> {
        let diag: Vec<f64> = self.diag.iter().zip(&self.weight).map(|(d, w)| d - shift * w).collect();
        if self.cyclic() {
            tridiag::solve_cyclic(&diag, &self.offdiag, rhs)
        } else {
            tridiag::solve_symmetric(&diag, &self.offdiag, rhs)
        }
    }

    /// `‖r‖_{W⁻¹}` of `r = K x - λ W x`.
    fn residual_norm(&self, x: &[f64], lambda: f64) -> f64 {
        self.apply(x)
            .iter()
            .zip(self.weight.iter().zip(x))
            .map(|(kx, (w, xi))| {
                let r = kx - lambda * w * xi;
                r * r / w
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Gershgorin bound on the spectrum of `W⁻¹K`.
    fn spectral_radius_bound(&self) -> f64 {
        let m = self.dimension();
        (0..m)
            .map(|j| {
                let mut row = self.diag[j].abs();
                if j + 1 < m || self.cyclic() {
                    row += self.offdiag[j.min(self.offdiag.len() - 1)].abs();
                }
                if j > 0 {
                    row += self.offdiag[j - 1].abs();
                } else if self.cyclic() {
                    row += self.offdiag[m - 1].abs();
                }
                row / self.weight[j]
            })
            .fold(0.0, f64::max)
    }

    fn to_nodal(&self, x: &[f64]) -> Vec<f64> {
        let grid = self.grid();
        let mut values = vec![0.0; grid.intervals() + 1];
        for (j, v) in x.iter().enumerate() {
            values[self.node_of(j)] = *v;
        }
        match self.boundary {
            Boundary::Dirichlet => {}
            Boundary::Neumann => {
                values[0] = values[1];
                values[grid.intervals()] = values[grid.intervals() - 1];
            }
            Boundary::Periodic => values[grid.intervals()] = values[0],
        }
        values
    }
}

/// Assembles the flux-form operator. `profile` must be the profile `geom`
/// was computed from.
pub fn assemble(kind: OperatorKind, profile: &WarpProfile, geom: &OrbitGeometry) -> Result<DiscreteOperator> {
    profile.ensure_usable()?;
    let grid = *geom.grid();
    grid.ensure_fits(profile)?;
    if grid.topology() == Topology::SphereLike && kind == OperatorKind::RoughVector && grid.intervals() < MIN_INTERVALS {
        return Err(LabError::GridTooCoarse { n: grid.intervals(), min: MIN_INTERVALS });
    }
    let boundary = match (grid.topology(), kind) {
        (Topology::Periodic, _) => Boundary::Periodic,
        (Topology::SphereLike, OperatorKind::RoughVector) => Boundary::Dirichlet,
        (Topology::SphereLike, OperatorKind::ScalarLaplacian) => Boundary::Neumann,
    };
    let dr = grid.spacing();
    let hw = geom.half_weight();
    let nodes = grid.regular_nodes();
    let first_node = nodes.start;
    let m = nodes.len();

    let weight: Vec<f64> = nodes.clone().map(|i| geom.weight()[i] * dr).collect();
    let mut potential: Vec<f64> = match kind {
        OperatorKind::RoughVector => nodes.clone().map(|i| geom.cell_potential(i)).collect(),
        OperatorKind::ScalarLaplacian => vec![0.0; m],
    };
    // edge e joins unknowns e and e+1, i.e. nodes first+e and first+e+1
    let conductance: Vec<f64> = match boundary {
        Boundary::Periodic => (0..m).map(|e| hw[e] / dr).collect(),
        _ => (0..m - 1).map(|e| hw[first_node + e] / dr).collect(),
    };
    if boundary == Boundary::Dirichlet {
        potential[0] += hw[0] / dr;
        potential[m - 1] += hw[grid.intervals() - 1] / dr;
    }

    let mut diag = potential.clone();
    for (e, g) in conductance.iter().enumerate() {
        diag[e] += g;
        diag[(e + 1) % m] += g;
    }
    let offdiag: Vec<f64> = conductance.iter().map(|g| -g).collect();

    Ok(DiscreteOperator {
        kind,
        boundary,
        diag,
        offdiag,
        weight,
        conductance,
        potential,
        first_node,
        geometry: geom.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for `‖K x - λ W x‖_{W⁻¹} / ‖x‖_W`.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 5000 }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Eigenfunction {
    Field(InvariantField),
    Function(InvariantFunction),
}

impl Eigenfunction {
    pub fn values(&self) -> &[f64] {
        match self {
            Eigenfunction::Field(f) => f.values(),
            Eigenfunction::Function(h) => h.values(),
        }
    }

    pub fn as_field(&self) -> Option<&InvariantField> {
        match self {
            Eigenfunction::Field(f) => Some(f),
            Eigenfunction::Function(_) => None,
        }
    }

    pub fn as_function(&self) -> Option<&InvariantFunction> {
        match self {
            Eigenfunction::Function(h) => Some(h),
            Eigenfunction::Field(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub lambda: f64,
    /// Normalised to `∫ f² w dr = 1`, first non-negligible entry positive.
    pub eigenfunction: Eigenfunction,
    /// Rayleigh quotient of the eigenfunction recomputed from the geometry
    /// quadrature (not from the assembled matrix).
    pub rayleigh: f64,
    /// Final `‖K x - λ W x‖_{W⁻¹}` with `‖x‖_W = 1`.
    pub residual: f64,
    /// Round-off floor of the residual for this operator; convergence is
    /// declared at `max(tol, residual_floor)`.
    pub residual_floor: f64,
    pub iterations: usize,
    pub shift: f64,
    /// Number of times the shift was moved off a singular factorisation.
    pub shift_perturbations: usize,
    pub grid_n: usize,
    pub extrapolated: Option<f64>,
}

fn default_shift(op: &DiscreteOperator) -> f64 {
    // a little below zero: the spectrum is non-negative and the lowest
    // eigenvalue is of order (π/L)² or smaller
    let l = op.grid().length();
    -0.01 * (std::f64::consts::PI / l).powi(2)
}

fn seed(op: &DiscreteOperator, deflate: bool) -> Vec<f64> {
    use std::f64::consts::PI;
    let grid = op.grid();
    let l = grid.length();
    (0..op.dimension())
        .map(|j| {
            let r = grid.node(op.node_of(j));
            match (op.boundary, deflate) {
                (Boundary::Dirichlet, _) => (PI * r / l).sin(),
                (Boundary::Neumann, false) | (Boundary::Periodic, false) => 1.0,
                (Boundary::Neumann, true) => (PI * r / l).cos() + 0.3 * (2.0 * PI * r / l).cos(),
                (Boundary::Periodic, true) => {
                    let t = 2.0 * PI * r / l;
                    t.cos() + 0.3 * t.sin() + 0.1 * (2.0 * t).cos()
                }
            }
        })
        .collect()
}

fn remove_constant(op: &DiscreteOperator, x: &mut [f64]) {
    let total: f64 = op.weight.iter().sum();
    let mean = op.weight.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>() / total;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn inverse_iteration(op: &DiscreteOperator, opts: &SolverOptions, deflate: bool) -> Result<SpectralResult> {
    if !(opts.tol > 0.0) {
        return Err(LabError::InvalidArgument(format!("solver tolerance must be positive, got {}", opts.tol)));
    }
    let mut x = seed(op, deflate);
    if deflate {
        remove_constant(op, &mut x);
    }
    let norm = op.mass_inner(&x, &x).sqrt();
    x.iter_mut().for_each(|v| *v /= norm);

    let floor = 4.0 * f64::EPSILON * op.spectral_radius_bound();
    let target = opts.tol.max(floor);
    let mut shift = default_shift(op);
    let mut perturbations = 0;
    let mut lambda = op.quadratic_form(&x);
    let mut residual = op.residual_norm(&x, lambda);
    let mut iterations = 0;

    while residual > target {
        if iterations >= opts.max_iterations {
            return Err(LabError::NonConvergence { iterations, residual });
        }
        let rhs: Vec<f64> = op.weight.iter().zip(&x).map(|(w, v)| w * v).collect();
        let mut y = match op.shifted_solve(shift, &rhs) {
            Ok(y) => y,
            Err(_) => {
                perturbations += 1;
                if perturbations > 32 {
                    return Err(LabError::NonConvergence { iterations, residual });
                }
                shift = 2.0 * shift - 1e-8 * (1.0 + shift.abs());
                continue;
            }
        };
        if deflate {
            remove_constant(op, &mut y);
        }
        let norm = op.mass_inner(&y, &y).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(LabError::NonConvergence { iterations, residual });
        }
        x = y.into_iter().map(|v| v / norm).collect();
        lambda = op.quadratic_form(&x);
        residual = op.residual_norm(&x, lambda);
        iterations += 1;
    }

    // sign convention: first non-negligible entry positive
    let peak = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if let Some(first) = x.iter().find(|v| v.abs() > 1e-8 * peak) {
        if *first < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }

    let grid = *op.grid();
    let nodal = op.to_nodal(&x);
    let (eigenfunction, rayleigh) = match op.kind {
        OperatorKind::RoughVector => {
            let field = InvariantField::new(grid, nodal)?;
            let q = calculus::energy_functional(&field, op.geometry())?;
            (Eigenfunction::Field(field), q)
        }
        OperatorKind::ScalarLaplacian => {
            let h = InvariantFunction::new(grid, nodal)?;
            let q = calculus::dirichlet_quotient(&h, op.geometry())?;
            (Eigenfunction::Function(h), q)
        }
    };
    Ok(SpectralResult {
        lambda,
        eigenfunction,
        rayleigh,
        residual,
        residual_floor: floor,
        iterations,
        shift,
        shift_perturbations: perturbations,
        grid_n: grid.intervals(),
        extrapolated: None,
    })
}

/// Smallest eigenpair of `K x = λ W x` by shifted inverse iteration from a
/// fixed seed (`sin(πr/L)` for Dirichlet, constants otherwise).
pub fn smallest_eigenpair(op: &DiscreteOperator, opts: &SolverOptions) -> Result<SpectralResult> {
    inverse_iteration(op, opts, false)
}

/// Smallest eigenvalue of the scalar Laplacian on the `W`-orthogonal
/// complement of the constants.
pub fn first_nonzero_scalar_eigenvalue(op: &DiscreteOperator, opts: &SolverOptions) -> Result<SpectralResult> {
    if op.kind != OperatorKind::ScalarLaplacian {
        return Err(LabError::InvalidArgument(
            "first nonzero eigenvalue is defined for the scalar Laplacian only".into(),
        ));
    }
    inverse_iteration(op, opts, true)
}

/// The eigenpair the lab cares about for each operator kind: the smallest
/// eigenvalue of the rough Laplacian, the first nonzero one of the scalar
/// Laplacian.
pub fn principal_mode(
    profile: &WarpProfile,
    kind: OperatorKind,
    intervals: usize,
    opts: &SolverOptions,
) -> Result<SpectralResult> {
    let grid = RadialGrid::for_profile(profile, intervals)?;
    let geom = orbit_geometry(profile, &grid)?;
    let op = assemble(kind, profile, &geom)?;
    match kind {
        OperatorKind::RoughVector => smallest_eigenpair(&op, opts),
        OperatorKind::ScalarLaplacian => first_nonzero_scalar_eigenvalue(&op, opts),
    }
}

/// Richardson extrapolation of a quantity converging like `h^order`, from
/// values on grids whose spacings differ by `ratio`.
pub fn richardson(coarse: f64, fine: f64, ratio: f64, order: f64) -> f64 {
    fine + (fine - coarse) / (ratio.powf(order) - 1.0)
}

/// [`principal_mode`] at `intervals` with the Richardson value from the
/// grid with half as many intervals.
pub fn principal_mode_extrapolated(
    profile: &WarpProfile,
    kind: OperatorKind,
    intervals: usize,
    opts: &SolverOptions,
) -> Result<SpectralResult> {
    if !intervals.is_multiple_of(2) {
        return Err(LabError::InvalidArgument("Richardson extrapolation needs an even N".into()));
    }
    let coarse = principal_mode(profile, kind, intervals / 2, opts)?;
    let mut fine = principal_mode(profile, kind, intervals, opts)?;
    fine.extrapolated = Some(richardson(coarse.lambda, fine.lambda, 2.0, 2.0));
    Ok(fine)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ObservedOrder {
    Order(f64),
    /// The eigenvalue does not change between grids (up to round-off).
    Exact,
    /// Differences do not shrink monotonically, no order can be fitted.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub intervals: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub kind: OperatorKind,
    pub rows: Vec<ConvergenceRow>,
    /// One entry per consecutive triple of grids.
    pub orders: Vec<ObservedOrder>,
    /// Richardson value from the two finest grids with the last observed
    /// order (or 2 when none is available).
    pub extrapolated: Option<f64>,
}

/// Observed order from three values on grids with spacings `h1 > h2 > h3`:
/// solves `(λ1 - λ2)/(λ2 - λ3) = (h1^p - h2^p)/(h2^p - h3^p)`. For constant
/// refinement ratio `q` this is `log_q` of the difference ratio.
pub fn observed_order(h: [f64; 3], lambda: [f64; 3]) -> ObservedOrder {
    let d1 = lambda[0] - lambda[1];
    let d2 = lambda[1] - lambda[2];
    let scale = lambda.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let noise = 1e-13 * scale;
    if d1.abs() <= noise && d2.abs() <= noise {
        return ObservedOrder::Exact;
    }
    if d2 == 0.0 || d1 / d2 <= 1.0 {
        return ObservedOrder::Undetermined;
    }
    let target = d1 / d2;
    let model = |p: f64| (h[0].powf(p) - h[1].powf(p)) / (h[1].powf(p) - h[2].powf(p));
    let (mut lo, mut hi) = (1e-3, 20.0);
    if !(model(lo) <= target && model(hi) >= target) {
        return ObservedOrder::Undetermined;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ObservedOrder::Order(0.5 * (lo + hi))
}

pub fn convergence_study(
    profile: &WarpProfile,
    kind: OperatorKind,
    grids: &[usize],
    opts: &SolverOptions,
) -> Result<ConvergenceStudy> {
    use rayon::prelude::*;

    if grids.len() < 3 {
        return Err(LabError::InvalidArgument(format!(
            "a convergence study needs at least 3 grids, got {}",
            grids.len()
        )));
    }
    if grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::InvalidArgument("grids must be strictly increasing".into()));
    }
    if let Some(&g) = grids.iter().find(|&&g| g < MIN_INTERVALS) {
        return Err(LabError::GridTooCoarse { n: g, min: MIN_INTERVALS });
    }
    let rows = grids
        .par_iter()
        .map(|&n| {
            principal_mode(profile, kind, n, opts).map(|res| ConvergenceRow { intervals: n, lambda: res.lambda })
        })
        .collect::<Result<Vec<_>>>()?;
    let l = profile.length();
    let orders: Vec<ObservedOrder> = rows
        .windows(3)
        .map(|w| {
            let h = [0, 1, 2].map(|k| l / w[k].intervals as f64);
            observed_order(h, [w[0].lambda, w[1].lambda, w[2].lambda])
        })
        .collect();
    let p = match orders.last() {
        Some(ObservedOrder::Order(p)) => *p,
        _ => 2.0,
    };
    let [coarse, fine] = [&rows[rows.len() - 2], &rows[rows.len() - 1]];
    let extrapolated = match orders.last() {
        Some(ObservedOrder::Exact) => Some(fine.lambda),
        _ => Some(richardson(
            coarse.lambda,
            fine.lambda,
            fine.intervals as f64 / coarse.intervals as f64,
            p,
        )),
    };
    Ok(ConvergenceStudy { kind, rows, orders, extrapolated })
}
