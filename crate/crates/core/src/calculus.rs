//! Invariant vector fields `V = fN`, invariant functions `h`, and the
//! functional and pointwise identities relating them.
//!
//! Derivatives are centred differences on the uniform grid (wrapping around
//! for periodic grids). Integrals are the trapezoidal rule with the volume
//! weight `w`, see [`OrbitGeometry::integrate`]. The gradient part of the
//! energy functional uses differences centred at the half nodes with the
//! midpoint weights, which makes it coincide with the quadratic form of the
//! discrete rough Laplacian.

use crate::geometry::{OrbitGeometry, RicciProfile};
use crate::warp::{RadialGrid, Topology};
use crate::{LabError, Result};

/// Radial profile `f` of an invariant field `V = fN`, stored on all `N + 1`
/// nodes. Sphere-like fields vanish at the poles; periodic fields repeat.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantField {
    values: Vec<f64>,
    grid: RadialGrid,
}

/// Invariant function `h`, stored on all `N + 1` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantFunction {
    values: Vec<f64>,
    grid: RadialGrid,
}

fn check_len(grid: &RadialGrid, len: usize) -> Result<()> {
    if len != grid.intervals() + 1 {
        return Err(LabError::GridMismatch(format!(
            "expected {} nodal values, got {len}",
            grid.intervals() + 1
        )));
    }
    Ok(())
}

fn check_periodic_copy(grid: &RadialGrid, values: &[f64]) -> Result<()> {
    if grid.topology() == Topology::Periodic {
        let (first, last) = (values[0], values[grid.intervals()]);
        if (first - last).abs() > 1e-12 * first.abs().max(last.abs()).max(1.0) {
            return Err(LabError::InvalidArgument(format!(
                "periodic values must repeat at node N ({first} vs {last})"
            )));
        }
    }
    Ok(())
}

impl InvariantField {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        if grid.topology() == Topology::SphereLike {
            let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            for node in [0, grid.intervals()] {
                if values[node].abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                    return Err(LabError::PoleValue { node, value: values[node] });
                }
            }
        }
        check_periodic_copy(&grid, &values)?;
        let mut field = Self { values, grid };
        field.pin_boundary();
        Ok(field)
    }

    /// Samples `f` on the regular nodes and fills the boundary by the field
    /// invariants (zero at poles, periodic copy at node `N`).
    pub fn from_fn<F: Fn(f64) -> f64>(grid: RadialGrid, f: F) -> Self {
        let mut field = Self {
            values: grid.nodes().into_iter().map(f).collect(),
            grid,
        };
        field.pin_boundary();
        field
    }

    fn pin_boundary(&mut self) {
        let last = self.grid.intervals();
        match self.grid.topology() {
            Topology::SphereLike => {
                self.values[0] = 0.0;
                self.values[last] = 0.0;
            }
            Topology::Periodic => self.values[last] = self.values[0],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            grid: self.grid,
        }
    }

    /// `f'` at regular node `i` (centred difference).
    pub fn derivative_at(&self, i: usize) -> f64 {
        centred_difference(&self.values, &self.grid, i)
    }

    /// `f'` on all regular nodes.
    pub fn derivative(&self) -> Vec<f64> {
        self.grid.regular_nodes().map(|i| self.derivative_at(i)).collect()
    }

    pub fn coarsen(&self) -> Result<Self> {
        let grid = self.grid.coarsen()?;
        Ok(Self {
            values: (0..=grid.intervals()).map(|j| self.values[2 * j]).collect(),
            grid,
        })
    }
}

impl InvariantFunction {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        check_periodic_copy(&grid, &values)?;
        Ok(Self { values, grid })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: RadialGrid, h: F) -> Self {
        let mut values: Vec<f64> = grid.nodes().into_iter().map(h).collect();
        if grid.topology() == Topology::Periodic {
            values[grid.intervals()] = values[0];
        }
        Self { values, grid }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// Profile of `grad h = h' N`: centred differences on regular nodes,
    /// zero at the poles.
    pub fn gradient(&self) -> InvariantField {
        let mut values = vec![0.0; self.values.len()];
        for i in self.grid.regular_nodes() {
            values[i] = centred_difference(&self.values, &self.grid, i);
        }
        let mut field = InvariantField { values, grid: self.grid };
        field.pin_boundary();
        field
    }

    /// `h''` on regular nodes by the compact three-point stencil.
    pub fn second_derivative(&self) -> Vec<f64> {
        let v = &self.values;
        let n = self.grid.intervals();
        let dr2 = self.grid.spacing().powi(2);
        self.grid
            .regular_nodes()
            .map(|i| {
                let (prev, next) = match self.grid.topology() {
                    Topology::Periodic => ((i + n - 1) % n, (i + 1) % n),
                    Topology::SphereLike => (i - 1, i + 1),
                };
                (v[next] - 2.0 * v[i] + v[prev]) / dr2
            })
            .collect()
    }

    /// Second-order one-sided slopes at the two ends; both vanish for a smooth
    /// invariant function on a sphere-like manifold.
    pub fn end_slopes(&self) -> (f64, f64) {
        let v = &self.values;
        let dr = self.grid.spacing();
        let n = self.grid.intervals();
        (
            (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dr),
            (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * dr),
        )
    }

    pub fn coarsen(&self) -> Result<Self> {
        let grid = self.grid.coarsen()?;
        Ok(Self {
            values: (0..=grid.intervals()).map(|j| self.values[2 * j]).collect(),
            grid,
        })
    }
}

fn centred_difference(values: &[f64], grid: &RadialGrid, i: usize) -> f64 {
    let n = grid.intervals();
    let dr = grid.spacing();
    let (prev, next) = match grid.topology() {
        Topology::Periodic => ((i + n - 1) % n, (i + 1) % n),
        Topology::SphereLike => (i - 1, i + 1),
    };
    (values[next] - values[prev]) / (2.0 * dr)
}

fn ensure_same_grid(a: &RadialGrid, geom: &OrbitGeometry) -> Result<()> {
    a.ensure_matches(geom.grid())
}

/// `∫ f² w dr`.
pub fn mass(field: &InvariantField, geom: &OrbitGeometry) -> Result<f64> {
    ensure_same_grid(field.grid(), geom)?;
    let f = field.values();
    Ok(geom.integrate(|i| f[i] * f[i]))
}

/// `∫ (f'² + |B|² f²) w dr`, the integrated `‖∇V‖²`, with `f'²w` evaluated at
/// half nodes and the `|B|²` term by [`OrbitGeometry::cell_potential`].
pub fn energy(field: &InvariantField, geom: &OrbitGeometry) -> Result<f64> {
    ensure_same_grid(field.grid(), geom)?;
    let f = field.values();
    let dr = geom.grid().spacing();
    let gradient: f64 = geom
        .half_weight()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let d = f[i + 1] - f[i];
            w * d * d
        })
        .sum::<f64>()
        / dr;
    let potential: f64 = geom.grid().regular_nodes().map(|i| geom.cell_potential(i) * f[i] * f[i]).sum();
    Ok(gradient + potential)
}

/// Energy functional `F(V) = ∫‖∇V‖² / ∫‖V‖²` of the invariant field `V = fN`,
/// using `‖∇V‖² = f'² + f²|B|²`.
pub fn energy_functional(field: &InvariantField, geom: &OrbitGeometry) -> Result<f64> {
    let denominator = mass(field, geom)?;
    if !(denominator > 0.0) {
        return Err(LabError::ZeroField);
    }
    Ok(energy(field, geom)? / denominator)
}

/// `∫ h'² w / ∫ h² w` for an invariant function, with the same half-node
/// quadrature as [`energy`].
pub fn dirichlet_quotient(h: &InvariantFunction, geom: &OrbitGeometry) -> Result<f64> {
    ensure_same_grid(h.grid(), geom)?;
    let v = h.values();
    let dr = geom.grid().spacing();
    let gradient: f64 = geom
        .half_weight()
        .iter()
        .enumerate()
        .map(|(i, w)| w * (v[i + 1] - v[i]).powi(2))
        .sum::<f64>()
        / dr;
    let denominator = geom.integrate(|i| v[i] * v[i]);
    if !(denominator > 0.0) {
        return Err(LabError::ZeroField);
    }
    Ok(gradient / denominator)
}

/// `f = N(h)` on all nodes together with `N(f)` on regular nodes.
struct RadialJet {
    f: Vec<f64>,
    df: Vec<f64>,
}

impl RadialJet {
    fn of_field(field: &InvariantField) -> Self {
        Self { f: field.values().to_vec(), df: field.derivative() }
    }

    /// From a potential: `N(N(h))` uses the compact second difference rather
    /// than differencing the differenced values twice.
    fn of_potential(h: &InvariantFunction) -> Self {
        Self { f: h.gradient().values().to_vec(), df: h.second_derivative() }
    }

    fn laplacian(&self, geom: &OrbitGeometry) -> Vec<f64> {
        let m = (geom.dim() - 1) as f64;
        let first = geom.first_regular();
        geom.grid()
            .regular_nodes()
            .map(|i| self.df[i - first] - m * self.f[i] * geom.h_at(i))
            .collect()
    }

    fn hessian_sq(&self, geom: &OrbitGeometry) -> Vec<f64> {
        let first = geom.first_regular();
        geom.grid()
            .regular_nodes()
            .map(|i| {
                let d = self.df[i - first];
                d * d + self.f[i] * self.f[i] * geom.b2_at(i)
            })
            .collect()
    }
}

/// `Δh = f' - (n-1) f H` on regular nodes, where `f` is the profile of
/// `grad h`.
pub fn laplacian_of_field(field: &InvariantField, geom: &OrbitGeometry) -> Result<Vec<f64>> {
    ensure_same_grid(field.grid(), geom)?;
    Ok(RadialJet::of_field(field).laplacian(geom))
}

pub fn laplacian_of_potential(h: &InvariantFunction, geom: &OrbitGeometry) -> Result<Vec<f64>> {
    ensure_same_grid(h.grid(), geom)?;
    Ok(RadialJet::of_potential(h).laplacian(geom))
}

/// Divergence-form Laplacian `(w h')'/w` on regular nodes, by fluxes through
/// the half nodes. Independent discretisation of [`laplacian_of_potential`].
pub fn divergence_laplacian(h: &InvariantFunction, geom: &OrbitGeometry) -> Result<Vec<f64>> {
    ensure_same_grid(h.grid(), geom)?;
    let v = h.values();
    let n = geom.grid().intervals();
    let dr = geom.grid().spacing();
    let hw = geom.half_weight();
    Ok(geom
        .grid()
        .regular_nodes()
        .map(|i| {
            let left = if i == 0 { n - 1 } else { i - 1 };
            let right_flux = hw[i] * (v[i + 1] - v[i]);
            let left_flux = hw[left] * (v[i] - if i == 0 { v[n - 1] } else { v[i - 1] });
            (right_flux - left_flux) / (dr * dr * geom.weight()[i])
        })
        .collect())
}

/// `|Hess h|² = f'² + f²|B|²` on regular nodes, for `f = h'`.
pub fn hessian_norm_sq(field: &InvariantField, geom: &OrbitGeometry) -> Result<Vec<f64>> {
    ensure_same_grid(field.grid(), geom)?;
    Ok(RadialJet::of_field(field).hessian_sq(geom))
}

/// Pointwise `n|Hess h|² - (Δh)² ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchySchwarzReport {
    pub min_defect: f64,
    pub argmin_r: f64,
    /// `C Δ²` estimated from the change of the minimum under grid halving,
    /// floored at the round-off level of the compared quantities.
    pub tol_disc: f64,
    /// Nodes where equality holds to within `tol_disc`.
    pub equality_nodes: Vec<usize>,
    pub passed: bool,
    /// `∫ (n|Hess h|² - (Δh)²) w dr`.
    pub integrated_defect: f64,
}

fn defect_profile(h: &InvariantFunction, geom: &OrbitGeometry) -> Result<(Vec<f64>, f64)> {
    let jet = RadialJet::of_potential(h);
    let n = geom.dim() as f64;
    let lap = jet.laplacian(geom);
    let hess = jet.hessian_sq(geom);
    let scale = lap
        .iter()
        .zip(&hess)
        .fold(0.0_f64, |m, (l, h)| m.max(l * l).max(n * h));
    Ok((lap.iter().zip(&hess).map(|(l, h)| n * h - l * l).collect(), scale))
}

pub fn cauchy_schwarz_check(h: &InvariantFunction, geom: &OrbitGeometry) -> Result<CauchySchwarzReport> {
    ensure_same_grid(h.grid(), geom)?;
    let (defect, scale) = defect_profile(h, geom)?;
    let first = geom.first_regular();
    let (k, min_defect) = defect
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (k, d)| if d < best.1 { (k, d) } else { best });
    let roundoff = 64.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let tol_disc = match (h.coarsen(), geom.coarsen()) {
        (Ok(hc), Ok(gc)) if !gc.grid().regular_nodes().is_empty() => {
            let (coarse, _) = defect_profile(&hc, &gc)?;
            let coarse_min = coarse.iter().copied().fold(f64::INFINITY, f64::min);
            (min_defect - coarse_min).abs().max(roundoff)
        }
        _ => roundoff,
    };
    let equality_nodes = defect
        .iter()
        .enumerate()
        .filter(|(_, d)| d.abs() <= tol_disc)
        .map(|(j, _)| j + first)
        .collect();
    let integrated_defect = geom.integrate(|i| defect[i - first]);
    Ok(CauchySchwarzReport {
        min_defect,
        argmin_r: geom.grid().node(k + first),
        tol_disc,
        equality_nodes,
        passed: min_defect >= -tol_disc,
        integrated_defect,
    })
}

/// `h(r) = ∫₀^r f` by the cumulative trapezoidal rule (so `h(0) = 0`).
///
/// Periodic fields must integrate to zero over the period; otherwise the
/// field is not a gradient.
pub fn reconstruct_potential(field: &InvariantField) -> Result<InvariantFunction> {
    let grid = *field.grid();
    let f = field.values();
    let dr = grid.spacing();
    let mut h = vec![0.0; f.len()];
    for i in 1..f.len() {
        h[i] = h[i - 1] + 0.5 * dr * (f[i - 1] + f[i]);
    }
    if grid.topology() == Topology::Periodic {
        let total = h[grid.intervals()];
        let size: f64 = f.iter().map(|v| v.abs()).sum::<f64>() * dr;
        if total.abs() > 1e-9 * size.max(1.0) {
            return Err(LabError::NonExactField { integral: total });
        }
        let last = grid.intervals();
        h[last] = h[0];
    }
    Ok(InvariantFunction { values: h, grid })
}

/// The three integrals in Bochner's formula for an invariant `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BochnerTerms {
    /// `∫ (Δh)² w dr`
    pub laplacian_sq: f64,
    /// `∫ Ric(grad h, grad h) w dr = ∫ Ric(N,N) f² w dr`
    pub ricci: f64,
    /// `∫ |Hess h|² w dr`
    pub hessian_sq: f64,
}

impl BochnerTerms {
    pub fn residual(&self) -> f64 {
        (self.laplacian_sq - self.ricci - self.hessian_sq).abs() / self.laplacian_sq.max(1.0)
    }
}

pub fn bochner_terms(h: &InvariantFunction, geom: &OrbitGeometry, ricci: &RicciProfile) -> Result<BochnerTerms> {
    ensure_same_grid(h.grid(), geom)?;
    let jet = RadialJet::of_potential(h);
    let f = &jet.f;
    let first = geom.first_regular();
    let lap = jet.laplacian(geom);
    let hess = jet.hessian_sq(geom);
    if ricci.ric_radial.len() != lap.len() {
        return Err(LabError::GridMismatch("Ricci profile does not match the geometry grid".into()));
    }
    Ok(BochnerTerms {
        laplacian_sq: geom.integrate(|i| lap[i - first].powi(2)),
        ricci: geom.integrate(|i| ricci.radial_at(i) * f[i] * f[i]),
        hessian_sq: geom.integrate(|i| hess[i - first]),
    })
}

/// `|∫(Δh)² - ∫Ric(grad h, grad h) - ∫|Hess h|²| / max(1, ∫(Δh)²)`.
pub fn bochner_residual(h: &InvariantFunction, geom: &OrbitGeometry, ricci: &RicciProfile) -> Result<f64> {
    Ok(bochner_terms(h, geom, ricci)?.residual())
}

/// `(1/(n-1)) ∫ Ric(V,V) w / ∫ f² w`, the Bochner lower bound for `F(V)`.
pub fn bochner_bound(field: &InvariantField, geom: &OrbitGeometry, ricci: &RicciProfile) -> Result<f64> {
    let denominator = mass(field, geom)?;
    if !(denominator > 0.0) {
        return Err(LabError::ZeroField);
    }
    if ricci.ric_radial.len() != geom.mean_curvature().len() {
        return Err(LabError::GridMismatch("Ricci profile does not match the geometry grid".into()));
    }
    let f = field.values();
    let numerator = geom.integrate(|i| ricci.radial_at(i) * f[i] * f[i]);
    Ok(numerator / ((geom.dim() - 1) as f64 * denominator))
}
