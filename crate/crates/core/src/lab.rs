//! The bound `λ_min ≥ κ²` for invariant fields, its equality diagnostics and
//! the first-eigenvalue rigidity criterion, run as numerical experiments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calculus::{self, InvariantField};
use crate::geometry::{orbit_geometry, ricci_profile, OrbitGeometry, RicciProfile};
use crate::spectral::{self, OperatorKind, SolverOptions};
use crate::warp::{PresetKind, RadialGrid, Topology, WarpProfile};
use crate::{LabError, Result};

/// Lower end of the rigidity detection band.
pub const MIN_TOL_RIGID: f64 = 1e-4;
/// Largest `max |φ - sin(κr)/κ|` allowed for a profile flagged as round.
/// Calibrated on the bump family: the band `|gap| ≤ tol_rigid` admits
/// `eps` up to about `1e-5`, whose shape distance is below `1e-4`.
pub const TOL_SHAPE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabOptions {
    pub intervals: usize,
    pub solver: SolverOptions,
    /// Discretisation tolerance; estimated by grid halving when `None`.
    pub tol_disc: Option<f64>,
}

impl LabOptions {
    pub fn with_grid(intervals: usize) -> Self {
        Self { intervals, solver: SolverOptions::default(), tol_disc: None }
    }
}

impl Default for LabOptions {
    fn default() -> Self {
        Self::with_grid(4096)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    RoundSphereDetected,
    StrictlyAboveBound,
    HypothesisNotMet,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::RoundSphereDetected => "RoundSphereDetected",
            Verdict::StrictlyAboveBound => "StrictlyAboveBound",
            Verdict::HypothesisNotMet => "HypothesisNotMet",
            Verdict::Inconclusive => "Inconclusive",
        };
        f.write_str(s)
    }
}

/// Residuals of the equality conditions, evaluated on a unit-mass field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RigidityDiagnostics {
    /// `max_i |H² - |B|²/(n-1)| f²`.
    pub umbilic_residual: f64,
    /// `‖N(f) + H f‖_{L²(w)}`.
    pub radial_ode_residual: f64,
    /// `|∫(Δh)² - n∫|Hess h|²| / (n∫|Hess h|²)` for `grad h = V`.
    pub laplacian_equality_residual: f64,
    /// `∫ (Ric(N,N)/(n-1) - κ²) f² w / ∫ f² w`: how far `Ric(V,V)` is from its
    /// lower bound on the support of the field.
    pub ricci_equality_residual: f64,
}

impl RigidityDiagnostics {
    pub fn max(&self) -> f64 {
        self.umbilic_residual
            .max(self.radial_ode_residual)
            .max(self.laplacian_equality_residual)
            .max(self.ricci_equality_residual)
    }
}

pub fn rigidity_diagnostics(
    minimizer: &InvariantField,
    geom: &OrbitGeometry,
    ricci: &RicciProfile,
) -> Result<RigidityDiagnostics> {
    let mass = calculus::mass(minimizer, geom)?;
    if !(mass > 0.0) {
        return Err(LabError::ZeroField);
    }
    let field = minimizer.scaled(1.0 / mass.sqrt());
    let f = field.values();
    let n = geom.dim() as f64;
    let first = geom.first_regular();

    let umbilic_residual = geom
        .grid()
        .regular_nodes()
        .map(|i| {
            let h = geom.h_at(i);
            (h * h - geom.b2_at(i) / (n - 1.0)).abs() * f[i] * f[i]
        })
        .fold(0.0, f64::max);

    let df = field.derivative();
    let radial_ode_residual = geom
        .integrate(|i| (df[i - first] + geom.h_at(i) * f[i]).powi(2))
        .sqrt();

    let lap = calculus::laplacian_of_field(&field, geom)?;
    let hess = calculus::hessian_norm_sq(&field, geom)?;
    let lap_sq = geom.integrate(|i| lap[i - first].powi(2));
    let hess_sq = geom.integrate(|i| hess[i - first]);
    let laplacian_equality_residual = if hess_sq > 0.0 {
        (lap_sq - n * hess_sq).abs() / (n * hess_sq)
    } else {
        0.0
    };

    let ricci_equality_residual = calculus::bochner_bound(&field, geom, ricci)? - ricci.kappa2;

    Ok(RigidityDiagnostics {
        umbilic_residual,
        radial_ode_residual,
        laplacian_equality_residual,
        ricci_equality_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport {
    pub profile: String,
    pub n: usize,
    pub topology: Topology,
    #[serde(rename = "grid_N")]
    pub grid_n: usize,
    pub kappa2: f64,
    pub ric_min: f64,
    pub lambda_min: f64,
    /// `λ_min` on the grid with half the intervals, when it was computed.
    pub lambda_coarse: Option<f64>,
    pub gap: f64,
    pub tol_disc: f64,
    pub tol_rigid: f64,
    pub bound_holds: bool,
    pub rigidity: RigidityDiagnostics,
    pub obata_mu1: f64,
    /// `|μ₁ - nκ²|`, reported when `κ² > 0`.
    pub obata_defect: Option<f64>,
    pub verdict: Verdict,
}

pub fn tol_rigid(tol_disc: f64) -> f64 {
    MIN_TOL_RIGID.max(10.0 * tol_disc)
}

struct Workspace {
    geom: OrbitGeometry,
    ricci: RicciProfile,
}

fn workspace(profile: &WarpProfile, intervals: usize) -> Result<Workspace> {
    let grid = RadialGrid::for_profile(profile, intervals)?;
    Ok(Workspace { geom: orbit_geometry(profile, &grid)?, ricci: ricci_profile(profile, &grid)? })
}

fn scalar_mu1(profile: &WarpProfile, ws: &Workspace, opts: &SolverOptions) -> Result<f64> {
    let op = spectral::assemble(OperatorKind::ScalarLaplacian, profile, &ws.geom)?;
    Ok(spectral::first_nonzero_scalar_eigenvalue(&op, opts)?.lambda)
}

/// Composes curvature, both spectra and the rigidity residuals into a verdict.
pub fn check_bound(profile: &WarpProfile, opts: &LabOptions) -> Result<TheoremReport> {
    profile.ensure_usable()?;
    let ws = workspace(profile, opts.intervals)?;
    let op = spectral::assemble(OperatorKind::RoughVector, profile, &ws.geom)?;
    let vector = spectral::smallest_eigenpair(&op, &opts.solver)?;
    let lambda_min = vector.lambda;
    let minimizer = vector.eigenfunction.as_field().expect("rough Laplacian yields a field");

    let (tol_disc, lambda_coarse) = match opts.tol_disc {
        Some(t) => (t, None),
        None => {
            let coarse = spectral::principal_mode(profile, OperatorKind::RoughVector, opts.intervals / 2, &opts.solver)?;
            let t = (lambda_min - coarse.lambda).abs().max(1e-12 * lambda_min.abs().max(1.0));
            (t, Some(coarse.lambda))
        }
    };
    let tol_rigid = tol_rigid(tol_disc);

    let obata_mu1 = scalar_mu1(profile, &ws, &opts.solver)?;
    let rigidity = rigidity_diagnostics(minimizer, &ws.geom, &ws.ricci)?;
    let kappa2 = ws.ricci.kappa2;
    let n = profile.dim() as f64;
    let gap = lambda_min - kappa2;
    let bound_holds = gap >= -tol_disc;
    let hypothesis = kappa2 > 0.0 && profile.topology() == Topology::SphereLike;
    let obata_defect = (kappa2 > 0.0).then(|| (obata_mu1 - n * kappa2).abs());

    let verdict = if !hypothesis {
        Verdict::HypothesisNotMet
    } else if !bound_holds {
        Verdict::Inconclusive
    } else if gap > tol_rigid {
        Verdict::StrictlyAboveBound
    } else if obata_defect.unwrap_or(f64::INFINITY) <= tol_rigid * n && rigidity.max() < tol_rigid {
        Verdict::RoundSphereDetected
    } else {
        Verdict::Inconclusive
    };

    Ok(TheoremReport {
        profile: tag_label(profile),
        n: profile.dim(),
        topology: profile.topology(),
        grid_n: opts.intervals,
        kappa2,
        ric_min: ws.ricci.ric_min,
        lambda_min,
        lambda_coarse,
        gap,
        tol_disc,
        tol_rigid,
        bound_holds,
        rigidity,
        obata_mu1,
        obata_defect,
        verdict,
    })
}

fn tag_label(profile: &WarpProfile) -> String {
    match profile.tag() {
        crate::warp::PresetTag::Analytic(kind) => kind.to_string(),
        crate::warp::PresetTag::Samples { count } => format!("samples({count})"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObataReport {
    pub mu1: f64,
    pub n_kappa2: f64,
    /// `|μ₁ - nκ²|`
    pub defect: f64,
    /// `‖Δg + nκ² g‖_{L²(w)}` for `g = N(f)`, `f` the vector minimizer,
    /// with `g` scaled to unit `L²(w)` norm.
    pub derived_residual: f64,
    /// `derived_residual / (nκ²)`.
    pub derived_relative: f64,
}

/// First-eigenvalue rigidity check; refuses profiles with `κ² ≤ 0`.
pub fn obata_check(profile: &WarpProfile, opts: &LabOptions) -> Result<ObataReport> {
    profile.ensure_usable()?;
    let ws = workspace(profile, opts.intervals)?;
    let kappa2 = ws.ricci.kappa2;
    if !(kappa2 > 0.0) {
        return Err(LabError::HypothesisNotMet { kappa2 });
    }
    let n_kappa2 = profile.dim() as f64 * kappa2;
    let scalar = spectral::assemble(OperatorKind::ScalarLaplacian, profile, &ws.geom)?;
    let mu1 = spectral::first_nonzero_scalar_eigenvalue(&scalar, &opts.solver)?.lambda;

    let vector_op = spectral::assemble(OperatorKind::RoughVector, profile, &ws.geom)?;
    let vector = spectral::smallest_eigenpair(&vector_op, &opts.solver)?;
    let field = vector.eigenfunction.as_field().expect("rough Laplacian yields a field");
    // g = N(f) on the unknowns of the scalar operator (the regular nodes)
    let g: Vec<f64> = (0..scalar.dimension())
        .map(|j| field.derivative_at(scalar.node_of(j)))
        .collect();
    let kg = scalar.apply(&g);
    let g_norm = scalar.mass_inner(&g, &g).sqrt();
    let derived_residual = kg
        .iter()
        .zip(scalar.weight.iter().zip(&g))
        .map(|(k, (w, gj))| {
            let r = k - n_kappa2 * w * gj;
            r * r / w
        })
        .sum::<f64>()
        .sqrt()
        / g_norm;
    Ok(ObataReport {
        mu1,
        n_kappa2,
        defect: (mu1 - n_kappa2).abs(),
        derived_residual,
        derived_relative: derived_residual / n_kappa2,
    })
}

/// `max_i |φ(r_i) - sin(κ r_i)/κ|` over the grid nodes.
pub fn round_shape_distance(profile: &WarpProfile, kappa2: f64, intervals: usize) -> Result<f64> {
    if !(kappa2 > 0.0) {
        return Err(LabError::HypothesisNotMet { kappa2 });
    }
    let k = kappa2.sqrt();
    let grid = RadialGrid::for_profile(profile, intervals)?;
    Ok(grid
        .nodes()
        .into_iter()
        .map(|r| (profile.phi(r) - (k * r).sin() / k).abs())
        .fold(0.0, f64::max))
}

/// Preset parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    K,
    Eps,
    C,
    A,
}

impl FromStr for SweepParam {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" => Ok(SweepParam::K),
            "eps" => Ok(SweepParam::Eps),
            "c" => Ok(SweepParam::C),
            "a" => Ok(SweepParam::A),
            other => Err(LabError::InvalidArgument(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::K => "k",
            SweepParam::Eps => "eps",
            SweepParam::C => "c",
            SweepParam::A => "a",
        })
    }
}

impl SweepParam {
    pub fn apply(&self, base: PresetKind, value: f64) -> Result<PresetKind> {
        match (self, base) {
            (SweepParam::K, PresetKind::Round { .. }) => Ok(PresetKind::Round { k: value }),
            (SweepParam::Eps, PresetKind::Bump { .. }) => Ok(PresetKind::Bump { eps: value }),
            (SweepParam::C, PresetKind::PeriodicProduct { a, .. }) => Ok(PresetKind::PeriodicProduct { c: value, a }),
            (SweepParam::A, PresetKind::PeriodicProduct { c, .. }) => Ok(PresetKind::PeriodicProduct { c, a: value }),
            (param, base) => Err(LabError::InvalidArgument(format!("parameter {param} does not apply to {base}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub kappa2: Option<f64>,
    pub lambda_min: Option<f64>,
    pub gap: Option<f64>,
    pub obata_defect: Option<f64>,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
}

fn sweep_row(base: PresetKind, dim: usize, param: SweepParam, value: f64, opts: &LabOptions) -> SweepRow {
    let outcome = param
        .apply(base, value)
        .and_then(|kind| WarpProfile::preset(kind, dim))
        .and_then(|profile| check_bound(&profile, opts));
    match outcome {
        Ok(report) => SweepRow {
            param: value,
            kappa2: Some(report.kappa2),
            lambda_min: Some(report.lambda_min),
            gap: Some(report.gap),
            obata_defect: report.obata_defect,
            verdict: Some(report.verdict),
            error: None,
        },
        Err(e) => SweepRow {
            param: value,
            kappa2: None,
            lambda_min: None,
            gap: None,
            obata_defect: None,
            verdict: None,
            error: Some(e.to_string()),
        },
    }
}

/// Runs [`check_bound`] over a one-parameter family. Rows come back in input
/// order; a failing row records its error instead of aborting the sweep.
/// `threads` caps the worker count (all available cores when `None`).
pub fn sweep(
    base: PresetKind,
    dim: usize,
    param: SweepParam,
    values: &[f64],
    opts: &LabOptions,
    threads: Option<usize>,
) -> Result<Vec<SweepRow>> {
    use rayon::prelude::*;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| LabError::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        values
            .par_iter()
            .map(|&v| sweep_row(base, dim, param, v, opts))
            .collect()
    }))
}
