use cohomlab::calculus::{self, InvariantField, InvariantFunction};
use cohomlab::config::{PresetSpec, RunConfig, SweepSpec};
use cohomlab::geometry::{orbit_geometry, ricci_profile};
use cohomlab::lab::SweepParam;
use cohomlab::spectral::{self, OperatorKind, SolverOptions};
use cohomlab::spline::{CubicSpline, EndCondition};
use cohomlab::warp::{PresetKind, RadialGrid, Topology, WarpProfile};
use cohomlab::LabError;
use proptest::prelude::*;
use std::f64::consts::PI;

fn sphere_like() -> impl Strategy<Value = PresetKind> {
    prop_oneof![
        (0.2f64..4.0).prop_map(|k| PresetKind::Round { k }),
        (-0.6f64..0.6).prop_map(|eps| PresetKind::Bump { eps }),
    ]
}

fn periodic() -> impl Strategy<Value = PresetKind> {
    (0.2f64..3.0, 0.0f64..0.95).prop_map(|(c, frac)| PresetKind::PeriodicProduct { c, a: frac * c })
}

fn any_preset() -> impl Strategy<Value = PresetKind> {
    prop_oneof![sphere_like(), periodic()]
}

/// Smooth even combination of cosines on `[0, L]`; its derivative vanishes
/// at both ends, so it is a smooth invariant function on the closed manifold.
fn cosine_series(coeffs: Vec<f64>, l: f64, periodic: bool) -> impl Fn(f64) -> f64 {
    let base = if periodic { 2.0 * PI / l } else { PI / l };
    move |r| {
        coeffs
            .iter()
            .enumerate()
            .map(|(j, a)| a * ((j + 1) as f64 * base * r).cos())
            .sum()
    }
}

fn sine_series(coeffs: Vec<f64>, l: f64) -> impl Fn(f64) -> f64 {
    move |r| {
        coeffs
            .iter()
            .enumerate()
            .map(|(j, a)| a * ((j + 1) as f64 * PI * r / l).sin())
            .sum()
    }
}

fn coefficients() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..6).prop_filter("non-zero", |c| c.iter().any(|a| a.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_profile_solves_its_ode(k in 0.2f64..4.0, t in 0.01f64..0.99, n in 2usize..8) {
        let p = WarpProfile::preset(PresetKind::Round { k }, n).unwrap();
        let [phi, _, phi2] = p.jet(t * p.length());
        prop_assert!((phi2 + k * k * phi).abs() <= 1e-12 * k * k);
    }

    #[test]
    fn orbits_are_umbilic(kind in any_preset(), n in 2usize..8) {
        let p = WarpProfile::preset(kind, n).unwrap();
        let grid = RadialGrid::for_profile(&p, 64).unwrap();
        let geom = orbit_geometry(&p, &grid).unwrap();
        for (h, b2) in geom.mean_curvature().iter().zip(geom.b2()) {
            prop_assert!((b2 - (n - 1) as f64 * h * h).abs() <= 1e-12 * b2.abs().max(1.0));
        }
    }

    #[test]
    fn periodic_products_have_no_positive_curvature_bound(kind in periodic(), n in 2usize..8) {
        let p = WarpProfile::preset(kind, n).unwrap();
        let grid = RadialGrid::for_profile(&p, 256).unwrap();
        prop_assert!(ricci_profile(&p, &grid).unwrap().kappa2 <= 0.0);
    }

    #[test]
    fn energy_functional_is_scale_invariant(kind in sphere_like(), n in 2usize..6, coeffs in coefficients(), c in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3]) {
        let p = WarpProfile::preset(kind, n).unwrap();
        let grid = RadialGrid::for_profile(&p, 128).unwrap();
        let geom = orbit_geometry(&p, &grid).unwrap();
        let field = InvariantField::from_fn(grid, sine_series(coeffs, grid.length()));
        let f1 = calculus::energy_functional(&field, &geom).unwrap();
        let fc = calculus::energy_functional(&field.scaled(c), &geom).unwrap();
        prop_assert!((f1 - fc).abs() <= 1e-12 * f1.abs().max(1.0));
    }

    #[test]
    fn bump_parameters_outside_the_unit_interval_are_rejected(eps in prop_oneof![1.0f64..5.0, -5.0f64..=-1.0]) {
        let err = WarpProfile::preset(PresetKind::Bump { eps }, 3).unwrap_err();
        let rejected = matches!(err, LabError::InvalidProfile { .. });
        prop_assert!(rejected);
        let err = RunConfig::new(3, PresetSpec::Bump { eps }).validate().unwrap_err();
        let at_eps = matches!(err, LabError::Config { ref path, .. } if path == "preset.eps");
        prop_assert!(at_eps);
    }

    #[test]
    fn spline_passes_through_its_samples(gaps in prop::collection::vec(0.05f64..1.0, 3..12), seed in prop::collection::vec(-2.0f64..2.0, 12)) {
        let mut x = vec![0.0];
        for g in &gaps {
            x.push(x.last().unwrap() + g);
        }
        let y: Vec<f64> = x.iter().zip(&seed).map(|(_, v)| *v).collect();
        let s = CubicSpline::new(&x, &y, EndCondition::Clamped { start: 0.3, end: -0.7 }).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            prop_assert!((s.eval(*xi)[0] - yi).abs() <= 1e-12 * yi.abs().max(1.0));
        }
        prop_assert!((s.eval(0.0)[1] - 0.3).abs() <= 1e-10);
        prop_assert!((s.eval(*x.last().unwrap())[1] + 0.7).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn spectrum_bounds_every_trial_field(kind in any_preset(), n in 2usize..6, coeffs in coefficients(), offset in -1.0f64..1.0) {
        let p = WarpProfile::preset(kind, n).unwrap();
        let grid = RadialGrid::for_profile(&p, 256).unwrap();
        let geom = orbit_geometry(&p, &grid).unwrap();
        let op = spectral::assemble(OperatorKind::RoughVector, &p, &geom).unwrap();
        let res = spectral::smallest_eigenpair(&op, &SolverOptions::default()).unwrap();
        prop_assert!((res.rayleigh - res.lambda).abs() <= 1e-10 * res.lambda.abs().max(1.0));

        let l = grid.length();
        let field = if p.topology() == Topology::Periodic {
            let g = cosine_series(coeffs, l, true);
            InvariantField::from_fn(grid, move |r| offset + g(r))
        } else {
            InvariantField::from_fn(grid, sine_series(coeffs, l))
        };
        let f = calculus::energy_functional(&field, &geom).unwrap();
        prop_assert!(f >= res.lambda - 1e-9, "F = {f} below lambda = {}", res.lambda);
    }

    #[test]
    fn hessian_dominates_laplacian(kind in any_preset(), n in 2usize..6, coeffs in coefficients()) {
        let p = WarpProfile::preset(kind, n).unwrap();
        let grid = RadialGrid::for_profile(&p, 512).unwrap();
        let geom = orbit_geometry(&p, &grid).unwrap();
        let periodic = p.topology() == Topology::Periodic;
        let h = InvariantFunction::from_fn(grid, cosine_series(coeffs, grid.length(), periodic));
        let report = calculus::cauchy_schwarz_check(&h, &geom).unwrap();
        prop_assert!(report.passed, "min defect {} at r = {}", report.min_defect, report.argmin_r);
        prop_assert!(report.integrated_defect >= -report.tol_disc);
    }

    #[test]
    fn gradient_fields_respect_the_ricci_bound(kind in sphere_like(), n in 2usize..6, coeffs in coefficients()) {
        let p = WarpProfile::preset(kind, n).unwrap();
        let grid = RadialGrid::for_profile(&p, 1024).unwrap();
        let geom = orbit_geometry(&p, &grid).unwrap();
        let ricci = ricci_profile(&p, &grid).unwrap();
        let h = InvariantFunction::from_fn(grid, cosine_series(coeffs, grid.length(), false));
        let v = h.gradient();
        let f = calculus::energy_functional(&v, &geom).unwrap();
        let bound = calculus::bochner_bound(&v, &geom, &ricci).unwrap();
        prop_assert!(f >= bound - 1e-4 * f.abs().max(1.0), "F = {f}, bound = {bound}");
    }

    #[test]
    fn canonical_config_round_trips(kind in any_preset(), n in 2usize..8, grid_n in 16usize..5000, tol in 1e-14f64..1e-6, values in prop::collection::vec(0.0f64..0.5, 1..5)) {
        let (preset, param) = match kind {
            PresetKind::Round { k } => (PresetSpec::Round { k }, SweepParam::K),
            PresetKind::Bump { eps } => (PresetSpec::Bump { eps }, SweepParam::Eps),
            PresetKind::PeriodicProduct { c, a } => (PresetSpec::PeriodicProduct { c, a }, SweepParam::C),
        };
        let mut cfg = RunConfig::new(n, preset);
        cfg.grid.intervals = grid_n;
        cfg.solver.tol = tol;
        cfg.sweep = Some(SweepSpec { param, values: Some(values.iter().map(|v| v + 0.5).collect()), start: None, stop: None, step: None });
        let text = cfg.to_canonical_json();
        let back = RunConfig::from_json(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_canonical_json(), text);
    }
}
