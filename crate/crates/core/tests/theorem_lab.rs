use cohomlab::geometry::{orbit_geometry, ricci_profile};
use cohomlab::lab::{self, LabOptions, SweepParam, Verdict};
use cohomlab::spectral::{self, OperatorKind, SolverOptions};
use cohomlab::warp::{PresetKind, RadialGrid, WarpProfile};
use cohomlab::LabError;

fn preset(kind: PresetKind, n: usize) -> WarpProfile {
    WarpProfile::preset(kind, n).unwrap()
}

fn report(kind: PresetKind, n: usize, intervals: usize) -> lab::TheoremReport {
    lab::check_bound(&preset(kind, n), &LabOptions::with_grid(intervals)).unwrap()
}

#[test]
fn bump_gaps_are_positive_and_vanish_with_eps() {
    for n in [2usize, 3] {
        for eps in [0.05, 0.1, 0.2, 0.3] {
            let r = report(PresetKind::Bump { eps }, n, 4096);
            assert!(r.bound_holds, "n={n} eps={eps}: {r:?}");
            assert!(r.gap > 10.0 * r.tol_disc, "n={n} eps={eps}: gap {} tol {}", r.gap, r.tol_disc);
            assert_ne!(r.verdict, Verdict::RoundSphereDetected);
        }
        let flat = report(PresetKind::Bump { eps: 0.0 }, n, 4096);
        assert!(flat.gap <= 1e-5 && flat.gap >= -flat.tol_disc, "n={n}: {}", flat.gap);
        let small = report(PresetKind::Bump { eps: 0.01 }, n, 4096);
        let large = report(PresetKind::Bump { eps: 0.3 }, n, 4096);
        assert!(small.gap < large.gap);
    }
}

#[test]
fn bump_kappa2_follows_the_pole_curvature() {
    // Ric(N,N) -> (n-1)(1 - 6 eps) at the poles, the minimum over the profile
    for n in [2usize, 3] {
        for eps in [0.01, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3] {
            let r = report(PresetKind::Bump { eps }, n, 1024);
            assert!((r.kappa2 - (1.0 - 6.0 * eps)).abs() < 1e-4, "n={n} eps={eps}: {}", r.kappa2);
            assert_eq!(r.kappa2 > 0.0, eps < 1.0 / 6.0);
            let expected = if eps < 1.0 / 6.0 { Verdict::StrictlyAboveBound } else { Verdict::HypothesisNotMet };
            assert_eq!(r.verdict, expected, "n={n} eps={eps}");
        }
    }
}

#[test]
fn bound_is_sound_on_positively_curved_profiles() {
    let corpus = [
        (PresetKind::Round { k: 0.5 }, 2),
        (PresetKind::Round { k: 1.5 }, 5),
        (PresetKind::Bump { eps: -0.3 }, 2),
        (PresetKind::Bump { eps: -0.1 }, 4),
        (PresetKind::Bump { eps: 0.02 }, 3),
        (PresetKind::Bump { eps: 0.12 }, 6),
        (PresetKind::Bump { eps: 0.16 }, 2),
    ];
    for (kind, n) in corpus {
        let r = report(kind, n, 2048);
        if r.kappa2 > 0.0 {
            assert!(r.lambda_min >= r.kappa2 - r.tol_disc, "{kind} n={n}: {r:?}");
        }
    }
}

fn diagnostics(kind: PresetKind, n: usize, intervals: usize) -> lab::RigidityDiagnostics {
    let p = preset(kind, n);
    let grid = RadialGrid::for_profile(&p, intervals).unwrap();
    let geom = orbit_geometry(&p, &grid).unwrap();
    let ricci = ricci_profile(&p, &grid).unwrap();
    let op = spectral::assemble(OperatorKind::RoughVector, &p, &geom).unwrap();
    let res = spectral::smallest_eigenpair(&op, &SolverOptions::default()).unwrap();
    lab::rigidity_diagnostics(res.eigenfunction.as_field().unwrap(), &geom, &ricci).unwrap()
}

#[test]
fn round_rigidity_residuals_are_second_order() {
    let d = [1024, 2048, 4096].map(|m| diagnostics(PresetKind::Round { k: 1.0 }, 3, m));
    for w in d.windows(2) {
        let ratio = w[0].radial_ode_residual / w[1].radial_ode_residual;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        assert!(w[1].umbilic_residual <= 1e-12);
        assert!(w[1].laplacian_equality_residual <= 1e-10);
    }
}

#[test]
fn bump_radial_residual_stays_away_from_zero() {
    let tol_rigid = report(PresetKind::Bump { eps: 0.2 }, 3, 4096).tol_rigid;
    let coarse = diagnostics(PresetKind::Bump { eps: 0.2 }, 3, 2048);
    let fine = diagnostics(PresetKind::Bump { eps: 0.2 }, 3, 4096);
    assert!(coarse.radial_ode_residual > 10.0 * tol_rigid);
    assert!(fine.radial_ode_residual > 10.0 * tol_rigid);
    assert!((coarse.radial_ode_residual - fine.radial_ode_residual).abs() < 1e-3 * fine.radial_ode_residual);
    // orbits of a warped product are umbilic whatever the profile
    assert_eq!(fine.umbilic_residual, 0.0);
}

#[test]
fn detection_implies_round_shape() {
    let mut detected = 0;
    for eps in [0.0, 1e-7, 1e-6, 1e-5, 3e-5, 1e-4, 1e-3, 1e-2] {
        let p = preset(PresetKind::Bump { eps }, 2);
        let r = lab::check_bound(&p, &LabOptions::with_grid(2048)).unwrap();
        if r.verdict == Verdict::RoundSphereDetected {
            detected += 1;
            let d = lab::round_shape_distance(&p, r.kappa2, 2048).unwrap();
            assert!(d <= lab::TOL_SHAPE, "eps={eps}: distance {d}");
        }
    }
    assert!(detected >= 3, "the detection band should contain the smallest perturbations");
    assert_eq!(report(PresetKind::Bump { eps: 1e-2 }, 2, 2048).verdict, Verdict::StrictlyAboveBound);
}

#[test]
fn curvature_scaling_is_covariant() {
    for n in [2usize, 3, 6] {
        let base = report(PresetKind::Round { k: 1.0 }, n, 1024);
        for c in [0.5, 1.7, 3.0] {
            let scaled = report(PresetKind::Round { k: c }, n, 1024);
            let c2 = c * c;
            assert!((scaled.kappa2 / (c2 * base.kappa2) - 1.0).abs() <= 1e-6);
            assert!((scaled.lambda_min / (c2 * base.lambda_min) - 1.0).abs() <= 1e-6);
        }
    }
}

#[test]
fn first_eigenvalue_examples() {
    let opts = LabOptions::with_grid(4096);
    let r = lab::obata_check(&preset(PresetKind::Round { k: 1.0 }, 4), &opts).unwrap();
    assert!((r.mu1 - 4.0).abs() <= 1e-4 && r.defect <= 1e-4);
    let r = lab::obata_check(&preset(PresetKind::Round { k: 2.0 }, 2), &opts).unwrap();
    assert!((r.mu1 - 8.0).abs() <= 1e-3 && r.defect <= 1e-3);
    let r = lab::obata_check(&preset(PresetKind::Bump { eps: 0.1 }, 2), &opts).unwrap();
    assert!(r.defect > 10.0 * lab::MIN_TOL_RIGID);
    // kappa2 < 0 here, so the criterion has no content and is refused
    let err = lab::obata_check(&preset(PresetKind::Bump { eps: 0.25 }, 2), &opts).unwrap_err();
    assert!(matches!(err, LabError::HypothesisNotMet { kappa2 } if kappa2 < 0.0));
}

#[test]
fn sweep_examples() {
    let opts = LabOptions::with_grid(2048);
    let rows = lab::sweep(PresetKind::Bump { eps: 0.0 }, 2, SweepParam::Eps, &[0.0, 0.1, 0.2], &opts, None).unwrap();
    assert_eq!(rows[0].verdict, Some(Verdict::RoundSphereDetected));
    assert!(rows[0].gap.unwrap().abs() <= 1e-5);

    let rows = lab::sweep(PresetKind::Round { k: 1.0 }, 3, SweepParam::K, &[0.5, 1.0, 2.0], &opts, None).unwrap();
    for row in &rows {
        let ratio = row.lambda_min.unwrap() / row.kappa2.unwrap();
        assert!((ratio - 1.0).abs() <= 1e-4, "k={}: {ratio}", row.param);
    }

    let rows = lab::sweep(PresetKind::Bump { eps: 0.0 }, 2, SweepParam::Eps, &[0.01, 0.3], &opts, None).unwrap();
    assert!(rows[0].gap.unwrap() < rows[1].gap.unwrap());
}

#[test]
fn sweep_rows_do_not_depend_on_worker_count() {
    let values: Vec<f64> = (0..9).map(|i| i as f64 * 0.05).collect();
    let opts = LabOptions::with_grid(256);
    let one = lab::sweep(PresetKind::Bump { eps: 0.0 }, 3, SweepParam::Eps, &values, &opts, Some(1)).unwrap();
    let many = lab::sweep(PresetKind::Bump { eps: 0.0 }, 3, SweepParam::Eps, &values, &opts, Some(4)).unwrap();
    assert_eq!(one, many);
}

#[test]
fn sweep_records_failures_per_row() {
    let rows = lab::sweep(
        PresetKind::PeriodicProduct { c: 1.0, a: 0.0 },
        3,
        SweepParam::A,
        &[0.0, 0.5, 1.5],
        &LabOptions::with_grid(256),
        None,
    )
    .unwrap();
    assert_eq!(rows[0].verdict, Some(Verdict::HypothesisNotMet));
    assert!(rows[1].error.is_none());
    assert!(rows[2].error.as_deref().unwrap().contains("positivity"));
}

#[test]
fn periodic_verdict_ignores_tolerance_choice() {
    let p = preset(PresetKind::PeriodicProduct { c: 1.0, a: 0.3 }, 3);
    for tol_disc in [None, Some(1e-14), Some(1.0)] {
        let opts = LabOptions { tol_disc, ..LabOptions::with_grid(512) };
        assert_eq!(lab::check_bound(&p, &opts).unwrap().verdict, Verdict::HypothesisNotMet);
    }
}
