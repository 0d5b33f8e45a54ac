use super::*;
use crate::geometry::Dimension;
use crate::measures::{make_profile, HalfSpaceMeasure, ProfileKind, ScalarField, SingularProfile};
use std::sync::Arc;

fn d(n: usize) -> Dimension {
    Dimension::new(n).unwrap()
}

fn interior_pt(n: usize, xn: f64) -> Point {
    Point::on_axis(d(n), xn).unwrap()
}

fn bounded_compact_measure(n: usize) -> HalfSpaceMeasure {
    let mut mu = HalfSpaceMeasure::zero(d(n));
    mu.add_weighted(ScalarField::gaussian_bump(interior_pt(n, 1.0), 1.0, 0.4).unwrap())
        .unwrap();
    mu
}

fn boundary_atom(n: usize, mass: f64) -> HalfSpaceMeasure {
    let mut mu = HalfSpaceMeasure::zero(d(n));
    mu.add_atom(Point::origin(d(n)), mass).unwrap();
    mu
}

#[test]
fn ball_condition_bounded_density_unobstructed() {
    let mu = bounded_compact_measure(1);
    let grid = SampleGrid::for_measure(&mu, 1.0, 12).unwrap();
    let rep = check_ball_condition(&mu, 3.0, 1.0, &grid).unwrap();
    assert_eq!(rep.verdict, Verdict::Unobstructed, "{}", rep.detail);
}

#[test]
fn ball_condition_oversingular_interior_power_obstructed() {
    // Profile built at p' = 3.5 (singularity r^{-0.8}) but checked at
    // p = 6, which tolerates only r^{-0.4}: R ∝ σ^{2/(p-1)-2/(p'-1)},
    // a negative exponent, so sup R diverges as σ -> 0.
    let dim = d(1);
    let z = interior_pt(1, 2.0);
    let prof = SingularProfile::new(ProfileKind::InteriorPower, z, 3.5, dim).unwrap();
    let mu = make_profile(&prof, 1.0).unwrap();
    let grid = SampleGrid::for_measure(&mu, 1.0, 12).unwrap();
    let rep = check_ball_condition(&mu, 6.0, 1.0, &grid).unwrap();
    assert_eq!(rep.verdict, Verdict::ObstructedNonexistence, "{}", rep.detail);
    // slope = 2/(6-1) - 2/(3.5-1) = 0.4 - 0.8 = -0.4
    assert!((rep.growth_exponent_fit - (-0.4)).abs() < 0.05, "{}", rep.growth_exponent_fit);
}

#[test]
fn ball_condition_boundary_atom_supercritical_obstructed() {
    // κδ at the boundary with p > p_{N+1}: R(0,σ) ∝ σ^{2/(p-1)-(N+1)}.
    let mu = boundary_atom(1, 1.0);
    let grid = SampleGrid::for_measure(&mu, 1.0, 12).unwrap();
    let rep = check_ball_condition(&mu, 2.5, 1.0, &grid).unwrap();
    assert_eq!(rep.verdict, Verdict::ObstructedNonexistence, "{}", rep.detail);
    // N=1, p=2.5: slope = -(N+1) + 2/(p-1) = -2 + 4/3 = -2/3
    assert!(
        (rep.growth_exponent_fit - (-2.0 / 3.0)).abs() < 0.05,
        "{}",
        rep.growth_exponent_fit
    );
}

#[test]
fn ball_condition_verdict_invariant_under_scaling() {
    let mu = boundary_atom(1, 1.0);
    let grid = SampleGrid::for_measure(&mu, 1.0, 12).unwrap();
    let r1 = check_ball_condition(&mu, 2.5, 1.0, &grid).unwrap();
    let r2 = check_ball_condition(&mu.scaled(1000.0).unwrap(), 2.5, 1.0, &grid).unwrap();
    assert_eq!(r1.verdict, r2.verdict);
    assert!((r1.growth_exponent_fit - r2.growth_exponent_fit).abs() < 1e-9);
}

#[test]
fn interior_log_condition_cases() {
    let n = 1;
    let p_n = fujita_exponent(n); // 3
    // bounded f: L -> 0, unobstructed
    let mu = bounded_compact_measure(n);
    let grid = SampleGrid {
        centers: vec![interior_pt(n, 2.0)],
        sigmas: (1..=12).map(|k| 0.5f64.powi(k)).collect(),
    };
    let rep = check_log_condition_interior(&mu, 1.0, &grid).unwrap();
    assert_eq!(rep.verdict, Verdict::Unobstructed, "{}", rep.detail);

    // critical log profile: bounded above and below -> unobstructed here
    let z = interior_pt(n, 2.0);
    let prof = SingularProfile::new(ProfileKind::InteriorLog, z, p_n, d(n)).unwrap();
    let mu = make_profile(&prof, 1.0).unwrap();
    let grid = SampleGrid {
        centers: vec![z],
        sigmas: (4..=16).map(|k| 0.5f64.powi(k)).collect(),
    };
    let rep = check_log_condition_interior(&mu, 1.0, &grid).unwrap();
    assert_eq!(rep.verdict, Verdict::Unobstructed, "{}", rep.detail);

    // pure power r^{-N} (log exponent <= 1) is not a Radon measure at all
    let mut reject = HalfSpaceMeasure::zero(d(n));
    assert!(reject
        .add_weighted(ScalarField::power_log(1.0, z, n as f64, 0.5, 0.5).unwrap())
        .is_err());
    // log exponent between 1 and N/2 + 1: finite measure whose normalized
    // functional still diverges
    let mut mu = HalfSpaceMeasure::zero(d(n));
    mu.add_weighted(ScalarField::power_log(1.0, z, n as f64, 1.2, 0.5).unwrap())
        .unwrap();
    let rep = check_log_condition_interior(&mu, 1.0, &grid).unwrap();
    assert_eq!(rep.verdict, Verdict::ObstructedNonexistence, "{}", rep.detail);

    // z_N < 3σ in the grid is a domain error
    let bad = SampleGrid {
        centers: vec![interior_pt(n, 0.1)],
        sigmas: vec![0.5, 0.25, 0.125, 0.0625],
    };
    assert!(check_log_condition_interior(&mu, 1.0, &bad).is_err());
}

#[test]
fn boundary_log_condition_cases() {
    let n = 1;
    // boundary atom at p = p_{N+1}: M = κ [ln(e+√T/σ)]^{(N+1)/2} diverges
    let mu = boundary_atom(n, 1.0);
    let grid = SampleGrid {
        centers: vec![Point::origin(d(n))],
        sigmas: (1..=12).map(|k| 0.5f64.powi(k)).collect(),
    };
    let rep = check_log_condition_boundary(&mu, 1.0, &grid).unwrap();
    assert_eq!(rep.verdict, Verdict::ObstructedNonexistence, "{}", rep.detail);

    // bounded weighted density: M -> 0
    let mu = bounded_compact_measure(n);
    let rep = check_log_condition_boundary(&mu, 1.0, &grid).unwrap();
    assert_eq!(rep.verdict, Verdict::Unobstructed, "{}", rep.detail);

    // critical boundary log profile: bounded ratio, unobstructed by this test
    let p_crit = fujita_exponent(n + 1);
    let prof =
        SingularProfile::new(ProfileKind::BoundaryLog, Point::origin(d(n)), p_crit, d(n)).unwrap();
    let mu = make_profile(&prof, 1.0).unwrap();
    let fine = SampleGrid {
        centers: vec![Point::origin(d(n))],
        sigmas: (4..=16).map(|k| 0.5f64.powi(k)).collect(),
    };
    let rep = check_log_condition_boundary(&mu, 1.0, &fine).unwrap();
    assert_eq!(rep.verdict, Verdict::Unobstructed, "{}", rep.detail);

    // interior z in the grid is a domain error
    let bad = SampleGrid {
        centers: vec![interior_pt(n, 0.5)],
        sigmas: vec![0.5, 0.25, 0.125, 0.0625],
    };
    assert!(check_log_condition_boundary(&mu, 1.0, &bad).is_err());
}

#[test]
fn boundary_mass_rules() {
    // δ at the boundary with p = 2: obstructed
    let mu = boundary_atom(2, 1.0);
    let rep = check_boundary_mass(&mu, 2.0).unwrap();
    assert_eq!(rep.verdict, Verdict::ObstructedNonexistence);
    // same atom at p = 1.5 < p_{N+1}: not obstructed by this check
    let rep = check_boundary_mass(&mu, 1.5).unwrap();
    assert_eq!(rep.verdict, Verdict::Unobstructed);
    // interior-only measure at p = 5: passes
    let mu = bounded_compact_measure(2);
    let rep = check_boundary_mass(&mu, 5.0).unwrap();
    assert_eq!(rep.verdict, Verdict::Unobstructed);
    assert_eq!(rep.sup_estimate, 0.0);
}

#[test]
fn global_growth_cases() {
    // compact data: finite sup, unobstructed
    let mu = bounded_compact_measure(1);
    let rep = check_global_growth(&mu, 1.5).unwrap();
    assert_eq!(rep.verdict, Verdict::Unobstructed, "{}", rep.detail);

    // superlinear mass growth g = 1 + |x| in N = 2: tangentially far
    // centers outgrow the 1 + z_N normalization at every box doubling
    // (the huge-but-finite support stands in for global support)
    let mut mu = HalfSpaceMeasure::zero(d(2));
    let c = Point::new(d(2), &[0.0], 0.0).unwrap();
    mu.add_plain(
        ScalarField::from_fn(
            Arc::new(|y: &Point| {
                1.0 + (y.tangential()[0].powi(2) + y.normal().powi(2)).sqrt()
            }),
            c,
            1e6,
            None,
        )
        .unwrap(),
    )
    .unwrap();
    let rep = check_global_growth(&mu, 1.5).unwrap();
    assert_eq!(rep.verdict, Verdict::ObstructedNonexistence, "{}", rep.detail);

    // boundary atom below p_{N+1}: finite sup
    let mu = boundary_atom(1, 2.0);
    let rep = check_global_growth(&mu, 1.5).unwrap();
    assert_eq!(rep.verdict, Verdict::Unobstructed, "{}", rep.detail);

    // out-of-range p is a domain error
    assert!(check_global_growth(&mu, 2.5).is_err());
}

#[test]
fn combined_classifier_boundary_mass_dominates() {
    // Any measure with a boundary atom at p >= 2 classifies obstructed.
    let mut mu = bounded_compact_measure(1);
    mu.add_atom(Point::origin(d(1)), 0.5).unwrap();
    let c = classify(&mu, 2.0, 1.0).unwrap();
    assert_eq!(c.combined, Verdict::ObstructedNonexistence);
    assert!(c
        .reports
        .iter()
        .any(|r| r.which_condition == ConditionTag::BoundaryMass
            && r.verdict == Verdict::ObstructedNonexistence));
}

#[test]
fn combined_classifier_consistency_above_two() {
    // At p > 2 a boundary-mass obstruction is accompanied by a divergent
    // ball-growth trend at boundary centers.
    let mu = boundary_atom(1, 1.0);
    let c = classify(&mu, 2.5, 1.0).unwrap();
    assert_eq!(c.combined, Verdict::ObstructedNonexistence);
    let ball = c
        .reports
        .iter()
        .find(|r| r.which_condition == ConditionTag::BallGrowth)
        .unwrap();
    assert_eq!(ball.verdict, Verdict::ObstructedNonexistence);
    let bdry = c
        .reports
        .iter()
        .find(|r| r.which_condition == ConditionTag::BoundaryMass)
        .unwrap();
    assert_eq!(bdry.verdict, Verdict::ObstructedNonexistence);
}

#[test]
fn classifier_fixture_suite() {
    // The known-family fixture matrix; every verdict must match.
    let n1 = 1;
    let z = interior_pt(n1, 2.0);
    let cases: Vec<(HalfSpaceMeasure, f64, Verdict)> = vec![
        // 1: zero measure, any p
        (HalfSpaceMeasure::zero(d(n1)), 3.0, Verdict::Unobstructed),
        // 2: bounded compact weighted density, subcritical p
        (bounded_compact_measure(n1), 1.5, Verdict::Unobstructed),
        // 3: bounded compact weighted density, supercritical p
        (bounded_compact_measure(n1), 4.0, Verdict::Unobstructed),
        // 4: boundary atom at p = 2 (boundary mass rule)
        (boundary_atom(n1, 1.0), 2.0, Verdict::ObstructedNonexistence),
        // 5: boundary atom at p = 2.5 (ball growth as well)
        (boundary_atom(n1, 1.0), 2.5, Verdict::ObstructedNonexistence),
        // 6: boundary atom at p = 1.5 < p_2 (solvable family)
        (boundary_atom(n1, 1.0), 1.5, Verdict::Unobstructed),
        // 7: interior atom above p_N = 3 (ball growth obstructs)
        (
            {
                let mut mu = HalfSpaceMeasure::zero(d(n1));
                mu.add_atom(z, 1.0).unwrap();
                mu
            },
            4.0,
            Verdict::ObstructedNonexistence,
        ),
        // 8: admissible interior power profile at its own p
        (
            make_profile(
                &SingularProfile::new(ProfileKind::InteriorPower, z, 4.0, d(n1)).unwrap(),
                1.0,
            )
            .unwrap(),
            4.0,
            Verdict::Unobstructed,
        ),
        // 9: over-singular interior power (built at 3.5, checked at 6)
        (
            make_profile(
                &SingularProfile::new(ProfileKind::InteriorPower, z, 3.5, d(n1)).unwrap(),
                1.0,
            )
            .unwrap(),
            6.0,
            Verdict::ObstructedNonexistence,
        ),
        // 10: admissible boundary power profile at its own p
        (
            make_profile(
                &SingularProfile::new(
                    ProfileKind::BoundaryPower,
                    Point::origin(d(n1)),
                    2.5,
                    d(n1),
                )
                .unwrap(),
                1.0,
            )
            .unwrap(),
            2.5,
            Verdict::Unobstructed,
        ),
        // 11: plain constant density; u(x,0) ~ 1/x_N at the boundary is
        // admissible only while 2/(p-1) >= 1, so check below p = 3
        (
            {
                let mut mu = HalfSpaceMeasure::zero(d(n1));
                mu.add_plain(ScalarField::constant(z, 1.0, 2.0).unwrap())
                    .unwrap();
                mu
            },
            2.5,
            Verdict::Unobstructed,
        ),
        // 12: boundary-line power profile at its own p (N = 2)
        (
            make_profile(
                &SingularProfile::new(
                    ProfileKind::BoundaryLinePower,
                    Point::origin(d(2)),
                    1.9,
                    d(2),
                )
                .unwrap(),
                1.0,
            )
            .unwrap(),
            1.9,
            Verdict::Unobstructed,
        ),
    ];
    for (i, (mu, p, expect)) in cases.iter().enumerate() {
        let c = classify(mu, *p, 1.0).unwrap();
        assert_eq!(
            c.combined,
            *expect,
            "fixture {} misclassified: {:?}",
            i + 1,
            c.reports
                .iter()
                .map(|r| (r.which_condition, r.verdict, r.detail.clone()))
                .collect::<Vec<_>>()
        );
    }
}

#[test]
fn rate_functionals_zero_solution() {
    use crate::solver::{picard_solve, GridSpec, SolverCaps};
    let mu = HalfSpaceMeasure::zero(d(1));
    let spec = GridSpec::for_measure(d(1), 1.0, 0.1);
    let field = picard_solve(&mu, 2.0, &spec, &SolverCaps::default()).unwrap();
    let (int, bd) = blow_up_rate_functionals(&field, 0.2, 2.0).unwrap();
    assert!(int.iter().all(|s| s.value == 0.0));
    assert!(bd.iter().all(|s| s.value == 0.0));
    assert!(blow_up_rate_functionals(&field, 0.05, 2.0).is_err());
}

#[test]
fn rate_functionals_linear_evolution_bounded() {
    use crate::solver::{picard_solve, GridSpec, SolverCaps};
    // Pure kernel evolution of a small bump: ratios value/rate bounded by
    // twice the first sample's ratio.
    let mu = bounded_compact_measure(1);
    let spec = GridSpec::for_measure(d(1), mu.support_radius(), 0.1);
    let caps = SolverCaps {
        nonlinear_scale: 0.0,
        ..SolverCaps::default()
    };
    let field = picard_solve(&mu, 3.0, &spec, &caps).unwrap();
    let horizon = 0.2;
    let (int, bd) = blow_up_rate_functionals(&field, horizon, 3.0).unwrap();
    for series in [&int, &bd] {
        let ratios: Vec<f64> = series
            .iter()
            .filter(|s| s.value > 0.0)
            .map(|s| s.value / s.rate)
            .collect();
        if let Some(&first) = ratios.first() {
            for &r in &ratios {
                assert!(r <= 2.0 * first + 1e-12, "ratio {r} vs first {first}");
            }
        }
    }
}
