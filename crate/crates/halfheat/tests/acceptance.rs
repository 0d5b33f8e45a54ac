//! Acceptance suite: one test per exit criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them).
//!
//! Every tolerance below is pinned in code; nothing defers to later
//! calibration.

use halfheat::conditions::{classify, Verdict};
use halfheat::kernelcheck::{
    boundary_mass_quadrature, kernel_mass_quadrature, run_kernel_checks, semigroup_quadrature,
};
use halfheat::kernels;
use halfheat::measures::{
    make_profile, HalfSpaceMeasure, LineField, ProfileKind, ScalarField, SingularProfile,
};
use halfheat::solver::{
    dichotomy_bisect, global_existence_probe, initial_trace, picard_solve, DichotomyOutcome,
    GridSpec, RunVerdict, SolverCaps,
};
use halfheat::supersolutions::{
    build_gauge_supersolution, gauge_threshold_lhs, interior_threshold, verify_supersolution,
    ConvexGauge,
};
use halfheat::{Dimension, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::Instant;

fn d(n: usize) -> Dimension {
    Dimension::new(n).unwrap()
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {}: {} — {}",
        criterion,
        if pass { "PASS" } else { "FAIL" },
        detail
    );
    assert!(pass, "{criterion}: {detail}");
}

#[test]
fn criterion_01_boundary_mass_identity() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in [1usize, 2] {
        for t in [0.01, 0.1, 1.0, 10.0] {
            let q = boundary_mass_quadrature(n, t).unwrap();
            let exact = kernels::boundary_k_mass(t).unwrap();
            worst = worst.max(((q - exact) / exact).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "1 (boundary mass identity)",
        worst <= 1e-6 && elapsed < 30.0,
        &format!("worst rel {worst:.2e} over t in {{0.01,0.1,1,10}}, N in {{1,2}}; {elapsed:.1}s"),
    );
}

#[test]
fn criterion_02_semigroup_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = if i % 2 == 0 { 1 } else { 2 };
        let dim = d(n);
        let mut tang = [0.0; 2];
        for v in tang.iter_mut().take(n - 1) {
            *v = rng.gen_range(-2.0..2.0);
        }
        let z = Point::new(dim, &tang[..n - 1], rng.gen_range(0.05..2.5)).unwrap();
        for v in tang.iter_mut().take(n - 1) {
            *v = rng.gen_range(-2.0..2.0);
        }
        let yn = if i % 4 == 1 { 0.0 } else { rng.gen_range(0.0..2.5) };
        let y = Point::new(dim, &tang[..n - 1], yn).unwrap();
        let t = 10f64.powf(rng.gen_range(-1.5..0.3));
        let s = 10f64.powf(rng.gen_range(-1.5..0.3));
        let lhs = semigroup_quadrature(&z, &y, t, s).unwrap();
        let rhs = kernels::k_kernel(&z, &y, t + s).unwrap();
        worst = worst.max(((lhs - rhs) / rhs).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "2 (semigroup composition)",
        worst <= 1e-4 && elapsed < 60.0,
        &format!("worst rel {worst:.2e} over 20 samples incl. boundary y; {elapsed:.1}s"),
    );
}

#[test]
fn criterion_03_kernel_invariants() {
    let suite = run_kernel_checks(42, 10_000).unwrap();
    let mut violations = 0usize;
    let mut names = vec![];
    for row in suite
        .rows
        .iter()
        .filter(|r| r.name.contains("violations") || r.name.contains("monotonicity"))
    {
        if !row.pass {
            violations += 1;
            names.push(row.name.clone());
        }
    }
    report(
        "3 (symmetry/boundary/positivity/monotonicity)",
        violations == 0,
        &format!("0 violations over 10^4 samples each{}", if names.is_empty() { String::new() } else { format!("; failing: {names:?}") }),
    );
}

#[test]
fn criterion_04_kernel_mass_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=3usize);
        let dim = d(n);
        let mut tang = [0.0; 2];
        for v in tang.iter_mut().take(n - 1) {
            *v = rng.gen_range(-3.0..3.0);
        }
        let x = Point::new(dim, &tang[..n - 1], rng.gen_range(0.001..3.0)).unwrap();
        let t = 10f64.powf(rng.gen_range(-2.0..1.0));
        let exact = kernels::dirichlet_kernel_mass(&x, t).unwrap();
        let q = kernel_mass_quadrature(&x, t).unwrap();
        worst = worst.max(((q - exact) / exact.max(1e-300)).abs());
    }
    report(
        "4 (kernel mass closed form)",
        worst <= 1e-8,
        &format!("worst rel {worst:.2e} over 100 samples"),
    );
}

#[test]
fn criterion_05_profile_scaling_laws() {
    // power profiles: fitted log-log slope of σ -> μ(B_Ω(z,σ)) within 2%
    let mut detail = String::new();
    let mut all_pass = true;

    let fit_slope = |mu: &HalfSpaceMeasure, z: &Point, sigmas: &[f64]| -> f64 {
        let pts: Vec<(f64, f64)> = sigmas
            .iter()
            .map(|&s| (s.ln(), mu.ball_mass(z, s).unwrap().ln()))
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    };
    // two decades and a bit: σ = 2^{-3} .. 2^{-10}
    let sigmas: Vec<f64> = (3..=10).map(|k| 0.5f64.powi(k)).collect();

    // interior power in every dimension
    for n in 1..=3usize {
        let dim = d(n);
        let p = halfheat::fujita_exponent(n) + 1.0;
        let z = Point::on_axis(dim, 2.0).unwrap();
        let prof = SingularProfile::new(ProfileKind::InteriorPower, z, p, dim).unwrap();
        let mu = make_profile(&prof, 1.0).unwrap();
        let slope = fit_slope(&mu, &z, &sigmas);
        let expect = prof.mass_slope().unwrap();
        let ok = ((slope - expect) / expect).abs() < 0.02;
        all_pass &= ok;
        detail += &format!("interior N={n}: {slope:.4} vs {expect:.4}; ");
    }
    // boundary power (N = 1, 2)
    for n in 1..=2usize {
        let dim = d(n);
        let p = halfheat::fujita_exponent(n + 1) + 0.7;
        let prof =
            SingularProfile::new(ProfileKind::BoundaryPower, Point::origin(dim), p, dim).unwrap();
        let mu = make_profile(&prof, 1.0).unwrap();
        let slope = fit_slope(&mu, &Point::origin(dim), &sigmas);
        let expect = prof.mass_slope().unwrap();
        let ok = ((slope - expect) / expect).abs() < 0.02;
        all_pass &= ok;
        detail += &format!("boundary N={n}: {slope:.4} vs {expect:.4}; ");
    }
    // boundary-line power (N = 2)
    {
        let dim = d(2);
        let prof =
            SingularProfile::new(ProfileKind::BoundaryLinePower, Point::origin(dim), 1.9, dim)
                .unwrap();
        let mu = make_profile(&prof, 1.0).unwrap();
        let slope = fit_slope(&mu, &Point::origin(dim), &sigmas);
        let expect = prof.mass_slope().unwrap();
        let ok = ((slope - expect) / expect).abs() < 0.02;
        all_pass &= ok;
        detail += &format!("line N=2: {slope:.4} vs {expect:.4}; ");
    }

    // log profiles: normalized mass bounded, max/min < 3 over [1e-6, 1e-2]
    let log_sigmas: Vec<f64> = (0..9).map(|k| 1e-2 * 10f64.powf(-0.5 * k as f64)).collect();
    let mut check_log = |kind: ProfileKind, n: usize, center_normal: f64| {
        let dim = d(n);
        let center = Point::on_axis(dim, center_normal).unwrap();
        let p = match kind {
            ProfileKind::InteriorLog => halfheat::fujita_exponent(n),
            _ => halfheat::fujita_exponent(n + 1),
        };
        let prof = SingularProfile::new(kind, center, p, dim).unwrap();
        let mu = make_profile(&prof, 1.0).unwrap();
        let e = prof.log_normalization().unwrap();
        let vals: Vec<f64> = log_sigmas
            .iter()
            .map(|&s| mu.ball_mass(&center, s).unwrap() * (-s.ln()).powf(e))
            .collect();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        let ok = min > 0.0 && max / min < 3.0;
        all_pass &= ok;
        detail += &format!("{kind:?}: band {:.3}; ", max / min);
    };
    check_log(ProfileKind::InteriorLog, 2, 1.0);
    check_log(ProfileKind::BoundaryLog, 1, 0.0);
    check_log(ProfileKind::BoundaryLineLog, 2, 0.0);

    report("5 (optimal-profile scaling laws)", all_pass, &detail);
}

#[test]
fn criterion_06_explicit_threshold_pathway() {
    let start = Instant::now();
    let dim = d(1);
    let p = 3.0;
    let gauge = ConvexGauge::power(1.5).unwrap();
    let horizon = 0.1;
    let bump = |eps: f64| ScalarField::gaussian_bump(Point::on_axis(dim, 1.5).unwrap(), eps, 0.4).unwrap();

    // amplitude scaling of the interior LHS: slope p - 1 within 5%
    let lhs_at = |eps: f64| -> f64 {
        gauge_threshold_lhs(dim, &bump(eps), &LineField::zero(), gauge, p, horizon)
            .unwrap()
            .0
    };
    let (l1, l2, l4) = (lhs_at(1.0), lhs_at(0.5), lhs_at(0.25));
    let s12 = (l1 / l2).ln() / 2f64.ln();
    let s24 = (l2 / l4).ln() / 2f64.ln();
    let slope_ok = (s12 - (p - 1.0)).abs() < 0.05 * (p - 1.0)
        && (s24 - (p - 1.0)).abs() < 0.05 * (p - 1.0);

    // threshold crossing amplitude from the exact power law
    let threshold = interior_threshold(p);
    let eps_star = (threshold / l1).powf(1.0 / (p - 1.0));
    let at_star = lhs_at(eps_star);
    let crossing_ok = (at_star / threshold - 1.0).abs() < 0.2;

    // at ε*/2 the candidate verifies and the solver converges under it
    let eps_half = 0.5 * eps_star;
    let f = bump(eps_half);
    let mut mu = HalfSpaceMeasure::zero(dim);
    mu.add_weighted(f.clone()).unwrap();
    let candidate = build_gauge_supersolution(dim, &f, &LineField::zero(), gauge, p).unwrap();
    let verify_spec = GridSpec {
        dim,
        tangential_halfwidth: 0.0,
        tangential_nodes: 0,
        normal_extent: 6.0,
        normal_nodes: 96,
        grading: 3.0,
        t_min: 1e-4 * horizon,
        horizon,
        time_nodes: 14,
    };
    let verification = verify_supersolution(
        &|x: &Point, t: f64| candidate.total(x, t),
        &mu,
        p,
        &verify_spec,
    )
    .unwrap();

    let solve_spec = GridSpec {
        normal_nodes: 192,
        time_nodes: 24,
        ..GridSpec::for_measure(dim, mu.support_radius(), horizon)
    };
    let field = picard_solve(&mu, p, &solve_spec, &SolverCaps::default()).unwrap();
    let mut sandwich_ok = field.converged();
    'outer: for (j, &t) in field.times().iter().enumerate().step_by(4) {
        for idx in (0..field.grid.node_count()).step_by(16) {
            let x = field.grid.node_point(idx);
            let u = field.slice(j)[idx];
            let v = candidate.total(&x, t).unwrap();
            if u > v * (1.0 + 1e-3) + 1e-12 {
                sandwich_ok = false;
                break 'outer;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "6 (explicit-threshold pathway)",
        slope_ok && crossing_ok && verification.pass && sandwich_ok,
        &format!(
            "amplitude slopes {s12:.3}/{s24:.3} (target {}), ε* = {eps_star:.4}, \
             lhs(ε*)/threshold = {:.3}, verification pass = {}, u <= v sampled = {}; {elapsed:.1}s",
            p - 1.0,
            at_star / threshold,
            verification.pass,
            sandwich_ok
        ),
    );
}

#[test]
fn criterion_07_boundary_atom_dichotomy() {
    let start = Instant::now();
    let dim = d(1);
    let mut mu = HalfSpaceMeasure::zero(dim);
    mu.add_atom(Point::origin(dim), 1.0).unwrap();
    let spec = GridSpec::for_measure(dim, 0.0, 0.25);
    assert!(spec.normal_nodes <= 512 && spec.time_nodes <= 64);

    // p = 2.5 >= p_2: divergence for every κ >= 1e-3, refinement-stable
    let caps = SolverCaps::default();
    let out = dichotomy_bisect(&mu, 2.5, &spec, (1e-3, 1e2), 2.0, &caps, true).unwrap();
    let super_ok = matches!(
        &out,
        DichotomyOutcome::AllDiverge {
            refinement_still_diverges: Some(true),
            ..
        }
    );
    let t_super = start.elapsed().as_secs_f64();

    // p = 1.5 < p_2: finite bracket with ratio <= 2. The endpoint trend
    // under refinement is recorded (near the threshold the discrete
    // verdict is legitimately resolution-sensitive), and the convergent
    // side must stay convergent.
    let start2 = Instant::now();
    let out_sub = dichotomy_bisect(&mu, 1.5, &spec, (1e-3, 1e3), 2.0, &caps, true).unwrap();
    let (sub_ok, bracket) = match &out_sub {
        DichotomyOutcome::Bracket(res) => {
            let lo_stable = res
                .refinement
                .as_ref()
                .is_some_and(|r| r.lo_still_converges);
            (
                res.bracket_ratio <= 2.0 + 1e-12 && lo_stable,
                format!(
                    "[{:.3e}, {:.3e}] (refined: lo converges {}, hi diverges {})",
                    res.kappa_lo,
                    res.kappa_hi,
                    lo_stable,
                    res.refinement.as_ref().map(|r| r.hi_still_diverges).unwrap_or(false),
                ),
            )
        }
        other => (false, format!("{other:?}")),
    };
    let t_sub = start2.elapsed().as_secs_f64();
    report(
        "7 (boundary-atom dichotomy)",
        super_ok && sub_ok && t_super < 600.0 && t_sub < 600.0,
        &format!(
            "p=2.5 all-diverge persistent under refinement = {super_ok} ({t_super:.0}s); \
             p=1.5 bracket {bracket} ({t_sub:.0}s)"
        ),
    );
}

#[test]
fn criterion_08_global_existence_dichotomy() {
    let start = Instant::now();
    let dim = d(1);
    let mut mu = HalfSpaceMeasure::zero(dim);
    mu.add_weighted(ScalarField::gaussian_bump(Point::on_axis(dim, 1.5).unwrap(), 0.05, 0.4).unwrap())
        .unwrap();
    let template = GridSpec {
        normal_nodes: 256,
        time_nodes: 32,
        ..GridSpec::for_measure(dim, mu.support_radius(), 1.0)
    };
    let horizons = [0.1, 1.0, 10.0, 100.0, 1000.0];
    let caps = SolverCaps::default();

    // p = 1.5 <= p_2 = 2: the bump must diverge somewhere in the sweep
    let sub = global_existence_probe(&mu, 1.5, &horizons, &template, &caps).unwrap();
    let sub_ok = sub.first_diverged.is_some();

    // p = 4 > 2 with small amplitude: converges at every horizon
    let sup = global_existence_probe(&mu, 4.0, &horizons, &template, &caps).unwrap();
    let sup_ok = sup
        .horizons
        .iter()
        .all(|h| h.verdict == RunVerdict::Converged);
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "8 (global-existence dichotomy)",
        sub_ok && sup_ok,
        &format!(
            "p=1.5 first divergence at T={:?}; p=4 converged at all {} horizons; {elapsed:.0}s",
            sub.first_diverged,
            sup.horizons.len()
        ),
    );
}

#[test]
fn criterion_09_initial_trace_round_trip() {
    let start = Instant::now();
    let dim = d(1);
    let f = ScalarField::gaussian_bump(Point::on_axis(dim, 1.5).unwrap(), 0.05, 0.4).unwrap();
    let mut mu = HalfSpaceMeasure::zero(dim);
    mu.add_weighted(f.clone()).unwrap();
    let spec = GridSpec {
        normal_nodes: 320,
        time_nodes: 40,
        ..GridSpec::for_measure(dim, mu.support_radius(), 0.1)
    };
    let field = picard_solve(&mu, 3.0, &spec, &SolverCaps::default()).unwrap();
    assert!(field.converged());

    let phis: Vec<Arc<dyn Fn(&Point) -> f64 + Send + Sync>> = vec![
        Arc::new(|y: &Point| (-(y.normal() - 1.5f64).powi(2) / 0.5).exp()),
        Arc::new(|y: &Point| (-(y.normal() - 1.0f64).powi(2) / 0.18).exp()),
        Arc::new(|y: &Point| {
            let u = (y.normal() - 2.0) / 0.8;
            (-u * u).exp() * (1.0 + 0.3 * (2.0 * y.normal()).cos())
        }),
    ];
    let times: Vec<f64> = field.times()[..5].iter().rev().cloned().collect();
    let trace = initial_trace(&field, &phis, &times).unwrap();

    let mut worst = 0.0f64;
    for (i, entry) in trace.iter().enumerate() {
        let phi = &phis[i];
        let oracle = halfheat::quad::integrate(
            |x: f64| {
                let pxy = Point::on_axis(dim, x).unwrap();
                x * f.eval(&pxy) * phi(&pxy)
            },
            0.0,
            5.0,
            halfheat::quad::Tolerance::rel(1e-10),
        )
        .unwrap()
        .value;
        worst = worst.max(((entry.extrapolated - oracle) / oracle).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "9 (initial-trace round trip)",
        worst <= 5e-3,
        &format!("worst rel {worst:.2e} over 3 test functions; {elapsed:.0}s"),
    );
}

#[test]
fn criterion_10_classifier_fixture_suite() {
    let dim = d(1);
    let z = Point::on_axis(dim, 2.0).unwrap();
    let bump = || {
        let mut mu = HalfSpaceMeasure::zero(dim);
        mu.add_weighted(
            ScalarField::gaussian_bump(Point::on_axis(dim, 1.0).unwrap(), 1.0, 0.4).unwrap(),
        )
        .unwrap();
        mu
    };
    let atom = |normal: f64| {
        let mut mu = HalfSpaceMeasure::zero(dim);
        mu.add_atom(Point::on_axis(dim, normal).unwrap(), 1.0).unwrap();
        mu
    };
    let profile = |kind, center: Point, p: f64, n: usize| {
        make_profile(&SingularProfile::new(kind, center, p, d(n)).unwrap(), 1.0).unwrap()
    };
    let cases: Vec<(HalfSpaceMeasure, f64, Verdict)> = vec![
        (HalfSpaceMeasure::zero(dim), 3.0, Verdict::Unobstructed),
        (bump(), 1.5, Verdict::Unobstructed),
        (bump(), 4.0, Verdict::Unobstructed),
        (atom(0.0), 2.0, Verdict::ObstructedNonexistence),
        (atom(0.0), 2.5, Verdict::ObstructedNonexistence),
        (atom(0.0), 1.5, Verdict::Unobstructed),
        (atom(2.0), 4.0, Verdict::ObstructedNonexistence),
        (profile(ProfileKind::InteriorPower, z, 4.0, 1), 4.0, Verdict::Unobstructed),
        (profile(ProfileKind::InteriorPower, z, 3.5, 1), 6.0, Verdict::ObstructedNonexistence),
        (
            profile(ProfileKind::BoundaryPower, Point::origin(dim), 2.5, 1),
            2.5,
            Verdict::Unobstructed,
        ),
        (
            {
                let mut mu = HalfSpaceMeasure::zero(dim);
                mu.add_plain(ScalarField::constant(z, 1.0, 2.0).unwrap()).unwrap();
                mu
            },
            2.5,
            Verdict::Unobstructed,
        ),
        (
            profile(ProfileKind::BoundaryLinePower, Point::origin(d(2)), 1.9, 2),
            1.9,
            Verdict::Unobstructed,
        ),
    ];
    let mut misclassified = 0usize;
    let mut notes = String::new();
    for (i, (mu, p, expect)) in cases.iter().enumerate() {
        let c = classify(mu, *p, 1.0).unwrap();
        if c.combined != *expect {
            misclassified += 1;
            notes += &format!("fixture {} got {:?}; ", i + 1, c.combined);
        }
    }
    report(
        "10 (classifier fixture suite)",
        misclassified == 0,
        &format!("{misclassified} misclassifications across 12 fixtures; {notes}"),
    );
}
