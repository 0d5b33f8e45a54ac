use super::*;
use crate::measures::{ProfileKind, SingularProfile};
use approx::assert_relative_eq;

fn d(n: usize) -> Dimension {
    Dimension::new(n).unwrap()
}

fn bump(n: usize, amplitude: f64) -> ScalarField {
    ScalarField::gaussian_bump(Point::on_axis(d(n), 1.5).unwrap(), amplitude, 0.4).unwrap()
}

fn weighted_measure(n: usize, f: &ScalarField) -> HalfSpaceMeasure {
    let mut mu = HalfSpaceMeasure::zero(d(n));
    mu.add_weighted(f.clone()).unwrap();
    mu
}

#[test]
fn data_smallness_zero_and_bounded() {
    let mu = HalfSpaceMeasure::zero(d(1));
    let r = data_smallness(&mu, 2.0, 1.0).unwrap();
    assert_eq!(r.value, 0.0);

    // bounded compact weighted density below p_{N+1}: finite, -> 0 with T
    let mu = weighted_measure(1, &bump(1, 1.0));
    let big = data_smallness(&mu, 1.5, 1.0).unwrap();
    let small = data_smallness(&mu, 1.5, 1.0 / 64.0).unwrap();
    assert!(!big.divergent && big.value.is_finite());
    assert!(small.value < big.value);
}

#[test]
fn data_smallness_boundary_atom_supercritical_diverges() {
    let mut mu = HalfSpaceMeasure::zero(d(1));
    mu.add_atom(Point::origin(d(1)), 1.0).unwrap();
    let r = data_smallness(&mu, 2.5, 0.5).unwrap();
    assert!(r.divergent, "integral should be flagged infinite: {:?}", r.value);
    // and subcritical is finite
    let r = data_smallness(&mu, 1.5, 0.5).unwrap();
    assert!(!r.divergent && r.value.is_finite());
}

#[test]
fn data_smallness_monotone_in_mass() {
    let mu = weighted_measure(1, &bump(1, 1.0));
    let one = data_smallness(&mu, 2.0, 0.5).unwrap().value;
    let two = data_smallness(&mu.scaled(2.0).unwrap(), 2.0, 0.5).unwrap().value;
    assert!(two > one);
    // exact scaling: the integrand carries mass^(p-1)
    assert_relative_eq!(two, one * 2.0, max_relative = 1e-9);
}

#[test]
fn identity_gauge_candidate_reduces_to_data_pair() {
    // Φ = id, h = 0: v(x,t) = 2 [G(t) f](x) = 2 apply_K(x_N f dx).
    let f = bump(1, 0.7);
    let mu = weighted_measure(1, &f);
    let cand =
        build_gauge_supersolution(d(1), &f, &LineField::zero(), ConvexGauge::identity(), 3.0)
            .unwrap();
    for (xn, t) in [(1.2, 0.05), (1.8, 0.3), (0.4, 1.0)] {
        let x = Point::on_axis(d(1), xn).unwrap();
        let v = cand.v(&x, t).unwrap();
        let expect = 2.0 * mu.apply_k(&x, t).unwrap();
        assert_relative_eq!(v, expect, max_relative = 1e-7);
        assert_eq!(cand.w(&x, t).unwrap(), 0.0);
    }
}

#[test]
fn boundary_candidate_constant_density() {
    // f = 0, h ≈ 1 near the evaluation column, Φ = id, N = 2:
    // w(x,t) = 2 (x_N/t) Γ_1(x_N,t) [Γ_1(t) h](x') ≈ 2 (x_N/t) Γ_1(x_N,t)
    // for t far smaller than the support of h.
    let h = LineField::constant(vec![0.0], 1.0, 50.0).unwrap();
    let cand =
        build_gauge_supersolution(d(2), &ScalarField::zero(), &h, ConvexGauge::identity(), 1.7)
            .unwrap();
    let x = Point::new(d(2), &[0.0], 0.8).unwrap();
    let t = 0.05;
    let w = cand.w(&x, t).unwrap();
    let front = 0.8 / t * crate::kernels::gamma_profile(1, 0.64, t);
    assert_relative_eq!(w, 2.0 * front, max_relative = 1e-6);
    assert_eq!(cand.v(&x, t).unwrap(), 0.0);
}

#[test]
fn boundary_data_rejected_at_p_two_and_above() {
    let h = LineField::constant(vec![0.0], 1.0, 1.0).unwrap();
    assert!(build_gauge_supersolution(
        d(2),
        &ScalarField::zero(),
        &h,
        ConvexGauge::identity(),
        2.0
    )
    .is_err());
}

#[test]
fn power_gauge_candidate_matches_independent_quadrature() {
    // Φ = τ^α on a radial power profile: v = 2 [G(t) f^α]^{1/α}, with the
    // inner convolution cross-checked by direct adaptive quadrature.
    let dim = d(1);
    let z = Point::on_axis(dim, 2.0).unwrap();
    let prof = SingularProfile::new(ProfileKind::InteriorPower, z, 4.0, dim).unwrap();
    let f = prof.density().unwrap();
    let alpha = 1.3;
    let cand = build_gauge_supersolution(
        dim,
        &f,
        &LineField::zero(),
        ConvexGauge::power(alpha).unwrap(),
        4.0,
    )
    .unwrap();
    let x = Point::on_axis(dim, 1.6).unwrap();
    let t = 0.04;
    let v = cand.v(&x, t).unwrap();
    // oracle: 1-d adaptive quadrature of G(x,y,t) f(y)^α over the support,
    // split at the singular center
    let cfg = crate::kernels::KernelConfig::default();
    // a 2e-9 window around the singular point is integrated analytically:
    // the kernel is constant there to O(1e-9) and the density is the pure
    // power r^{-2α/(p-1)}, whose slowly decaying radial primitive makes
    // the window carry a few percent of the mass
    let integrand = |y: f64| {
        let yp = Point::on_axis(dim, y.max(0.0)).unwrap();
        crate::kernels::dirichlet_unchecked(&cfg, &x, &yp, t) * f.eval(&yp).powf(alpha)
    };
    let tol = crate::quad::Tolerance::new(1e-8, 1e-12);
    let beta = 1.0 - alpha * 2.0 / 3.0;
    let gap = 2.0 * 1e-9f64.powf(beta) / beta
        * crate::kernels::dirichlet_unchecked(&cfg, &x, &z, t);
    let oracle = crate::quad::integrate(integrand, 1.0, 2.0 - 1e-9, tol)
        .unwrap()
        .value
        + crate::quad::integrate(integrand, 2.0 + 1e-9, 3.0, tol).unwrap().value
        + gap;
    assert_relative_eq!(v, 2.0 * oracle.powf(1.0 / alpha), max_relative = 1e-3);
}

#[test]
fn jensen_direction_bounds_data_by_candidate() {
    // apply_K(μ, x, t) <= (v + w)/2 for convex gauges.
    let f = bump(1, 1.4);
    let mu = weighted_measure(1, &f);
    for gauge in [
        ConvexGauge::identity(),
        ConvexGauge::power(1.5).unwrap(),
        ConvexGauge::log_type(0.7).unwrap(),
    ] {
        let cand =
            build_gauge_supersolution(d(1), &f, &LineField::zero(), gauge, 3.0).unwrap();
        for (xn, t) in [(0.8, 0.02), (1.5, 0.1), (2.5, 0.6)] {
            let x = Point::on_axis(d(1), xn).unwrap();
            let data = mu.apply_k(&x, t).unwrap();
            let half = 0.5 * cand.total(&x, t).unwrap();
            assert!(
                data <= half * (1.0 + 1e-7) + 1e-14,
                "Jensen violated for {:?} at ({xn}, {t}): {data} vs {half}",
                cand.gauge.kind
            );
        }
    }
}

#[test]
fn threshold_lhs_scales_like_amplitude_power() {
    // interior LHS ∝ ε^{p-1} for Φ = τ^α.
    let p = 3.0;
    let gauge = ConvexGauge::power(1.5).unwrap();
    let mut values = vec![];
    for eps in [1.0, 0.5, 0.25] {
        let f = bump(1, eps);
        let (interior, boundary) =
            gauge_threshold_lhs(d(1), &f, &LineField::zero(), gauge, p, 0.25).unwrap();
        assert_eq!(boundary, 0.0);
        values.push((eps, interior));
    }
    for w in values.windows(2) {
        let slope = (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln();
        assert!(
            (slope - (p - 1.0)).abs() < 0.05 * (p - 1.0),
            "fitted amplitude exponent {slope}"
        );
    }
}

#[test]
fn threshold_lhs_boundary_part_finite_below_two() {
    let h = LineField::gaussian_bump(vec![0.0], 0.1, 0.5).unwrap();
    let gauge = ConvexGauge::power(1.4).unwrap();
    let (interior, boundary) =
        gauge_threshold_lhs(d(2), &ScalarField::zero(), &h, gauge, 1.5, 0.25).unwrap();
    assert_eq!(interior, 0.0);
    assert!(boundary.is_finite() && boundary > 0.0);
}

#[test]
fn power_profile_smallness_ratios() {
    // interior power profile at its own p: ratio flat in σ within 2%
    let dim = d(1);
    let z = Point::on_axis(dim, 2.0).unwrap();
    let p = 4.0;
    let prof = SingularProfile::new(ProfileKind::InteriorPower, z, p, dim).unwrap();
    let f = prof.density().unwrap();
    let alpha = 1.05;
    let (interior, _) =
        power_profile_smallness(dim, &f, &LineField::zero(), alpha, p, 1.0).unwrap();
    assert!(interior.is_finite() && interior > 0.0);
    // flatness probe: recompute restricted to two individual σ by scaling T
    let (at_big, _) = power_profile_smallness(dim, &f, &LineField::zero(), alpha, p, 1.0 / 4.0)
        .unwrap();
    assert!(
        (interior / at_big - 1.0).abs() < 0.02,
        "sup ratio drifts with the σ range: {interior} vs {at_big}"
    );

    // bounded compact f: sup ratio attained at the largest σ, so shrinking
    // the ladder upper end shrinks the sup
    let f = bump(1, 1.0);
    let (big, _) = power_profile_smallness(d(1), &f, &LineField::zero(), 1.5, 4.0, 1.0).unwrap();
    let (small, _) =
        power_profile_smallness(d(1), &f, &LineField::zero(), 1.5, 4.0, 1e-4).unwrap();
    assert!(small < big);

    // boundary-line power profile at its own p (N = 2)
    let dim2 = d(2);
    let p2 = 1.9;
    let prof2 =
        SingularProfile::new(ProfileKind::BoundaryLinePower, Point::origin(dim2), p2, dim2)
            .unwrap();
    let h = prof2.line_density().unwrap();
    let (_, line_ratio) =
        power_profile_smallness(dim2, &ScalarField::zero(), &h, 1.05, p2, 1.0).unwrap();
    let (_, line_ratio_small) =
        power_profile_smallness(dim2, &ScalarField::zero(), &h, 1.05, p2, 1.0 / 4.0).unwrap();
    assert!(line_ratio.is_finite() && line_ratio > 0.0);
    assert!(
        (line_ratio / line_ratio_small - 1.0).abs() < 0.02,
        "boundary-line ratio drifts: {line_ratio} vs {line_ratio_small}"
    );

    assert!(power_profile_smallness(dim, &f, &LineField::zero(), 1.0, 4.0, 1.0).is_err());
}

#[test]
fn log_gauge_smallness_interior_cases() {
    assert_eq!(
        log_gauge_smallness_interior(d(1), &ScalarField::zero(), 0.3, 0, 3.0, 1.0)
            .unwrap()
            .0,
        0.0
    );
    // interior log profile at p_N, ℓ = 0, β ∈ (0, N/2): the per-σ
    // normalized functional stays within a 3x band across the deep ladder
    let dim = d(1);
    let z = Point::on_axis(dim, 2.0).unwrap();
    let p = fujita_exponent(1);
    let prof = SingularProfile::new(ProfileKind::InteriorLog, z, p, dim).unwrap();
    let f = prof.density().unwrap();
    let (sup, samples) = log_gauge_smallness_interior(dim, &f, 0.3, 0, p, 1.0).unwrap();
    assert!(sup.is_finite() && sup > 0.0);
    let deep: Vec<f64> = samples.iter().skip(4).map(|&(_, r)| r).collect();
    let max = deep.iter().cloned().fold(f64::MIN, f64::max);
    let min = deep.iter().cloned().fold(f64::MAX, f64::min);
    assert!(min > 0.0 && max / min < 3.0, "normalized band too wide: {samples:?}");

    // boundary log profile at p_{N+1}, ℓ = 1
    let pb = fujita_exponent(2);
    let prof =
        SingularProfile::new(ProfileKind::BoundaryLog, Point::origin(dim), pb, dim).unwrap();
    let f = prof.density().unwrap();
    let (sup, samples) = log_gauge_smallness_interior(dim, &f, 0.3, 1, pb, 1.0).unwrap();
    assert!(sup.is_finite() && sup > 0.0);
    let deep: Vec<f64> = samples.iter().skip(4).map(|&(_, r)| r).collect();
    let max = deep.iter().cloned().fold(f64::MIN, f64::max);
    let min = deep.iter().cloned().fold(f64::MAX, f64::min);
    assert!(min > 0.0 && max / min < 3.0, "boundary band too wide: {samples:?}");

    // wrong exponent is a domain error
    assert!(log_gauge_smallness_interior(dim, &f, 0.3, 1, 2.5, 1.0).is_err());
}

#[test]
fn log_gauge_smallness_boundary_cases() {
    // N = 1 rejected outright
    let h1 = LineField::zero();
    assert!(log_gauge_smallness_boundary(d(1), &h1, 0.3, 2.0, 1.0).is_err());

    let dim = d(2);
    let p = fujita_exponent(3); // p_{N+1} with N = 2
    assert_eq!(
        log_gauge_smallness_boundary(dim, &LineField::zero(), 0.4, p, 1.0)
            .unwrap()
            .0,
        0.0
    );
    let prof =
        SingularProfile::new(ProfileKind::BoundaryLineLog, Point::origin(dim), p, dim).unwrap();
    let h = prof.line_density().unwrap();
    let (sup, samples) = log_gauge_smallness_boundary(dim, &h, 0.4, p, 1.0).unwrap();
    assert!(sup.is_finite() && sup > 0.0);
    let deep: Vec<f64> = samples.iter().skip(4).map(|&(_, r)| r).collect();
    let max = deep.iter().cloned().fold(f64::MIN, f64::max);
    let min = deep.iter().cloned().fold(f64::MAX, f64::min);
    assert!(min > 0.0 && max / min < 3.0, "line band too wide: {samples:?}");

    // bounded compact h: deep-σ ratios vanish against the shallow ones
    let h = LineField::gaussian_bump(vec![0.0], 1.0, 0.5).unwrap();
    let (_, samples) = log_gauge_smallness_boundary(dim, &h, 0.4, p, 1.0).unwrap();
    assert!(samples.last().unwrap().1 < samples.first().unwrap().1);
}

fn verify_grid(horizon: f64) -> GridSpec {
    GridSpec {
        dim: d(1),
        tangential_halfwidth: 0.0,
        tangential_nodes: 0,
        normal_extent: 6.0,
        normal_nodes: 96,
        grading: 3.0,
        t_min: 1e-4 * horizon,
        horizon,
        time_nodes: 16,
    }
}

#[test]
fn verify_supersolution_doubled_data_small_bump() {
    // candidate = 2 apply_K(μ) with a tiny bump and p = 3 passes.
    let mu = weighted_measure(1, &bump(1, 0.05));
    let mu2 = mu.clone();
    let cand = move |x: &Point, t: f64| Ok(2.0 * mu2.apply_k(x, t)?);
    let report = verify_supersolution(&cand, &mu, 3.0, &verify_grid(0.1)).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn verify_supersolution_factor_one_fails() {
    // candidate = apply_K(μ) exactly cannot absorb the nonlinear term.
    let mu = weighted_measure(1, &bump(1, 0.8));
    let mu2 = mu.clone();
    let cand = move |x: &Point, t: f64| mu2.apply_k(x, t);
    let report = verify_supersolution(&cand, &mu, 3.0, &verify_grid(0.1)).unwrap();
    assert!(!report.pass, "{report:?}");
    assert!(report.min_margin < 0.0);
}

#[test]
fn verify_supersolution_zero_trivial() {
    let mu = HalfSpaceMeasure::zero(d(1));
    let cand = |_: &Point, _: f64| Ok(0.0);
    let report = verify_supersolution(&cand, &mu, 2.0, &verify_grid(0.1)).unwrap();
    assert!(report.pass);
    assert_eq!(report.candidate_sup, 0.0);
}

#[test]
fn doubled_data_passes_below_calibrated_smallness() {
    // Calibrated once on the Gaussian-bump family: whenever the data-size
    // integral stays below this value, candidate = 2 Kμ verifies.
    const CALIBRATED_SMALLNESS: f64 = 0.02;
    for amplitude in [0.02, 0.05, 0.1] {
        let mu = weighted_measure(1, &bump(1, amplitude));
        let smallness = data_smallness(&mu, 3.0, 0.1).unwrap();
        if smallness.value <= CALIBRATED_SMALLNESS {
            let mu2 = mu.clone();
            let cand = move |x: &Point, t: f64| Ok(2.0 * mu2.apply_k(x, t)?);
            let report = verify_supersolution(&cand, &mu, 3.0, &verify_grid(0.1)).unwrap();
            assert!(
                report.pass,
                "amplitude {amplitude}: smallness {} but verification failed: {report:?}",
                smallness.value
            );
        }
    }
}

#[test]
fn thresholds_are_the_explicit_constants() {
    assert_relative_eq!(interior_threshold(2.0), 0.125, max_relative = 1e-15);
    // 2^{-2p+1} (2eπ)^{(p-1)/2} at p = 2: 0.125 · sqrt(2eπ)
    assert_relative_eq!(
        boundary_threshold(2.0),
        0.125 * (2.0 * std::f64::consts::E * std::f64::consts::PI).sqrt(),
        max_relative = 1e-15
    );
}
