//! Necessary-condition functionals and trend-based nonexistence verdicts.
//!
//! The underlying inequalities hold with unspecified constants, so no
//! single sample can decide anything. Each check instead evaluates a
//! dimensionless functional on a `(z, σ)` grid and tests whether its sup
//! over `z` diverges as `σ -> 0` (log-log slope with a least-squares fit):
//! divergence means no admissible constant exists, which is a genuine
//! obstruction; a bounded trend leaves the data unobstructed by that
//! condition. Noisy fits are reported as inconclusive, never silently.

use crate::error::{Error, Result};
use crate::geometry::{fujita_exponent, Point};
use crate::measures::{half_ball_moment, HalfSpaceMeasure, QuadOptions};
use crate::solver::SolutionField;
use serde::Serialize;

/// Slope threshold for declaring divergence of a fitted trend.
pub const SLOPE_TOLERANCE: f64 = 0.1;
/// Fits whose residual exceeds this fraction of the fitted range are
/// inconclusive.
const RESIDUAL_FRACTION: f64 = 0.2;
/// Absolute log-residual floor, so flat trends with tiny quadrature noise
/// do not trip the residual check.
const RESIDUAL_FLOOR: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ObstructedNonexistence,
    Unobstructed,
    Inconclusive,
}

/// Which functional produced the report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionTag {
    /// Ball-mass growth against `σ^{-2/(p-1)} ∫ y_N`.
    BallGrowth,
    /// Log-corrected interior condition at `p = p_N`.
    InteriorLogCritical,
    /// Log-corrected boundary condition at `p = p_{N+1}`.
    BoundaryLogCritical,
    /// Boundary mass must vanish for `p >= 2`.
    BoundaryMass,
    /// Linear-in-`z_N` global mass growth (subcritical global test).
    GlobalGrowth,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub which_condition: ConditionTag,
    /// `(z coordinates, σ, functional value)` samples.
    pub samples: Vec<(Vec<f64>, f64, f64)>,
    pub sup_estimate: f64,
    pub growth_exponent_fit: f64,
    pub fit_half_width: f64,
    pub verdict: Verdict,
    pub detail: String,
}

/// Sampling grid: centers and a geometric σ ladder.
#[derive(Clone, Debug)]
pub struct SampleGrid {
    pub centers: Vec<Point>,
    pub sigmas: Vec<f64>,
}

impl SampleGrid {
    /// Geometric σ ladder `√T · 2^{-k}`, k = 1..=levels (two decades need
    /// levels >= 7), with centers on a box lattice refined by the
    /// measure's own singular locations.
    pub fn for_measure(mu: &HalfSpaceMeasure, horizon: f64, levels: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
        }
        if levels < 7 {
            return Err(Error::Domain(
                "σ ladder needs at least 7 halvings to span two decades".into(),
            ));
        }
        let dim = mu.dim();
        let sqrt_t = horizon.sqrt();
        let sigmas: Vec<f64> = (1..=levels).map(|k| sqrt_t * 0.5f64.powi(k as i32)).collect();
        let reach = mu.support_radius().max(1.0);
        let mut centers = mu.singular_centers();
        let lattice = 3usize;
        let axis_vals: Vec<f64> = (0..lattice)
            .map(|i| -reach + 2.0 * reach * i as f64 / (lattice - 1) as f64)
            .collect();
        let normal_vals: Vec<f64> = vec![0.0, 0.5 * reach, reach];
        match dim.get() {
            1 => {
                for &xn in &normal_vals {
                    centers.push(Point::on_axis(dim, xn)?);
                }
            }
            2 => {
                for &x1 in &axis_vals {
                    for &xn in &normal_vals {
                        centers.push(Point::new(dim, &[x1], xn)?);
                    }
                }
            }
            _ => {
                for &x1 in &axis_vals {
                    for &x2 in &axis_vals {
                        for &xn in &normal_vals {
                            centers.push(Point::new(dim, &[x1, x2], xn)?);
                        }
                    }
                }
            }
        }
        Ok(SampleGrid { centers, sigmas })
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() || self.sigmas.len() < 4 {
            return Err(Error::Domain(
                "sample grid needs centers and at least 4 σ values".into(),
            ));
        }
        Ok(())
    }
}

/// Least-squares slope of `ln y` against `ln x`, restricted to positive
/// values; returns `(slope, residual_rms, fitted_range, half_width)`.
fn log_log_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0 && y.is_finite())
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom <= 0.0 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let rss: f64 = pts
        .iter()
        .map(|&(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let residual = (rss / n).sqrt();
    let fit_min = pts
        .iter()
        .map(|&(x, _)| slope * x + intercept)
        .fold(f64::MAX, f64::min);
    let fit_max = pts
        .iter()
        .map(|&(x, _)| slope * x + intercept)
        .fold(f64::MIN, f64::max);
    // 95%-ish half width of the slope from the residual
    let half_width = 2.0 * residual / (sxx - sx * sx / n).sqrt();
    Some((slope, residual, fit_max - fit_min, half_width))
}

fn trend_verdict(
    slope_when_diverging: f64,
    fit: Option<(f64, f64, f64, f64)>,
    all_zero: bool,
) -> (Verdict, f64, f64, String) {
    if all_zero {
        return (
            Verdict::Unobstructed,
            0.0,
            0.0,
            "functional vanishes identically".into(),
        );
    }
    match fit {
        None => (
            Verdict::Inconclusive,
            f64::NAN,
            f64::NAN,
            "not enough positive samples for a trend fit".into(),
        ),
        Some((slope, residual, range, half_width)) => {
            if residual > RESIDUAL_FRACTION * range.max(RESIDUAL_FLOOR / RESIDUAL_FRACTION) {
                (
                    Verdict::Inconclusive,
                    slope,
                    half_width,
                    format!("fit residual {residual:.3} exceeds 20% of range {range:.3}"),
                )
            } else if (slope_when_diverging < 0.0 && slope <= slope_when_diverging)
                || (slope_when_diverging > 0.0 && slope >= slope_when_diverging)
            {
                (
                    Verdict::ObstructedNonexistence,
                    slope,
                    half_width,
                    format!("functional diverges: fitted slope {slope:.3}"),
                )
            } else {
                (
                    Verdict::Unobstructed,
                    slope,
                    half_width,
                    format!("functional stays bounded: fitted slope {slope:.3}"),
                )
            }
        }
    }
}

/// Ball-growth condition: `R(z,σ) = μ(B_Ω(z,σ)) / (σ^{-2/(p-1)} ∫_{B_Ω} y_N)`
/// must stay bounded; a fitted slope `<= -0.1` of `sup_z R` against `σ`
/// (on the small-σ half of the ladder) is an obstruction.
pub fn check_ball_condition(
    mu: &HalfSpaceMeasure,
    p: f64,
    horizon: f64,
    grid: &SampleGrid,
) -> Result<ConditionReport> {
    if !(p > 1.0) || !(horizon > 0.0) {
        return Err(Error::Domain("need p > 1 and horizon > 0".into()));
    }
    grid.validate()?;
    let opt = QuadOptions::default();
    let mut samples = Vec::new();
    let mut sups: Vec<f64> = Vec::with_capacity(grid.sigmas.len());
    for &sigma in &grid.sigmas {
        let mut sup: f64 = 0.0;
        for z in &grid.centers {
            let mass = mu.ball_mass_opt(z, sigma, &opt)?;
            let ratio = if mass == 0.0 {
                0.0
            } else {
                mass / (sigma.powf(-2.0 / (p - 1.0)) * half_ball_moment(z, sigma)?)
            };
            samples.push((z.coords(), sigma, ratio));
            sup = sup.max(ratio);
        }
        sups.push(sup);
    }
    let half = grid.sigmas.len() / 2;
    let fit = log_log_fit(&grid.sigmas[half..], &sups[half..]);
    let all_zero = sups.iter().all(|&s| s == 0.0);
    let (verdict, slope, half_width, detail) = trend_verdict(-SLOPE_TOLERANCE, fit, all_zero);
    Ok(ConditionReport {
        which_condition: ConditionTag::BallGrowth,
        samples,
        sup_estimate: sups.iter().cloned().fold(0.0, f64::max),
        growth_exponent_fit: slope,
        fit_half_width: half_width,
        verdict,
        detail,
    })
}

/// Interior log condition at `p = p_N`:
/// `L(z,σ) = z_N^{-1} μ(B_Ω(z,σ)) [ln(e + √T/σ)]^{N/2}` on `z_N >= 3σ`.
/// Divergence is a positive slope of `ln sup L` against `ln ln(e + √T/σ)`.
pub fn check_log_condition_interior(
    mu: &HalfSpaceMeasure,
    horizon: f64,
    grid: &SampleGrid,
) -> Result<ConditionReport> {
    grid.validate()?;
    let n = mu.dim().get() as f64;
    let sqrt_t = horizon.sqrt();
    let opt = QuadOptions::default();
    let mut samples = Vec::new();
    let mut sups = Vec::new();
    let mut abscissae = Vec::new();
    for &sigma in &grid.sigmas {
        let mut sup: f64 = 0.0;
        for z in &grid.centers {
            if z.normal() < 3.0 * sigma {
                return Err(Error::Domain(format!(
                    "interior log condition needs z_N >= 3σ, got z_N = {} at σ = {sigma}",
                    z.normal()
                )));
            }
            let mass = mu.ball_mass_opt(z, sigma, &opt)?;
            let l = mass / z.normal()
                * (std::f64::consts::E + sqrt_t / sigma).ln().powf(n / 2.0);
            samples.push((z.coords(), sigma, l));
            sup = sup.max(l);
        }
        sups.push(sup);
        abscissae.push((std::f64::consts::E + sqrt_t / sigma).ln());
    }
    let fit = log_log_fit(&abscissae, &sups);
    let all_zero = sups.iter().all(|&s| s == 0.0);
    let (verdict, slope, half_width, detail) = trend_verdict(SLOPE_TOLERANCE, fit, all_zero);
    Ok(ConditionReport {
        which_condition: ConditionTag::InteriorLogCritical,
        samples,
        sup_estimate: sups.iter().cloned().fold(0.0, f64::max),
        growth_exponent_fit: slope,
        fit_half_width: half_width,
        verdict,
        detail,
    })
}

/// Boundary log condition at `p = p_{N+1}`:
/// `M(z,σ) = μ(B_Ω(z,σ)) [ln(e + √T/σ)]^{(N+1)/2}` on `z ∈ ∂Ω`.
pub fn check_log_condition_boundary(
    mu: &HalfSpaceMeasure,
    horizon: f64,
    grid: &SampleGrid,
) -> Result<ConditionReport> {
    grid.validate()?;
    let n = mu.dim().get() as f64;
    let sqrt_t = horizon.sqrt();
    let opt = QuadOptions::default();
    let mut samples = Vec::new();
    let mut sups = Vec::new();
    let mut abscissae = Vec::new();
    for &sigma in &grid.sigmas {
        let mut sup: f64 = 0.0;
        for z in &grid.centers {
            if !z.is_boundary() {
                return Err(Error::Domain(
                    "boundary log condition samples must lie on the boundary".into(),
                ));
            }
            let mass = mu.ball_mass_opt(z, sigma, &opt)?;
            let m = mass * (std::f64::consts::E + sqrt_t / sigma).ln().powf((n + 1.0) / 2.0);
            samples.push((z.coords(), sigma, m));
            sup = sup.max(m);
        }
        sups.push(sup);
        abscissae.push((std::f64::consts::E + sqrt_t / sigma).ln());
    }
    let fit = log_log_fit(&abscissae, &sups);
    let all_zero = sups.iter().all(|&s| s == 0.0);
    let (verdict, slope, half_width, detail) = trend_verdict(SLOPE_TOLERANCE, fit, all_zero);
    Ok(ConditionReport {
        which_condition: ConditionTag::BoundaryLogCritical,
        samples,
        sup_estimate: sups.iter().cloned().fold(0.0, f64::max),
        growth_exponent_fit: slope,
        fit_half_width: half_width,
        verdict,
        detail,
    })
}

/// Boundary mass: `μ(∂Ω) > 0` with `p >= 2` is an outright obstruction.
pub fn check_boundary_mass(mu: &HalfSpaceMeasure, p: f64) -> Result<ConditionReport> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("need p > 1, got {p}")));
    }
    let mass = mu.boundary_mass()?;
    let obstructed = p >= 2.0 && mass > 0.0;
    Ok(ConditionReport {
        which_condition: ConditionTag::BoundaryMass,
        samples: vec![(vec![], 0.0, mass)],
        sup_estimate: mass,
        growth_exponent_fit: 0.0,
        fit_half_width: 0.0,
        verdict: if obstructed {
            Verdict::ObstructedNonexistence
        } else {
            Verdict::Unobstructed
        },
        detail: if obstructed {
            format!("boundary mass {mass:.6e} with p = {p} >= 2 forbids solvability")
        } else {
            format!("boundary mass {mass:.6e} compatible with p = {p}")
        },
    })
}

/// Global growth: `sup_z μ(B_Ω(z,1))/(1 + z_N)` over boxes of doubling
/// width; a stabilizing running sup is the subcritical solvability side.
pub fn check_global_growth(mu: &HalfSpaceMeasure, p: f64) -> Result<ConditionReport> {
    let n = mu.dim().get();
    let p_upper = if mu.min_support_normal() > 0.0 {
        fujita_exponent(n)
    } else {
        fujita_exponent(n + 1)
    };
    if !(p > 1.0 && p < p_upper) {
        return Err(Error::Domain(format!(
            "global growth test applies for 1 < p < {p_upper}, got {p}"
        )));
    }
    let dim = mu.dim();
    let opt = QuadOptions::default();
    let mut sups = Vec::new();
    let mut samples = Vec::new();
    for k in 0..6 {
        let width = 2f64.powi(k);
        let mut sup: f64 = if k == 0 { 0.0 } else { sups[k as usize - 1] };
        let lattice = 5usize;
        let axis: Vec<f64> = (0..lattice)
            .map(|i| -width + 2.0 * width * i as f64 / (lattice - 1) as f64)
            .collect();
        let normals: Vec<f64> = (0..lattice)
            .map(|i| width * i as f64 / (lattice - 1) as f64)
            .collect();
        let mut centers = Vec::new();
        match dim.get() {
            1 => {
                for &xn in &normals {
                    centers.push(Point::on_axis(dim, xn)?);
                }
            }
            2 => {
                for &x1 in &axis {
                    for &xn in &normals {
                        centers.push(Point::new(dim, &[x1], xn)?);
                    }
                }
            }
            _ => {
                for &x1 in &axis {
                    for &x2 in &axis {
                        for &xn in &normals {
                            centers.push(Point::new(dim, &[x1, x2], xn)?);
                        }
                    }
                }
            }
        }
        for z in centers {
            let v = mu.ball_mass_opt(&z, 1.0, &opt)? / (1.0 + z.normal());
            samples.push((z.coords(), width, v));
            sup = sup.max(v);
        }
        sups.push(sup);
    }
    let last = sups[sups.len() - 1];
    let prev = sups[sups.len() - 2];
    let growth = if prev > 0.0 { (last - prev) / prev } else { 0.0 };
    let rising = sups
        .windows(2)
        .rev()
        .take(3)
        .all(|w| w[1] > w[0] * 1.05);
    let (verdict, detail) = if growth < 0.01 {
        (
            Verdict::Unobstructed,
            format!("running sup stabilized at {last:.6e} (last doubling +{:.2}%)", growth * 100.0),
        )
    } else if rising {
        (
            Verdict::ObstructedNonexistence,
            format!("running sup keeps growing (last doubling +{:.1}%)", growth * 100.0),
        )
    } else {
        (
            Verdict::Inconclusive,
            "running sup neither stabilized nor steadily growing".into(),
        )
    };
    Ok(ConditionReport {
        which_condition: ConditionTag::GlobalGrowth,
        samples,
        sup_estimate: last,
        growth_exponent_fit: growth,
        fit_half_width: 0.0,
        verdict,
        detail,
    })
}

/// A blow-up rate sample: the windowed integral at `(x, t)` alongside the
/// self-similar rate it must stay below (up to a constant).
#[derive(Clone, Debug, Serialize)]
pub struct RateSample {
    pub x: Vec<f64>,
    pub t: f64,
    pub value: f64,
    pub rate: f64,
}

/// Windowed mass functionals of a solution against the self-similar rates:
/// interior balls `B(x, √(T-t))` for `x_N >= √(T-t)` against
/// `(T-t)^{N/2 - 1/(p-1)}`, and weighted half-balls at boundary centers
/// against `(T-t)^{(N+1)/2 - 1/(p-1)}`.
pub fn blow_up_rate_functionals(
    u: &SolutionField,
    horizon: f64,
    p: f64,
) -> Result<(Vec<RateSample>, Vec<RateSample>)> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("need p > 1, got {p}")));
    }
    let grid = &u.grid;
    let n = grid.dim().get() as f64;
    let weights = grid.pl_weights();
    let points: Vec<Point> = (0..grid.node_count()).map(|i| grid.node_point(i)).collect();
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for (j, &t) in grid.times.iter().enumerate() {
        if t >= horizon {
            return Err(Error::Domain(format!(
                "rate functionals need t < T, got t = {t}, T = {horizon}"
            )));
        }
        let r = (horizon - t).sqrt();
        let slice = u.slice(j);
        // interior sample: on-axis center at x_N = max(r, mid-domain)
        let xc = Point::on_axis(grid.dim(), r.max(0.25 * grid.spec.normal_extent))?;
        let mut val = 0.0;
        for i in 0..slice.len() {
            if points[i].dist(&xc) < r {
                val += weights[i] * slice[i];
            }
        }
        interior.push(RateSample {
            x: xc.coords(),
            t,
            value: val,
            rate: (horizon - t).powf(n / 2.0 - 1.0 / (p - 1.0)),
        });
        // boundary sample at the origin
        let bc = Point::origin(grid.dim());
        let mut valb = 0.0;
        for i in 0..slice.len() {
            if points[i].dist(&bc) < r {
                valb += weights[i] * points[i].normal() * slice[i];
            }
        }
        boundary.push(RateSample {
            x: bc.coords(),
            t,
            value: valb,
            rate: (horizon - t).powf((n + 1.0) / 2.0 - 1.0 / (p - 1.0)),
        });
    }
    Ok((interior, boundary))
}

/// Run every check applicable at `(μ, p, T)` and combine: any obstruction
/// dominates; otherwise inconclusive dominates unobstructed.
#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub reports: Vec<ConditionReport>,
    pub combined: Verdict,
}

pub fn classify(mu: &HalfSpaceMeasure, p: f64, horizon: f64) -> Result<Classification> {
    let n = mu.dim().get();
    let grid = SampleGrid::for_measure(mu, horizon, 12)?;
    let mut reports = vec![
        check_boundary_mass(mu, p)?,
        check_ball_condition(mu, p, horizon, &grid)?,
    ];
    if (p - fujita_exponent(n)).abs() < 1e-9 {
        // interior-only grid, z_N >= 3σ_max
        let sigma_max = grid.sigmas[0];
        let mut interior_grid = grid.clone();
        interior_grid.centers = grid
            .centers
            .iter()
            .cloned()
            .filter(|z| z.normal() >= 3.0 * sigma_max)
            .collect();
        let reach = mu.support_radius().max(1.0);
        interior_grid
            .centers
            .push(Point::on_axis(mu.dim(), reach.max(6.0 * sigma_max))?);
        reports.push(check_log_condition_interior(mu, horizon, &interior_grid)?);
    }
    if (p - fujita_exponent(n + 1)).abs() < 1e-9 {
        let mut boundary_grid = grid.clone();
        boundary_grid.centers = grid
            .centers
            .iter()
            .cloned()
            .filter(|z| z.is_boundary())
            .collect();
        if boundary_grid.centers.is_empty() {
            boundary_grid.centers.push(Point::origin(mu.dim()));
        }
        reports.push(check_log_condition_boundary(mu, horizon, &boundary_grid)?);
    }
    if p < fujita_exponent(n + 1)
        || (mu.min_support_normal() > 0.0 && p < fujita_exponent(n))
    {
        reports.push(check_global_growth(mu, p)?);
    }
    let combined = if reports
        .iter()
        .any(|r| r.verdict == Verdict::ObstructedNonexistence)
    {
        Verdict::ObstructedNonexistence
    } else if reports.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Unobstructed
    };
    Ok(Classification { reports, combined })
}

#[cfg(test)]
mod tests;
