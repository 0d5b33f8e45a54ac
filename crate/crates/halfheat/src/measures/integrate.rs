//! Radial/angular integration engine behind the measure functionals.
//!
//! Every integral of a (possibly singular) density over a clipped ball is
//! reduced to rays from a chosen origin: the angular part uses fixed
//! symmetric rules, the radial part uses one of three modes:
//!
//! * exact `r^{β-1}(-ln r)^{-b}` primitives when the density is a declared
//!   power-log profile and the extra weight along the ray is affine,
//! * geometric shells with a fitted power-log tail when the density is
//!   singular but carries a general smooth weight,
//! * plain adaptive Gauss–Kronrod when nothing is singular.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quad::{self, Tolerance};

/// Directions with surface weights so that `Σ w f(ω) ≈ ∫_{S^{m-1}} f dω`
/// over the full sphere or the open upper hemisphere `{ω_m > 0}`.
pub(crate) fn angular_nodes(m: usize, upper_only: bool, resolution: usize) -> Vec<(Vec<f64>, f64)> {
    match m {
        1 => {
            if upper_only {
                vec![(vec![1.0], 1.0)]
            } else {
                vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]
            }
        }
        2 => {
            if upper_only {
                // Gauss-Legendre on θ ∈ (0, π), ω = (cos θ, sin θ).
                quad::gauss_legendre(resolution.max(8))
                    .iter()
                    .map(|&(x, w)| {
                        let theta = 0.5 * std::f64::consts::PI * (x + 1.0);
                        (vec![theta.cos(), theta.sin()], w * 0.5 * std::f64::consts::PI)
                    })
                    .collect()
            } else {
                // Periodic trapezoid on the full circle.
                let n = resolution.max(8);
                let w = 2.0 * std::f64::consts::PI / n as f64;
                (0..n)
                    .map(|k| {
                        let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
                        (vec![theta.cos(), theta.sin()], w)
                    })
                    .collect()
            }
        }
        3 => {
            // Polar Gauss-Legendre (weight sin φ) times periodic azimuth.
            let n_polar = (resolution / 2).max(8);
            let n_az = resolution.max(16);
            let phi_max = if upper_only {
                0.5 * std::f64::consts::PI
            } else {
                std::f64::consts::PI
            };
            let waz = 2.0 * std::f64::consts::PI / n_az as f64;
            let mut nodes = Vec::with_capacity(n_polar * n_az);
            for &(x, w) in quad::gauss_legendre(n_polar) {
                let phi = 0.5 * phi_max * (x + 1.0);
                let (sin_phi, cos_phi) = phi.sin_cos();
                let wp = w * 0.5 * phi_max * sin_phi;
                for k in 0..n_az {
                    let psi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_az as f64;
                    nodes.push((
                        vec![sin_phi * psi.cos(), sin_phi * psi.sin(), cos_phi],
                        wp * waz,
                    ));
                }
            }
            nodes
        }
        _ => unreachable!("angular rules exist for m in 1..=3"),
    }
}

/// Geometric constraints a ray must satisfy, all convex.
pub(crate) enum Constraint {
    /// Stay inside the ball `|y - center| <= radius`.
    Ball { center: Point, radius: f64 },
    /// Stay in the closed half-space `y_N >= 0`.
    HalfSpace,
}

/// Intersect `{origin + r ω : r >= 0}` with all constraints; returns
/// `(r_lo, r_hi)` with `r_lo >= 0`, empty encoded as `r_lo >= r_hi`.
pub(crate) fn clip_ray(
    origin: &Point,
    dir: &[f64],
    constraints: &[Constraint],
    r_cap: f64,
) -> (f64, f64) {
    let mut lo = 0.0f64;
    let mut hi = r_cap;
    let m = dir.len();
    for c in constraints {
        match c {
            Constraint::Ball { center, radius } => {
                // |d + r ω|^2 <= R^2 with d = origin - center.
                let mut dot = 0.0;
                let mut dsq = 0.0;
                for i in 0..m - 1 {
                    let di = origin.tangential().get(i).copied().unwrap_or(0.0)
                        - center.tangential().get(i).copied().unwrap_or(0.0);
                    dot += di * dir[i];
                    dsq += di * di;
                }
                let dn = origin.normal() - center.normal();
                dot += dn * dir[m - 1];
                dsq += dn * dn;
                let disc = dot * dot - (dsq - radius * radius);
                if disc < 0.0 {
                    return (0.0, 0.0);
                }
                let s = disc.sqrt();
                lo = lo.max(-dot - s);
                hi = hi.min(-dot + s);
            }
            Constraint::HalfSpace => {
                let wn = dir[m - 1];
                if wn < 0.0 {
                    hi = hi.min(origin.normal() / (-wn));
                }
                // wn >= 0 never leaves the half-space from origin in Ω̄.
            }
        }
    }
    (lo.max(0.0), hi)
}

/// `∫ (amp0 + amp1 r) κ r^{-a} (-ln r)^{-b} r^{m-1} dr` over `[lo, hi]`,
/// via the exact power-log primitive.
pub(crate) fn ray_power_log_exact(
    m: usize,
    kappa: f64,
    a: f64,
    b: f64,
    amp0: f64,
    amp1: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let mut v = 0.0;
    if amp0 != 0.0 {
        v += amp0 * quad::radial_power_log(m as f64 - a, b, lo, hi)?;
    }
    if amp1 != 0.0 {
        v += amp1 * quad::radial_power_log(m as f64 + 1.0 - a, b, lo, hi)?;
    }
    Ok(kappa * v)
}

/// Maximum number of dyadic shells before switching to the analytic tail.
const TAIL_SHELLS: usize = 42;

/// Integrate `h(r)` over `[0, hi]` where `h(r) ~ A r^q (-ln r)^{-b}` as
/// `r -> 0` with `b` declared and `q` unknown. Dyadic shells cover
/// `[floor, hi]`; below that the local power `q` is fitted from two
/// samples and the remainder is taken from the closed-form primitive.
///
/// `coordinate_scale` is the magnitude of the ray origin's coordinates:
/// shells must stop well above its f64 quantization, where offsetting by
/// `r` would collapse onto the origin and the density could not be
/// sampled at all; the fitted tail extrapolates through that region.
pub(crate) fn ray_shells_with_tail<F: Fn(f64) -> f64>(
    h: F,
    hi: f64,
    log_power: f64,
    coordinate_scale: f64,
    tol: Tolerance,
) -> Result<f64> {
    if hi <= 0.0 {
        return Ok(0.0);
    }
    let floor = (hi * 0.5f64.powi(TAIL_SHELLS as i32))
        .max(2048.0 * f64::EPSILON * coordinate_scale.max(1e-300));
    // Each shell is adaptively integrated: outer shells can contain extra
    // structure (kernel weights far narrower than the shell). The relative
    // tolerance cannot beat the quantization of distances recovered from
    // coordinates of magnitude `coordinate_scale`, which staircases the
    // integrand at relative level ~ ε·scale/r.
    let mut total = 0.0;
    let mut upper = hi;
    while 0.5 * upper >= floor {
        let lower = 0.5 * upper;
        let noise = 8.0 * f64::EPSILON * coordinate_scale / lower;
        let shell_tol = Tolerance::new(tol.rel.max(1e-9).max(noise), f64::MIN_POSITIVE);
        total += quad::integrate(&h, lower, upper, shell_tol)?.value;
        upper = lower;
    }
    // Fitted-power analytic tail on [0, upper].
    let r1 = 0.5 * upper;
    let r2 = 0.25 * upper;
    let h1 = h(r1);
    let h2 = h(r2);
    if h1 <= 0.0 || h2 <= 0.0 || !h1.is_finite() || !h2.is_finite() {
        // Nothing left (or the integrand vanishes along this ray).
        return Ok(total);
    }
    let (l1, l2) = ((-r1.ln()), (-r2.ln()));
    let mut q = ((h1 / h2).ln() + log_power * (l1 / l2).ln()) / (r1 / r2).ln();
    if (q + 1.0).abs() < 0.05 {
        // Marginal power, blurred by O(1/ln r) corrections of the density
        // against its declared asymptote; integrability is then decided by
        // the declared log exponent alone.
        q = -1.0;
    }
    if q < -1.0 || (q == -1.0 && log_power <= 1.0) {
        return Err(Error::Numerical(format!(
            "non-integrable local power {q:.3} (log exponent {log_power}) in radial tail"
        )));
    }
    let amp = h1 * r1.powf(-q) * l1.powf(log_power);
    let tail = amp * quad::radial_power_log(q + 1.0, log_power, 0.0, upper)?;
    Ok(total + tail)
}

/// Smooth radial integrand over `[lo, hi]`, adaptive.
pub(crate) fn ray_smooth<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    Ok(quad::integrate(f, lo, hi, tol)?.value)
}
