//! Closed-form heat kernels on the half-space `Ω = {x_N > 0}`.
//!
//! Three kernels are provided:
//!
//! * the free Gaussian kernel `Γ_d(x,t) = (4πt)^{-d/2} exp(-|x|²/4t)`,
//! * the Dirichlet kernel `G(x,y,t) = Γ_N(x-y,t) (1 - exp(-x_N y_N / t))`,
//!   equal by the method of images to
//!   `Γ_{N-1}(x'-y',t) [Γ_1(x_N-y_N,t) - Γ_1(x_N+y_N,t)]`,
//! * the boundary-weighted kernel `K(x,y,t) = y_N^{-1} G(x,y,t)`, extended
//!   continuously to `y_N = 0` by `(x_N/t) Γ_N((x'-y', x_N), t)`.
//!
//! `G` vanishes identically when either argument sits on the boundary and is
//! symmetric in `(x, y)`; `K` vanishes when `x` does. Exact integrals:
//! `∫_Ω G(x,y,t) dy = erf(x_N / 2√t)` and, for boundary `y`,
//! `∫_Ω K(x,y,t) dx = (πt)^{-1/2}`.

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Numerical switches for kernel evaluation.
#[derive(Clone, Copy, Debug)]
pub struct KernelConfig {
    /// Below this value of `x_N y_N / t` the image-difference form of `G`
    /// is used instead of the product form.
    pub small_argument_threshold: f64,
    /// Relative tolerance for kernel integrals driven by this config.
    pub quadrature_tol: f64,
    /// Gaussian tails are truncated this many `√t` away from the center.
    pub truncation_radius_sigmas: f64,
}

/// `K` switches to its analytic boundary limit when `y_N / √t` drops below
/// this; past that point the quotient form has no significant digits left.
pub const K_BOUNDARY_SWITCH: f64 = 1e-8;

impl KernelConfig {
    pub fn new(
        small_argument_threshold: f64,
        quadrature_tol: f64,
        truncation_radius_sigmas: f64,
    ) -> Result<Self> {
        if !(quadrature_tol > 0.0) {
            return Err(Error::Domain(format!(
                "quadrature_tol must be positive, got {quadrature_tol}"
            )));
        }
        if !(truncation_radius_sigmas >= 6.0) {
            return Err(Error::Domain(format!(
                "truncation_radius_sigmas must be >= 6, got {truncation_radius_sigmas}"
            )));
        }
        Ok(KernelConfig {
            small_argument_threshold,
            quadrature_tol,
            truncation_radius_sigmas,
        })
    }
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            small_argument_threshold: 1e-3,
            quadrature_tol: 1e-10,
            truncation_radius_sigmas: 10.0,
        }
    }
}

/// `1 - exp(-a)` without cancellation for small `a >= 0`.
#[inline]
pub(crate) fn one_minus_exp_neg(a: f64) -> f64 {
    -((-a).exp_m1())
}

/// `Γ_d` evaluated from a squared distance. `d = 0` is the empty tensor
/// factor and equals 1.
#[inline]
pub(crate) fn gamma_profile(d: usize, dist_sq: f64, t: f64) -> f64 {
    if d == 0 {
        return 1.0;
    }
    let four_pi_t = 4.0 * std::f64::consts::PI * t;
    four_pi_t.powf(-(d as f64) / 2.0) * (-dist_sq / (4.0 * t)).exp()
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    Ok(())
}

/// The free heat kernel `Γ_d(x, t)` in `R^d`.
///
/// Underflows to 0 for huge `|x|²/t`; that is not an error, quadrature tails
/// must stay benign.
pub fn free_heat_kernel(d: usize, x: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    if d == 0 || x.len() != d {
        return Err(Error::Domain(format!(
            "free kernel needs d >= 1 and a vector of length d, got d={d}, len={}",
            x.len()
        )));
    }
    let dist_sq = x.iter().map(|v| v * v).sum();
    Ok(gamma_profile(d, dist_sq, t))
}

fn tangential_dist_sq(x: &Point, y: &Point) -> f64 {
    x.tangential()
        .iter()
        .zip(y.tangential())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// The Dirichlet heat kernel `G(x, y, t)` on the half-space.
pub fn dirichlet_kernel(x: &Point, y: &Point, t: f64) -> Result<f64> {
    dirichlet_kernel_cfg(&KernelConfig::default(), x, y, t)
}

pub fn dirichlet_kernel_cfg(cfg: &KernelConfig, x: &Point, y: &Point, t: f64) -> Result<f64> {
    check_time(t)?;
    if x.dim() != y.dim() {
        return Err(Error::Domain("kernel arguments of mixed dimension".into()));
    }
    Ok(dirichlet_unchecked(cfg, x, y, t))
}

#[inline]
pub(crate) fn dirichlet_unchecked(cfg: &KernelConfig, x: &Point, y: &Point, t: f64) -> f64 {
    let xn = x.normal();
    let yn = y.normal();
    if xn == 0.0 || yn == 0.0 {
        return 0.0;
    }
    let n = x.dim().get();
    let a = xn * yn / t;
    let tan_sq = tangential_dist_sq(x, y);
    if a < cfg.small_argument_threshold {
        // Image-difference form, with the normal-direction difference
        // factored so no significant digits are lost as a -> 0.
        let diff = gamma_profile(1, (xn - yn) * (xn - yn), t) * one_minus_exp_neg(a);
        gamma_profile(n - 1, tan_sq, t) * diff
    } else {
        let dist_sq = tan_sq + (xn - yn) * (xn - yn);
        gamma_profile(n, dist_sq, t) * one_minus_exp_neg(a)
    }
}

/// The boundary-weighted kernel `K(x, y, t) = y_N^{-1} G(x, y, t)`,
/// continuous up to `y_N = 0`.
pub fn k_kernel(x: &Point, y: &Point, t: f64) -> Result<f64> {
    k_kernel_cfg(&KernelConfig::default(), x, y, t)
}

pub fn k_kernel_cfg(cfg: &KernelConfig, x: &Point, y: &Point, t: f64) -> Result<f64> {
    check_time(t)?;
    if x.dim() != y.dim() {
        return Err(Error::Domain("kernel arguments of mixed dimension".into()));
    }
    Ok(k_unchecked(cfg, x, y, t))
}

#[inline]
pub(crate) fn k_unchecked(cfg: &KernelConfig, x: &Point, y: &Point, t: f64) -> f64 {
    let xn = x.normal();
    if xn == 0.0 {
        return 0.0;
    }
    let yn = y.normal();
    if yn / t.sqrt() <= K_BOUNDARY_SWITCH {
        let n = x.dim().get();
        let dist_sq = tangential_dist_sq(x, y) + xn * xn;
        (xn / t) * gamma_profile(n, dist_sq, t)
    } else {
        dirichlet_unchecked(cfg, x, y, t) / yn
    }
}

/// `∫_Ω G(x, y, t) dy = erf(x_N / 2√t)`, the mass the Dirichlet kernel
/// retains against absorption at the boundary.
pub fn dirichlet_kernel_mass(x: &Point, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(kernel_mass_unchecked(x.normal(), t))
}

#[inline]
pub(crate) fn kernel_mass_unchecked(xn: f64, t: f64) -> f64 {
    libm::erf(xn / (2.0 * t.sqrt()))
}

/// `∫_Ω K(x, y, t) dx = (πt)^{-1/2}` for `y` on the boundary.
pub fn boundary_k_mass(t: f64) -> Result<f64> {
    check_time(t)?;
    Ok((std::f64::consts::PI * t).sqrt().recip())
}
