//! Convex gauges `Φ` and the derived functionals
//! `A(τ) = Φ^{-1}(τ)^p / τ`, `B(τ) = τ / Φ^{-1}(τ)`.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GaugeKind {
    Identity,
    Power { alpha: f64 },
    /// `Φ(τ) = τ [ln(e + τ)]^β`
    LogType { beta: f64 },
    /// `Ψ(s) = s [ln(L + s)]^β`
    ShiftedLog { beta: f64, shift: f64 },
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConvexGauge {
    pub kind: GaugeKind,
}

/// Sample points for the construction-time secant checks.
fn probe_points() -> Vec<f64> {
    (0..1000)
        .map(|i| 10f64.powf(-8.0 + 16.0 * i as f64 / 999.0))
        .collect()
}

fn secant_convex(phi: &dyn Fn(f64) -> f64, pts: &[f64]) -> bool {
    // midpoint below the chord, with a sliver of rounding slack
    pts.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        phi(mid) <= 0.5 * (phi(a) + phi(b)) * (1.0 + 1e-12) + 1e-300
    })
}

fn strictly_increasing(phi: &dyn Fn(f64) -> f64, pts: &[f64]) -> bool {
    pts.windows(2).all(|w| phi(w[1]) > phi(w[0]))
}

impl ConvexGauge {
    pub fn identity() -> Self {
        ConvexGauge {
            kind: GaugeKind::Identity,
        }
    }

    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha >= 1.0) {
            return Err(Error::Domain(format!(
                "power gauge needs α >= 1 for convexity, got {alpha}"
            )));
        }
        Ok(ConvexGauge {
            kind: GaugeKind::Power { alpha },
        })
    }

    pub fn log_type(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::Domain(format!("log gauge needs β > 0, got {beta}")));
        }
        let g = ConvexGauge {
            kind: GaugeKind::LogType { beta },
        };
        g.validate()?;
        Ok(g)
    }

    pub fn shifted_log(beta: f64, shift: f64) -> Result<Self> {
        if !(beta > 0.0) || !(shift >= std::f64::consts::E) {
            return Err(Error::Domain(
                "shifted log gauge needs β > 0 and shift >= e".into(),
            ));
        }
        let g = ConvexGauge {
            kind: GaugeKind::ShiftedLog { beta, shift },
        };
        g.validate()?;
        Ok(g)
    }

    /// Secant spot-check of the defining properties (strictly increasing,
    /// nonnegative, convex).
    pub fn validate(&self) -> Result<()> {
        let pts = probe_points();
        let phi = |t: f64| self.forward(t);
        if self.forward(0.0) < 0.0 {
            return Err(Error::Domain("gauge must be nonnegative at 0".into()));
        }
        if !strictly_increasing(&phi, &pts) {
            return Err(Error::Domain(format!(
                "gauge {:?} is not strictly increasing on the probe set",
                self.kind
            )));
        }
        if !secant_convex(&phi, &pts) {
            return Err(Error::Domain(format!(
                "gauge {:?} fails the convexity secant test",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn forward(&self, tau: f64) -> f64 {
        match self.kind {
            GaugeKind::Identity => tau,
            GaugeKind::Power { alpha } => tau.powf(alpha),
            GaugeKind::LogType { beta } => {
                tau * (std::f64::consts::E + tau).ln().powf(beta)
            }
            GaugeKind::ShiftedLog { beta, shift } => tau * (shift + tau).ln().powf(beta),
        }
    }

    /// Numeric (or closed-form) inverse on `[0, ∞)`. Log-type kinds use
    /// bracketed bisection: monotonicity guarantees the unique root, 80
    /// halvings exhaust f64 resolution.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) || !y.is_finite() {
            return Err(Error::Numerical(format!(
                "gauge inversion needs a finite nonnegative value, got {y}"
            )));
        }
        match self.kind {
            GaugeKind::Identity => Ok(y),
            GaugeKind::Power { alpha } => Ok(y.powf(1.0 / alpha)),
            _ => {
                if y == 0.0 {
                    return Ok(0.0);
                }
                let mut hi = 1.0f64.max(y);
                let mut grow = 0;
                while self.forward(hi) < y {
                    hi *= 2.0;
                    grow += 1;
                    if grow > 2000 {
                        return Err(Error::Numerical("gauge inversion bracket failed".into()));
                    }
                }
                let mut lo = 0.0;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if self.forward(mid) < y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }

    /// `A(τ) = Φ^{-1}(τ)^p / τ`; exact closed form for power gauges.
    pub fn a_functional(&self, tau: f64, p: f64) -> Result<f64> {
        if tau == 0.0 {
            return Ok(0.0);
        }
        match self.kind {
            GaugeKind::Identity => Ok(tau.powf(p - 1.0)),
            GaugeKind::Power { alpha } => Ok(tau.powf(p / alpha - 1.0)),
            _ => Ok(self.inverse(tau)?.powf(p) / tau),
        }
    }

    /// `B(τ) = τ / Φ^{-1}(τ)`; exact closed form for power gauges.
    pub fn b_functional(&self, tau: f64) -> Result<f64> {
        if tau == 0.0 {
            return Ok(0.0);
        }
        match self.kind {
            GaugeKind::Identity => Ok(1.0),
            GaugeKind::Power { alpha } => Ok(tau.powf(1.0 - 1.0 / alpha)),
            _ => Ok(tau / self.inverse(tau)?),
        }
    }

    /// Log exponent of `Φ(f)` when `f` blows up like `r^{-a} L^{-b}`:
    /// `Φ(f) ≈ f (a ln(1/r))^β`, so the transformed log exponent drops by β.
    pub fn transformed_log_power(&self, b: f64) -> f64 {
        match self.kind {
            GaugeKind::Identity => b,
            GaugeKind::Power { alpha } => b * alpha,
            GaugeKind::LogType { beta } | GaugeKind::ShiftedLog { beta, .. } => b - beta,
        }
    }
}

/// Find `L` by doubling from `e` so that `Ψ(s) = s[ln(L+s)]^β` passes the
/// secant tests for: (a) positivity and convexity, (b) `s^p/Ψ(s)`
/// increasing, (c) `s^ε [ln(L+s)]^{-βp}` increasing, on 10³ log-spaced
/// points spanning `[1e-8, 1e8]`.
pub fn shifted_log_gauge(beta: f64, p: f64, epsilon: f64) -> Result<(ConvexGauge, f64)> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("need β > 0, got {beta}")));
    }
    if !(epsilon > 0.0 && epsilon < p - 1.0) {
        return Err(Error::Domain(format!(
            "need ε in (0, p-1), got ε = {epsilon}, p = {p}"
        )));
    }
    let pts = probe_points();
    let l_cap = 64f64.exp();
    let mut shift = std::f64::consts::E;
    loop {
        let psi = move |s: f64| s * (shift + s).ln().powf(beta);
        let percolates = {
            let conv = secant_convex(&psi, &pts) && strictly_increasing(&psi, &pts);
            let b_inc = strictly_increasing(&|s: f64| s.powf(p) / psi(s), &pts);
            let c_inc = strictly_increasing(
                &|s: f64| s.powf(epsilon) * (shift + s).ln().powf(-beta * p),
                &pts,
            );
            conv && b_inc && c_inc
        };
        if percolates {
            let gauge = ConvexGauge {
                kind: GaugeKind::ShiftedLog { beta, shift },
            };
            return Ok((gauge, shift));
        }
        shift *= 2.0;
        if shift > l_cap {
            return Err(Error::Numerical(format!(
                "no admissible shift below e^64 for β = {beta}, p = {p}, ε = {epsilon}"
            )));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn round_trips_all_kinds() {
        let gauges = vec![
            ConvexGauge::identity(),
            ConvexGauge::power(1.7).unwrap(),
            ConvexGauge::log_type(0.8).unwrap(),
            ConvexGauge::shifted_log(0.5, 20.0).unwrap(),
        ];
        for g in gauges {
            for i in 0..60 {
                let tau = 10f64.powf(-8.0 + 16.0 * i as f64 / 59.0);
                let back = g.inverse(g.forward(tau)).unwrap();
                assert_relative_eq!(back, tau, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn power_gauge_closed_forms_are_exact() {
        let alpha = 1.6;
        let p = 3.2;
        let g = ConvexGauge::power(alpha).unwrap();
        for i in 0..40 {
            let tau = 10f64.powf(-6.0 + 12.0 * i as f64 / 39.0);
            assert_relative_eq!(
                g.a_functional(tau, p).unwrap(),
                tau.powf(p / alpha - 1.0),
                max_relative = 1e-14
            );
            assert_relative_eq!(
                g.b_functional(tau).unwrap(),
                tau.powf(1.0 - 1.0 / alpha),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn convexity_rejects_bad_power() {
        assert!(ConvexGauge::power(0.5).is_err());
    }

    #[test]
    fn shifted_log_search_small_beta() {
        let (gauge, shift) = shifted_log_gauge(0.1, 2.5, 0.5).unwrap();
        assert!(shift < 100.0, "expected a small shift, got {shift}");
        gauge.validate().unwrap();
    }

    #[test]
    fn shifted_log_comparable_to_log_type() {
        // Ψ and Φ agree up to multiplicative constants; report the
        // empirical constant and check the inverse sandwich
        // Ψ^{-1}(τ)[ln(L+τ)]^β / τ ∈ [C^{-1}, C].
        let beta = 0.4;
        let (psi, shift) = shifted_log_gauge(beta, 2.0, 0.5).unwrap();
        let phi = ConvexGauge::log_type(beta).unwrap();
        let mut c_fwd: f64 = 1.0;
        let mut c_inv: f64 = 1.0;
        for i in 0..200 {
            let s = 10f64.powf(-8.0 + 16.0 * i as f64 / 199.0);
            let ratio = psi.forward(s) / phi.forward(s);
            c_fwd = c_fwd.max(ratio.max(1.0 / ratio));
            let tau = s;
            let r = psi.inverse(tau).unwrap() * (shift + tau).ln().powf(beta) / tau;
            c_inv = c_inv.max(r.max(1.0 / r));
        }
        assert!(c_fwd.is_finite() && c_fwd < 50.0, "forward constant {c_fwd}");
        assert!(c_inv.is_finite() && c_inv < 50.0, "inverse constant {c_inv}");
    }

    #[test]
    fn inversion_rejects_bad_values() {
        let g = ConvexGauge::log_type(0.5).unwrap();
        assert!(g.inverse(f64::INFINITY).is_err());
        assert!(g.inverse(-1.0).is_err());
    }
}
