//! The named singular initial-data profiles and their dichotomy families.
//!
//! Each profile is the borderline radial density at its critical location:
//! power profiles `|x-z|^{-2/(p-1)}` strictly above the matching Fujita
//! exponent, log-corrected profiles exactly at it. Interior and boundary
//! kinds enter the measure as `κ x_N f(x) dx`; boundary-line kinds as
//! `κ h(x') ⊗ δ(x_N)` on the boundary hyperplane.

use super::{HalfSpaceMeasure, LineField, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{fujita_exponent, Dimension, Point};
use serde::{Deserialize, Serialize};

/// Tolerance for matching a log profile's exponent to its critical value.
const CRITICAL_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    InteriorPower,
    InteriorLog,
    BoundaryPower,
    BoundaryLog,
    BoundaryLinePower,
    BoundaryLineLog,
}

impl ProfileKind {
    pub fn is_log(self) -> bool {
        matches!(
            self,
            ProfileKind::InteriorLog | ProfileKind::BoundaryLog | ProfileKind::BoundaryLineLog
        )
    }

    pub fn is_interior(self) -> bool {
        matches!(self, ProfileKind::InteriorPower | ProfileKind::InteriorLog)
    }

    pub fn is_boundary_line(self) -> bool {
        matches!(
            self,
            ProfileKind::BoundaryLinePower | ProfileKind::BoundaryLineLog
        )
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SingularProfile {
    pub kind: ProfileKind,
    pub center: Point,
    pub p: f64,
    pub dim: Dimension,
}

impl SingularProfile {
    pub fn new(kind: ProfileKind, center: Point, p: f64, dim: Dimension) -> Result<Self> {
        if center.dim() != dim {
            return Err(Error::Domain("profile center dimension mismatch".into()));
        }
        if !(p > 1.0) {
            return Err(Error::Domain(format!("exponent must satisfy p > 1, got {p}")));
        }
        let n = dim.get();
        if kind.is_interior() {
            if center.is_boundary() {
                return Err(Error::Domain(
                    "interior profile kinds need an interior center (x_N > 0)".into(),
                ));
            }
        } else if !center.is_boundary() {
            return Err(Error::Domain(
                "boundary profile kinds need a boundary center (x_N = 0)".into(),
            ));
        }
        if kind.is_boundary_line() && n < 2 {
            return Err(Error::Domain(
                "boundary-line profiles need N >= 2 (for N = 1 use a boundary atom)".into(),
            ));
        }
        let profile = SingularProfile {
            kind,
            center,
            p,
            dim,
        };
        let crit = profile.critical_exponent();
        match kind {
            ProfileKind::InteriorPower | ProfileKind::BoundaryPower => {
                if !(p > crit) {
                    return Err(Error::Domain(format!(
                        "power profile needs p strictly above its critical exponent {crit}, got {p}"
                    )));
                }
            }
            ProfileKind::BoundaryLinePower => {
                if !(p > crit && p < 2.0) {
                    return Err(Error::Domain(format!(
                        "boundary-line power profile needs {crit} < p < 2, got {p}"
                    )));
                }
            }
            ProfileKind::InteriorLog | ProfileKind::BoundaryLog | ProfileKind::BoundaryLineLog => {
                if (p - crit).abs() > CRITICAL_EPS {
                    return Err(Error::Domain(format!(
                        "log profiles are defined only at criticality p = {crit}, got {p}"
                    )));
                }
            }
        }
        Ok(profile)
    }

    /// The Fujita-type exponent this kind pivots on: `p_N` for interior
    /// kinds, `p_{N+1}` for boundary and boundary-line kinds.
    pub fn critical_exponent(&self) -> f64 {
        let n = self.dim.get();
        match self.kind {
            ProfileKind::InteriorPower | ProfileKind::InteriorLog => fujita_exponent(n),
            _ => fujita_exponent(n + 1),
        }
    }

    /// Radial power and log exponent `(a, b)` of the profile density.
    pub fn density_exponents(&self) -> (f64, f64) {
        let n = self.dim.get() as f64;
        match self.kind {
            ProfileKind::InteriorPower | ProfileKind::BoundaryPower => (2.0 / (self.p - 1.0), 0.0),
            ProfileKind::InteriorLog => (n, n / 2.0 + 1.0),
            ProfileKind::BoundaryLog => (n + 1.0, (n + 1.0) / 2.0 + 1.0),
            ProfileKind::BoundaryLinePower => (2.0 / (self.p - 1.0) - 2.0, 0.0),
            ProfileKind::BoundaryLineLog => (n - 1.0, (n + 1.0) / 2.0 + 1.0),
        }
    }

    /// Cutoff radius of the indicator in the profile definition.
    pub fn cut_radius(&self) -> f64 {
        if self.kind.is_log() {
            0.5
        } else {
            1.0
        }
    }

    /// For power kinds, the exact growth exponent of `σ ↦ μ(B_Ω(z,σ))`
    /// around the center: `N - 2/(p-1)` interior, `N+1 - 2/(p-1)` at the
    /// boundary (both weighted and line variants).
    pub fn mass_slope(&self) -> Option<f64> {
        let n = self.dim.get() as f64;
        match self.kind {
            ProfileKind::InteriorPower => Some(n - 2.0 / (self.p - 1.0)),
            ProfileKind::BoundaryPower | ProfileKind::BoundaryLinePower => {
                Some(n + 1.0 - 2.0 / (self.p - 1.0))
            }
            _ => None,
        }
    }

    /// For log kinds, the exponent `e` such that
    /// `μ(B_Ω(z,σ)) · |ln σ|^{e}` stays bounded above and below.
    pub fn log_normalization(&self) -> Option<f64> {
        let n = self.dim.get() as f64;
        match self.kind {
            ProfileKind::InteriorLog => Some(n / 2.0),
            ProfileKind::BoundaryLog | ProfileKind::BoundaryLineLog => Some((n + 1.0) / 2.0),
            _ => None,
        }
    }

    /// The interior density `f` (for interior/boundary kinds), amplitude 1.
    pub fn density(&self) -> Result<ScalarField> {
        if self.kind.is_boundary_line() {
            return Err(Error::Domain(
                "boundary-line profiles have a line density, not an interior one".into(),
            ));
        }
        let (a, b) = self.density_exponents();
        ScalarField::power_log(1.0, self.center, a, b, self.cut_radius())
    }

    /// The boundary-line density `h` (line kinds only), amplitude 1.
    pub fn line_density(&self) -> Result<LineField> {
        if !self.kind.is_boundary_line() {
            return Err(Error::Domain(
                "only boundary-line profiles have a line density".into(),
            ));
        }
        let (a, b) = self.density_exponents();
        LineField::power_log(
            1.0,
            self.center.tangential().to_vec(),
            a,
            b,
            self.cut_radius(),
        )
    }
}

/// Build the measure `κ x_N f(x) dx` (interior/boundary kinds) or
/// `κ h(x') ⊗ δ(x_N)` (boundary-line kinds).
pub fn make_profile(profile: &SingularProfile, kappa: f64) -> Result<HalfSpaceMeasure> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("profile mass must be positive, got {kappa}")));
    }
    let mut mu = HalfSpaceMeasure::zero(profile.dim);
    if profile.kind.is_boundary_line() {
        mu.add_boundary_line(profile.line_density()?.scaled(kappa))?;
    } else {
        mu.add_weighted(profile.density()?.scaled(kappa))?;
    }
    Ok(mu)
}
