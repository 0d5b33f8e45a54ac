//! Numerical toolkit for the Dirichlet heat problem on the half-space
//! `Ω = R^{N-1} × (0, ∞)` with nonlinearity `u^p` and measure-valued
//! initial data prescribed through the weighted trace `x_N u(x, 0)`.
//!
//! The crate provides exact half-space heat kernels, a data model for
//! Radon measures on `Ω̄` with singular radial densities, trend-based
//! solvability classifiers, constructive supersolution certificates, and
//! a monotone Picard solver of the integral formulation with blow-up
//! detection and κ-threshold bisection.

pub mod error;
pub mod conditions;
pub mod geometry;
pub mod kernelcheck;
pub mod kernels;
pub mod measures;
pub mod quad;
pub mod report;
pub mod solver;
pub mod supersolutions;

pub use error::{Error, Result};
pub use geometry::{fujita_exponent, Dimension, Point};
pub use measures::{make_profile, HalfSpaceMeasure, LineField, ProfileKind, ScalarField, SingularProfile};
