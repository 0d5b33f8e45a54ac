//! Points of the closed half-space `{x_N >= 0}` and ball geometry helpers.
//!
//! A point is split into its tangential part `x'` (length `N-1`) and its
//! normal coordinate `x_N`. Supported dimensions are `N = 1, 2, 3`; the
//! tensor quadrature used elsewhere does not scale past that.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

pub const MAX_DIM: usize = 3;

/// Spatial dimension `N`, restricted to `1..=3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(n: usize) -> Result<Self> {
        if (1..=MAX_DIM).contains(&n) {
            Ok(Dimension(n))
        } else {
            Err(Error::Domain(format!(
                "dimension must be in 1..={MAX_DIM}, got {n}"
            )))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Number of tangential coordinates, `N - 1`.
    pub fn tangential(self) -> usize {
        self.0 - 1
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Dimension::new(n)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A location `(x', x_N)` in the closed half-space, `x_N >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    dim: Dimension,
    tangential: [f64; MAX_DIM - 1],
    normal: f64,
}

impl Point {
    pub fn new(dim: Dimension, tangential: &[f64], normal: f64) -> Result<Self> {
        if tangential.len() != dim.tangential() {
            return Err(Error::Domain(format!(
                "expected {} tangential coordinates for N={}, got {}",
                dim.tangential(),
                dim,
                tangential.len()
            )));
        }
        if !normal.is_finite() || normal < 0.0 {
            return Err(Error::Domain(format!(
                "normal coordinate must be finite and >= 0, got {normal}"
            )));
        }
        let mut t = [0.0; MAX_DIM - 1];
        t[..tangential.len()].copy_from_slice(tangential);
        Ok(Point {
            dim,
            tangential: t,
            normal,
        })
    }

    /// Point on the normal axis (tangential part zero).
    pub fn on_axis(dim: Dimension, normal: f64) -> Result<Self> {
        Self::new(dim, &vec![0.0; dim.tangential()], normal)
    }

    /// The origin of the boundary hyperplane.
    pub fn origin(dim: Dimension) -> Self {
        Point {
            dim,
            tangential: [0.0; MAX_DIM - 1],
            normal: 0.0,
        }
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn tangential(&self) -> &[f64] {
        &self.tangential[..self.dim.tangential()]
    }

    pub fn normal(&self) -> f64 {
        self.normal
    }

    pub fn is_boundary(&self) -> bool {
        self.normal == 0.0
    }

    /// Full coordinate vector `(x', x_N)` of length `N`.
    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.tangential().to_vec();
        c.push(self.normal);
        c
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = (self.normal - other.normal).powi(2);
        for i in 0..self.dim.tangential() {
            s += (self.tangential[i] - other.tangential[i]).powi(2);
        }
        s
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    /// Offset by `r * direction`, clamping `x_N` at 0 only against rounding
    /// (callers guarantee the ray stays in the closed half-space).
    pub fn offset(&self, direction: &[f64], r: f64) -> Point {
        debug_assert_eq!(direction.len(), self.dim.get());
        let mut t = self.tangential;
        for i in 0..self.dim.tangential() {
            t[i] += r * direction[i];
        }
        let normal = (self.normal + r * direction[self.dim.tangential()]).max(0.0);
        Point {
            dim: self.dim,
            tangential: t,
            normal,
        }
    }
}

/// Volume of the unit ball in `R^n` for the small `n` used here.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => unreachable!("dimension out of supported range"),
    }
}

/// Surface measure of the unit sphere `S^{n-1}` in `R^n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => unreachable!("dimension out of supported range"),
    }
}

/// The Fujita-type exponent `p_d = 1 + 2/d`.
pub fn fujita_exponent(d: usize) -> f64 {
    1.0 + 2.0 / d as f64
}
