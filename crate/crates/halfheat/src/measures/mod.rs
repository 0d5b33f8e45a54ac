//! Nonnegative Radon measures on the closed half-space and the ball
//! functionals the solvability conditions consume.
//!
//! A measure is a sum of
//!
//! * weighted interior parts `x_N f(x) dx`,
//! * plain interior parts `g(x) dx`,
//! * boundary-line parts `h(x') ⊗ δ(x_N)` concentrated on `∂Ω`,
//! * atoms.
//!
//! Densities carry a declared singularity structure (radial power and log
//! exponent around a center) so quadrature can split off the exact
//! power-log primitive instead of chasing the singular mass adaptively.

mod integrate;
mod profiles;

pub use profiles::{make_profile, ProfileKind, SingularProfile};

use crate::error::{Error, Result};
use crate::geometry::{Dimension, Point};
use crate::kernels::{self, KernelConfig};
use crate::quad::Tolerance;
use integrate::{angular_nodes, clip_ray, ray_power_log_exact, ray_shells_with_tail, ray_smooth, Constraint};
use std::sync::Arc;

pub type DensityFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type LineDensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Quadrature controls for measure functionals.
#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub tol: Tolerance,
    pub angular_resolution: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            tol: Tolerance::new(1e-9, 1e-14),
            angular_resolution: 48,
        }
    }
}

/// A nonnegative scalar density on `Ω` with bounded support and declared
/// singular structure.
#[derive(Clone)]
pub struct ScalarField {
    imp: FieldImpl,
}

#[derive(Clone)]
enum FieldImpl {
    Zero,
    /// `κ |x-c|^{-a} (-ln|x-c|)^{-b}` on `|x-c| < cut`, zero outside.
    PowerLog {
        kappa: f64,
        center: Point,
        power: f64,
        log_power: f64,
        cut: f64,
    },
    /// Arbitrary callable, optionally singular at the support center with
    /// the given log exponent (the radial power is fitted numerically).
    General {
        f: DensityFn,
        center: Point,
        radius: f64,
        singular_log_power: Option<f64>,
    },
}

impl ScalarField {
    pub fn zero() -> Self {
        ScalarField {
            imp: FieldImpl::Zero,
        }
    }

    pub fn power_log(kappa: f64, center: Point, power: f64, log_power: f64, cut: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::Domain(format!("profile amplitude must be positive, got {kappa}")));
        }
        if !(cut > 0.0) || (log_power != 0.0 && cut > 0.5) {
            return Err(Error::Domain(format!(
                "cut radius must be positive (and <= 1/2 for log profiles), got {cut}"
            )));
        }
        Ok(ScalarField {
            imp: FieldImpl::PowerLog {
                kappa,
                center,
                power,
                log_power,
                cut,
            },
        })
    }

    /// Density from a closure supported in `B(center, radius)`. Pass the
    /// log exponent of a declared singularity at `center` via
    /// `singular_log_power` (0.0 for a pure power blow-up).
    pub fn from_fn(
        f: DensityFn,
        center: Point,
        radius: f64,
        singular_log_power: Option<f64>,
    ) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("support radius must be positive, got {radius}")));
        }
        Ok(ScalarField {
            imp: FieldImpl::General {
                f,
                center,
                radius,
                singular_log_power,
            },
        })
    }

    /// Gaussian bump `amplitude · exp(-|x-c|²/(2 width²))`, truncated where
    /// the relative density falls below 1e-16.
    pub fn gaussian_bump(center: Point, amplitude: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !(amplitude >= 0.0) {
            return Err(Error::Domain("bump needs width > 0 and amplitude >= 0".into()));
        }
        if amplitude == 0.0 {
            return Ok(ScalarField::zero());
        }
        let radius = width * (2.0 * 16.0 * std::f64::consts::LN_10).sqrt();
        let c = center;
        let w2 = 2.0 * width * width;
        Self::from_fn(
            Arc::new(move |y: &Point| amplitude * (-c.dist_sq(y) / w2).exp()),
            center,
            radius,
            None,
        )
    }

    /// Constant density on `B(center, radius)`.
    pub fn constant(center: Point, value: f64, radius: f64) -> Result<Self> {
        if !(value >= 0.0) {
            return Err(Error::Domain("constant density must be nonnegative".into()));
        }
        if value == 0.0 {
            return Ok(ScalarField::zero());
        }
        Self::from_fn(Arc::new(move |_| value), center, radius, None)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.imp, FieldImpl::Zero)
    }

    pub fn eval(&self, y: &Point) -> f64 {
        match &self.imp {
            FieldImpl::Zero => 0.0,
            FieldImpl::PowerLog {
                kappa,
                center,
                power,
                log_power,
                cut,
            } => {
                let r = center.dist(y);
                if r >= *cut {
                    return 0.0;
                }
                if r == 0.0 {
                    return f64::INFINITY;
                }
                let mut v = kappa * r.powf(-power);
                if *log_power != 0.0 {
                    v *= (-r.ln()).powf(-log_power);
                }
                v
            }
            FieldImpl::General { f, center, radius, .. } => {
                if center.dist(y) >= *radius {
                    0.0
                } else {
                    f(y)
                }
            }
        }
    }

    /// Pointwise power `f^α`; exact for power-log profiles.
    pub fn powered(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("exponent must be positive, got {alpha}")));
        }
        Ok(match &self.imp {
            FieldImpl::Zero => ScalarField::zero(),
            FieldImpl::PowerLog {
                kappa,
                center,
                power,
                log_power,
                cut,
            } => ScalarField {
                imp: FieldImpl::PowerLog {
                    kappa: kappa.powf(alpha),
                    center: *center,
                    power: power * alpha,
                    log_power: log_power * alpha,
                    cut: *cut,
                },
            },
            FieldImpl::General {
                f,
                center,
                radius,
                singular_log_power,
            } => {
                let f = f.clone();
                ScalarField {
                    imp: FieldImpl::General {
                        f: Arc::new(move |y: &Point| f(y).powf(alpha)),
                        center: *center,
                        radius: *radius,
                        singular_log_power: singular_log_power.map(|b| b * alpha),
                    },
                }
            }
        })
    }

    /// Pointwise transform `τ ↦ φ(τ)`, with the caller declaring the log
    /// exponent of the transformed singularity for tail fitting.
    pub fn mapped(
        &self,
        phi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        transformed_log_power: Option<f64>,
    ) -> Self {
        match &self.imp {
            FieldImpl::Zero => {
                // φ(0) may be nonzero in principle; our gauges fix φ(0)=0.
                ScalarField::zero()
            }
            imp => {
                let base = ScalarField { imp: imp.clone() };
                let (center, radius) = base.support();
                let singular = match transformed_log_power {
                    Some(b) => Some(b),
                    None => base.singular_log_power(),
                };
                ScalarField {
                    imp: FieldImpl::General {
                        f: Arc::new(move |y: &Point| phi(base.eval(y))),
                        center,
                        radius,
                        singular_log_power: singular,
                    },
                }
            }
        }
    }

    pub fn scaled(&self, kappa: f64) -> Self {
        match &self.imp {
            FieldImpl::Zero => ScalarField::zero(),
            FieldImpl::PowerLog {
                kappa: k0,
                center,
                power,
                log_power,
                cut,
            } => ScalarField {
                imp: FieldImpl::PowerLog {
                    kappa: k0 * kappa,
                    center: *center,
                    power: *power,
                    log_power: *log_power,
                    cut: *cut,
                },
            },
            FieldImpl::General {
                f,
                center,
                radius,
                singular_log_power,
            } => {
                let f = f.clone();
                ScalarField {
                    imp: FieldImpl::General {
                        f: Arc::new(move |y: &Point| kappa * f(y)),
                        center: *center,
                        radius: *radius,
                        singular_log_power: *singular_log_power,
                    },
                }
            }
        }
    }

    /// Support ball `(center, radius)`; zero fields report a unit ball at
    /// the origin of a 1-d half-space purely as a placeholder.
    pub fn support(&self) -> (Point, f64) {
        match &self.imp {
            FieldImpl::Zero => (Point::origin(Dimension::new(1).unwrap()), 0.0),
            FieldImpl::PowerLog { center, cut, .. } => (*center, *cut),
            FieldImpl::General { center, radius, .. } => (*center, *radius),
        }
    }

    fn singular_center(&self) -> Option<Point> {
        match &self.imp {
            FieldImpl::Zero => None,
            FieldImpl::PowerLog { center, .. } => Some(*center),
            FieldImpl::General {
                center,
                singular_log_power,
                ..
            } => singular_log_power.map(|_| *center),
        }
    }

    /// Log exponent of the declared singularity, if any.
    pub fn singular_log_power_hint(&self) -> Option<f64> {
        self.singular_log_power()
    }

    fn singular_log_power(&self) -> Option<f64> {
        match &self.imp {
            FieldImpl::Zero => None,
            FieldImpl::PowerLog { log_power, .. } => Some(*log_power),
            FieldImpl::General {
                singular_log_power, ..
            } => *singular_log_power,
        }
    }
}

/// A nonnegative density on the boundary hyperplane `∂Ω ≅ R^{N-1}`.
#[derive(Clone)]
pub struct LineField {
    imp: LineImpl,
}

#[derive(Clone)]
enum LineImpl {
    Zero,
    PowerLog {
        kappa: f64,
        center: Vec<f64>,
        power: f64,
        log_power: f64,
        cut: f64,
    },
    General {
        h: LineDensityFn,
        center: Vec<f64>,
        radius: f64,
        singular_log_power: Option<f64>,
    },
}

impl LineField {
    pub fn zero() -> Self {
        LineField { imp: LineImpl::Zero }
    }

    pub fn power_log(kappa: f64, center: Vec<f64>, power: f64, log_power: f64, cut: f64) -> Result<Self> {
        if !(kappa > 0.0) || !(cut > 0.0) || (log_power != 0.0 && cut > 0.5) {
            return Err(Error::Domain("invalid boundary-line profile parameters".into()));
        }
        Ok(LineField {
            imp: LineImpl::PowerLog {
                kappa,
                center,
                power,
                log_power,
                cut,
            },
        })
    }

    pub fn from_fn(
        h: LineDensityFn,
        center: Vec<f64>,
        radius: f64,
        singular_log_power: Option<f64>,
    ) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain("support radius must be positive".into()));
        }
        Ok(LineField {
            imp: LineImpl::General {
                h,
                center,
                radius,
                singular_log_power,
            },
        })
    }

    pub fn constant(center: Vec<f64>, value: f64, radius: f64) -> Result<Self> {
        if !(value >= 0.0) {
            return Err(Error::Domain("constant density must be nonnegative".into()));
        }
        if value == 0.0 {
            return Ok(LineField::zero());
        }
        Self::from_fn(Arc::new(move |_| value), center, radius, None)
    }

    pub fn gaussian_bump(center: Vec<f64>, amplitude: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !(amplitude >= 0.0) {
            return Err(Error::Domain("bump needs width > 0 and amplitude >= 0".into()));
        }
        if amplitude == 0.0 {
            return Ok(LineField::zero());
        }
        let radius = width * (2.0 * 16.0 * std::f64::consts::LN_10).sqrt();
        let c = center.clone();
        let w2 = 2.0 * width * width;
        Self::from_fn(
            Arc::new(move |y: &[f64]| {
                let d2: f64 = c.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                amplitude * (-d2 / w2).exp()
            }),
            center,
            radius,
            None,
        )
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.imp, LineImpl::Zero)
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match &self.imp {
            LineImpl::Zero => 0.0,
            LineImpl::PowerLog {
                kappa,
                center,
                power,
                log_power,
                cut,
            } => {
                let r = dist_slice(center, y);
                if r >= *cut {
                    return 0.0;
                }
                if r == 0.0 {
                    return f64::INFINITY;
                }
                let mut v = kappa * r.powf(-power);
                if *log_power != 0.0 {
                    v *= (-r.ln()).powf(-log_power);
                }
                v
            }
            LineImpl::General { h, center, radius, .. } => {
                if dist_slice(center, y) >= *radius {
                    0.0
                } else {
                    h(y)
                }
            }
        }
    }

    pub fn powered(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("exponent must be positive, got {alpha}")));
        }
        Ok(match &self.imp {
            LineImpl::Zero => LineField::zero(),
            LineImpl::PowerLog {
                kappa,
                center,
                power,
                log_power,
                cut,
            } => LineField {
                imp: LineImpl::PowerLog {
                    kappa: kappa.powf(alpha),
                    center: center.clone(),
                    power: power * alpha,
                    log_power: log_power * alpha,
                    cut: *cut,
                },
            },
            LineImpl::General {
                h,
                center,
                radius,
                singular_log_power,
            } => {
                let h = h.clone();
                LineField {
                    imp: LineImpl::General {
                        h: Arc::new(move |y: &[f64]| h(y).powf(alpha)),
                        center: center.clone(),
                        radius: *radius,
                        singular_log_power: singular_log_power.map(|b| b * alpha),
                    },
                }
            }
        })
    }

    pub fn mapped(
        &self,
        phi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        transformed_log_power: Option<f64>,
    ) -> Self {
        match &self.imp {
            LineImpl::Zero => LineField::zero(),
            imp => {
                let base = LineField { imp: imp.clone() };
                let (center, radius) = base.support();
                let singular = match transformed_log_power {
                    Some(b) => Some(b),
                    None => base.singular_log_power(),
                };
                LineField {
                    imp: LineImpl::General {
                        h: Arc::new(move |y: &[f64]| phi(base.eval(y))),
                        center,
                        radius,
                        singular_log_power: singular,
                    },
                }
            }
        }
    }

    pub fn scaled(&self, kappa: f64) -> Self {
        match &self.imp {
            LineImpl::Zero => LineField::zero(),
            LineImpl::PowerLog {
                kappa: k0,
                center,
                power,
                log_power,
                cut,
            } => LineField {
                imp: LineImpl::PowerLog {
                    kappa: k0 * kappa,
                    center: center.clone(),
                    power: *power,
                    log_power: *log_power,
                    cut: *cut,
                },
            },
            LineImpl::General {
                h,
                center,
                radius,
                singular_log_power,
            } => {
                let h = h.clone();
                LineField {
                    imp: LineImpl::General {
                        h: Arc::new(move |y: &[f64]| kappa * h(y)),
                        center: center.clone(),
                        radius: *radius,
                        singular_log_power: *singular_log_power,
                    },
                }
            }
        }
    }

    pub fn support(&self) -> (Vec<f64>, f64) {
        match &self.imp {
            LineImpl::Zero => (vec![], 0.0),
            LineImpl::PowerLog { center, cut, .. } => (center.clone(), *cut),
            LineImpl::General { center, radius, .. } => (center.clone(), *radius),
        }
    }

    fn singular_center(&self) -> Option<&[f64]> {
        match &self.imp {
            LineImpl::Zero => None,
            LineImpl::PowerLog { center, .. } => Some(center),
            LineImpl::General {
                center,
                singular_log_power,
                ..
            } => singular_log_power.map(|_| center.as_slice()),
        }
    }

    /// Log exponent of the declared singularity, if any.
    pub fn singular_log_power_hint(&self) -> Option<f64> {
        self.singular_log_power()
    }

    fn singular_log_power(&self) -> Option<f64> {
        match &self.imp {
            LineImpl::Zero => None,
            LineImpl::PowerLog { log_power, .. } => Some(*log_power),
            LineImpl::General {
                singular_log_power, ..
            } => *singular_log_power,
        }
    }
}

fn dist_slice(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A nonnegative Radon measure on the closed half-space.
#[derive(Clone)]
pub struct HalfSpaceMeasure {
    dim: Dimension,
    weighted: Vec<ScalarField>,
    plain: Vec<ScalarField>,
    line: Vec<LineField>,
    atoms: Vec<(Point, f64)>,
}

impl HalfSpaceMeasure {
    pub fn zero(dim: Dimension) -> Self {
        HalfSpaceMeasure {
            dim,
            weighted: vec![],
            plain: vec![],
            line: vec![],
            atoms: vec![],
        }
    }

    /// `dμ += x_N f(x) dx`.
    pub fn add_weighted(&mut self, f: ScalarField) -> Result<()> {
        self.check_field_dim(&f)?;
        self.check_integrable(&f, true)?;
        if !f.is_zero() {
            self.weighted.push(f);
        }
        Ok(())
    }

    /// `dμ += g(x) dx`.
    pub fn add_plain(&mut self, g: ScalarField) -> Result<()> {
        self.check_field_dim(&g)?;
        self.check_integrable(&g, false)?;
        if !g.is_zero() {
            self.plain.push(g);
        }
        Ok(())
    }

    /// Declared power-log singularities must give every bounded set finite
    /// mass: radial exponent `β = N - a` (plus 1 at boundary centers of
    /// weighted parts) must be positive, or zero with log exponent above 1.
    fn check_integrable(&self, f: &ScalarField, weighted: bool) -> Result<()> {
        if let FieldImpl::PowerLog {
            center,
            power,
            log_power,
            ..
        } = &f.imp
        {
            let n = self.dim.get() as f64;
            let gain = if weighted && center.is_boundary() { 1.0 } else { 0.0 };
            let beta = n + gain - power;
            if beta < 0.0 || (beta == 0.0 && *log_power <= 1.0) {
                return Err(Error::Domain(format!(
                    "declared singularity r^-{power} (log exponent {log_power}) is not \
                     integrable against this measure near its center"
                )));
            }
        }
        Ok(())
    }

    /// `dμ += h(x') ⊗ δ(x_N)`, concentrated on the boundary hyperplane.
    /// For N = 1 the boundary is a single point; use an atom instead.
    pub fn add_boundary_line(&mut self, h: LineField) -> Result<()> {
        if self.dim.get() < 2 {
            return Err(Error::Domain(
                "boundary-line densities need N >= 2; use a boundary atom for N = 1".into(),
            ));
        }
        if let LineImpl::PowerLog { power, log_power, .. } = &h.imp {
            let m = self.dim.tangential() as f64;
            let beta = m - power;
            if beta < 0.0 || (beta == 0.0 && *log_power <= 1.0) {
                return Err(Error::Domain(format!(
                    "declared boundary-line singularity r^-{power} (log exponent                      {log_power}) is not locally integrable"
                )));
            }
        }
        if !h.is_zero() {
            let (c, _) = h.support();
            if c.len() != self.dim.tangential() {
                return Err(Error::Domain(
                    "boundary-line density has wrong tangential dimension".into(),
                ));
            }
            self.line.push(h);
        }
        Ok(())
    }

    pub fn add_atom(&mut self, location: Point, mass: f64) -> Result<()> {
        if location.dim() != self.dim {
            return Err(Error::Domain("atom dimension mismatch".into()));
        }
        if !(mass > 0.0) {
            return Err(Error::Domain(format!("atom mass must be positive, got {mass}")));
        }
        self.atoms.push((location, mass));
        Ok(())
    }

    fn check_field_dim(&self, f: &ScalarField) -> Result<()> {
        if f.is_zero() {
            return Ok(());
        }
        let (c, _) = f.support();
        if c.dim() != self.dim {
            return Err(Error::Domain("density dimension mismatch".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.weighted.is_empty() && self.plain.is_empty() && self.line.is_empty() && self.atoms.is_empty()
    }

    pub fn weighted_parts(&self) -> &[ScalarField] {
        &self.weighted
    }

    pub fn plain_parts(&self) -> &[ScalarField] {
        &self.plain
    }

    pub fn line_parts(&self) -> &[LineField] {
        &self.line
    }

    pub fn atoms(&self) -> &[(Point, f64)] {
        &self.atoms
    }

    pub fn scaled(&self, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::Domain(format!("scaling factor must be positive, got {kappa}")));
        }
        Ok(HalfSpaceMeasure {
            dim: self.dim,
            weighted: self.weighted.iter().map(|f| f.scaled(kappa)).collect(),
            plain: self.plain.iter().map(|g| g.scaled(kappa)).collect(),
            line: self.line.iter().map(|h| h.scaled(kappa)).collect(),
            atoms: self.atoms.iter().map(|&(p, m)| (p, m * kappa)).collect(),
        })
    }

    /// Singular locations worth refining sample grids around: declared
    /// density singularities, atoms, and boundary-line singular centers.
    pub fn singular_centers(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for f in self.weighted.iter().chain(&self.plain) {
            if let Some(c) = f.singular_center() {
                out.push(c);
            }
        }
        for h in &self.line {
            if let Some(c) = h.singular_center() {
                if let Ok(p) = Point::new(self.dim, c, 0.0) {
                    out.push(p);
                }
            }
        }
        for (p, _) in &self.atoms {
            out.push(*p);
        }
        out
    }

    /// Infimum of `x_N` over the support; positive iff the measure stays
    /// away from the boundary (`supp μ ⊂ Ω_L`). Infinite for the zero
    /// measure.
    pub fn min_support_normal(&self) -> f64 {
        if self.is_zero() {
            return f64::INFINITY;
        }
        let mut min = f64::INFINITY;
        for f in self.weighted.iter().chain(&self.plain) {
            let (c, r) = f.support();
            min = min.min((c.normal() - r).max(0.0));
        }
        if !self.line.is_empty() {
            min = 0.0;
        }
        for (p, _) in &self.atoms {
            min = min.min(p.normal());
        }
        min
    }

    /// Radius `R` such that the measure vanishes outside `B(0, R)`.
    pub fn support_radius(&self) -> f64 {
        let mut r: f64 = 0.0;
        for f in self.weighted.iter().chain(&self.plain) {
            let (c, rad) = f.support();
            r = r.max(c.dist(&Point::origin(self.dim)) + rad);
        }
        for h in &self.line {
            let (c, rad) = h.support();
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            r = r.max(norm + rad);
        }
        for (p, _) in &self.atoms {
            r = r.max(p.dist(&Point::origin(self.dim)));
        }
        r
    }

    /// `μ(B_Ω(z, σ))`: interior densities over the clipped ball, boundary
    /// parts over the boundary disc the ball cuts out, atoms in the closed
    /// half-ball.
    pub fn ball_mass(&self, z: &Point, sigma: f64) -> Result<f64> {
        self.ball_mass_opt(z, sigma, &QuadOptions::default())
    }

    pub fn ball_mass_opt(&self, z: &Point, sigma: f64, opt: &QuadOptions) -> Result<f64> {
        check_sigma(sigma)?;
        let mut total = 0.0;
        for f in &self.weighted {
            total += field_ball_integral(self.dim, f, Some((z, sigma)), true, None, opt)?;
        }
        for g in &self.plain {
            total += field_ball_integral(self.dim, g, Some((z, sigma)), false, None, opt)?;
        }
        if !self.line.is_empty() && sigma > z.normal() {
            let rho = (sigma * sigma - z.normal() * z.normal()).sqrt();
            for h in &self.line {
                total += line_ball_integral(self.dim, h, Some((z.tangential(), rho)), None, opt)?;
            }
        }
        for (p, m) in &self.atoms {
            if p.dist(z) <= sigma {
                total += m;
            }
        }
        Ok(total)
    }

    /// `∫_{B_Ω(z,σ)} (y_N + √s)^{-1} dμ(y)`.
    pub fn weighted_ball_integral(&self, z: &Point, sigma: f64, s: f64) -> Result<f64> {
        self.weighted_ball_integral_opt(z, sigma, s, &QuadOptions::default())
    }

    pub fn weighted_ball_integral_opt(
        &self,
        z: &Point,
        sigma: f64,
        s: f64,
        opt: &QuadOptions,
    ) -> Result<f64> {
        check_sigma(sigma)?;
        if !(s > 0.0) {
            return Err(Error::Domain(format!("time scale s must be positive, got {s}")));
        }
        let sqrt_s = s.sqrt();
        let weight = move |y: &Point| (y.normal() + sqrt_s).recip();
        let mut total = 0.0;
        for f in &self.weighted {
            total += field_ball_integral(self.dim, f, Some((z, sigma)), true, Some(&weight), opt)?;
        }
        for g in &self.plain {
            total += field_ball_integral(self.dim, g, Some((z, sigma)), false, Some(&weight), opt)?;
        }
        if !self.line.is_empty() && sigma > z.normal() {
            let rho = (sigma * sigma - z.normal() * z.normal()).sqrt();
            for h in &self.line {
                total += line_ball_integral(self.dim, h, Some((z.tangential(), rho)), None, opt)?
                    / sqrt_s;
            }
        }
        for (p, m) in &self.atoms {
            if p.dist(z) <= sigma {
                total += m / (p.normal() + sqrt_s);
            }
        }
        Ok(total)
    }

    /// `∫_Ω̄ K(x, y, t) dμ(y)`: weighted parts pair through `G` against `f`,
    /// plain parts through `K`, boundary parts through the analytic
    /// boundary limit of `K`, atoms directly.
    pub fn apply_k(&self, x: &Point, t: f64) -> Result<f64> {
        self.apply_k_opt(x, t, &QuadOptions::default())
    }

    pub fn apply_k_opt(&self, x: &Point, t: f64, opt: &QuadOptions) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("time must be positive, got {t}")));
        }
        if x.normal() == 0.0 {
            return Ok(0.0);
        }
        let cfg = KernelConfig::default();
        // Window past which the Gaussian factor is below 1e-26 relative.
        let window = 15.5 * t.sqrt();
        // Kernel values inherit ~ε·|x|/√t relative noise from coordinate
        // quantization of the Gaussian exponent; the quadrature tolerance
        // cannot be tighter than that.
        let coord_scale = x.coords().iter().fold(1.0f64, |a, &c| a.max(c.abs()));
        let noise = 48.0 * f64::EPSILON * coord_scale / t.sqrt();
        let opt = &QuadOptions {
            tol: crate::quad::Tolerance::new(opt.tol.rel.max(noise), opt.tol.abs),
            ..*opt
        };
        let mut total = 0.0;
        let kernel_g = |y: &Point| kernels::dirichlet_unchecked(&cfg, x, y, t);
        let kernel_k = |y: &Point| kernels::k_unchecked(&cfg, x, y, t);
        for f in &self.weighted {
            total += field_kernel_integral(self.dim, f, x, window, &kernel_g, opt)?;
        }
        for g in &self.plain {
            total += field_kernel_integral(self.dim, g, x, window, &kernel_k, opt)?;
        }
        if !self.line.is_empty() {
            // K(x, (y',0), t) = (x_N/t) Γ_1(x_N,t) Γ_{N-1}(x'-y',t)
            let front = x.normal() / t
                * kernels::gamma_profile(1, x.normal() * x.normal(), t);
            if front > 0.0 {
                let tangential_kernel = |y: &[f64]| {
                    let d2: f64 = x
                        .tangential()
                        .iter()
                        .zip(y)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    kernels::gamma_profile(self.dim.get() - 1, d2, t)
                };
                for h in &self.line {
                    total += front
                        * line_kernel_integral(self.dim, h, x.tangential(), window, &tangential_kernel, opt)?;
                }
            }
        }
        for (p, m) in &self.atoms {
            total += m * kernels::k_unchecked(&cfg, x, p, t);
        }
        Ok(total)
    }

    /// `μ(∂Ω)`: boundary atoms plus the full mass of boundary-line parts.
    pub fn boundary_mass(&self) -> Result<f64> {
        let mut total = 0.0;
        for (p, m) in &self.atoms {
            if p.is_boundary() {
                total += m;
            }
        }
        let opt = QuadOptions::default();
        for h in &self.line {
            total += line_ball_integral(self.dim, h, None, None, &opt)?;
        }
        Ok(total)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("radius must be positive, got {sigma}")));
    }
    Ok(())
}

/// Test-only probe around the weighted ball integral.
#[doc(hidden)]
pub fn debug_field_ball_integral(
    dim: Dimension,
    field: &ScalarField,
    z: &Point,
    sigma: f64,
    weight: &dyn Fn(&Point) -> f64,
    opt: &QuadOptions,
) -> f64 {
    field_ball_integral(dim, field, Some((z, sigma)), true, Some(weight), opt)
        .unwrap_or(f64::NAN)
}

/// `∫ field(y) · [y_N if normal_weight] · w(y) dy` over
/// `B(z,σ) ∩ Ω ∩ supp(field)`; `ball = None` integrates over the support.
pub(crate) fn field_ball_integral(
    dim: Dimension,
    field: &ScalarField,
    ball: Option<(&Point, f64)>,
    normal_weight: bool,
    weight: Option<&dyn Fn(&Point) -> f64>,
    opt: &QuadOptions,
) -> Result<f64> {
    if field.is_zero() {
        return Ok(0.0);
    }
    let n = dim.get();
    let (sc, sr) = field.support();
    let mut constraints = vec![Constraint::Ball {
        center: sc,
        radius: sr,
    }];
    if let Some((z, sigma)) = ball {
        constraints.push(Constraint::Ball {
            center: *z,
            radius: sigma,
        });
    }
    constraints.push(Constraint::HalfSpace);

    // Pick the ray origin: the singular center when there is one,
    // otherwise the ball (or support) center.
    let origin = field
        .singular_center()
        .unwrap_or_else(|| ball.map(|(z, _)| *z).unwrap_or(sc));
    let r_cap = sr + origin.dist(&sc) + 1.0;
    let upper_only = origin.is_boundary();
    let nodes = angular_nodes(n, upper_only, opt.angular_resolution);

    let exact_profile = match (&field.imp, weight) {
        (
            FieldImpl::PowerLog {
                kappa,
                power,
                log_power,
                ..
            },
            None,
        ) => Some((*kappa, *power, *log_power)),
        _ => None,
    };

    let mut total = 0.0;
    for (dir, w_ang) in &nodes {
        let (lo, hi) = clip_ray(&origin, dir, &constraints, r_cap);
        if hi <= lo {
            continue;
        }
        let contribution = if let Some((kappa, a, b)) = exact_profile {
            // Integrand along the ray: (amp0 + amp1 r) κ r^{-a} L^{-b} r^{n-1}.
            let (amp0, amp1) = if normal_weight {
                (origin.normal(), dir[n - 1])
            } else {
                (1.0, 0.0)
            };
            ray_power_log_exact(n, kappa, a, b, amp0, amp1, lo, hi)?
        } else {
            let integrand = |r: f64| {
                let y = origin.offset(dir, r);
                let mut v = field.eval(&y) * r.powi(n as i32 - 1);
                if normal_weight {
                    v *= y.normal();
                }
                if let Some(w) = weight {
                    v *= w(&y);
                }
                v
            };
            let scale = origin.coords().iter().fold(0.0f64, |a, &c| a.max(c.abs()));
            match field.singular_log_power() {
                Some(b) if lo == 0.0 => {
                    ray_shells_with_tail(integrand, hi, b, scale, opt.tol)?
                }
                _ => ray_smooth(integrand, lo, hi, opt.tol).map_err(|e| {
                    crate::error::Error::Numerical(format!(
                        "smooth ray from {:?} dir {dir:?} over [{lo:e},{hi:e}]: {e}",
                        origin.coords()
                    ))
                })?,
            }
        };
        total += w_ang * contribution;
    }
    Ok(total)
}

/// Kernel pairing `∫ field(y) k(y) dy` over the support, windowed to
/// `B(x, window)` since `k` carries a Gaussian factor centered at `x`.
fn field_kernel_integral(
    dim: Dimension,
    field: &ScalarField,
    x: &Point,
    window: f64,
    kernel: &dyn Fn(&Point) -> f64,
    opt: &QuadOptions,
) -> Result<f64> {
    if field.is_zero() {
        return Ok(0.0);
    }
    let (sc, sr) = field.support();
    if x.dist(&sc) > sr + window {
        return Ok(0.0);
    }
    field_ball_integral(dim, field, Some((x, window)), false, Some(kernel), opt)
}

/// `∫ field(y') w(y') dy'` over `B'(z', ρ) ∩ supp`; `disc = None` is the
/// whole support.
pub(crate) fn line_ball_integral(
    dim: Dimension,
    field: &LineField,
    disc: Option<(&[f64], f64)>,
    weight: Option<&dyn Fn(&[f64]) -> f64>,
    opt: &QuadOptions,
) -> Result<f64> {
    if field.is_zero() {
        return Ok(0.0);
    }
    let m = dim.tangential();
    debug_assert!(m >= 1);
    let (sc, sr) = field.support();
    let origin: Vec<f64> = field
        .singular_center()
        .map(|c| c.to_vec())
        .unwrap_or_else(|| disc.map(|(z, _)| z.to_vec()).unwrap_or_else(|| sc.clone()));
    let nodes = angular_nodes(m, false, opt.angular_resolution);
    let r_cap = sr + dist_slice(&origin, &sc) + 1.0;

    let exact_profile = match (&field.imp, weight) {
        (
            LineImpl::PowerLog {
                kappa,
                power,
                log_power,
                ..
            },
            None,
        ) => Some((*kappa, *power, *log_power)),
        _ => None,
    };

    let mut clips: Vec<(Vec<f64>, f64)> = vec![(sc.clone(), sr)];
    if let Some((z, r)) = disc {
        clips.push((z.to_vec(), r));
    }

    let mut total = 0.0;
    for (dir, w_ang) in &nodes {
        let mut lo = 0.0f64;
        let mut hi = r_cap;
        for (c, rad) in &clips {
            let mut dot = 0.0;
            let mut dsq = 0.0;
            for i in 0..m {
                let di = origin[i] - c[i];
                dot += di * dir[i];
                dsq += di * di;
            }
            let dvsc = dot * dot - (dsq - rad * rad);
            if dvsc < 0.0 {
                lo = 1.0;
                hi = 0.0;
                break;
            }
            let s = dvsc.sqrt();
            lo = lo.max(-dot - s);
            hi = hi.min(-dot + s);
        }
        if hi <= lo {
            continue;
        }
        let lo = lo.max(0.0);
        let contribution = if let Some((kappa, a, b)) = exact_profile {
            ray_power_log_exact(m, kappa, a, b, 1.0, 0.0, lo, hi)?
        } else {
            let integrand = |r: f64| {
                let y: Vec<f64> = (0..m).map(|i| origin[i] + r * dir[i]).collect();
                let mut v = field.eval(&y) * r.powi(m as i32 - 1);
                if let Some(w) = weight {
                    v *= w(&y);
                }
                v
            };
            let scale = origin.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
            match field.singular_log_power() {
                Some(b) if lo == 0.0 => {
                    ray_shells_with_tail(integrand, hi, b, scale, opt.tol)?
                }
                _ => ray_smooth(integrand, lo, hi, opt.tol)?,
            }
        };
        total += w_ang * contribution;
    }
    Ok(total)
}

fn line_kernel_integral(
    dim: Dimension,
    field: &LineField,
    x_prime: &[f64],
    window: f64,
    kernel: &dyn Fn(&[f64]) -> f64,
    opt: &QuadOptions,
) -> Result<f64> {
    if field.is_zero() {
        return Ok(0.0);
    }
    let (sc, sr) = field.support();
    if dist_slice(&sc, x_prime) > sr + window {
        return Ok(0.0);
    }
    line_ball_integral(dim, field, Some((x_prime, window)), Some(kernel), opt)
}

/// `∫_{B_Ω(z,σ)} y_N dy`, in closed form.
///
/// Slicing normal to the boundary and substituting `y_N = z_N + σ sin θ`
/// gives `ω_{N-1} σ^N ∫_{θ_0}^{π/2} (z_N + σ sin θ) cos^N θ dθ` with
/// `θ_0 = asin(max(-1, -z_N/σ))`, elementary for N ≤ 3.
pub fn half_ball_moment(z: &Point, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let n = z.dim().get();
    let zn = z.normal();
    let theta0 = (-(zn / sigma)).max(-1.0).asin();
    let theta1 = 0.5 * std::f64::consts::PI;
    let omega = crate::geometry::unit_ball_volume(n - 1);
    // ∫ cos^N θ dθ and ∫ sin θ cos^N θ dθ = -cos^{N+1}θ/(N+1).
    let int_cos = integral_cos_pow(n, theta0, theta1);
    let int_sin_cos = (theta0.cos().powi(n as i32 + 1) - theta1.cos().powi(n as i32 + 1))
        / (n as f64 + 1.0);
    Ok(omega * sigma.powi(n as i32) * (zn * int_cos + sigma * int_sin_cos))
}

fn integral_cos_pow(n: usize, a: f64, b: f64) -> f64 {
    match n {
        1 => b.sin() - a.sin(),
        2 => 0.5 * (b - a) + 0.25 * ((2.0 * b).sin() - (2.0 * a).sin()),
        3 => (b.sin() - b.sin().powi(3) / 3.0) - (a.sin() - a.sin().powi(3) / 3.0),
        _ => unreachable!("dimension out of supported range"),
    }
}
