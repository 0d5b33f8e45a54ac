//! The run-specification file format: a single JSON document selecting a
//! command, the problem data `(N, p, T, μ)`, and optional grid/tolerance
//! blocks. See the repository README for the full schema and examples.

use anyhow::{anyhow, bail, Context};
use halfheat::measures::{
    make_profile, HalfSpaceMeasure, LineField, ProfileKind, ScalarField, SingularProfile,
};
use halfheat::solver::{GridSpec, SolverCaps};
use halfheat::supersolutions::ConvexGauge;
use halfheat::{Dimension, Point};
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    KernelCheck,
    Classify,
    Certify,
    Solve,
    Dichotomy,
    Trace,
    GlobalProbe,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::KernelCheck => "kernel-check",
            Command::Classify => "classify",
            Command::Certify => "certify",
            Command::Solve => "solve",
            Command::Dichotomy => "dichotomy",
            Command::Trace => "trace",
            Command::GlobalProbe => "global-probe",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub command: Command,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub measure: MeasureSpec,
    #[serde(default)]
    pub grid: Option<GridBlock>,
    #[serde(default)]
    pub tolerances: Option<ToleranceBlock>,
    /// κ bisection range for `dichotomy`.
    #[serde(default)]
    pub kappa_range: Option<(f64, f64)>,
    #[serde(default = "default_ratio_tol")]
    pub ratio_tol: f64,
    /// Horizon list for `global-probe`.
    #[serde(default)]
    pub horizons: Option<Vec<f64>>,
    /// Gauge for `certify`.
    #[serde(default)]
    pub gauge: Option<GaugeSpec>,
    /// Test functions for `trace` (Gaussian bumps).
    #[serde(default)]
    pub test_functions: Option<Vec<TestFunctionSpec>>,
}

fn default_dimension() -> usize {
    1
}
fn default_p() -> f64 {
    2.0
}
fn default_horizon() -> f64 {
    1.0
}
fn default_ratio_tol() -> f64 {
    2.0
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(default)]
    pub components: Vec<ComponentSpec>,
}

/// One measure component. Profile kinds take `center`, `kappa`, `p`;
/// `gaussian`/`constant` take `center`, `kappa` (amplitude/value) plus
/// `width`/`radius` and an optional `weighted` flag (x_N-weighted by
/// default); `atom` takes `center` and `kappa` (its mass). Boundary-line
/// variants (`line_gaussian`, `line_constant`) read `center` as the
/// tangential coordinates.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub kind: String,
    pub center: Vec<f64>,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default = "yes")]
    pub weighted: bool,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default)]
    pub normal_extent: Option<f64>,
    #[serde(default)]
    pub normal_nodes: Option<usize>,
    #[serde(default)]
    pub grading: Option<f64>,
    #[serde(default)]
    pub tangential_halfwidth: Option<f64>,
    #[serde(default)]
    pub tangential_nodes: Option<usize>,
    #[serde(default)]
    pub t_min: Option<f64>,
    #[serde(default)]
    pub time_nodes: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceBlock {
    #[serde(default)]
    pub solver_tol: Option<f64>,
    #[serde(default)]
    pub sup_cap: Option<f64>,
    #[serde(default)]
    pub max_sweeps: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum GaugeSpec {
    Identity,
    Power { alpha: f64 },
    LogType { beta: f64 },
    ShiftedLog { beta: f64, shift: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionSpec {
    pub center: Vec<f64>,
    pub width: f64,
}

impl RunSpec {
    pub fn parse(text: &str) -> anyhow::Result<RunSpec> {
        let spec: RunSpec = serde_json::from_str(text).map_err(|e| {
            anyhow!("line {}, column {}: {e}", e.line(), e.column())
        })?;
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> anyhow::Result<()> {
        if !(1..=3).contains(&self.dimension) {
            bail!("dimension must be 1, 2, or 3, got {}", self.dimension);
        }
        if !(self.p > 1.0) {
            bail!("p must exceed 1, got {}", self.p);
        }
        if !(self.horizon > 0.0) {
            bail!("horizon must be positive, got {}", self.horizon);
        }
        Ok(())
    }

    pub fn dim(&self) -> Dimension {
        Dimension::new(self.dimension).expect("validated")
    }

    pub fn build_measure(&self) -> anyhow::Result<HalfSpaceMeasure> {
        let dim = self.dim();
        let mut mu = HalfSpaceMeasure::zero(dim);
        for (i, comp) in self.measure.components.iter().enumerate() {
            let context = || format!("measure component {i} ({})", comp.kind);
            let center_point = |coords: &[f64]| -> anyhow::Result<Point> {
                if coords.len() != dim.get() {
                    bail!(
                        "component {i}: center needs {} coordinates, got {}",
                        dim.get(),
                        coords.len()
                    );
                }
                Ok(Point::new(dim, &coords[..dim.get() - 1], coords[dim.get() - 1])?)
            };
            match comp.kind.as_str() {
                "atom" => {
                    mu.add_atom(center_point(&comp.center)?, comp.kappa)
                        .with_context(context)?;
                }
                "gaussian" => {
                    let f = ScalarField::gaussian_bump(
                        center_point(&comp.center)?,
                        comp.kappa,
                        comp.width.unwrap_or(0.4),
                    )?;
                    if comp.weighted {
                        mu.add_weighted(f).with_context(context)?;
                    } else {
                        mu.add_plain(f).with_context(context)?;
                    }
                }
                "constant" => {
                    let f = ScalarField::constant(
                        center_point(&comp.center)?,
                        comp.kappa,
                        comp.radius.unwrap_or(1.0),
                    )?;
                    if comp.weighted {
                        mu.add_weighted(f).with_context(context)?;
                    } else {
                        mu.add_plain(f).with_context(context)?;
                    }
                }
                "line_gaussian" => {
                    let h = LineField::gaussian_bump(
                        comp.center.clone(),
                        comp.kappa,
                        comp.width.unwrap_or(0.4),
                    )?;
                    mu.add_boundary_line(h).with_context(context)?;
                }
                "line_constant" => {
                    let h = LineField::constant(
                        comp.center.clone(),
                        comp.kappa,
                        comp.radius.unwrap_or(1.0),
                    )?;
                    mu.add_boundary_line(h).with_context(context)?;
                }
                kind => {
                    let profile_kind = match kind {
                        "interior_power" => ProfileKind::InteriorPower,
                        "interior_log" => ProfileKind::InteriorLog,
                        "boundary_power" => ProfileKind::BoundaryPower,
                        "boundary_log" => ProfileKind::BoundaryLog,
                        "boundary_line_power" => ProfileKind::BoundaryLinePower,
                        "boundary_line_log" => ProfileKind::BoundaryLineLog,
                        other => bail!("component {i}: unknown kind {other:?}"),
                    };
                    let profile_p = comp.p.unwrap_or(self.p);
                    let profile = SingularProfile::new(
                        profile_kind,
                        center_point(&comp.center)?,
                        profile_p,
                        dim,
                    )?;
                    let part = make_profile(&profile, comp.kappa)?;
                    mu = merge(mu, part)?;
                }
            }
        }
        Ok(mu)
    }

    pub fn build_grid(&self, refine: bool) -> GridSpec {
        let mu_reach = self
            .build_measure()
            .map(|m| m.support_radius())
            .unwrap_or(1.0);
        let mut spec = GridSpec::for_measure(self.dim(), mu_reach, self.horizon);
        if let Some(g) = &self.grid {
            if let Some(v) = g.normal_extent {
                spec.normal_extent = v;
            }
            if let Some(v) = g.normal_nodes {
                spec.normal_nodes = v;
            }
            if let Some(v) = g.grading {
                spec.grading = v;
            }
            if let Some(v) = g.tangential_halfwidth {
                spec.tangential_halfwidth = v;
            }
            if let Some(v) = g.tangential_nodes {
                spec.tangential_nodes = v;
            }
            if let Some(v) = g.t_min {
                spec.t_min = v;
            }
            if let Some(v) = g.time_nodes {
                spec.time_nodes = v;
            }
        }
        if refine {
            spec = spec.refined();
        }
        spec
    }

    pub fn build_caps(&self) -> SolverCaps {
        let mut caps = SolverCaps::default();
        if let Some(t) = &self.tolerances {
            if let Some(v) = t.solver_tol {
                caps.tol = v;
            }
            if let Some(v) = t.sup_cap {
                caps.sup_cap = v;
            }
            if let Some(v) = t.max_sweeps {
                caps.max_sweeps = v;
            }
        }
        caps
    }

    pub fn build_gauge(&self) -> anyhow::Result<ConvexGauge> {
        Ok(match &self.gauge {
            None | Some(GaugeSpec::Identity) => ConvexGauge::identity(),
            Some(GaugeSpec::Power { alpha }) => ConvexGauge::power(*alpha)?,
            Some(GaugeSpec::LogType { beta }) => ConvexGauge::log_type(*beta)?,
            Some(GaugeSpec::ShiftedLog { beta, shift }) => {
                ConvexGauge::shifted_log(*beta, *shift)?
            }
        })
    }
}

fn merge(mut into: HalfSpaceMeasure, from: HalfSpaceMeasure) -> anyhow::Result<HalfSpaceMeasure> {
    for f in from.weighted_parts() {
        into.add_weighted(f.clone())?;
    }
    for g in from.plain_parts() {
        into.add_plain(g.clone())?;
    }
    for h in from.line_parts() {
        into.add_boundary_line(h.clone())?;
    }
    for (p, m) in from.atoms() {
        into.add_atom(*p, *m)?;
    }
    Ok(into)
}
