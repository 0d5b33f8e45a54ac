//! One-dimensional quadrature building blocks.
//!
//! Everything higher-dimensional in this crate is reduced to tensor products
//! or radial/angular splittings of these primitives:
//!
//! * [`integrate`] — adaptive Gauss–Kronrod (7/15) on a finite interval,
//! * [`gk15`] — a single non-adaptive Kronrod panel for known-smooth cells,
//! * [`gauss_legendre`] — cached Gauss–Legendre rules for angular integrals,
//! * [`radial_power_log`] — the weakly singular radial primitive
//!   `∫ r^{β-1} (-ln r)^{-b} dr`, evaluated in closed form where one exists
//!   and by an exponentially damped substitution otherwise.

use crate::error::{Error, Result};
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::Mutex;

// QUADPACK 15-point Kronrod rule with embedded 7-point Gauss rule.
const XGK15: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WG7: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadValue {
    pub value: f64,
    pub abs_error: f64,
}

/// One Kronrod panel over `[a, b]`. Returns the K15 value and the
/// QUADPACK-style error estimate (the raw Gauss/Kronrod difference scaled
/// against the panel's variation, so unresolved singular panels keep a
/// large error instead of fooling the difference).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> QuadValue {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK15[7];
    let mut gauss = fc * WG7[3];
    let mut resabs = fc.abs() * WGK15[7];
    let mut values = [[0.0f64; 2]; 7];
    for j in 0..7 {
        let dx = half * XGK15[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        values[j] = [f1, f2];
        kronrod += (f1 + f2) * WGK15[j];
        resabs += (f1.abs() + f2.abs()) * WGK15[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG7[j / 2];
        }
    }
    let mean = 0.5 * kronrod;
    let mut resasc = WGK15[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK15[j] * ((values[j][0] - mean).abs() + (values[j][1] - mean).abs());
    }
    kronrod *= half;
    gauss *= half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut err = (kronrod - gauss).abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    QuadValue {
        value: kronrod,
        abs_error: err,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub fn rel(rel: f64) -> Self {
        Tolerance { rel, abs: 1e-300 }
    }

    pub fn new(rel: f64, abs: f64) -> Self {
        Tolerance { rel, abs }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::rel(1e-10)
    }
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Splits the worst interval until the summed error estimate satisfies the
/// tolerance. Deterministic: ties in the worst-interval selection are broken
/// by the left endpoint.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadValue> {
    integrate_segmented(f, &[a, b], tol)
}

/// Adaptive integration with caller-supplied initial break points
/// (kinks, branch switches, declared cut radii).
pub fn integrate_segmented<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<QuadValue> {
    if breaks.len() < 2 {
        return Err(Error::Domain("need at least two break points".into()));
    }
    for w in breaks.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::Domain(format!(
                "break points must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    const MAX_INTERVALS: usize = 4000;
    let mut intervals: Vec<Interval> = Vec::with_capacity(64);
    for w in breaks.windows(2) {
        let q = gk15(&f, w[0], w[1]);
        intervals.push(Interval {
            a: w[0],
            b: w[1],
            value: q.value,
            error: q.abs_error,
        });
    }
    loop {
        let total: f64 = intervals.iter().map(|i| i.value).sum();
        let err: f64 = intervals.iter().map(|i| i.error).sum();
        if !total.is_finite() {
            return Err(Error::Numerical(
                "quadrature produced a non-finite value (divergent or invalid integrand)".into(),
            ));
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(QuadValue {
                value: total,
                abs_error: err,
            });
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Numerical(format!(
                "quadrature did not converge: {} intervals, value {:.6e}, error {:.3e}",
                intervals.len(),
                total,
                err
            )));
        }
        let mut worst = 0;
        for (i, iv) in intervals.iter().enumerate() {
            if iv.error > intervals[worst].error
                || (iv.error == intervals[worst].error && iv.a < intervals[worst].a)
            {
                worst = i;
            }
        }
        let Interval { a, b, .. } = intervals[worst];
        let mid = 0.5 * (a + b);
        if !(a < mid && mid < b) {
            // The worst interval is at rounding resolution and the tolerance
            // is still unmet: further refinement cannot help.
            return Err(Error::Numerical(format!(
                "quadrature stalled at rounding resolution near {a:.6e} \
                 with error {:.3e}",
                intervals[worst].error
            )));
        }
        let left = gk15(&f, a, mid);
        let right = gk15(&f, mid, b);
        intervals[worst] = Interval {
            a,
            b: mid,
            value: left.value,
            error: left.abs_error,
        };
        intervals.push(Interval {
            a: mid,
            b,
            value: right.value,
            error: right.abs_error,
        });
    }
}

static GL_CACHE: Lazy<Mutex<HashMap<usize, &'static [(f64, f64)]>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Gauss–Legendre nodes and weights on `[-1, 1]`, cached per order.
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    assert!(n >= 1 && n <= 256, "unsupported Gauss-Legendre order {n}");
    let mut cache = GL_CACHE.lock().unwrap();
    if let Some(table) = cache.get(&n) {
        return table;
    }
    let mut table = Vec::with_capacity(n);
    for k in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        table.push((x, w));
    }
    table.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let leaked: &'static [(f64, f64)] = Box::leak(table.into_boxed_slice());
    cache.insert(n, leaked);
    leaked
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `∫_{r_lo}^{r_hi} r^{β-1} (-ln r)^{-b} dr` for `0 <= r_lo < r_hi`,
/// with `r_hi < 1` required whenever `b != 0`.
///
/// Closed forms: `b = 0` gives `(r_hi^β - r_lo^β)/β`; `β = 0, b > 1` gives
/// `((-ln r_hi)^{1-b} - (-ln r_lo)^{1-b})/(b-1)`. The remaining cases use the
/// substitution `u = -ln r` and adaptive quadrature of `e^{-βu} u^{-b}`.
/// Returns `+∞` when the integral diverges at `r = 0` (β = 0, b <= 1,
/// r_lo = 0), so callers can flag non-integrable declared singularities.
pub fn radial_power_log(beta: f64, b: f64, r_lo: f64, r_hi: f64) -> Result<f64> {
    if !(0.0..).contains(&r_lo) || !(r_lo < r_hi) {
        return Err(Error::Domain(format!(
            "bad radial interval [{r_lo}, {r_hi}]"
        )));
    }
    if beta < 0.0 {
        return Err(Error::Domain(format!("radial exponent β-1 below -1: β={beta}")));
    }
    if b != 0.0 && r_hi >= 1.0 {
        return Err(Error::Domain(format!(
            "log-weighted radial integral needs r_hi < 1, got {r_hi}"
        )));
    }
    if b == 0.0 {
        if beta == 0.0 {
            return Ok(if r_lo == 0.0 {
                f64::INFINITY
            } else {
                (r_hi / r_lo).ln()
            });
        }
        return Ok((powf_or_zero(r_hi, beta) - powf_or_zero(r_lo, beta)) / beta);
    }
    let u_hi = -r_hi.ln(); // > 0
    if beta == 0.0 {
        if r_lo == 0.0 {
            return Ok(if b > 1.0 {
                u_hi.powf(1.0 - b) / (b - 1.0)
            } else {
                f64::INFINITY
            });
        }
        let u_lo = -r_lo.ln();
        if (b - 1.0).abs() < 1e-12 {
            return Ok((u_lo.ln() - u_hi.ln()) / 1.0);
        }
        return Ok((u_hi.powf(1.0 - b) - u_lo.powf(1.0 - b)) / (b - 1.0));
    }
    // β > 0, b != 0: ∫_{u_hi}^{u_lo} e^{-βu} u^{-b} du, factored to avoid underflow.
    let u_lo = if r_lo == 0.0 { f64::INFINITY } else { -r_lo.ln() };
    let prefactor = (-beta * u_hi).exp();
    if prefactor == 0.0 {
        return Ok(0.0);
    }
    // Effective upper limit: past the polynomial hump (for b < 0) plus enough
    // e-foldings that the truncated tail is below 1e-18 of the peak.
    let hump = if b < 0.0 { (-b) / beta } else { 0.0 };
    let mut v_max = (hump - u_hi).max(0.0) + 46.0 / beta;
    if b < 0.0 {
        v_max += (-b) * ((1.0 + (u_hi + v_max) / u_hi.max(1.0)).ln()) / beta;
    }
    let v_end = if u_lo.is_finite() {
        (u_lo - u_hi).min(v_max)
    } else {
        v_max
    };
    if v_end <= 0.0 {
        return Ok(0.0);
    }
    let g = |v: f64| (-beta * v).exp() * (u_hi + v).powf(-b);
    let q = integrate(g, 0.0, v_end, Tolerance::rel(1e-13))?;
    Ok(prefactor * q.value)
}

fn powf_or_zero(r: f64, beta: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r.powf(beta)
    }
}
