//! Exact pairing of the 1-d heat kernels against piecewise-linear grid data.
//!
//! A time-step application of `G(τ)` factorizes into 1-d convolutions:
//! plain Gaussian along tangential axes, image-difference kernel along the
//! normal axis. Each 1-d convolution is computed cell by cell against the
//! piecewise-linear interpolant of the grid values. Cells wider than a
//! small fraction of the kernel width use exact erf/exp moments; narrower
//! cells switch to a midpoint rule evaluated through the stable
//! `Γ(1 - e^{-xy/τ})` product, because erf differences lose all relative
//! accuracy there while the data under heavy grading can be enormous.

use crate::kernels::{gamma_profile, one_minus_exp_neg};
use rayon::prelude::*;
use std::sync::Arc;

/// Below this cell-width/kernel-width ratio the midpoint branch is used.
const MIDPOINT_SWITCH: f64 = 1e-4;

/// `∫_a^b Γ_1(x-y, τ) dy` and `∫_a^b (y-a) Γ_1(x-y, τ) dy`.
#[inline]
fn cell_moments(x: f64, a: f64, b: f64, tau: f64) -> (f64, f64) {
    let s = 2.0 * tau.sqrt();
    let i0 = 0.5 * (libm::erf((x - a) / s) - libm::erf((x - b) / s));
    let i1 = (x - a) * i0
        + 2.0 * tau
            * (gamma_profile(1, (x - a) * (x - a), tau)
                - gamma_profile(1, (x - b) * (x - b), tau));
    (i0, i1)
}

/// Per-cell weights `(w_left, w_right)` of the pairing at target `x`
/// against the linear hat values on `[a, b]`, for the plain Gaussian.
#[inline]
fn plain_cell_weights(x: f64, a: f64, b: f64, tau: f64) -> (f64, f64) {
    let h = b - a;
    if h < MIDPOINT_SWITCH * 2.0 * tau.sqrt() {
        let mid = 0.5 * (a + b);
        let g = gamma_profile(1, (x - mid) * (x - mid), tau);
        let half = 0.5 * g * h;
        (half, half)
    } else {
        let (i0, i1) = cell_moments(x, a, b, tau);
        let slope = i1 / h;
        (i0 - slope, slope)
    }
}

/// Same for the image-difference (Dirichlet) kernel
/// `G_1(x,y,τ) = Γ_1(x-y,τ) - Γ_1(x+y,τ)`, `x, y > 0`.
#[inline]
fn image_cell_weights(x: f64, a: f64, b: f64, tau: f64) -> (f64, f64) {
    let h = b - a;
    if h < MIDPOINT_SWITCH * 2.0 * tau.sqrt() {
        let mid = 0.5 * (a + b);
        // stable product form, no cancellation for x·mid/τ small
        let g = gamma_profile(1, (x - mid) * (x - mid), tau) * one_minus_exp_neg(x * mid / tau);
        let half = 0.5 * g * h;
        (half, half)
    } else {
        let (i0p, i1p) = cell_moments(x, a, b, tau);
        let (i0r, i1r) = cell_moments(-x, a, b, tau);
        let slope = (i1p - i1r) / h;
        ((i0p - i0r) - slope, slope)
    }
}

fn accumulate_row(row: &mut [f64], nodes: &[f64], x: f64, tau: f64, images: bool) {
    let m = nodes.len();
    if images {
        // ghost cell [0, nodes[0]] with zero left value
        let (_, w_right) = image_cell_weights(x, 0.0, nodes[0], tau);
        row[0] += w_right;
        for j in 0..m - 1 {
            let (wl, wr) = image_cell_weights(x, nodes[j], nodes[j + 1], tau);
            row[j] += wl;
            row[j + 1] += wr;
        }
    } else {
        for j in 0..m - 1 {
            let (wl, wr) = plain_cell_weights(x, nodes[j], nodes[j + 1], tau);
            row[j] += wl;
            row[j + 1] += wr;
        }
    }
    // Rounding can leave -1e-300-scale entries; the pairing weights are
    // nonnegative analytically and downstream powers require it.
    for w in row.iter_mut() {
        if *w < 0.0 {
            *w = 0.0;
        }
    }
}

/// Pairing weights for one target `x` against the interpolant on `nodes`
/// (positions strictly increasing). With `images`, the data is implicitly
/// zero at `y = 0` and the odd reflection is subtracted.
pub fn pairing_row(nodes: &[f64], x: f64, tau: f64, images: bool) -> Vec<f64> {
    let mut row = vec![0.0; nodes.len()];
    accumulate_row(&mut row, nodes, x, tau, images);
    row
}

/// Dense pairing matrix (row-major, `m x m`) for all grid targets.
pub fn pairing_matrix(nodes: &[f64], tau: f64, images: bool) -> Vec<f64> {
    let m = nodes.len();
    let mut w = vec![0.0; m * m];
    for (i, &x) in nodes.iter().enumerate() {
        accumulate_row(&mut w[i * m..(i + 1) * m], nodes, x, tau, images);
    }
    w
}

/// A one-axis kernel application with rows stored sparsely (each row's
/// support is one contiguous span; for small τ the spans are narrow, so
/// even refined grids cache cheaply). `cache = false` rebuilds rows on
/// each application instead.
pub struct AxisOp {
    nodes: Arc<Vec<f64>>,
    tau: f64,
    images: bool,
    cached: Option<Vec<(usize, Vec<f64>)>>,
}

fn trim_row(row: &[f64]) -> (usize, Vec<f64>) {
    let first = row.iter().position(|&w| w != 0.0).unwrap_or(0);
    let last = row.iter().rposition(|&w| w != 0.0).unwrap_or(0);
    (first, row[first..=last].to_vec())
}

impl AxisOp {
    pub fn new(nodes: Arc<Vec<f64>>, tau: f64, images: bool, cache: bool) -> Self {
        let cached = if cache {
            let rows: Vec<(usize, Vec<f64>)> = (0..nodes.len())
                .into_par_iter()
                .map(|r| {
                    let row = pairing_row(&nodes, nodes[r], tau, images);
                    trim_row(&row)
                })
                .collect();
            Some(rows)
        } else {
            None
        };
        AxisOp {
            nodes,
            tau,
            images,
            cached,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// `out[o, r, i] = Σ_j W[r, j] v[o, j, i]` over an `outer × s × inner`
    /// tensor, parallel over output rows.
    pub fn apply_axis(&self, v: &[f64], out: &mut [f64], outer: usize, inner: usize) {
        let s = self.nodes.len();
        debug_assert_eq!(v.len(), outer * s * inner);
        debug_assert_eq!(out.len(), v.len());
        // Parallelize over the contracted-axis output rows.
        let chunks: Vec<Vec<f64>> = (0..s)
            .into_par_iter()
            .map(|r| {
                let owned;
                let (start, row): (usize, &[f64]) = match &self.cached {
                    Some(rows) => (rows[r].0, &rows[r].1),
                    None => {
                        let full = pairing_row(&self.nodes, self.nodes[r], self.tau, self.images);
                        let (st, trimmed) = trim_row(&full);
                        owned = trimmed;
                        (st, &owned)
                    }
                };
                let mut out_r = vec![0.0; outer * inner];
                for o in 0..outer {
                    let v_block = &v[o * s * inner..(o + 1) * s * inner];
                    let out_block = &mut out_r[o * inner..(o + 1) * inner];
                    for (k, &w) in row.iter().enumerate() {
                        if w == 0.0 {
                            continue;
                        }
                        let src = &v_block[(start + k) * inner..(start + k + 1) * inner];
                        for i in 0..inner {
                            out_block[i] += w * src[i];
                        }
                    }
                }
                out_r
            })
            .collect();
        for (r, out_r) in chunks.iter().enumerate() {
            for o in 0..outer {
                for i in 0..inner {
                    out[(o * s + r) * inner + i] = out_r[o * inner + i];
                }
            }
        }
    }
}

/// Time-integrated kernel-mass weights for the product-integration rule on
/// a final subinterval of length `delta`:
///
/// `W0 = ∫_0^Δ erf(x_N/(2√τ)) dτ`, `W1 = ∫_0^Δ (τ/Δ) erf(x_N/(2√τ)) dτ`.
///
/// Closed forms via the antiderivatives of `erf(k/√τ)` and `τ erf(k/√τ)`
/// with `k = x_N/2`, `q = k/√Δ`:
///
/// `W0 = Δ erf(q) - 2k² erfc(q) + (2k√Δ/√π) e^{-q²}`
/// `Δ W1 = (Δ²/2) erf(q) + (kΔ^{3/2} - 2k³√Δ)/(3√π) e^{-q²} + (2k⁴/3) erfc(q)`
pub fn mass_weights(x_n: f64, delta: f64) -> (f64, f64) {
    let k = 0.5 * x_n;
    let sd = delta.sqrt();
    let q = k / sd;
    let spi = std::f64::consts::PI.sqrt();
    let erf_q = libm::erf(q);
    let erfc_q = libm::erfc(q);
    let gauss = (-q * q).exp();
    let w0 = delta * erf_q - 2.0 * k * k * erfc_q + 2.0 * k * sd / spi * gauss;
    let g = 0.5 * delta * delta * erf_q
        + (k * delta * sd - 2.0 * k.powi(3) * sd) / (3.0 * spi) * gauss
        + 2.0 * k.powi(4) / 3.0 * erfc_q;
    (w0.max(0.0), (g / delta).max(0.0))
}
