//! Dirichlet heat kernel of a rectangle and the numerical checks of its
//! Gaussian upper bound and smoothing rates.
//!
//! The kernel factorises into one-dimensional kernels
//! `H_L(x, y, t) = (2/L) sum_m sin(m pi x/L) sin(m pi y/L) exp(-(m pi/L)^2 t)`.
//! Tiny values are handled in log space through the equivalent image sum
//! `sum_n [G(x - y + 2nL) - G(x + y + 2nL)]` with the free Gaussian `G`.

use std::f64::consts::PI;

use crate::error::{NpeError, Result};
use crate::mesh::{lp_norm, Grid, ScalarField};

/// Required bound on the neglected series tail.
pub const TAIL_TOLERANCE: f64 = 1e-14;

/// Rectangle, truncation and derivative order for kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    lx: f64,
    ly: f64,
    /// Fixed modes per axis; `None` picks them from `t`.
    modes: Option<usize>,
    order: u8,
}

impl KernelSpec {
    pub fn new(lx: f64, ly: f64, modes: Option<usize>, order: u8) -> Result<Self> {
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(NpeError::InvalidGrid(format!(
                "kernel rectangle must have positive sides, got {lx} x {ly}"
            )));
        }
        if let Some(m) = modes {
            if m < 8 {
                return Err(NpeError::Validation(format!("M >= 8 violated (M = {m})")));
            }
        }
        if order > 1 {
            return Err(NpeError::Validation(format!(
                "derivative order must be 0 or 1, got {order}"
            )));
        }
        Ok(Self {
            lx,
            ly,
            modes,
            order,
        })
    }

    /// Unit square, adaptive truncation.
    pub fn unit(order: u8) -> Self {
        Self {
            lx: 1.0,
            ly: 1.0,
            modes: None,
            order,
        }
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    fn longest(&self) -> f64 {
        self.lx.max(self.ly)
    }

    /// Modes per axis used at time `t`.
    pub fn modes_at(&self, t: f64) -> usize {
        self.modes.unwrap_or_else(|| adaptive_modes(self.longest(), t))
    }

    fn checked_modes(&self, t: f64) -> Result<usize> {
        if !(t.is_finite() && t > 0.0) {
            return Err(NpeError::InvalidTime(t));
        }
        let m = self.modes_at(t);
        let l = self.longest();
        let tail = (-PI * PI * (m * m) as f64 * t / (l * l)).exp();
        if tail >= TAIL_TOLERANCE {
            return Err(NpeError::Truncation { modes: m, tail });
        }
        Ok(m)
    }

    fn check_point(&self, p: (f64, f64)) -> Result<()> {
        let tol = 1e-12 * self.longest();
        if p.0 < -tol || p.0 > self.lx + tol || p.1 < -tol || p.1 > self.ly + tol {
            return Err(NpeError::DomainViolation { x: p.0, y: p.1 });
        }
        Ok(())
    }
}

/// Modes needed for a series tail below [`TAIL_TOLERANCE`] at time `t`.
pub fn adaptive_modes(l: f64, t: f64) -> usize {
    (l * (14.0 * std::f64::consts::LN_10 / (PI * PI * t)).sqrt()).ceil() as usize + 8
}

/// One-dimensional kernel and its derivative in the first argument.
fn series_1d(l: f64, x: f64, y: f64, t: f64, modes: usize) -> (f64, f64) {
    let (mut v, mut d) = (0.0, 0.0);
    for m in 1..=modes {
        let k = m as f64 * PI / l;
        let w = (-k * k * t).exp();
        if w == 0.0 {
            break;
        }
        let sy = (k * y).sin();
        v += (k * x).sin() * sy * w;
        d += k * (k * x).cos() * sy * w;
    }
    (2.0 / l * v, 2.0 / l * d)
}

/// `H(x, t; y)` by the truncated eigenfunction series.
pub fn kernel_eval(spec: &KernelSpec, x: (f64, f64), y: (f64, f64), t: f64) -> Result<f64> {
    let m = spec.checked_modes(t)?;
    spec.check_point(x)?;
    spec.check_point(y)?;
    let (hx, _) = series_1d(spec.lx, x.0, y.0, t, m);
    let (hy, _) = series_1d(spec.ly, x.1, y.1, t, m);
    Ok(hx * hy)
}

/// Gradient of `H(x, t; y)` with respect to `x`.
pub fn kernel_gradient(
    spec: &KernelSpec,
    x: (f64, f64),
    y: (f64, f64),
    t: f64,
) -> Result<(f64, f64)> {
    let m = spec.checked_modes(t)?;
    spec.check_point(x)?;
    spec.check_point(y)?;
    let (hx, dx) = series_1d(spec.lx, x.0, y.0, t, m);
    let (hy, dy) = series_1d(spec.ly, x.1, y.1, t, m);
    Ok((dx * hy, hx * dy))
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|&a| (a - m).exp()).sum::<f64>().ln()
}

/// `log |P - N|` for `P, N` given in log space.
fn log_difference(p: f64, n: f64) -> f64 {
    let (hi, lo) = if p >= n { (p, n) } else { (n, p) };
    hi + (-(lo - hi).exp()).ln_1p()
}

/// `log |.|` of the one-dimensional kernel (`deriv = false`) or of its
/// derivative.
fn log_kernel_1d(l: f64, x: f64, y: f64, t: f64, modes: usize, deriv: bool) -> f64 {
    if t * PI * PI / (l * l) > 1.0 {
        let (v, d) = series_1d(l, x, y, t, modes);
        return if deriv { d } else { v }.abs().ln();
    }
    let reach = ((t * 160.0).sqrt() / (2.0 * l)).ceil() as i64 + 2;
    let log_norm = -0.5 * (4.0 * PI * t).ln();
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for n in -reach..=reach {
        let shift = 2.0 * n as f64 * l;
        for (r, image_sign) in [(x - y + shift, 1.0), (x + y + shift, -1.0)] {
            let mut log = log_norm - r * r / (4.0 * t);
            let mut sign = image_sign;
            if deriv {
                // d/dx G(r) = -r / (2t) G(r)
                if r == 0.0 {
                    continue;
                }
                log += (r.abs() / (2.0 * t)).ln();
                sign *= -r.signum();
            }
            if sign > 0.0 {
                pos.push(log);
            } else {
                neg.push(log);
            }
        }
    }
    log_difference(log_sum_exp(&pos), log_sum_exp(&neg))
}

/// `log |D^k H(x, t; y)|` for the order in `spec`, accurate where the value
/// itself underflows.
pub fn log_kernel(spec: &KernelSpec, x: (f64, f64), y: (f64, f64), t: f64) -> Result<f64> {
    let m = spec.checked_modes(t)?;
    spec.check_point(x)?;
    spec.check_point(y)?;
    let hx = log_kernel_1d(spec.lx, x.0, y.0, t, m, false);
    let hy = log_kernel_1d(spec.ly, x.1, y.1, t, m, false);
    if spec.order == 0 {
        return Ok(hx + hy);
    }
    let dx = log_kernel_1d(spec.lx, x.0, y.0, t, m, true);
    let dy = log_kernel_1d(spec.ly, x.1, y.1, t, m, true);
    // |grad H| = sqrt(a^2 + b^2) with log a, log b known.
    let (a, b) = (dx + hy, hx + dy);
    let (big, small) = (a.max(b), a.min(b));
    if big == f64::NEG_INFINITY {
        return Ok(big);
    }
    Ok(big + 0.5 * (2.0 * (small - big)).exp().ln_1p())
}

/// `int H(x, t; y) dy`, the mass remaining at `x`.
pub fn kernel_mass(spec: &KernelSpec, x: (f64, f64), t: f64) -> Result<f64> {
    let m = spec.checked_modes(t)?;
    spec.check_point(x)?;
    let axis = |l: f64, x: f64| {
        (1..=m)
            .step_by(2)
            .map(|k| {
                let w = k as f64 * PI / l;
                (w * x).sin() * (-w * w * t).exp() * 4.0 / (k as f64 * PI)
            })
            .sum::<f64>()
    };
    Ok(axis(spec.lx, x.0) * axis(spec.ly, x.1))
}

/// Radical-inverse sequence in the given base.
fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// One quasi-random sample of the Gaussian bound check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSample {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub t: f64,
    pub ratio: f64,
}

impl BoundSample {
    pub fn distance(&self) -> f64 {
        (self.x.0 - self.y.0).hypot(self.x.1 - self.y.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub samples: Vec<BoundSample>,
    /// Largest ratio over all samples.
    pub max_ratio: f64,
    /// Largest ratio over the first half of the samples.
    pub half_max_ratio: f64,
    pub argmax: usize,
    pub finite: bool,
    /// Whether doubling the sample count raised the maximum by at most 50%.
    pub stable: bool,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.finite && self.stable
    }
}

/// Ratio `|D^k H| t^((2+k)/2) exp(|x-y|^2 / 16t)` at one point.
pub fn gaussian_ratio(spec: &KernelSpec, x: (f64, f64), y: (f64, f64), t: f64) -> Result<f64> {
    let log_h = log_kernel(spec, x, y, t)?;
    let r2 = (x.0 - y.0).powi(2) + (x.1 - y.1).powi(2);
    let k = spec.order as f64;
    Ok((log_h + 0.5 * (2.0 + k) * t.ln() + r2 / (16.0 * t)).exp())
}

pub fn verify_gaussian_bound(spec: &KernelSpec, sample_count: usize) -> Result<BoundReport> {
    verify_gaussian_bound_seeded(spec, sample_count, 0)
}

/// Gaussian bound check over Halton samples starting at index `seed + 1`,
/// with `t = 10^(-4 + 4h)`.
pub fn verify_gaussian_bound_seeded(
    spec: &KernelSpec,
    sample_count: usize,
    seed: u64,
) -> Result<BoundReport> {
    if sample_count < 100 {
        return Err(NpeError::Validation(format!(
            "sample_count >= 100 violated ({sample_count})"
        )));
    }
    let mut samples = Vec::with_capacity(sample_count);
    for s in 0..sample_count as u64 {
        let i = seed + s + 1;
        let x = (halton(i, 2) * spec.lx, halton(i, 3) * spec.ly);
        let y = (halton(i, 5) * spec.lx, halton(i, 7) * spec.ly);
        let t = 10f64.powf(-4.0 + 4.0 * halton(i, 11));
        let ratio = gaussian_ratio(spec, x, y, t)?;
        samples.push(BoundSample { x, y, t, ratio });
    }
    let max_of = |s: &[BoundSample]| s.iter().map(|p| p.ratio).fold(0.0, f64::max);
    let max_ratio = max_of(&samples);
    let half_max_ratio = max_of(&samples[..sample_count / 2]);
    let argmax = samples
        .iter()
        .position(|p| p.ratio == max_ratio)
        .unwrap_or(0);
    let finite = samples.iter().all(|p| p.ratio.is_finite());
    Ok(BoundReport {
        stable: finite && max_ratio <= 1.5 * half_max_ratio,
        samples,
        max_ratio,
        half_max_ratio,
        argmax,
        finite,
    })
}

/// Dense `rows x modes` table `f(k_m * x_i)` with `k_m = m pi / L`.
fn table(n: usize, l: f64, h: f64, modes: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * modes);
    for i in 0..n {
        let x = if i + 1 == n { l } else { i as f64 * h };
        for m in 1..=modes {
            let k = m as f64 * PI / l;
            out.push(f(k, x));
        }
    }
    out
}

/// Evaluates `sum_{m,n} a[n][m] X[i][m] Y[j][n]` at all nodes.
fn separable(a: &[f64], xt: &[f64], yt: &[f64], nx: usize, ny: usize, mx: usize, my: usize) -> Vec<f64> {
    // b[n][i] = sum_m a[n][m] X[i][m]
    let mut b = vec![0.0; my * nx];
    for n in 0..my {
        let row = &a[n * mx..(n + 1) * mx];
        for i in 0..nx {
            let xr = &xt[i * mx..(i + 1) * mx];
            b[n * nx + i] = row.iter().zip(xr).map(|(p, q)| p * q).sum();
        }
    }
    let mut out = vec![0.0; ny * nx];
    for j in 0..ny {
        let yr = &yt[j * my..(j + 1) * my];
        let dst = &mut out[j * nx..(j + 1) * nx];
        for (n, &w) in yr.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (d, s) in dst.iter_mut().zip(&b[n * nx..(n + 1) * nx]) {
                *d += w * s;
            }
        }
    }
    out
}

/// Sine coefficients of the node data, boundary values treated as zero.
struct SineModes {
    grid: Grid,
    mx: usize,
    my: usize,
    coef: Vec<f64>,
    sx: Vec<f64>,
    sy: Vec<f64>,
}

impl SineModes {
    fn new(c0: &ScalarField) -> Self {
        let g = *c0.grid();
        let (nx, ny) = (g.nx(), g.ny());
        let (mx, my) = (nx - 2, ny - 2);
        let sx = table(nx, g.lx(), g.hx(), mx, |k, x| (k * x).sin());
        let sy = table(ny, g.ly(), g.hy(), my, |k, y| (k * y).sin());
        // Discrete orthogonality over interior nodes: sum_i sin sin = (N+1)/2 delta.
        let mut inner = c0.clone();
        crate::mesh::BoundaryTrace::zero(g).apply(&mut inner);
        let v = inner.values();
        let mut tmp = vec![0.0; ny * mx];
        for j in 0..ny {
            for m in 0..mx {
                tmp[j * mx + m] = (0..nx).map(|i| v[j * nx + i] * sx[i * mx + m]).sum();
            }
        }
        let scale = 4.0 / ((nx - 1) * (ny - 1)) as f64;
        let mut coef = vec![0.0; my * mx];
        for n in 0..my {
            for m in 0..mx {
                coef[n * mx + m] =
                    scale * (0..ny).map(|j| tmp[j * mx + m] * sy[j * my + n]).sum::<f64>();
            }
        }
        Self {
            grid: g,
            mx,
            my,
            coef,
            sx,
            sy,
        }
    }

    fn decayed(&self, t: f64) -> Vec<f64> {
        let g = self.grid;
        let mut a = self.coef.clone();
        for n in 0..self.my {
            let ky = (n + 1) as f64 * PI / g.ly();
            for m in 0..self.mx {
                let kx = (m + 1) as f64 * PI / g.lx();
                a[n * self.mx + m] *= (-(kx * kx + ky * ky) * t).exp();
            }
        }
        a
    }

    fn value(&self, t: f64) -> ScalarField {
        let g = self.grid;
        let a = self.decayed(t);
        let v = separable(&a, &self.sx, &self.sy, g.nx(), g.ny(), self.mx, self.my);
        ScalarField::from_values_unchecked(g, v)
    }

    fn gradient_norm_max(&self, t: f64) -> f64 {
        let g = self.grid;
        let a = self.decayed(t);
        let cx = table(g.nx(), g.lx(), g.hx(), self.mx, |k, x| k * (k * x).cos());
        let cy = table(g.ny(), g.ly(), g.hy(), self.my, |k, y| k * (k * y).cos());
        let ex = separable(&a, &cx, &self.sy, g.nx(), g.ny(), self.mx, self.my);
        let ey = separable(&a, &self.sx, &cy, g.nx(), g.ny(), self.mx, self.my);
        ex.iter().zip(&ey).map(|(p, q)| p.hypot(*q)).fold(0.0, f64::max)
    }
}

/// Heat semigroup at time `t` applied to the sine interpolant of the node
/// data (boundary values taken as zero), evaluated at the nodes.
pub fn heat_semigroup(c0: &ScalarField, t: f64) -> Result<ScalarField> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(NpeError::InvalidTime(t));
    }
    Ok(SineModes::new(c0).value(t))
}

/// Weighted sup norms of the semigroup along a list of times.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub times: Vec<f64>,
    /// `t^(1/p) |e(t)|_inf`.
    pub value_weighted: Vec<f64>,
    /// `t^(1/2 + 1/p) |grad e(t)|_inf`.
    pub gradient_weighted: Vec<f64>,
    pub value_sup: f64,
    pub gradient_sup: f64,
    pub value_bounded: bool,
    pub gradient_bounded: bool,
}

impl RateReport {
    pub fn passed(&self) -> bool {
        self.value_bounded && self.gradient_bounded
    }
}

/// True when the sequence never decreases and ends at least twice its start.
pub fn grows(seq: &[f64]) -> bool {
    seq.len() >= 2
        && seq.windows(2).all(|w| w[1] >= w[0])
        && seq[seq.len() - 1] >= 2.0 * seq[0]
        && seq[seq.len() - 1] > 0.0
}

fn check_rate_inputs(p: f64, times: &[f64]) -> Result<()> {
    if !(p > 2.0) {
        return Err(NpeError::InvalidExponent(p));
    }
    if times.is_empty() {
        return Err(NpeError::Validation("time list is empty".into()));
    }
    for &t in times {
        if !(t > 0.0 && t <= 0.1) {
            return Err(NpeError::InvalidTime(t));
        }
    }
    Ok(())
}

fn rate_report(times: &[f64], value: Vec<f64>, gradient: Vec<f64>) -> RateReport {
    RateReport {
        times: times.to_vec(),
        value_sup: value.iter().copied().fold(0.0, f64::max),
        gradient_sup: gradient.iter().copied().fold(0.0, f64::max),
        value_bounded: value.iter().all(|v| v.is_finite()) && !grows(&value),
        gradient_bounded: gradient.iter().all(|v| v.is_finite()) && !grows(&gradient),
        value_weighted: value,
        gradient_weighted: gradient,
    }
}

/// Smoothing weights for fixed initial data over `times` (each in `(0, 0.1]`).
pub fn verify_smoothing_rates(c0: &ScalarField, p: f64, times: &[f64]) -> Result<RateReport> {
    check_rate_inputs(p, times)?;
    if c0.min() < 0.0 {
        return Err(NpeError::Validation("c0 >= 0 violated".into()));
    }
    let modes = SineModes::new(c0);
    let (mut value, mut gradient) = (Vec::new(), Vec::new());
    for &t in times {
        value.push(t.powf(1.0 / p) * modes.value(t).max_abs());
        gradient.push(t.powf(0.5 + 1.0 / p) * modes.gradient_norm_max(t));
    }
    Ok(rate_report(times, value, gradient))
}

/// Compact smooth bump of radius `r` at the centre of the grid, scaled to
/// unit `L^p` norm.
pub fn sharp_bump(grid: Grid, p: f64, r: f64) -> Result<ScalarField> {
    let (cx, cy) = (grid.lx() / 2.0, grid.ly() / 2.0);
    let f = ScalarField::from_fn(grid, |x, y| {
        let q = ((x - cx).powi(2) + (y - cy).powi(2)) / (r * r);
        if q < 1.0 {
            (1.0 - q).powi(3)
        } else {
            0.0
        }
    });
    let norm = lp_norm(&f, p)?;
    if norm == 0.0 {
        return Err(NpeError::Validation(format!(
            "bump radius {r} is below the grid resolution"
        )));
    }
    Ok(f.scaled(1.0 / norm))
}

/// Smoothing weights for the family whose member at time `t` is the unit
/// `L^p` bump of radius `kappa sqrt(t)`.
pub fn verify_sharp_family(grid: Grid, p: f64, times: &[f64], kappa: f64) -> Result<RateReport> {
    check_rate_inputs(p, times)?;
    let (mut value, mut gradient) = (Vec::new(), Vec::new());
    for &t in times {
        let modes = SineModes::new(&sharp_bump(grid, p, kappa * t.sqrt())?);
        value.push(t.powf(1.0 / p) * modes.value(t).max_abs());
        gradient.push(t.powf(0.5 + 1.0 / p) * modes.gradient_norm_max(t));
    }
    Ok(rate_report(times, value, gradient))
}
