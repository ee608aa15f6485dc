use super::{Grid, ScalarField, VectorField};
use crate::error::{NpeError, Result};

/// First derivative along one axis of the line `f(0..n)` at position `k`.
/// Centred inside, second-order one-sided at the ends.
#[inline]
fn d1(f: impl Fn(usize) -> f64, k: usize, n: usize, h: f64) -> f64 {
    if k == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
    } else if k + 1 == n {
        (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h)
    } else {
        (f(k + 1) - f(k - 1)) / (2.0 * h)
    }
}

/// Second derivative along one axis. The end stencils are one-sided and only
/// first order when the line has three nodes.
#[inline]
fn d2(f: impl Fn(usize) -> f64, k: usize, n: usize, h: f64) -> f64 {
    let h2 = h * h;
    if k == 0 {
        if n >= 4 {
            (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / h2
        } else {
            (f(0) - 2.0 * f(1) + f(2)) / h2
        }
    } else if k + 1 == n {
        if n >= 4 {
            (2.0 * f(n - 1) - 5.0 * f(n - 2) + 4.0 * f(n - 3) - f(n - 4)) / h2
        } else {
            (f(n - 1) - 2.0 * f(n - 2) + f(n - 3)) / h2
        }
    } else {
        (f(k - 1) - 2.0 * f(k) + f(k + 1)) / h2
    }
}

#[inline]
pub(crate) fn ddx(f: &ScalarField, i: usize, j: usize) -> f64 {
    let g = f.grid();
    let row = &f.values()[j * g.nx()..(j + 1) * g.nx()];
    d1(|k| row[k], i, g.nx(), g.hx())
}

#[inline]
pub(crate) fn ddy(f: &ScalarField, i: usize, j: usize) -> f64 {
    let g = f.grid();
    let v = f.values();
    let nx = g.nx();
    d1(|k| v[k * nx + i], j, g.ny(), g.hy())
}

/// Second-order finite-difference gradient.
pub fn gradient(f: &ScalarField) -> VectorField {
    let g = *f.grid();
    let mut gx = Vec::with_capacity(g.len());
    let mut gy = Vec::with_capacity(g.len());
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            gx.push(ddx(f, i, j));
            gy.push(ddy(f, i, j));
        }
    }
    VectorField {
        x: ScalarField::from_values_unchecked(g, gx),
        y: ScalarField::from_values_unchecked(g, gy),
    }
}

/// `(-df/dy, df/dx)` with the same stencils as [`gradient`].
pub fn perp_gradient(f: &ScalarField) -> VectorField {
    let VectorField { x, y } = gradient(f);
    VectorField {
        x: y.map(|v| -v),
        y: x,
    }
}

/// Five-point Laplacian.
///
/// Boundary nodes get one-sided second differences; treat those values as
/// untrusted, they are only there so the field is defined everywhere.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let v = f.values();
    let mut out = Vec::with_capacity(g.len());
    for j in 0..ny {
        for i in 0..nx {
            let row = &v[j * nx..(j + 1) * nx];
            let fxx = d2(|k| row[k], i, nx, g.hx());
            let fyy = d2(|k| v[k * nx + i], j, ny, g.hy());
            out.push(fxx + fyy);
        }
    }
    ScalarField::from_values_unchecked(g, out)
}

/// `dvx/dx + dvy/dy` with the gradient stencils.
pub fn divergence(v: &VectorField) -> ScalarField {
    let g = *v.grid();
    let mut out = Vec::with_capacity(g.len());
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            out.push(ddx(&v.x, i, j) + ddy(&v.y, i, j));
        }
    }
    ScalarField::from_values_unchecked(g, out)
}

/// Scalar curl `dvy/dx - dvx/dy`.
pub fn curl(v: &VectorField) -> ScalarField {
    let g = *v.grid();
    let mut out = Vec::with_capacity(g.len());
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            out.push(ddx(&v.y, i, j) - ddy(&v.x, i, j));
        }
    }
    ScalarField::from_values_unchecked(g, out)
}

/// Trapezoidal integral of `f` over the rectangle.
pub fn integrate(f: &ScalarField) -> f64 {
    integrate_nodes(f.grid(), |k| f.values()[k])
}

pub(crate) fn integrate_nodes(g: &Grid, f: impl Fn(usize) -> f64) -> f64 {
    let mut total = 0.0;
    for j in 0..g.ny() {
        let mut row = 0.0;
        for i in 0..g.nx() {
            let w = if i == 0 || i + 1 == g.nx() { 0.5 } else { 1.0 };
            row += w * f(g.idx(i, j));
        }
        let w = if j == 0 || j + 1 == g.ny() { 0.5 } else { 1.0 };
        total += w * row;
    }
    total * g.hx() * g.hy()
}

/// `L^p` norm by trapezoidal quadrature; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(NpeError::InvalidExponent(p));
    }
    let m = f.max_abs();
    if p.is_infinite() || m == 0.0 {
        return Ok(m);
    }
    // Normalising by the max keeps |f|^p representable for large p.
    let v = f.values();
    let s = integrate_nodes(f.grid(), |k| {
        let r = v[k].abs() / m;
        if p == 2.0 {
            r * r
        } else {
            r.powf(p)
        }
    });
    Ok(m * s.powf(1.0 / p))
}

/// Locates `x` in `[0, l]` with tolerance, returning the clamped coordinate.
#[inline]
fn clamp_coord(x: f64, l: f64, tol: f64) -> Option<f64> {
    if x < -tol || x > l + tol || x.is_nan() {
        None
    } else {
        Some(x.clamp(0.0, l))
    }
}

fn locate(g: &Grid, x: f64, y: f64) -> Result<(f64, f64)> {
    let tol = 1e-12 * g.hx().max(g.hy());
    match (clamp_coord(x, g.lx(), tol), clamp_coord(y, g.ly(), tol)) {
        (Some(cx), Some(cy)) => Ok((cx, cy)),
        _ => Err(NpeError::DomainViolation { x, y }),
    }
}

/// Cell index and local coordinate in `[0, 1]` along one axis.
#[inline]
fn cell(x: f64, h: f64, n: usize) -> (usize, f64) {
    let mut s = x / h;
    let r = s.round();
    if (s - r).abs() <= 4.0 * f64::EPSILON * r {
        s = r;
    }
    let i = (s.floor() as usize).min(n - 2);
    (i, (s - i as f64).clamp(0.0, 1.0))
}

/// Bilinear interpolation at `(x, y)`. Points may sit outside the closed
/// domain by at most `1e-12 * max(hx, hy)`; they are clamped onto it.
pub fn interpolate(f: &ScalarField, x: f64, y: f64) -> Result<f64> {
    let g = f.grid();
    let (x, y) = locate(g, x, y)?;
    Ok(bilinear_clamped(f, x, y))
}

/// Bilinear interpolation for a point already known to be inside the domain.
#[inline]
pub(crate) fn bilinear_clamped(f: &ScalarField, x: f64, y: f64) -> f64 {
    let g = f.grid();
    let (i, s) = cell(x, g.hx(), g.nx());
    let (j, t) = cell(y, g.hy(), g.ny());
    let v = f.values();
    let k = g.idx(i, j);
    let nx = g.nx();
    let (f00, f10, f01, f11) = (v[k], v[k + 1], v[k + nx], v[k + nx + 1]);
    if s == 0.0 && t == 0.0 {
        return f00;
    }
    let v = (1.0 - t) * ((1.0 - s) * f00 + s * f10) + t * ((1.0 - s) * f01 + s * f11);
    // Rounding may push the convex combination an ulp past the corner range.
    let lo = f00.min(f10).min(f01.min(f11));
    let hi = f00.max(f10).max(f01.max(f11));
    v.clamp(lo, hi)
}

/// Cubic Lagrange weights for nodes `0..4` at local coordinate `xi` in `[0, 3]`.
#[inline]
fn cubic_weights(xi: f64) -> [f64; 4] {
    let (a, b, c, d) = (xi, xi - 1.0, xi - 2.0, xi - 3.0);
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

#[inline]
fn cubic_stencil(x: f64, h: f64, n: usize) -> (usize, [f64; 4]) {
    let (i, s) = cell(x, h, n);
    let start = i.saturating_sub(1).min(n - 4);
    (start, cubic_weights(i as f64 - start as f64 + s))
}

/// Tensor-product cubic Lagrange interpolation (not monotone). Falls back to
/// bilinear when an axis has fewer than four nodes.
pub fn interpolate_bicubic(f: &ScalarField, x: f64, y: f64) -> Result<f64> {
    let g = f.grid();
    let (x, y) = locate(g, x, y)?;
    Ok(bicubic_clamped(f, x, y))
}

#[inline]
pub(crate) fn bicubic_clamped(f: &ScalarField, x: f64, y: f64) -> f64 {
    let g = f.grid();
    if g.nx() < 4 || g.ny() < 4 {
        return bilinear_clamped(f, x, y);
    }
    let (i0, wx) = cubic_stencil(x, g.hx(), g.nx());
    let (j0, wy) = cubic_stencil(y, g.hy(), g.ny());
    let v = f.values();
    let mut acc = 0.0;
    for (b, wyb) in wy.iter().enumerate() {
        let row = &v[g.idx(i0, j0 + b)..g.idx(i0, j0 + b) + 4];
        let r = wx[0] * row[0] + wx[1] * row[1] + wx[2] * row[2] + wx[3] * row[3];
        acc += wyb * r;
    }
    acc
}
