//! Vorticity transport along characteristics and velocity recovery from the
//! stream function.
//!
//! The flow is `u = (d theta/dy, -d theta/dx)` with `-Lap theta = omega` and
//! `theta = 0` on the boundary, so the normal velocity vanishes there.

use rayon::prelude::*;

use crate::error::Result;
use crate::mesh::{self, gradient, BoundaryTrace, Grid, ScalarField, VectorField};
use crate::poisson::{EllipticProblem, PoissonSolver};

/// Interpolation used at the feet of characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Monotone; never creates new extrema.
    #[default]
    Bilinear,
    /// Fourth-order accurate, not monotone.
    Bicubic,
}

impl Interpolation {
    pub fn name(self) -> &'static str {
        match self {
            Interpolation::Bilinear => "bilinear",
            Interpolation::Bicubic => "bicubic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bilinear" => Some(Interpolation::Bilinear),
            "bicubic" => Some(Interpolation::Bicubic),
            _ => None,
        }
    }

    #[inline]
    fn eval(self, f: &ScalarField, x: f64, y: f64) -> f64 {
        match self {
            Interpolation::Bilinear => mesh::ops::bilinear_clamped(f, x, y),
            Interpolation::Bicubic => mesh::ops::bicubic_clamped(f, x, y),
        }
    }
}

/// Vorticity with its cached stream function and velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct VorticityState {
    pub omega: ScalarField,
    pub theta: ScalarField,
    pub u: VectorField,
}

impl VorticityState {
    /// Fluid at rest.
    pub fn rest(grid: Grid) -> Self {
        Self {
            omega: ScalarField::zeros(grid),
            theta: ScalarField::zeros(grid),
            u: VectorField::zeros(grid),
        }
    }

    pub fn from_omega(solver: &PoissonSolver, omega: ScalarField) -> Result<Self> {
        let (theta, u) = recover_velocity_with(solver, &omega)?;
        Ok(Self { omega, theta, u })
    }

    /// Starts from a stream function; the boundary values of `theta` are
    /// replaced by zero and the vorticity is its discrete `-Lap`.
    pub fn from_stream(solver: &PoissonSolver, theta: &ScalarField) -> Result<Self> {
        let mut t = theta.clone();
        BoundaryTrace::zero(*t.grid()).apply(&mut t);
        let omega = mesh::laplacian(&t).scaled(-1.0);
        Self::from_omega(solver, omega)
    }
}

/// Velocity `(d theta/dy, -d theta/dx)` of a stream function.
pub fn velocity_from_stream(theta: &ScalarField) -> VectorField {
    let g = gradient(theta);
    VectorField {
        x: g.y,
        y: g.x.scaled(-1.0),
    }
}

/// Solves `-Lap theta = omega`, `theta = 0` on the boundary, and
/// differentiates.
pub fn recover_velocity(omega: &ScalarField) -> Result<(ScalarField, VectorField)> {
    recover_velocity_with(&PoissonSolver::new(*omega.grid()), omega)
}

pub fn recover_velocity_with(
    solver: &PoissonSolver,
    omega: &ScalarField,
) -> Result<(ScalarField, VectorField)> {
    let grid = *omega.grid();
    let theta = solver.solve(&EllipticProblem::new(
        omega.clone(),
        BoundaryTrace::zero(grid),
        1.0,
    )?)?;
    let u = velocity_from_stream(&theta);
    Ok((theta, u))
}

#[inline]
fn clamp_point(g: &Grid, x: f64, y: f64) -> (f64, f64) {
    (x.clamp(0.0, g.lx()), y.clamp(0.0, g.ly()))
}

#[inline]
fn velocity_at(u: &VectorField, x: f64, y: f64) -> (f64, f64) {
    (
        mesh::ops::bilinear_clamped(&u.x, x, y),
        mesh::ops::bilinear_clamped(&u.y, x, y),
    )
}

/// Foot of the characteristic arriving at `p` after `dt`, by the midpoint
/// rule, clamped into the closed domain.
pub fn trace_characteristic(u: &VectorField, p: (f64, f64), dt: f64) -> (f64, f64) {
    let g = *u.grid();
    let (x, y) = clamp_point(&g, p.0, p.1);
    let (a, b) = velocity_at(u, x, y);
    let (mx, my) = clamp_point(&g, x - 0.5 * dt * a, y - 0.5 * dt * b);
    let (a, b) = velocity_at(u, mx, my);
    clamp_point(&g, x - dt * a, y - dt * b)
}

/// Nodewise `perp grad(rho) . grad(phi)` with `perp grad = (-d/dy, d/dx)`.
pub fn electric_torque(rho: &ScalarField, phi: &ScalarField) -> Result<ScalarField> {
    rho.same_grid(phi)?;
    let gr = gradient(rho);
    let gp = gradient(phi);
    let v = gr
        .x
        .values()
        .iter()
        .zip(gr.y.values())
        .zip(gp.x.values().iter().zip(gp.y.values()))
        .map(|((rx, ry), (px, py))| -ry * px + rx * py)
        .collect();
    Ok(ScalarField::from_values_unchecked(*rho.grid(), v))
}

/// One semi-Lagrangian step with bilinear feet and no source.
pub fn advance_vorticity(
    state: &VorticityState,
    rho: &ScalarField,
    phi: &ScalarField,
    dt: f64,
    k: f64,
) -> Result<ScalarField> {
    advance_vorticity_with(state, rho, phi, dt, k, Interpolation::Bilinear, None)
}

/// `omega_new(x) = omega(foot(x)) - dt k torque(x) + dt source(x)` at every
/// node, boundary included.
pub fn advance_vorticity_with(
    state: &VorticityState,
    rho: &ScalarField,
    phi: &ScalarField,
    dt: f64,
    k: f64,
    interpolation: Interpolation,
    source: Option<&ScalarField>,
) -> Result<ScalarField> {
    let g = *state.omega.grid();
    state.omega.same_grid(rho)?;
    state.omega.same_grid(&state.u.x)?;
    if let Some(s) = source {
        state.omega.same_grid(s)?;
    }
    let torque = electric_torque(rho, phi)?;
    let nx = g.nx();
    let mut out = vec![0.0; g.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        let y = g.y(j);
        for (i, o) in row.iter_mut().enumerate() {
            let (fx, fy) = trace_characteristic(&state.u, (g.x(i), y), dt);
            let kidx = j * nx + i;
            let mut v = interpolation.eval(&state.omega, fx, fy) - dt * k * torque.values()[kidx];
            if let Some(s) = source {
                v += dt * s.values()[kidx];
            }
            *o = v;
        }
    });
    let f = ScalarField::from_values_unchecked(g, out);
    f.check_finite()?;
    Ok(f)
}

/// Largest tangential velocity over boundary nodes.
pub fn tangential_boundary_speed(u: &VectorField) -> f64 {
    let g = *u.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut m: f64 = 0.0;
    for (i, j) in g.boundary_nodes() {
        let t = if j == 0 || j + 1 == ny {
            u.x.at(i, j)
        } else {
            u.y.at(i, j)
        };
        let t = if (i == 0 || i + 1 == nx) && (j == 0 || j + 1 == ny) {
            u.x.at(i, j).hypot(u.y.at(i, j))
        } else {
            t
        };
        m = m.max(t.abs());
    }
    m
}
