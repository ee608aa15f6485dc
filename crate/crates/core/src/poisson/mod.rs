//! Dirichlet Poisson problems `scale * (-Lap u) = f` on the rectangle.
//!
//! Inhomogeneous boundary data is lifted with the transfinite bilinear
//! interpolant of the edges; the zero-boundary remainder is solved exactly
//! (for the five-point operator) by a type-I sine transform, or by conjugate
//! gradients when requested.

mod cg;
mod dst;

use crate::error::{NpeError, Result};
use crate::mesh::{BoundaryTrace, Grid, ScalarField};
use dst::Dst1;

/// Relative residual the solvers must reach.
pub const RELATIVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EllipticProblem {
    pub rhs: ScalarField,
    pub boundary: BoundaryTrace,
    pub scale: f64,
}

impl EllipticProblem {
    pub fn new(rhs: ScalarField, boundary: BoundaryTrace, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(NpeError::Validation(format!(
                "elliptic scale must be > 0, got {scale}"
            )));
        }
        if rhs.grid() != boundary.grid() {
            return Err(NpeError::GridMismatch);
        }
        Ok(Self {
            rhs,
            boundary,
            scale,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    SineTransform,
    ConjugateGradient,
}

/// Reusable solver for one grid. Immutable after construction, so one
/// instance can serve concurrent solves.
#[derive(Clone)]
pub struct PoissonSolver {
    grid: Grid,
    kind: SolverKind,
    dst_x: Dst1,
    dst_y: Dst1,
    /// Eigenvalues of the negative five-point operator, interior row-major.
    eigen: Vec<f64>,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver")
            .field("grid", &self.grid)
            .field("kind", &self.kind)
            .finish()
    }
}

impl PoissonSolver {
    pub fn new(grid: Grid) -> Self {
        Self::with_kind(grid, SolverKind::SineTransform)
    }

    pub fn with_kind(grid: Grid, kind: SolverKind) -> Self {
        let (mx, my) = (grid.nx() - 2, grid.ny() - 2);
        let lam = |k: usize, m: usize, h: f64| {
            let s = (std::f64::consts::PI * k as f64 / (2.0 * (m + 1) as f64)).sin();
            4.0 * s * s / (h * h)
        };
        let lx: Vec<f64> = (1..=mx).map(|k| lam(k, mx, grid.hx())).collect();
        let ly: Vec<f64> = (1..=my).map(|k| lam(k, my, grid.hy())).collect();
        let mut eigen = Vec::with_capacity(mx * my);
        for b in &ly {
            for a in &lx {
                eigen.push(a + b);
            }
        }
        Self {
            grid,
            kind,
            dst_x: Dst1::new(mx),
            dst_y: Dst1::new(my),
            eigen,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    /// Solves `problem`; the result equals the boundary trace exactly on the
    /// boundary nodes.
    pub fn solve(&self, problem: &EllipticProblem) -> Result<ScalarField> {
        let g = self.grid;
        if *problem.rhs.grid() != g || *problem.boundary.grid() != g {
            return Err(NpeError::GridMismatch);
        }
        let (nx, mx, my) = (g.nx(), g.nx() - 2, g.ny() - 2);
        let lift = problem.boundary.lift();
        let (ax, ay) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
        let lv = lift.values();
        let rv = problem.rhs.values();

        // Residual problem -Lap w = rhs / scale + Lap(lift), w = 0 on the boundary.
        let mut r = Vec::with_capacity(mx * my);
        for j in 1..=my {
            for i in 1..=mx {
                let k = j * nx + i;
                let lap = ax * (lv[k - 1] - 2.0 * lv[k] + lv[k + 1])
                    + ay * (lv[k - nx] - 2.0 * lv[k] + lv[k + nx]);
                r.push(rv[k] / problem.scale + lap);
            }
        }
        let w = match self.kind {
            SolverKind::SineTransform => {
                self.solve_sine(&mut r);
                r
            }
            SolverKind::ConjugateGradient => {
                let cap = (10.0 * ((g.nx() * g.ny()) as f64).sqrt()).ceil() as usize;
                cg::conjugate_gradient(&r, mx, my, g.hx(), g.hy(), RELATIVE_TOLERANCE, cap)?
            }
        };

        let mut out = lift;
        let ov = out.values_mut();
        for j in 1..=my {
            for i in 1..=mx {
                ov[j * nx + i] += w[(j - 1) * mx + (i - 1)];
            }
        }
        let res = relative_residual(&out, &problem.rhs, problem.scale);
        if !(res <= RELATIVE_TOLERANCE) {
            return Err(NpeError::SolverFailure {
                iterations: 1,
                residual: res,
            });
        }
        Ok(out)
    }

    /// In-place zero-boundary solve on the interior array.
    fn solve_sine(&self, r: &mut [f64]) {
        let (mx, my) = (self.grid.nx() - 2, self.grid.ny() - 2);
        self.dst_x.apply_lines(r);
        let mut t = transpose(r, mx, my);
        self.dst_y.apply_lines(&mut t);
        let norm = 4.0 / ((mx + 1) * (my + 1)) as f64;
        // t is column-major here: t[i * my + j] pairs with eigen[j * mx + i].
        for i in 0..mx {
            for j in 0..my {
                t[i * my + j] *= norm / self.eigen[j * mx + i];
            }
        }
        self.dst_y.apply_lines(&mut t);
        let back = transpose(&t, my, mx);
        r.copy_from_slice(&back);
        self.dst_x.apply_lines(r);
    }

    /// Splits the potential into the charge part (zero boundary) and the
    /// harmonic extension of `h`.
    pub fn decompose_potential(
        &self,
        rho: &ScalarField,
        h: &BoundaryTrace,
        epsilon: f64,
    ) -> Result<PotentialParts> {
        let phi0 = self.solve(&EllipticProblem::new(
            rho.clone(),
            BoundaryTrace::zero(self.grid),
            epsilon,
        )?)?;
        let phi_h = self.harmonic_extension(h)?;
        let phi = phi0.zip_with(&phi_h, |a, b| a + b)?;
        Ok(PotentialParts { phi, phi0, phi_h })
    }

    pub fn harmonic_extension(&self, h: &BoundaryTrace) -> Result<ScalarField> {
        self.solve(&EllipticProblem::new(
            ScalarField::zeros(self.grid),
            h.clone(),
            1.0,
        )?)
    }
}

/// Transposes `lines` contiguous lines of length `line`.
fn transpose(a: &[f64], line: usize, lines: usize) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for j in 0..lines {
        for i in 0..line {
            out[i * lines + j] = a[j * line + i];
        }
    }
    out
}

/// Potential and its superposition parts.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialParts {
    pub phi: ScalarField,
    pub phi0: ScalarField,
    pub phi_h: ScalarField,
}

/// One-shot Dirichlet solve.
pub fn solve_dirichlet(problem: &EllipticProblem) -> Result<ScalarField> {
    PoissonSolver::new(*problem.rhs.grid()).solve(problem)
}

/// One-shot potential decomposition `phi = phi0 + phi_h` with
/// `-eps Lap phi0 = rho`, `phi0 = 0` and `-Lap phi_h = 0`, `phi_h = h` on the boundary.
pub fn decompose_potential(
    rho: &ScalarField,
    h: &BoundaryTrace,
    epsilon: f64,
) -> Result<PotentialParts> {
    PoissonSolver::new(*rho.grid()).decompose_potential(rho, h, epsilon)
}

/// Interior residual of `scale * (-Lap u) = rhs`, relative to the larger of
/// the data and the size of the stencil terms.
pub fn relative_residual(u: &ScalarField, rhs: &ScalarField, scale: f64) -> f64 {
    residual_over(u, rhs, scale, |_, _| true)
}

pub(crate) fn residual_over(
    u: &ScalarField,
    rhs: &ScalarField,
    scale: f64,
    keep: impl Fn(usize, usize) -> bool,
) -> f64 {
    let g = u.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let (ax, ay) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let (v, f) = (u.values(), rhs.values());
    let mut res: f64 = 0.0;
    let mut fmax: f64 = 0.0;
    let mut umax: f64 = 0.0;
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            fmax = fmax.max(f[k].abs());
            umax = umax.max(v[k].abs());
            if !keep(i, j) {
                continue;
            }
            let lap = ax * (v[k - 1] - 2.0 * v[k] + v[k + 1]) + ay * (v[k - nx] - 2.0 * v[k] + v[k + nx]);
            res = res.max((-scale * lap - f[k]).abs());
        }
    }
    for (i, j) in g.boundary_nodes() {
        umax = umax.max(v[g.idx(i, j)].abs());
    }
    let denom = fmax.max(scale * umax * 2.0 * (ax + ay));
    if denom == 0.0 {
        res
    } else {
        res / denom
    }
}
