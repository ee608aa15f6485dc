//! Ion concentrations: species data and the positivity-preserving
//! drift-diffusion step.
//!
//! Each edge carries the exponentially fitted (Scharfetter-Gummel) flux
//! `J = -(D/h) [B(-s) c_east - B(s) c_west]` with `B(s) = s / (e^s - 1)` and
//! `s` the jump of `z * phi` across the edge. With [`AdvectionScheme::Fitted`]
//! the flow is folded into `s` as well and the whole update is implicit; with
//! [`AdvectionScheme::Upwind`] the flow is applied first by an explicit
//! first-order upwind step. Either way the implicit matrix is an M-matrix, so
//! nonnegative data gives nonnegative concentrations.

mod linear;

use rayon::prelude::*;

use crate::error::{NpeError, Result};
use crate::mesh::{BoundaryTrace, ScalarField, VectorField};
use linear::FivePoint;

/// One ionic species.
#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    /// Valence.
    pub z: f64,
    /// Diffusivity.
    pub d: f64,
    /// Dirichlet data.
    pub gamma: BoundaryTrace,
    /// Initial concentration.
    pub c0: ScalarField,
}

impl Species {
    pub fn new(z: f64, d: f64, gamma: BoundaryTrace, c0: ScalarField) -> Result<Self> {
        let s = Self { z, d, gamma, c0 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z.is_finite() && self.z != 0.0) {
            return Err(NpeError::Validation(format!("z != 0 violated (z = {})", self.z)));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(NpeError::Validation(format!("D > 0 violated (D = {})", self.d)));
        }
        if self.gamma.grid() != self.c0.grid() {
            return Err(NpeError::GridMismatch);
        }
        if self.gamma.min() < 0.0 {
            return Err(NpeError::Validation(format!(
                "gamma >= 0 violated (min gamma = {})",
                self.gamma.min()
            )));
        }
        self.c0.check_finite()?;
        if self.c0.min() < 0.0 {
            return Err(NpeError::Validation(format!(
                "c0 >= 0 violated (min c0 = {})",
                self.c0.min()
            )));
        }
        Ok(())
    }
}

/// Structural restriction placed on a species set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeciesMode {
    TwoSpecies,
    /// Equal diffusivities and equal absolute valences.
    EqualDZ,
    Unrestricted,
}

impl SpeciesMode {
    pub fn name(self) -> &'static str {
        match self {
            SpeciesMode::TwoSpecies => "two-species",
            SpeciesMode::EqualDZ => "equal-dz",
            SpeciesMode::Unrestricted => "unrestricted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "two-species" => Some(SpeciesMode::TwoSpecies),
            "equal-dz" => Some(SpeciesMode::EqualDZ),
            "unrestricted" => Some(SpeciesMode::Unrestricted),
            _ => None,
        }
    }

    /// The most specific mode the species satisfy.
    pub fn infer(species: &[Species]) -> Self {
        let zd: Vec<(f64, f64)> = species.iter().map(|s| (s.z, s.d)).collect();
        Self::infer_from(&zd)
    }

    /// As [`SpeciesMode::infer`], from `(z, D)` pairs.
    pub fn infer_from(zd: &[(f64, f64)]) -> Self {
        if zd.len() == 2 {
            SpeciesMode::TwoSpecies
        } else if zd.iter().all(|&(z, d)| d == zd[0].1 && z.abs() == zd[0].0.abs()) {
            SpeciesMode::EqualDZ
        } else {
            SpeciesMode::Unrestricted
        }
    }
}

fn equal_dz(species: &[Species]) -> bool {
    species
        .iter()
        .all(|s| s.d == species[0].d && s.z.abs() == species[0].z.abs())
}

/// Validated, non-empty list of species on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesSet {
    species: Vec<Species>,
    mode: SpeciesMode,
}

impl SpeciesSet {
    pub fn new(species: Vec<Species>, mode: SpeciesMode) -> Result<Self> {
        if species.is_empty() {
            return Err(NpeError::Validation("at least one species is required".into()));
        }
        for s in &species {
            s.validate()?;
            if s.c0.grid() != species[0].c0.grid() {
                return Err(NpeError::GridMismatch);
            }
        }
        match mode {
            SpeciesMode::TwoSpecies if species.len() != 2 => {
                return Err(NpeError::Validation(format!(
                    "two-species mode needs exactly 2 species, got {}",
                    species.len()
                )))
            }
            SpeciesMode::EqualDZ if !equal_dz(&species) => {
                return Err(NpeError::Validation(
                    "equal-dz mode needs equal D and equal |z| for all species".into(),
                ))
            }
            _ => {}
        }
        Ok(Self { species, mode })
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }
    pub fn mode(&self) -> SpeciesMode {
        self.mode
    }
    pub fn len(&self) -> usize {
        self.species.len()
    }
    pub fn is_empty(&self) -> bool {
        self.species.is_empty()
    }

    pub fn max_d(&self) -> f64 {
        self.species.iter().map(|s| s.d).fold(0.0, f64::max)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.species.iter().map(|s| s.z.abs()).fold(0.0, f64::max)
    }

    /// True when every diffusivity is the same.
    pub fn equal_diffusivities(&self) -> bool {
        self.species.iter().all(|s| s.d == self.species[0].d)
    }

    /// True when every boundary trace is identically zero.
    pub fn homogeneous_boundary(&self) -> bool {
        self.species.iter().all(|s| s.gamma.is_zero())
    }

    /// Two species of opposite sign, positive one first.
    pub fn opposite_pair(&self) -> Option<(usize, usize)> {
        if self.species.len() != 2 {
            return None;
        }
        let (a, b) = (self.species[0].z, self.species[1].z);
        if a > 0.0 && b < 0.0 {
            Some((0, 1))
        } else if a < 0.0 && b > 0.0 {
            Some((1, 0))
        } else {
            None
        }
    }
}

/// `rho = sum z_i c_i`, accumulated in species order.
pub fn charge_density(species: &SpeciesSet, c: &[ScalarField]) -> Result<ScalarField> {
    if c.len() != species.len() {
        return Err(NpeError::Arity {
            expected: species.len(),
            got: c.len(),
        });
    }
    let grid = *c[0].grid();
    let mut rho = vec![0.0; grid.len()];
    for (s, f) in species.species().iter().zip(c) {
        if *f.grid() != grid {
            return Err(NpeError::GridMismatch);
        }
        for (r, &v) in rho.iter_mut().zip(f.values()) {
            *r += s.z * v;
        }
    }
    Ok(ScalarField::from_values_unchecked(grid, rho))
}

/// How the flow enters the concentration update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdvectionScheme {
    /// Implicit, folded into the fitted edge fluxes.
    #[default]
    Fitted,
    /// Explicit first-order upwind; needs `dt (|u|/hx + |v|/hy) <= 1`.
    Upwind,
}

impl AdvectionScheme {
    pub fn name(self) -> &'static str {
        match self {
            AdvectionScheme::Fitted => "fitted",
            AdvectionScheme::Upwind => "upwind",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fitted" => Some(AdvectionScheme::Fitted),
            "upwind" => Some(AdvectionScheme::Upwind),
            _ => None,
        }
    }
}

/// Bernoulli function `s / (e^s - 1)`.
#[inline]
pub fn bernoulli(s: f64) -> f64 {
    if s.abs() < 1e-4 {
        1.0 - s / 2.0 + s * s / 12.0
    } else {
        s / s.exp_m1()
    }
}

/// One step with the default scheme and no source.
pub fn advance_concentrations(
    species: &SpeciesSet,
    c: &[ScalarField],
    u: &VectorField,
    phi: &ScalarField,
    dt: f64,
) -> Result<Vec<ScalarField>> {
    advance_concentrations_with(species, c, u, phi, dt, AdvectionScheme::Fitted, None)
}

/// One backward-Euler step of every species with frozen `u` and `phi`.
/// `source`, when given, holds one field per species added as `dt * F` at
/// interior nodes.
pub fn advance_concentrations_with(
    species: &SpeciesSet,
    c: &[ScalarField],
    u: &VectorField,
    phi: &ScalarField,
    dt: f64,
    scheme: AdvectionScheme,
    source: Option<&[ScalarField]>,
) -> Result<Vec<ScalarField>> {
    if c.len() != species.len() {
        return Err(NpeError::Arity {
            expected: species.len(),
            got: c.len(),
        });
    }
    if let Some(f) = source {
        if f.len() != species.len() {
            return Err(NpeError::Arity {
                expected: species.len(),
                got: f.len(),
            });
        }
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(NpeError::InvalidTime(dt));
    }
    let grid = *phi.grid();
    for f in c.iter().chain(source.into_iter().flatten()) {
        if *f.grid() != grid {
            return Err(NpeError::GridMismatch);
        }
    }
    if *u.grid() != grid || *species.species()[0].c0.grid() != grid {
        return Err(NpeError::GridMismatch);
    }
    (0..species.len())
        .into_par_iter()
        .map(|n| {
            let s = &species.species()[n];
            advance_one(n, s, &c[n], u, phi, dt, scheme, source.map(|f| &f[n]))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn advance_one(
    index: usize,
    sp: &Species,
    c: &ScalarField,
    u: &VectorField,
    phi: &ScalarField,
    dt: f64,
    scheme: AdvectionScheme,
    source: Option<&ScalarField>,
) -> Result<ScalarField> {
    let g = *c.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let (mx, my) = (nx - 2, ny - 2);
    let (hx, hy) = (g.hx(), g.hy());
    let (cx, cy) = (sp.d / (hx * hx), sp.d / (hy * hy));
    let p = phi.values();
    let (ux, uy) = (u.x.values(), u.y.values());
    let fitted = scheme == AdvectionScheme::Fitted;

    let mut boundary = c.clone();
    sp.gamma.apply(&mut boundary);
    let start = match scheme {
        AdvectionScheme::Fitted => boundary.clone(),
        AdvectionScheme::Upwind => upwind(&boundary, u, dt),
    };
    let cv = start.values();

    // Edge drift between nodes k and k + step.
    let edge = |k: usize, step: usize, vel: &[f64], h: f64| {
        let mut s = sp.z * (p[k + step] - p[k]);
        if fitted {
            s -= 0.5 * (vel[k] + vel[k + step]) * h / sp.d;
        }
        s
    };

    let mut m = FivePoint::new(mx, my);
    let mut rhs = vec![0.0; mx * my];
    let mut guess = vec![0.0; mx * my];
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = g.idx(i, j);
            let r = (j - 1) * mx + (i - 1);
            let se = edge(k, 1, ux, hx);
            let sw = edge(k - 1, 1, ux, hx);
            let sn = edge(k, nx, uy, hy);
            let ss = edge(k - nx, nx, uy, hy);
            let (ae, aw) = (dt * cx * bernoulli(-se), dt * cx * bernoulli(sw));
            let (an, as_) = (dt * cy * bernoulli(-sn), dt * cy * bernoulli(ss));
            m.diag[r] = 1.0
                + dt * cx * (bernoulli(se) + bernoulli(-sw))
                + dt * cy * (bernoulli(sn) + bernoulli(-ss));
            let mut b = cv[k];
            if let Some(f) = source {
                b += dt * f.values()[k];
            }
            let bv = boundary.values();
            if i + 1 < nx - 1 {
                m.east[r] = -ae;
            } else {
                b += ae * bv[k + 1];
            }
            if i > 1 {
                m.west[r] = -aw;
            } else {
                b += aw * bv[k - 1];
            }
            if j + 1 < ny - 1 {
                m.north[r] = -an;
            } else {
                b += an * bv[k + nx];
            }
            if j > 1 {
                m.south[r] = -as_;
            } else {
                b += as_ * bv[k - nx];
            }
            rhs[r] = b;
            guess[r] = c.values()[k];
        }
    }
    let x = m.solve(&rhs, &guess)?;

    let mut out = boundary;
    let ov = out.values_mut();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let v = x[(j - 1) * mx + (i - 1)];
            if v < -1e-12 || !v.is_finite() {
                return Err(NpeError::PositivityViolation {
                    species: index,
                    node: j * nx + i,
                    value: v,
                });
            }
            ov[j * nx + i] = v;
        }
    }
    Ok(out)
}

/// Explicit upwind transport of interior values; a convex combination when
/// `dt (|u|/hx + |v|/hy) <= 1`.
fn upwind(c: &ScalarField, u: &VectorField, dt: f64) -> ScalarField {
    let g = *c.grid();
    let nx = g.nx();
    let (hx, hy) = (g.hx(), g.hy());
    let v = c.values();
    let mut out = c.clone();
    let o = out.values_mut();
    for j in 1..g.ny() - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            let (a, b) = (u.x.values()[k], u.y.values()[k]);
            let (nux, nuy) = (dt * a.abs() / hx, dt * b.abs() / hy);
            let up_x = if a > 0.0 { v[k - 1] } else { v[k + 1] };
            let up_y = if b > 0.0 { v[k - nx] } else { v[k + nx] };
            o[k] = (1.0 - nux - nuy) * v[k] + nux * up_x + nuy * up_y;
        }
    }
    out
}
