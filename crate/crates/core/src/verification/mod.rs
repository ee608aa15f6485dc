//! Manufactured-solution verification: analytic fields, the forcing that
//! makes them exact, and convergence studies of the full coupled solver.

mod separable;

pub use separable::{Clock, Partial, Profile, SeparableField, SeparableTerm, Wave};

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::coupling::{Forcing, SimConfig, Simulation};
use crate::error::{NpeError, Result};
use crate::euler::Interpolation;
use crate::mesh::{BoundaryTrace, Grid, ScalarField, VectorField};
use crate::nernst_planck::{Species, SpeciesMode, SpeciesSet};

/// Errors below this are treated as exact.
pub const SATURATION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedSpecies {
    pub z: f64,
    pub d: f64,
    pub concentration: SeparableField,
}

/// Analytic concentrations and stream function on a rectangle. The potential
/// follows from the charge density with zero boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCase {
    pub name: String,
    pub lx: f64,
    pub ly: f64,
    pub species: Vec<ManufacturedSpecies>,
    /// Stream function; the velocity is its perpendicular gradient.
    pub stream: SeparableField,
    pub epsilon: f64,
    pub k: f64,
    pub mode: SpeciesMode,
    pub t_final: f64,
}

/// Sine coefficients `a_mn` of `sum a_mn sin(m pi x/lx) sin(n pi y/ly)`.
type SineModes = Vec<(u32, u32, f64)>;

fn sin_sin(m: u32, n: u32) -> (Profile, Profile) {
    (vec![(1.0, Wave::Sin(m))], vec![(1.0, Wave::Sin(n))])
}

impl ManufacturedCase {
    /// Uniform electroneutral state at rest.
    pub fn static_neutral() -> Self {
        let c = SeparableField::new(1.0, 1.0, vec![SeparableTerm::constant(1.5)]);
        Self {
            name: "static".into(),
            lx: 1.0,
            ly: 1.0,
            species: vec![
                ManufacturedSpecies { z: 1.0, d: 1.0, concentration: c.clone() },
                ManufacturedSpecies { z: -1.0, d: 1.0, concentration: c },
            ],
            stream: SeparableField::zero(1.0, 1.0),
            epsilon: 1.0,
            k: 1.0,
            mode: SpeciesMode::TwoSpecies,
            t_final: 0.1,
        }
    }

    /// Decaying first sine mode in both species; the charge vanishes.
    pub fn pure_diffusion() -> Self {
        let (x, y) = sin_sin(1, 1);
        let c = SeparableField::new(
            1.0,
            1.0,
            vec![SeparableTerm::new(1.0, Clock::Exp(-2.0 * PI * PI), x, y)],
        );
        Self {
            name: "diffusion".into(),
            lx: 1.0,
            ly: 1.0,
            species: vec![
                ManufacturedSpecies { z: 1.0, d: 1.0, concentration: c.clone() },
                ManufacturedSpecies { z: -1.0, d: 1.0, concentration: c },
            ],
            stream: SeparableField::zero(1.0, 1.0),
            epsilon: 1.0,
            k: 1.0,
            mode: SpeciesMode::TwoSpecies,
            t_final: 0.1,
        }
    }

    /// Charged, flowing case exercising every coupling term.
    pub fn coupled() -> Self {
        let (x1, y1) = sin_sin(1, 1);
        let (x2, y2) = sin_sin(1, 2);
        let c1 = SeparableField::new(
            1.0,
            1.0,
            vec![
                SeparableTerm::constant(2.0),
                SeparableTerm::new(1.0, Clock::Cos(1.0), x1, y1),
            ],
        );
        let c2 = SeparableField::new(
            1.0,
            1.0,
            vec![
                SeparableTerm::constant(2.0),
                SeparableTerm::new(0.5, Clock::Sin(1.0), x2, y2),
            ],
        );
        let squared = vec![(0.5, Wave::Cos(0)), (-0.5, Wave::Cos(2))];
        let stream = SeparableField::new(
            1.0,
            1.0,
            vec![SeparableTerm::new(0.1, Clock::Sin(1.0), squared.clone(), squared)],
        );
        Self {
            name: "coupled".into(),
            lx: 1.0,
            ly: 1.0,
            species: vec![
                ManufacturedSpecies { z: 1.0, d: 1.0, concentration: c1 },
                ManufacturedSpecies { z: -1.0, d: 0.5, concentration: c2 },
            ],
            stream,
            epsilon: 0.5,
            k: 1.0,
            mode: SpeciesMode::TwoSpecies,
            t_final: 0.2,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "static" => Ok(Self::static_neutral()),
            "diffusion" => Ok(Self::pure_diffusion()),
            "coupled" => Ok(Self::coupled()),
            other => Err(NpeError::Validation(format!(
                "unknown manufactured case '{other}' (expected static, diffusion or coupled)"
            ))),
        }
    }

    /// Sine coefficients of the charge density at `t`. Fails unless the
    /// charge is a pure sine series for all times.
    fn charge_modes(&self, t: f64) -> Result<SineModes> {
        let mut structural: Vec<(Clock, Wave, Wave, f64)> = Vec::new();
        let mut scale = 0.0f64;
        for sp in &self.species {
            for term in &sp.concentration.terms {
                for &(ax, wx) in &term.x {
                    for &(ay, wy) in &term.y {
                        let a = sp.z * term.coef * ax * ay;
                        scale = scale.max(a.abs());
                        match structural
                            .iter_mut()
                            .find(|e| e.0 == term.clock && e.1 == wx && e.2 == wy)
                        {
                            Some(e) => e.3 += a,
                            None => structural.push((term.clock, wx, wy, a)),
                        }
                    }
                }
            }
        }
        let mut modes: SineModes = Vec::new();
        for (clock, wx, wy, a) in structural {
            if a.abs() <= 1e-14 * scale.max(1.0) {
                continue;
            }
            let (Wave::Sin(m), Wave::Sin(n)) = (wx, wy) else {
                return Err(NpeError::InvalidCase(format!(
                    "charge density has a non-sine component {wx:?} x {wy:?}; \
                     the potential needs zero boundary values"
                )));
            };
            if m == 0 || n == 0 {
                continue;
            }
            let v = a * clock.value(t);
            match modes.iter_mut().find(|e| e.0 == m && e.1 == n) {
                Some(e) => e.2 += v,
                None => modes.push((m, n, v)),
            }
        }
        Ok(modes)
    }

    /// Potential at `t`, solved mode by mode.
    pub fn potential(&self, t: f64) -> Result<SeparableField> {
        let terms = self
            .charge_modes(t)?
            .into_iter()
            .map(|(m, n, a)| {
                let lambda =
                    PI * PI * ((m as f64 / self.lx).powi(2) + (n as f64 / self.ly).powi(2));
                let (x, y) = sin_sin(m, n);
                SeparableTerm::new(a / (self.epsilon * lambda), Clock::Steady, x, y)
            })
            .collect();
        Ok(SeparableField::new(self.lx, self.ly, terms))
    }

    /// Checks the stream function vanishes on the boundary, the boundary
    /// values of the concentrations are constant in time, and the
    /// concentrations are nonnegative on a sample of space-time points.
    pub fn validate(&self) -> Result<()> {
        if self.species.is_empty() {
            return Err(NpeError::InvalidCase("no species".into()));
        }
        self.charge_modes(0.0)?;
        let n = 33;
        let times: Vec<f64> = (0..5).map(|k| self.t_final * k as f64 / 4.0).collect();
        let boundary: Vec<(f64, f64)> = (0..n)
            .flat_map(|k| {
                let (sx, sy) = (self.lx * k as f64 / (n - 1) as f64, self.ly * k as f64 / (n - 1) as f64);
                [(sx, 0.0), (sx, self.ly), (0.0, sy), (self.lx, sy)]
            })
            .collect();
        for &t in &times {
            for &(x, y) in &boundary {
                let psi = self.stream.value(x, y, t);
                if psi.abs() > 1e-12 {
                    return Err(NpeError::InvalidCase(format!(
                        "stream function is {psi:e} at boundary point ({x}, {y}), t = {t}"
                    )));
                }
                for (i, sp) in self.species.iter().enumerate() {
                    let drift = sp.concentration.value(x, y, t) - sp.concentration.value(x, y, 0.0);
                    if drift.abs() > 1e-12 {
                        return Err(NpeError::InvalidCase(format!(
                            "boundary value of species {i} changes in time at ({x}, {y})"
                        )));
                    }
                }
            }
        }
        for &t in &times {
            for j in 0..n {
                for i in 0..n {
                    let x = self.lx * i as f64 / (n - 1) as f64;
                    let y = self.ly * j as f64 / (n - 1) as f64;
                    self.check_nonnegative(x, y, t)?;
                }
            }
        }
        Ok(())
    }

    fn check_nonnegative(&self, x: f64, y: f64, t: f64) -> Result<()> {
        for (i, sp) in self.species.iter().enumerate() {
            let c = sp.concentration.value(x, y, t);
            if c < -1e-12 {
                return Err(NpeError::InvalidCase(format!(
                    "species {i} is negative ({c:e}) at ({x}, {y}), t = {t}"
                )));
            }
        }
        Ok(())
    }

    /// Forcing of each species and of the vorticity at one point, given the
    /// potential at `t`.
    pub fn point_forcing(&self, phi: &SeparableField, x: f64, y: f64, t: f64) -> Result<(Vec<f64>, f64)> {
        self.check_nonnegative(x, y, t)?;
        let psi = &self.stream;
        let u = (
            psi.derivative(x, y, t, Partial::space(0, 1)),
            -psi.derivative(x, y, t, Partial::space(1, 0)),
        );
        let grad_phi = phi.gradient(x, y, t);
        let lap_phi = phi.laplacian(x, y, t);
        let mut grad_rho = (0.0, 0.0);
        let mut out = Vec::with_capacity(self.species.len());
        for sp in &self.species {
            let f = &sp.concentration;
            let c = f.value(x, y, t);
            let g = f.gradient(x, y, t);
            grad_rho.0 += sp.z * g.0;
            grad_rho.1 += sp.z * g.1;
            let div = f.laplacian(x, y, t) + sp.z * (g.0 * grad_phi.0 + g.1 * grad_phi.1 + c * lap_phi);
            out.push(f.derivative(x, y, t, Partial::time()) + u.0 * g.0 + u.1 * g.1 - sp.d * div);
        }
        let d = |px: u8, py: u8, dt: bool| psi.derivative(x, y, t, Partial { x: px, y: py, t: dt });
        let omega_t = -(d(2, 0, true) + d(0, 2, true));
        let omega_x = -(d(3, 0, false) + d(1, 2, false));
        let omega_y = -(d(2, 1, false) + d(0, 3, false));
        let torque = -grad_rho.1 * grad_phi.0 + grad_rho.0 * grad_phi.1;
        let fw = omega_t + u.0 * omega_x + u.1 * omega_y + self.k * torque;
        Ok((out, fw))
    }

    pub fn concentrations(&self, grid: Grid, t: f64) -> Vec<ScalarField> {
        self.species
            .iter()
            .map(|sp| ScalarField::from_fn(grid, |x, y| sp.concentration.value(x, y, t)))
            .collect()
    }

    pub fn vorticity(&self, grid: Grid, t: f64) -> ScalarField {
        ScalarField::from_fn(grid, |x, y| -self.stream.laplacian(x, y, t))
    }

    pub fn velocity(&self, grid: Grid, t: f64) -> VectorField {
        VectorField::from_fn(grid, |x, y| {
            let (px, py) = self.stream.gradient(x, y, t);
            (py, -px)
        })
    }

    /// Solver configuration on an `n x n` grid, initialised from the exact
    /// fields.
    pub fn config(&self, n: usize) -> Result<SimConfig> {
        let grid = Grid::new(n, n, self.lx, self.ly)?;
        let species = self
            .species
            .iter()
            .map(|sp| {
                let c0 = ScalarField::from_fn(grid, |x, y| sp.concentration.value(x, y, 0.0));
                Species::new(sp.z, sp.d, BoundaryTrace::from_field(&c0), c0)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut cfg = SimConfig::new(grid, SpeciesSet::new(species, self.mode)?);
        cfg.epsilon = self.epsilon;
        cfg.k = self.k;
        cfg.omega0 = self.vorticity(grid, 0.0);
        cfg.t_final = self.t_final;
        cfg.cadence = self.t_final.max(f64::MIN_POSITIVE);
        cfg.interpolation = Interpolation::Bicubic;
        Ok(cfg)
    }
}

/// Forcing fields on `grid` at time `t`.
pub fn manufactured_forcing(
    case: &ManufacturedCase,
    grid: &Grid,
    t: f64,
) -> Result<(Vec<ScalarField>, ScalarField)> {
    let phi = case.potential(t)?;
    let mut species = vec![Vec::with_capacity(grid.len()); case.species.len()];
    let mut omega = Vec::with_capacity(grid.len());
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let (f, w) = case.point_forcing(&phi, grid.x(i), grid.y(j), t)?;
            for (dst, v) in species.iter_mut().zip(f) {
                dst.push(v);
            }
            omega.push(w);
        }
    }
    let species = species
        .into_iter()
        .map(|v| ScalarField::from_values(*grid, v))
        .collect::<Result<Vec<_>>>()?;
    Ok((species, ScalarField::from_values(*grid, omega)?))
}

impl Forcing for ManufacturedCase {
    fn sources(&self, grid: &Grid, t: f64) -> Result<(Vec<ScalarField>, ScalarField)> {
        manufactured_forcing(self, grid, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Spatial,
    Temporal,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Spatial => "spatial",
            StudyKind::Temporal => "temporal",
        }
    }
}

/// Max-norm errors of one forced run at the final time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub kind: StudyKind,
    pub n: usize,
    pub dt: f64,
    pub error_c: f64,
    pub error_omega: f64,
    pub error_u: f64,
}

/// Observed orders between successive refinements.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    pub pairwise: Vec<f64>,
    /// Order on the finest pair; `None` when saturated.
    pub observed: Option<f64>,
    /// Errors already at the round-off floor.
    pub saturated: bool,
}

impl OrderEstimate {
    fn from_errors(errors: &[f64], ratios: &[f64]) -> Self {
        let pairwise: Vec<f64> = errors
            .windows(2)
            .zip(ratios)
            .map(|(e, r)| (e[0] / e[1]).ln() / r.ln())
            .collect();
        let saturated = errors.last().is_some_and(|&e| e <= SATURATION_FLOOR);
        Self {
            observed: if saturated { None } else { pairwise.last().copied() },
            pairwise,
            saturated,
        }
    }

    /// Saturated, or observed order at least `order`.
    pub fn at_least(&self, order: f64) -> bool {
        self.saturated || self.observed.is_some_and(|p| p >= order)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub case: String,
    pub rows: Vec<StudyRow>,
    pub spatial_c: OrderEstimate,
    pub spatial_omega: OrderEstimate,
    pub temporal_c: OrderEstimate,
    pub temporal_omega: OrderEstimate,
}

impl OrderReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("study,grid,dt,error_c,error_omega,error_u\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:e},{:e},{:e},{:e}",
                r.kind.name(),
                r.n,
                r.dt,
                r.error_c,
                r.error_omega,
                r.error_u
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let fmt = |e: &OrderEstimate| match e.observed {
            Some(p) => format!("{p:.3}"),
            None => "saturated".into(),
        };
        format!(
            "case={} spatial_order_c={} spatial_order_omega={} temporal_order_c={} temporal_order_omega={}",
            self.case,
            fmt(&self.spatial_c),
            fmt(&self.spatial_omega),
            fmt(&self.temporal_c),
            fmt(&self.temporal_omega)
        )
    }
}

/// Runs the forced solver on an `n x n` grid from the exact initial data to
/// the case's final time with `ceil(T/dt)` equal steps, and measures the
/// max-norm errors.
pub fn forced_run(case: &ManufacturedCase, n: usize, dt: f64, kind: StudyKind) -> Result<StudyRow> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(NpeError::InvalidTime(dt));
    }
    let sim = Simulation::new(case.config(n)?)?;
    let grid = sim.config().grid;
    let (mut state, _) = sim.initial_state()?;
    let steps = (case.t_final / dt - 1e-9).ceil().max(1.0) as usize;
    let dt = case.t_final / steps as f64;
    for k in 1..=steps {
        let (mut next, _) = sim.step_with(&state, dt, Some(case))?;
        next.t = case.t_final * k as f64 / steps as f64;
        state = next;
    }
    let t = case.t_final;
    let error_c = case
        .concentrations(grid, t)
        .iter()
        .zip(&state.c)
        .map(|(a, b)| a.max_diff(b))
        .fold(0.0, f64::max);
    let error_omega = case.vorticity(grid, t).max_diff(&state.vorticity.omega);
    let u = case.velocity(grid, t);
    let error_u = u.x.max_diff(&state.vorticity.u.x).max(u.y.max_diff(&state.vorticity.u.y));
    Ok(StudyRow { kind, n, dt, error_c, error_omega, error_u })
}

/// Spatial study over `grids` with `dt` proportional to `h^2` (starting
/// from `dts[0]` on the first grid) and temporal study over `dts` on the
/// last grid.
pub fn convergence_study(case: &ManufacturedCase, grids: &[usize], dts: &[f64]) -> Result<OrderReport> {
    if grids.len() < 3 || dts.len() < 3 {
        return Err(NpeError::Validation(
            "convergence study needs at least 3 grids and 3 time steps".into(),
        ));
    }
    if grids.windows(2).any(|w| w[1] <= w[0]) || dts.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(NpeError::Validation(
            "grids must increase and time steps decrease".into(),
        ));
    }
    case.validate()?;
    let h = |n: usize| 1.0 / (n - 1) as f64;
    let fine = *grids.last().expect("checked length");
    let mut jobs: Vec<(StudyKind, usize, f64)> = grids
        .iter()
        .map(|&n| (StudyKind::Spatial, n, dts[0] * (h(n) / h(grids[0])).powi(2)))
        .collect();
    jobs.extend(dts.iter().map(|&dt| (StudyKind::Temporal, fine, dt)));
    let rows = jobs
        .par_iter()
        .map(|&(kind, n, dt)| forced_run(case, n, dt, kind))
        .collect::<Result<Vec<_>>>()?;
    let (spatial, temporal): (Vec<StudyRow>, Vec<StudyRow>) =
        rows.iter().partition(|r| r.kind == StudyKind::Spatial);
    let ratios = |v: &[StudyRow], f: &dyn Fn(&StudyRow) -> f64| -> Vec<f64> {
        v.windows(2).map(|w| f(&w[0]) / f(&w[1])).collect()
    };
    let space_ratio = ratios(&spatial, &|r| h(r.n));
    let time_ratio = ratios(&temporal, &|r| r.dt);
    let col = |v: &[StudyRow], f: fn(&StudyRow) -> f64| v.iter().map(f).collect::<Vec<_>>();
    Ok(OrderReport {
        case: case.name.clone(),
        spatial_c: OrderEstimate::from_errors(&col(&spatial, |r| r.error_c), &space_ratio),
        spatial_omega: OrderEstimate::from_errors(&col(&spatial, |r| r.error_omega), &space_ratio),
        temporal_c: OrderEstimate::from_errors(&col(&temporal, |r| r.error_c), &time_ratio),
        temporal_omega: OrderEstimate::from_errors(&col(&temporal, |r| r.error_omega), &time_ratio),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_case_has_zero_forcing() {
        let case = ManufacturedCase::static_neutral();
        let g = Grid::unit(9).unwrap();
        let (f, w) = manufactured_forcing(&case, &g, 0.3).unwrap();
        assert!(f.iter().all(|s| s.max_abs() == 0.0));
        assert_eq!(w.max_abs(), 0.0);
    }

    #[test]
    fn heat_solution_needs_no_forcing() {
        let case = ManufacturedCase::pure_diffusion();
        let g = Grid::unit(17).unwrap();
        for t in [0.0, 0.05, 0.4] {
            let (f, w) = manufactured_forcing(&case, &g, t).unwrap();
            assert!(f.iter().all(|s| s.max_abs() < 1e-12));
            assert_eq!(w.max_abs(), 0.0);
            assert!(case.potential(t).unwrap().terms.is_empty());
        }
    }

    #[test]
    fn potential_satisfies_the_elliptic_equation() {
        let case = ManufacturedCase::coupled();
        let t = 0.6;
        let phi = case.potential(t).unwrap();
        for &(x, y) in &[(0.2, 0.7), (0.5, 0.5), (0.9, 0.1)] {
            let rho: f64 = case
                .species
                .iter()
                .map(|s| s.z * s.concentration.value(x, y, t))
                .sum();
            assert!((-case.epsilon * phi.laplacian(x, y, t) - rho).abs() < 1e-13);
        }
        assert!(phi.value(0.0, 0.3, t).abs() < 1e-15);
    }

    #[test]
    fn cases_validate() {
        for name in ["static", "diffusion", "coupled"] {
            ManufacturedCase::by_name(name).unwrap().validate().unwrap();
        }
        assert!(ManufacturedCase::by_name("vortex").is_err());
    }

    #[test]
    fn non_sine_charge_is_rejected() {
        let mut case = ManufacturedCase::coupled();
        case.species[1].concentration.terms[0] = SeparableTerm::constant(3.0);
        assert!(matches!(case.potential(0.0), Err(NpeError::InvalidCase(_))));
    }

    #[test]
    fn negative_concentration_is_rejected() {
        let mut case = ManufacturedCase::coupled();
        for sp in &mut case.species {
            sp.concentration.terms[0].coef = -0.5;
        }
        assert!(matches!(case.validate(), Err(NpeError::InvalidCase(_))));
        let g = Grid::unit(9).unwrap();
        assert!(matches!(
            manufactured_forcing(&case, &g, 0.0),
            Err(NpeError::InvalidCase(_))
        ));
    }

    #[test]
    fn nonzero_stream_on_boundary_is_rejected() {
        let mut case = ManufacturedCase::coupled();
        case.stream.terms.push(SeparableTerm::new(
            0.1,
            Clock::Steady,
            vec![(1.0, Wave::Cos(1))],
            vec![(1.0, Wave::Sin(1))],
        ));
        assert!(matches!(case.validate(), Err(NpeError::InvalidCase(_))));
    }

    #[test]
    fn order_estimate_arithmetic() {
        let e = OrderEstimate::from_errors(&[4e-2, 1e-2, 2.5e-3], &[2.0, 2.0]);
        assert!(e.pairwise.iter().all(|p| (p - 2.0).abs() < 1e-12));
        assert!(e.at_least(1.9) && !e.saturated);
        let s = OrderEstimate::from_errors(&[0.0, 0.0, 1e-15], &[2.0, 2.0]);
        assert!(s.saturated && s.observed.is_none() && s.at_least(5.0));
    }

    #[test]
    fn static_study_is_saturated() {
        let case = ManufacturedCase::static_neutral();
        let rep = convergence_study(&case, &[9, 17, 33], &[0.05, 0.025, 0.0125]).unwrap();
        assert!(rep.spatial_c.saturated && rep.temporal_omega.saturated);
        assert_eq!(rep.rows.len(), 6);
        assert_eq!(rep.to_csv().lines().count(), 7);
        assert!(rep.summary().contains("spatial_order_c=saturated"));
    }
}
