//! Time integration of the coupled system: potential, concentrations,
//! vorticity and velocity, optionally iterated to a fixed point per step.

use crate::diagnostics::{self, DiagnosticsRecord, SeriesRecorder};
use crate::error::{NpeError, Result};
use crate::euler::{advance_vorticity_with, Interpolation, VorticityState};
use crate::mesh::{gradient, BoundaryTrace, Grid, ScalarField};
use crate::nernst_planck::{advance_concentrations_with, charge_density, AdvectionScheme, SpeciesSet};
use crate::poisson::{relative_residual, EllipticProblem, PoissonSolver};

const DELTA: f64 = 1e-30;

/// Resolved simulation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: Grid,
    pub species: SpeciesSet,
    pub epsilon: f64,
    /// Coupling constant of the electric force on the fluid.
    pub k: f64,
    /// Dirichlet data of the potential.
    pub h: BoundaryTrace,
    pub omega0: ScalarField,
    pub t_final: f64,
    pub cfl: f64,
    pub picard_k: usize,
    pub picard_tol: f64,
    /// Output interval; also the largest allowed step.
    pub cadence: f64,
    /// Exponent of the monitored `L^p` norm of the concentrations.
    pub p_monitor: f64,
    pub interpolation: Interpolation,
    pub advection: AdvectionScheme,
    /// Reverses the electric force on the fluid. Test use only.
    #[doc(hidden)]
    pub flip_lorentz_force: bool,
}

impl SimConfig {
    /// Defaults for everything except the grid and species.
    pub fn new(grid: Grid, species: SpeciesSet) -> Self {
        Self {
            grid,
            species,
            epsilon: 1.0,
            k: 1.0,
            h: BoundaryTrace::zero(grid),
            omega0: ScalarField::zeros(grid),
            t_final: 1.0,
            cfl: 0.5,
            picard_k: 1,
            picard_tol: 1e-10,
            cadence: 0.1,
            p_monitor: 4.0,
            interpolation: Interpolation::Bilinear,
            advection: AdvectionScheme::Fitted,
            flip_lorentz_force: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str, v: f64| {
            if ok {
                Ok(())
            } else {
                Err(NpeError::Validation(format!("{what} violated (got {v})")))
            }
        };
        check(self.epsilon.is_finite() && self.epsilon > 0.0, "epsilon > 0", self.epsilon)?;
        check(self.k.is_finite() && self.k > 0.0, "K > 0", self.k)?;
        check(self.cfl > 0.0 && self.cfl <= 1.0, "0 < cfl <= 1", self.cfl)?;
        check(self.picard_k >= 1, "picard_k >= 1", self.picard_k as f64)?;
        check(self.picard_tol >= 0.0, "picard_tol >= 0", self.picard_tol)?;
        check(self.t_final.is_finite() && self.t_final >= 0.0, "t_final >= 0", self.t_final)?;
        check(self.cadence.is_finite() && self.cadence > 0.0, "cadence > 0", self.cadence)?;
        check(self.p_monitor >= 1.0, "p_monitor >= 1", self.p_monitor)?;
        if *self.h.grid() != self.grid
            || *self.omega0.grid() != self.grid
            || *self.species.species()[0].c0.grid() != self.grid
        {
            return Err(NpeError::GridMismatch);
        }
        self.omega0.check_finite()?;
        Ok(())
    }

    /// Signed coupling used in the vorticity source.
    pub fn force_coupling(&self) -> f64 {
        if self.flip_lorentz_force {
            -self.k
        } else {
            self.k
        }
    }

    /// Homogeneous boundary data for potential and concentrations.
    pub fn homogeneous(&self) -> bool {
        self.h.is_zero() && self.species.homogeneous_boundary()
    }
}

/// All evolved fields at one time, kept mutually consistent.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub c: Vec<ScalarField>,
    pub rho: ScalarField,
    pub phi: ScalarField,
    pub phi0: ScalarField,
    pub phi_h: ScalarField,
    pub vorticity: VorticityState,
}

/// Sources added to the concentration and vorticity updates.
pub trait Forcing: Sync {
    /// Per-species sources and the vorticity source at time `t`.
    fn sources(&self, grid: &Grid, t: f64) -> Result<(Vec<ScalarField>, ScalarField)>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub picard_iterations: usize,
    /// Relative change of `(c, omega)` in the last iteration.
    pub picard_change: f64,
    pub picard_converged: bool,
    pub contraction_warning: bool,
}

/// Largest change made when imposing boundary data on the initial fields.
#[derive(Debug, Clone, PartialEq)]
pub struct InitReport {
    pub boundary_overwrite: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Initial state and states at every output time.
    pub snapshots: Vec<SimState>,
    /// One record per state visited, the initial one first.
    pub records: Vec<DiagnosticsRecord>,
    pub steps: Vec<StepReport>,
    pub final_state: SimState,
}

/// A run that stopped on an error; holds everything produced before it.
#[derive(Debug)]
pub struct RunFailure {
    pub error: NpeError,
    pub trajectory: Trajectory,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "run stopped at t = {}: {}",
            self.trajectory.final_state.t, self.error
        )
    }
}

impl std::error::Error for RunFailure {}

/// A configured simulation with its reusable solver.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    solver: PoissonSolver,
    phi_h: ScalarField,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let solver = PoissonSolver::new(config.grid);
        let phi_h = solver.harmonic_extension(&config.h)?;
        Ok(Self {
            config,
            solver,
            phi_h,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn solver(&self) -> &PoissonSolver {
        &self.solver
    }

    /// Initial state with the boundary data imposed on each `c0`.
    pub fn initial_state(&self) -> Result<(SimState, InitReport)> {
        let mut c = Vec::with_capacity(self.config.species.len());
        let mut overwrite = Vec::with_capacity(c.capacity());
        for s in self.config.species.species() {
            let mut f = s.c0.clone();
            overwrite.push(s.gamma.apply(&mut f));
            c.push(f);
        }
        let state = self.state_from(0.0, c, self.config.omega0.clone())?;
        Ok((
            state,
            InitReport {
                boundary_overwrite: overwrite,
            },
        ))
    }

    /// Builds the consistent state for given concentrations and vorticity.
    pub fn state_from(&self, t: f64, c: Vec<ScalarField>, omega: ScalarField) -> Result<SimState> {
        let rho = charge_density(&self.config.species, &c)?;
        let phi0 = self.solver.solve(&EllipticProblem::new(
            rho.clone(),
            BoundaryTrace::zero(self.config.grid),
            self.config.epsilon,
        )?)?;
        let phi = phi0.zip_with(&self.phi_h, |a, b| a + b)?;
        let vorticity = VorticityState::from_omega(&self.solver, omega)?;
        Ok(SimState {
            t,
            c,
            rho,
            phi,
            phi0,
            phi_h: self.phi_h.clone(),
            vorticity,
        })
    }

    /// Relative interior residual of `-eps Lap phi = rho`.
    pub fn potential_residual(&self, state: &SimState) -> f64 {
        relative_residual(&state.phi, &state.rho, self.config.epsilon)
    }

    /// Stable step for `state`, at most the output cadence.
    pub fn compute_dt(&self, state: &SimState) -> f64 {
        let cfg = &self.config;
        let g = cfg.grid;
        let (hx, hy) = (g.hx(), g.hy());
        let u = &state.vorticity.u;
        let (ax, ay) = (u.x.max_abs(), u.y.max_abs());
        let rate = u
            .x
            .values()
            .iter()
            .zip(u.y.values())
            .map(|(a, b)| a.abs() / hx + b.abs() / hy)
            .fold(0.0, f64::max);
        let gp = gradient(&state.phi).max_norm();
        let h = hx.min(hy);
        let drift = h * h / (4.0 * cfg.species.max_d() * cfg.species.max_abs_z() * gp * h + DELTA);
        let bound = (hx / (ax + DELTA))
            .min(hy / (ay + DELTA))
            .min(1.0 / (rate + DELTA))
            .min(drift);
        (cfg.cfl * bound).min(cfg.cadence)
    }

    pub fn step(&self, state: &SimState, dt: f64) -> Result<(SimState, StepReport)> {
        self.step_with(state, dt, None)
    }

    /// Advances by `dt`. Each Picard iteration freezes `rho`, `phi` and `u`
    /// at the previous iterate and restarts from the start-of-step `c` and
    /// `omega`.
    pub fn step_with(
        &self,
        state: &SimState,
        dt: f64,
        forcing: Option<&dyn Forcing>,
    ) -> Result<(SimState, StepReport)> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(NpeError::InvalidTime(dt));
        }
        let cfg = &self.config;
        let t_new = state.t + dt;
        let sources = forcing
            .map(|f| f.sources(&cfg.grid, t_new))
            .transpose()?;
        let (c_src, w_src) = match &sources {
            Some((c, w)) => (Some(c.as_slice()), Some(w)),
            None => (None, None),
        };

        let mut frozen: Option<SimState> = None;
        let mut changes: Vec<f64> = Vec::new();
        let mut warning = false;
        let mut converged = false;
        for _ in 0..cfg.picard_k {
            let it = frozen.as_ref().unwrap_or(state);
            let c = advance_concentrations_with(
                &cfg.species,
                &state.c,
                &it.vorticity.u,
                &it.phi,
                dt,
                cfg.advection,
                c_src,
            )?;
            let transport = VorticityState {
                omega: state.vorticity.omega.clone(),
                theta: it.vorticity.theta.clone(),
                u: it.vorticity.u.clone(),
            };
            let omega = advance_vorticity_with(
                &transport,
                &it.rho,
                &it.phi,
                dt,
                cfg.force_coupling(),
                cfg.interpolation,
                w_src,
            )?;
            let next = self.state_from(t_new, c, omega)?;
            let change = relative_change(it, &next);
            changes.push(change);
            frozen = Some(next);
            if change <= cfg.picard_tol {
                converged = true;
                break;
            }
            let n = changes.len();
            if n >= 3 && changes[n - 1] > changes[n - 2] && changes[n - 2] > changes[n - 3] {
                log::warn!(
                    "Picard iteration not contracting at t = {t_new}; accepting iterate {n}"
                );
                warning = true;
                break;
            }
        }
        let next = frozen.expect("at least one Picard iteration");
        let report = StepReport {
            dt,
            picard_iterations: changes.len(),
            picard_change: *changes.last().unwrap_or(&0.0),
            picard_converged: converged,
            contraction_warning: warning,
        };
        Ok((next, report))
    }

    /// Steps from `initial` to `t_final`, landing exactly on every output
    /// time, recording diagnostics after every step.
    pub fn run(&self, initial: SimState) -> std::result::Result<Trajectory, Box<RunFailure>> {
        self.run_with(initial, None)
    }

    pub fn run_with(
        &self,
        initial: SimState,
        forcing: Option<&dyn Forcing>,
    ) -> std::result::Result<Trajectory, Box<RunFailure>> {
        let cfg = &self.config;
        let mut recorder = SeriesRecorder::new(cfg);
        let mut traj = Trajectory {
            snapshots: vec![initial.clone()],
            records: Vec::new(),
            steps: Vec::new(),
            final_state: initial,
        };
        let first = diagnostics::record(&traj.final_state, cfg);
        traj.records.push(recorder.push(first, None));
        let t_end = cfg.t_final;
        let eps_t = 1e-12 * t_end.max(cfg.cadence);
        let mut next_output = 1usize;
        while traj.final_state.t < t_end - eps_t {
            let state = &traj.final_state;
            let out_time = (next_output as f64 * cfg.cadence).min(t_end);
            let mut dt = self.compute_dt(state);
            let mut lands = false;
            if state.t + dt >= out_time - eps_t {
                dt = out_time - state.t;
                lands = true;
            }
            let result = self.step_with(state, dt, forcing).and_then(|(mut next, rep)| {
                if lands {
                    next.t = out_time;
                }
                for (species, c) in next.c.iter().enumerate() {
                    if let Some((node, &value)) =
                        c.values().iter().enumerate().find(|(_, v)| **v < 0.0)
                    {
                        return Err(NpeError::PositivityViolation { species, node, value });
                    }
                }
                let res = self.potential_residual(&next);
                if !(res <= 1e-8) {
                    return Err(NpeError::SolverFailure {
                        iterations: 0,
                        residual: res,
                    });
                }
                Ok((next, rep))
            });
            match result {
                Ok((next, rep)) => {
                    let rec = diagnostics::record(&next, cfg);
                    traj.records.push(recorder.push(rec, Some(&rep)));
                    traj.steps.push(rep);
                    if lands {
                        traj.snapshots.push(next.clone());
                        next_output += 1;
                    }
                    traj.final_state = next;
                }
                Err(error) => return Err(Box::new(RunFailure { error, trajectory: traj })),
            }
        }
        Ok(traj)
    }
}

/// `max |X_new - X_old| / max |X_new|` over all concentrations and the
/// vorticity, each field scaled separately.
fn relative_change(old: &SimState, new: &SimState) -> f64 {
    let fields = old
        .c
        .iter()
        .zip(&new.c)
        .chain(std::iter::once((&old.vorticity.omega, &new.vorticity.omega)));
    fields
        .map(|(a, b)| {
            let d = a.max_diff(b);
            if d == 0.0 {
                0.0
            } else {
                d / b.max_abs().max(a.max_abs())
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::VectorField;
    use crate::nernst_planck::{Species, SpeciesMode};
    use std::f64::consts::PI;

    fn neutral(n: usize, kappa: f64) -> SimConfig {
        let g = Grid::unit(n).unwrap();
        let sp = |z: f64| {
            Species::new(
                z,
                1.0,
                BoundaryTrace::constant(g, kappa),
                ScalarField::constant(g, kappa),
            )
            .unwrap()
        };
        let set = SpeciesSet::new(vec![sp(1.0), sp(-1.0)], SpeciesMode::TwoSpecies).unwrap();
        SimConfig::new(g, set)
    }

    fn smooth(n: usize) -> SimConfig {
        let g = Grid::unit(n).unwrap();
        let bump = |a: f64, x0: f64| {
            ScalarField::from_fn(g, move |x, y| {
                0.2 + a * (-((x - x0).powi(2) + (y - 0.5).powi(2)) / 0.02).exp()
            })
        };
        let s1 = Species::new(1.0, 0.5, BoundaryTrace::constant(g, 0.2), bump(1.0, 0.4)).unwrap();
        let s2 = Species::new(-1.0, 0.5, BoundaryTrace::constant(g, 0.2), bump(0.5, 0.6)).unwrap();
        let mut cfg = SimConfig::new(g, SpeciesSet::new(vec![s1, s2], SpeciesMode::TwoSpecies).unwrap());
        cfg.k = 5.0;
        cfg.epsilon = 0.1;
        cfg.h = BoundaryTrace::from_fn(g, |x, _| x).unwrap();
        cfg.omega0 = ScalarField::from_fn(g, |x, y| 3.0 * (PI * x).sin() * (PI * y).sin());
        cfg
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let mut c = neutral(9, 1.0);
        c.cfl = 1.5;
        assert!(Simulation::new(c).is_err());
        let mut c = neutral(9, 1.0);
        c.epsilon = 0.0;
        assert!(Simulation::new(c.clone()).unwrap_err().to_string().contains("epsilon > 0"));
        c.epsilon = 1.0;
        c.picard_k = 0;
        assert!(Simulation::new(c).is_err());
    }

    #[test]
    fn rest_state_is_a_fixed_point() {
        let sim = Simulation::new(neutral(17, 0.8)).unwrap();
        let (s0, init) = sim.initial_state().unwrap();
        assert_eq!(init.boundary_overwrite, vec![0.0, 0.0]);
        let dt = sim.compute_dt(&s0);
        assert_eq!(dt, sim.config().cadence);
        let (s1, rep) = sim.step(&s0, dt).unwrap();
        assert_eq!(rep.picard_iterations, 1);
        assert!(rep.picard_converged);
        for (a, b) in s0.c.iter().zip(&s1.c) {
            assert!(a.max_diff(b) <= 1e-12);
        }
        assert!(s1.vorticity.omega.max_abs() <= 1e-12);
    }

    #[test]
    fn zero_final_time_returns_initial_state() {
        let mut cfg = smooth(17);
        cfg.t_final = 0.0;
        let sim = Simulation::new(cfg).unwrap();
        let (s0, _) = sim.initial_state().unwrap();
        let traj = sim.run(s0.clone()).unwrap();
        assert_eq!(traj.final_state, s0);
        assert_eq!(traj.records.len(), 1);
        assert!(traj.steps.is_empty());
    }

    #[test]
    fn dt_arithmetic() {
        let cfg = neutral(101, 1.0);
        let sim = Simulation::new(cfg).unwrap();
        let (mut s, _) = sim.initial_state().unwrap();
        s.vorticity.u = VectorField::from_fn(*s.rho.grid(), |_, _| (1.0, 0.0));
        let dt = sim.compute_dt(&s);
        assert!(dt <= 0.005 + 1e-15);
        assert!((dt - 0.5 * 0.01).abs() < 1e-12);
    }

    #[test]
    fn dt_matches_hand_evaluated_bounds() {
        let mut cfg = neutral(41, 1.0);
        cfg.cfl = 0.8;
        let sim = Simulation::new(cfg).unwrap();
        let (mut s, _) = sim.initial_state().unwrap();
        let g = *s.rho.grid();
        s.phi = ScalarField::from_fn(g, |x, y| 30.0 * x - 40.0 * y);
        s.vorticity.u = VectorField::from_fn(g, |_, _| (2.0, -1.0));
        let h = 1.0 / 40.0;
        let bounds = [h / 2.0, h / 1.0, 1.0 / (2.0 / h + 1.0 / h), h / (4.0 * 50.0)];
        let expected = 0.8 * bounds.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((sim.compute_dt(&s) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn picard_difference_is_second_order() {
        let gap = |dt: f64| {
            let mut a = smooth(33);
            a.picard_k = 1;
            let mut b = a.clone();
            b.picard_k = 3;
            b.picard_tol = 0.0;
            let sa = Simulation::new(a).unwrap();
            let sb = Simulation::new(b).unwrap();
            let (s0, _) = sa.initial_state().unwrap();
            let (x, _) = sa.step(&s0, dt).unwrap();
            let (y, _) = sb.step(&s0, dt).unwrap();
            x.c.iter()
                .zip(&y.c)
                .map(|(p, q)| p.max_diff(q))
                .fold(x.vorticity.omega.max_diff(&y.vorticity.omega), f64::max)
        };
        let g: Vec<f64> = [0.004, 0.002, 0.001, 0.0005].iter().map(|&dt| gap(dt)).collect();
        assert!((g[2] / g[3]).log2() > 1.8, "{g:?}");
    }

    #[test]
    fn state_invariants_hold_along_a_run() {
        let mut cfg = smooth(33);
        cfg.t_final = 0.05;
        cfg.cadence = 0.02;
        let sim = Simulation::new(cfg).unwrap();
        let (s0, _) = sim.initial_state().unwrap();
        let traj = sim.run(s0).unwrap();
        let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times, vec![0.0, 0.02, 0.04, 0.05]);
        let s = &traj.final_state;
        let rho = charge_density(&sim.config().species, &s.c).unwrap();
        assert_eq!(rho, s.rho);
        assert!(sim.potential_residual(s) <= 1e-8);
        for (c, sp) in s.c.iter().zip(sim.config().species.species()) {
            assert!(c.min() >= 0.0);
            assert_eq!(BoundaryTrace::from_field(c), sp.gamma);
        }
        assert_eq!(BoundaryTrace::from_field(&s.phi), sim.config().h);
        assert_eq!(traj.records.len(), traj.steps.len() + 1);
    }
}
