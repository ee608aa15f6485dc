//! Monitored norms, energy balance and boundedness checks.

use std::fmt::Write as _;

use crate::coupling::{SimConfig, SimState, StepReport};
use crate::error::{NpeError, Result};
use crate::euler::tangential_boundary_speed;
use crate::mesh::export::fmt_f64;
use crate::mesh::{gradient, integrate, lp_norm, Grid, ScalarField};
use crate::poisson::residual_over;

/// One time sample of every monitored quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// Step that produced this record; zero for the initial record.
    pub dt: f64,
    pub picard_iterations: usize,
    /// `1/2 |u|^2` integrated.
    pub energy_u: f64,
    /// `1/2 K eps |grad phi0|^2` integrated.
    pub energy_phi0: f64,
    pub u_l2: f64,
    pub grad_phi0_l2: f64,
    pub grad_phi_max: f64,
    pub l2_c: Vec<f64>,
    pub lp_c: Vec<f64>,
    /// `L^2` norm of the gradient of `c - lift(gamma)`.
    pub grad_c_l2: Vec<f64>,
    pub min_c: Vec<f64>,
    pub rho_l2: f64,
    /// Integral of `|rho|^3`.
    pub rho_l3: f64,
    pub omega_l2: f64,
    pub omega_l3: f64,
    /// `K sum D z^2 int c |grad phi0|^2`.
    pub dissipation: f64,
    /// Defect of the discrete energy balance over the last step; only for
    /// homogeneous data with equal diffusivities.
    pub energy_identity_residual: Option<f64>,
    pub tangential_boundary_u_max: f64,
    /// Relative residual of the potential equation away from the corners.
    pub potential_residual: f64,
    /// Same, at the four nodes diagonal to the corners.
    pub potential_residual_corner: f64,
    /// `min (z+ c+ - z- c- - |rho|)` for an opposite-sign pair.
    pub neutrality_gap: Option<f64>,
}

impl DiagnosticsRecord {
    pub fn energy(&self) -> f64 {
        self.energy_u + self.energy_phi0
    }

    pub fn species_count(&self) -> usize {
        self.l2_c.len()
    }

    /// Named norms watched by [`check_boundedness`].
    pub fn monitored(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("u_l2".to_string(), self.u_l2),
            ("grad_phi0_l2".to_string(), self.grad_phi0_l2),
        ];
        for (i, v) in self.l2_c.iter().enumerate() {
            out.push((format!("c_l2_{}", i + 1), *v));
        }
        for (i, v) in self.lp_c.iter().enumerate() {
            out.push((format!("c_lp_{}", i + 1), *v));
        }
        out.push(("rho_l3".to_string(), self.rho_l3));
        out.push(("omega_l2".to_string(), self.omega_l2));
        out.push(("omega_l3".to_string(), self.omega_l3));
        out
    }
}

/// Column names of the diagnostics CSV for `n` species.
pub fn csv_header(n: usize) -> String {
    let mut cols: Vec<String> = [
        "t",
        "dt",
        "picard_iterations",
        "energy_u",
        "energy_phi0",
        "energy",
        "u_l2",
        "grad_phi0_l2",
        "grad_phi_max",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for prefix in ["c_l2_", "c_lp_", "grad_c_l2_", "c_min_"] {
        cols.extend((1..=n).map(|i| format!("{prefix}{i}")));
    }
    cols.extend(
        [
            "rho_l2",
            "rho_l3",
            "omega_l2",
            "omega_l3",
            "dissipation",
            "energy_identity_residual",
            "tangential_boundary_u_max",
            "potential_residual",
            "potential_residual_corner",
            "neutrality_gap",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    cols.join(",")
}

/// One CSV row in [`csv_header`] order. Absent values are left empty.
pub fn csv_row(r: &DiagnosticsRecord) -> String {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut s = String::new();
    let _ = write!(s, "{},{},{}", fmt_f64(r.t), fmt_f64(r.dt), r.picard_iterations);
    for v in [
        r.energy_u,
        r.energy_phi0,
        r.energy(),
        r.u_l2,
        r.grad_phi0_l2,
        r.grad_phi_max,
    ] {
        let _ = write!(s, ",{}", fmt_f64(v));
    }
    for list in [&r.l2_c, &r.lp_c, &r.grad_c_l2, &r.min_c] {
        for v in list.iter() {
            let _ = write!(s, ",{}", fmt_f64(*v));
        }
    }
    for v in [r.rho_l2, r.rho_l3, r.omega_l2, r.omega_l3, r.dissipation] {
        let _ = write!(s, ",{}", fmt_f64(v));
    }
    let _ = write!(
        s,
        ",{},{},{},{},{}",
        opt(r.energy_identity_residual),
        fmt_f64(r.tangential_boundary_u_max),
        fmt_f64(r.potential_residual),
        fmt_f64(r.potential_residual_corner),
        opt(r.neutrality_gap)
    );
    s
}

fn is_corner_neighbour(g: &Grid, i: usize, j: usize) -> bool {
    g.corner_neighbours().contains(&(i, j))
}

/// Evaluates every monitored quantity for one state.
pub fn record(state: &SimState, config: &SimConfig) -> DiagnosticsRecord {
    let g = *state.rho.grid();
    let species = config.species.species();
    let (k, eps) = (config.k, config.epsilon);
    let norm = |f: &ScalarField, p: f64| lp_norm(f, p).expect("exponent is valid");

    let u = &state.vorticity.u;
    let u2 = integrate(&u.norm_squared());
    let gphi0 = gradient(&state.phi0);
    let gphi0_sq = gphi0.norm_squared();
    let gphi0_l2sq = integrate(&gphi0_sq);

    let mut l2_c = Vec::new();
    let mut lp_c = Vec::new();
    let mut grad_c_l2 = Vec::new();
    let mut min_c = Vec::new();
    let mut dissipation = 0.0;
    for (c, s) in state.c.iter().zip(species) {
        l2_c.push(norm(c, 2.0));
        lp_c.push(norm(c, config.p_monitor));
        let lift = s.gamma.lift();
        let shifted = c.zip_with(&lift, |a, b| a - b).expect("same grid");
        grad_c_l2.push(integrate(&gradient(&shifted).norm_squared()).sqrt());
        min_c.push(c.min());
        let weighted = c.zip_with(&gphi0_sq, |a, b| a * b).expect("same grid");
        dissipation += k * s.d * s.z * s.z * integrate(&weighted);
    }

    let neutrality_gap = config.species.opposite_pair().map(|(p, n)| {
        let (zp, zn) = (species[p].z, species[n].z);
        let (cp, cn) = (state.c[p].values(), state.c[n].values());
        cp.iter()
            .zip(cn)
            .zip(state.rho.values())
            .map(|((a, b), r)| zp * a - zn * b - r.abs())
            .fold(f64::INFINITY, f64::min)
    });

    DiagnosticsRecord {
        t: state.t,
        dt: 0.0,
        picard_iterations: 0,
        energy_u: 0.5 * u2,
        energy_phi0: 0.5 * k * eps * gphi0_l2sq,
        u_l2: u2.sqrt(),
        grad_phi0_l2: gphi0_l2sq.sqrt(),
        grad_phi_max: gradient(&state.phi).max_norm(),
        l2_c,
        lp_c,
        grad_c_l2,
        min_c,
        rho_l2: norm(&state.rho, 2.0),
        rho_l3: integrate(&state.rho.map(|r| r.abs().powi(3))),
        omega_l2: norm(&state.vorticity.omega, 2.0),
        omega_l3: norm(&state.vorticity.omega, 3.0),
        dissipation,
        energy_identity_residual: None,
        tangential_boundary_u_max: tangential_boundary_speed(u),
        potential_residual: residual_over(&state.phi, &state.rho, eps, |i, j| {
            !is_corner_neighbour(&g, i, j)
        }),
        potential_residual_corner: residual_over(&state.phi, &state.rho, eps, |i, j| {
            is_corner_neighbour(&g, i, j)
        }),
        neutrality_gap,
    }
}

/// Fills in the step-dependent fields of a record series.
#[derive(Debug, Clone)]
pub struct SeriesRecorder {
    /// `K D / eps` when the energy balance applies.
    screening: Option<f64>,
    previous: Option<DiagnosticsRecord>,
}

impl SeriesRecorder {
    pub fn new(config: &SimConfig) -> Self {
        let applies = config.homogeneous() && config.species.equal_diffusivities();
        let d = config.species.species()[0].d;
        Self {
            screening: applies.then(|| config.k * d / config.epsilon),
            previous: None,
        }
    }

    pub fn push(&mut self, mut rec: DiagnosticsRecord, step: Option<&StepReport>) -> DiagnosticsRecord {
        if let Some(s) = step {
            rec.dt = s.dt;
            rec.picard_iterations = s.picard_iterations;
        }
        if let (Some(q), Some(prev)) = (self.screening, &self.previous) {
            let rate = prev.dissipation + q * prev.rho_l2 * prev.rho_l2;
            rec.energy_identity_residual = Some(rec.energy() - prev.energy() + rec.dt * rate);
        }
        self.previous = Some(rec.clone());
        rec
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub passed: bool,
    /// Index of the first record whose energy rose beyond tolerance.
    pub first_violation: Option<usize>,
    /// Largest `E_n - E_(n-1) - tol_n`; negative when every step passed.
    pub worst_excess: f64,
    pub max_identity_residual: f64,
    pub steps: usize,
}

/// Checks that `E = energy_u + energy_phi0` never rises by more than
/// `10 dt D + 1e-10` per step, `D` being the larger dissipation at the two
/// ends of the step.
pub fn check_energy_decay(series: &[DiagnosticsRecord], config: &SimConfig) -> Result<EnergyReport> {
    if !config.homogeneous() {
        return Err(NpeError::Inapplicable(
            "energy decay needs zero boundary data for the potential and every species".into(),
        ));
    }
    if !config.species.equal_diffusivities() {
        return Err(NpeError::Inapplicable(
            "energy decay needs equal diffusivities".into(),
        ));
    }
    let mut first = None;
    let mut worst = f64::NEG_INFINITY;
    let mut max_res: f64 = 0.0;
    for n in 1..series.len() {
        let diss = series[n - 1].dissipation.max(series[n].dissipation);
        let tol = 10.0 * series[n].dt * diss + 1e-10;
        let excess = series[n].energy() - series[n - 1].energy() - tol;
        worst = worst.max(excess);
        if excess > 0.0 && first.is_none() {
            first = Some(n);
        }
        if let Some(r) = series[n].energy_identity_residual {
            max_res = max_res.max(r);
        }
    }
    Ok(EnergyReport {
        passed: first.is_none(),
        first_violation: first,
        worst_excess: if series.len() > 1 { worst } else { 0.0 },
        max_identity_residual: max_res,
        steps: series.len().saturating_sub(1),
    })
}

/// A monitored norm that doubled too fast.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowUpFlag {
    pub quantity: String,
    /// Record index at which the doubling was detected.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundednessReport {
    pub passed: bool,
    pub flags: Vec<BlowUpFlag>,
    pub window: usize,
}

const BLOW_UP_FLOOR: f64 = 1e-12;

/// First index at which the maximum over the trailing `window` values is
/// at least twice the maximum over the preceding window, and the same holds
/// for half windows.
pub fn first_doubling(values: &[f64], window: usize) -> Option<usize> {
    let w = window.max(2);
    let half = w / 2;
    let max_of = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (2 * w..=values.len()).find_map(|end| {
        let recent = max_of(&values[end - w..end]);
        let before = max_of(&values[end - 2 * w..end - w]).max(BLOW_UP_FLOOR);
        let recent_half = max_of(&values[end - half..end]);
        let before_half = max_of(&values[end - 2 * half..end - half]).max(BLOW_UP_FLOOR);
        (recent >= 2.0 * before && recent_half >= 2.0 * before_half).then_some(end - 1)
    })
}

/// Flags super-linear growth of every monitored norm.
pub fn check_boundedness(series: &[DiagnosticsRecord], window: usize) -> Result<BoundednessReport> {
    let first = series
        .first()
        .ok_or_else(|| NpeError::Validation("diagnostics series is empty".into()))?;
    let names: Vec<String> = first.monitored().into_iter().map(|(n, _)| n).collect();
    let mut flags = Vec::new();
    for (q, name) in names.iter().enumerate() {
        let values: Vec<f64> = series.iter().map(|r| r.monitored()[q].1).collect();
        if let Some(index) = first_doubling(&values, window) {
            flags.push(BlowUpFlag {
                quantity: name.clone(),
                index,
            });
        }
    }
    Ok(BoundednessReport {
        passed: flags.is_empty(),
        flags,
        window,
    })
}
