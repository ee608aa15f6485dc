//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use npe_core::coupling::{SimConfig, Simulation};
use npe_core::diagnostics::{check_boundedness, check_energy_decay, record, SeriesRecorder};
use npe_core::heat_kernel::{verify_gaussian_bound, verify_sharp_family, KernelSpec};
use npe_core::io::output::diagnostics_csv;
use npe_core::io::{parse_config, parse_document, EdgeProfile, EdgeSet, FieldProfile, FieldTerm};
use npe_core::mesh::{BoundaryTrace, Grid, ScalarField};
use npe_core::nernst_planck::{Species, SpeciesMode, SpeciesSet};
use npe_core::poisson::{EllipticProblem, PoissonSolver};
use npe_core::euler::VorticityState;
use npe_core::verification::{convergence_study, ManufacturedCase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() <= limit_s
}

fn bump(x0: f64, y0: f64, r: f64, h: f64) -> FieldTerm {
    FieldTerm::Bump { a: h, x0, y0, r }
}

/// Random nonnegative bumps on a random nonnegative constant background.
fn maximum_principle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst_min = f64::INFINITY;
    let mut failures = Vec::new();
    let mut total_steps = 0;
    for run in 0..20 {
        let g = Grid::unit(64).unwrap();
        let signs = [(1.0, -1.0), (2.0, -1.0), (1.0, -2.0), (1.0, 1.0)][rng.gen_range(0..4)];
        let species = [signs.0, signs.1]
            .into_iter()
            .map(|z| {
                let gamma = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..2.0) };
                let mut terms = vec![FieldTerm::Const(gamma)];
                for _ in 0..rng.gen_range(1..=3) {
                    terms.push(bump(
                        rng.gen_range(0.2..0.8),
                        rng.gen_range(0.2..0.8),
                        rng.gen_range(0.05..0.3),
                        rng.gen_range(0.5..5.0),
                    ));
                }
                Species::new(
                    z,
                    rng.gen_range(0.1..1.5),
                    BoundaryTrace::constant(g, gamma),
                    FieldProfile(terms).field(g),
                )
                .unwrap()
            })
            .collect();
        let mut cfg = SimConfig::new(g, SpeciesSet::new(species, SpeciesMode::TwoSpecies).unwrap());
        cfg.epsilon = rng.gen_range(0.05..1.0);
        cfg.k = rng.gen_range(0.5..5.0);
        cfg.t_final = 0.5;
        let (a, m, n) = (rng.gen_range(-5.0..5.0), rng.gen_range(1..=3), rng.gen_range(1..=3));
        cfg.omega0 = FieldProfile(vec![FieldTerm::Sines { a, m, n }]).field(g);
        let sim = Simulation::new(cfg).unwrap();
        let (s0, _) = sim.initial_state().unwrap();
        match sim.run(s0) {
            Ok(traj) => {
                total_steps += traj.steps.len();
                let m = traj
                    .records
                    .iter()
                    .flat_map(|r| r.min_c.iter().copied())
                    .fold(f64::INFINITY, f64::min);
                worst_min = worst_min.min(m);
                if m < 0.0 {
                    failures.push(format!("run {run}: min c = {m:e}"));
                }
            }
            Err(f) => failures.push(format!("run {run}: {}", f.error)),
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty() && within(elapsed, 300.0),
        format!(
            "20 runs, {total_steps} steps, smallest concentration {worst_min:e}, {:.1}s{}",
            elapsed.as_secs_f64(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn energy_config(flip: bool) -> SimConfig {
    let g = Grid::unit(33).unwrap();
    let sp = |z: f64, term: FieldTerm| {
        Species::new(z, 0.001, BoundaryTrace::zero(g), FieldProfile(vec![term]).field(g)).unwrap()
    };
    let species = vec![
        sp(1.0, bump(0.35, 0.5, 0.2, 3.0)),
        sp(-1.0, bump(0.6, 0.55, 0.35, 1.0)),
    ];
    let mut cfg = SimConfig::new(g, SpeciesSet::new(species, SpeciesMode::TwoSpecies).unwrap());
    cfg.k = 100.0;
    cfg.epsilon = 0.1;
    cfg.cadence = 1e-4;
    cfg.flip_lorentz_force = flip;
    cfg
}

fn energy_series(flip: bool) -> (bool, f64, f64) {
    let sim = Simulation::new(energy_config(flip)).unwrap();
    let (mut s, _) = sim.initial_state().unwrap();
    let mut rec = SeriesRecorder::new(sim.config());
    let mut series = vec![rec.push(record(&s, sim.config()), None)];
    for _ in 0..200 {
        let dt = sim.compute_dt(&s);
        let (next, report) = sim.step(&s, dt).unwrap();
        series.push(rec.push(record(&next, sim.config()), Some(&report)));
        s = next;
    }
    let rep = check_energy_decay(&series, sim.config()).unwrap();
    (rep.passed, rep.worst_excess, series[200].energy() - series[0].energy())
}

fn energy_decay() -> Outcome {
    let start = Instant::now();
    let (ok, excess, change) = energy_series(false);
    let (control_ok, control_excess, control_change) = energy_series(true);
    let elapsed = start.elapsed();
    outcome(
        ok && !control_ok && within(elapsed, 60.0),
        format!(
            "200 steps: worst excess {excess:e} (energy change {change:e}); \
             flipped force {} with excess {control_excess:e} (energy change {control_change:e}); {:.1}s",
            if control_ok { "passed (should fail)" } else { "fails as required" },
            elapsed.as_secs_f64()
        ),
    )
}

fn rest_state() -> Outcome {
    let start = Instant::now();
    let g = Grid::unit(33).unwrap();
    let kappa = 0.7;
    let sp = |z: f64| {
        Species::new(z, 1.0, BoundaryTrace::constant(g, kappa), ScalarField::constant(g, kappa)).unwrap()
    };
    let cfg = SimConfig::new(g, SpeciesSet::new(vec![sp(1.0), sp(-1.0)], SpeciesMode::TwoSpecies).unwrap());
    let sim = Simulation::new(cfg).unwrap();
    let (s0, _) = sim.initial_state().unwrap();
    let mut s = s0.clone();
    for _ in 0..1000 {
        let dt = sim.compute_dt(&s);
        s = sim.step(&s, dt).unwrap().0;
    }
    let v = (&s.vorticity, &s0.vorticity);
    let drift = s
        .c
        .iter()
        .zip(&s0.c)
        .map(|(a, b)| a.max_diff(b))
        .chain([
            s.rho.max_diff(&s0.rho),
            s.phi.max_diff(&s0.phi),
            v.0.omega.max_diff(&v.1.omega),
            v.0.theta.max_diff(&v.1.theta),
            v.0.u.x.max_diff(&v.1.u.x),
            v.0.u.y.max_diff(&v.1.u.y),
        ])
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        drift <= 1e-10 && within(elapsed, 60.0),
        format!("1000 steps, largest field change {drift:e}; {:.1}s", elapsed.as_secs_f64()),
    )
}

fn poisson_accuracy() -> Outcome {
    let start = Instant::now();
    let errors: Vec<f64> = [33, 65, 129]
        .iter()
        .map(|&n| {
            let g = Grid::unit(n).unwrap();
            let exact = ScalarField::from_fn(g, |x, y| (PI * x).sin() * (2.0 * PI * y).sin());
            let rhs = exact.scaled(5.0 * PI * PI);
            let problem = EllipticProblem::new(rhs, BoundaryTrace::zero(g), 1.0).unwrap();
            PoissonSolver::new(g).solve(&problem).unwrap().max_diff(&exact)
        })
        .collect();
    let orders: Vec<f64> = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    let g = Grid::unit(129).unwrap();
    let stream = VorticityState::from_omega(&PoissonSolver::new(g), ScalarField::constant(g, 1.0)).unwrap();
    let centre = stream.theta.at(64, 64);
    let elapsed = start.elapsed();
    outcome(
        orders.iter().all(|&p| p >= 1.9) && (centre - 0.0736714).abs() <= 1e-4 && within(elapsed, 60.0),
        format!(
            "errors {}, orders {orders:.3?}; stream centre value {centre:.7}; {:.1}s",
            errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(" "),
            elapsed.as_secs_f64()
        ),
    )
}

fn heat_kernel_bounds() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for order in [0u8, 1] {
        let rep = verify_gaussian_bound(&KernelSpec::unit(order), 2000).unwrap();
        ok &= rep.passed();
        parts.push(format!(
            "order {order}: max ratio {:.4e} (first 1000: {:.4e})",
            rep.max_ratio, rep.half_max_ratio
        ));
    }
    let times = [0.1, 0.03, 0.01, 0.003, 0.001];
    let rates = verify_sharp_family(Grid::unit(129).unwrap(), 4.0, &times, 2.0).unwrap();
    ok &= rates.passed();
    parts.push(format!(
        "t^(1/4)|e|: {:.3?}, t^(3/4)|grad e|: {:.3?}",
        rates.value_weighted, rates.gradient_weighted
    ));
    let elapsed = start.elapsed();
    outcome(
        ok && within(elapsed, 120.0),
        format!("{}; {:.1}s", parts.join("; "), elapsed.as_secs_f64()),
    )
}

fn mms_convergence() -> Outcome {
    let start = Instant::now();
    let case = ManufacturedCase::coupled();
    let rep = convergence_study(&case, &[33, 65, 129], &[0.02, 0.01, 0.005, 0.0025]).unwrap();
    let ok = rep.temporal_c.at_least(0.9)
        && rep.temporal_omega.at_least(0.9)
        && rep.spatial_c.at_least(1.9)
        && rep.spatial_omega.at_least(1.9);
    let elapsed = start.elapsed();
    outcome(
        ok && within(elapsed, 600.0),
        format!(
            "spatial c {:.3?}, spatial omega {:.3?}, temporal c {:.3?}, temporal omega {:.3?}; {:.1}s",
            rep.spatial_c.pairwise,
            rep.spatial_omega.pairwise,
            rep.temporal_c.pairwise,
            rep.temporal_omega.pairwise,
            elapsed.as_secs_f64()
        ),
    )
}

fn inhomogeneous_config(species: &[(f64, f64, &str, &str)]) -> SimConfig {
    let mut text = String::from(
        "[grid]\nnx = 64\nny = 64\n\n[physics]\nepsilon = 0.1\nomega0 = sines:2.0:1:1 gaussian:-3.0:0.3:0.6:0.1\n\n",
    );
    for (i, (z, d, c0, gamma)) in species.iter().enumerate() {
        text.push_str(&format!(
            "[species.{}]\nz = {z}\nd = {d}\nc0 = {c0}\ngamma = {gamma}\n\n",
            i + 1
        ));
    }
    text.push_str("[boundary]\nh.bottom = sine:0.5\nh.top = const:0\nh.left = const:0\nh.right = const:0\n\n[time]\nt_final = 1\n");
    parse_config(&text).unwrap()
}

fn boundedness() -> Outcome {
    let start = Instant::now();
    let shipped = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/inhomogeneous.cfg");
    let two = parse_config(&std::fs::read_to_string(shipped).unwrap()).unwrap();
    let three = inhomogeneous_config(&[
        (1.0, 0.7, "const:1 bump:2.0:0.4:0.5:0.2", "const:1 sine:0.5"),
        (-1.0, 0.7, "const:0.5 bump:1.0:0.6:0.4:0.25", "const:0.5"),
        (-1.0, 0.7, "const:0.5 bump:1.5:0.5:0.7:0.2", "const:0.5"),
    ]);
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, cfg) in [("two-species", two), ("equal-dz", three)] {
        let mode = cfg.species.mode();
        let sim = Simulation::new(cfg).unwrap();
        let (s0, _) = sim.initial_state().unwrap();
        match sim.run(s0) {
            Ok(traj) => {
                let window = (traj.records.len() / 10).max(10);
                let rep = check_boundedness(&traj.records, window).unwrap();
                let flags: Vec<String> =
                    rep.flags.iter().map(|f| format!("{}@{}", f.quantity, f.index)).collect();
                ok &= rep.passed;
                let gap = traj
                    .records
                    .iter()
                    .filter_map(|r| r.neutrality_gap)
                    .fold(f64::INFINITY, f64::min);
                if mode == SpeciesMode::TwoSpecies {
                    ok &= gap >= 0.0;
                }
                parts.push(format!(
                    "{name}: {} steps, flags {flags:?}, min(z1c1 - z2c2 - |rho|) {}",
                    traj.steps.len(),
                    if gap.is_finite() { format!("{gap:e}") } else { "n/a".into() }
                ));
            }
            Err(f) => {
                ok = false;
                parts.push(format!("{name}: {}", f.error));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        ok && within(elapsed, 300.0),
        format!("{}; {:.1}s", parts.join("; "), elapsed.as_secs_f64()),
    )
}

fn determinism() -> Outcome {
    let run_csv = || {
        let mut cfg = inhomogeneous_config(&[
            (1.0, 1.0, "const:1 bump:2.0:0.4:0.5:0.2", "const:1 sine:0.5"),
            (-1.0, 0.5, "const:1 bump:1.0:0.6:0.4:0.25", "const:1"),
        ]);
        cfg.t_final = 0.2;
        let sim = Simulation::new(cfg).unwrap();
        let (s0, _) = sim.initial_state().unwrap();
        diagnostics_csv(&sim.run(s0).unwrap().records, 2)
    };
    let (a, b) = (run_csv(), run_csv());
    let doc = parse_document(
        "[grid]\nnx = 20\nny = 30\nly = 1.5\n[species.1]\nz = 2\nd = 0.25\nc0 = const:0.1 bump:1:0.5:0.5:0.2\n\
         gamma.bottom = linear:0.1:0.3\ngamma.right = linear:0.3:0.1\ngamma.top = const:0.1\ngamma.left = const:0.1\n\
         [species.2]\nz = -1\nd = 0.1\n[physics]\nepsilon = 0.3\nK = 2.5\n",
    )
    .unwrap();
    let mut tiny_h = doc.clone();
    tiny_h.h = EdgeSet::uniform(EdgeProfile::constant(1e-7));
    let mut docs = vec![doc, tiny_h];
    let shipped = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    for entry in std::fs::read_dir(shipped).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            docs.push(parse_document(&std::fs::read_to_string(path).unwrap()).unwrap());
        }
    }
    let stable = docs.iter().all(|d| {
        let once = d.to_canonical();
        parse_document(&once).unwrap().to_canonical() == once
    });
    outcome(
        a == b && stable,
        format!(
            "diagnostics CSVs ({} bytes) {}; {} configs round trip {}",
            a.len(),
            if a == b { "identical" } else { "differ" },
            docs.len(),
            if stable { "byte-stable" } else { "unstable" }
        ),
    )
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("1 maximum principle", maximum_principle),
        ("2 energy decay", energy_decay),
        ("3 rest state fixed point", rest_state),
        ("4 Poisson and stream accuracy", poisson_accuracy),
        ("5 heat-kernel bounds", heat_kernel_bounds),
        ("6 manufactured-solution convergence", mms_convergence),
        ("7 boundedness monitors", boundedness),
        ("8 determinism and config round trip", determinism),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.starts_with(o.as_str())) {
            continue;
        }
        let o = check();
        if !o.passed {
            failed += 1;
        }
        println!("criterion {name}: {} ({})", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
