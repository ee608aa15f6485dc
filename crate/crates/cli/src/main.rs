//! `npe`: run simulations, manufactured-solution studies, heat-kernel checks
//! and diagnostics recomputation.
//!
//! Exit status is 0 on success, 1 for invalid input and 2 when a solver or
//! check fails.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use npe_core::coupling::Simulation;
use npe_core::heat_kernel::{verify_gaussian_bound_seeded, verify_sharp_family, KernelSpec};
use npe_core::io::{self, RunManifest};
use npe_core::mesh::Grid;
use npe_core::verification::{convergence_study, ManufacturedCase};
use npe_core::NpeError;

#[derive(Parser)]
#[command(name = "npe", version, about = "Nernst-Planck-Euler simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the number of Picard iterations per step.
        #[arg(long)]
        picard: Option<usize>,
    },
    /// Convergence study against a manufactured solution.
    Mms {
        /// static, diffusion or coupled.
        #[arg(long, default_value = "coupled")]
        case: String,
        #[arg(long, value_delimiter = ',', default_value = "33,65,129")]
        grids: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.02,0.01,0.005,0.0025")]
        dts: Vec<f64>,
        /// Directory for the order-report CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gaussian upper bound and smoothing checks of the heat kernel.
    KernelCheck {
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Offset into the quasi-random sequence.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the sample CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute diagnostics from the snapshots of a run directory.
    Diag {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<NpeError> for Failure {
    fn from(e: NpeError) -> Self {
        Failure {
            code: if e.is_input_error() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn input_error(message: String) -> Failure {
    Failure { code: 1, message }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("NPE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| input_error(format!("NPE_THREADS must be a nonnegative integer, got '{v}'")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure { code: 2, message: e.to_string() })?;
    }
    Ok(())
}

fn run(config: &Path, out: &Path, picard: Option<usize>) -> Result<String, Failure> {
    let logged = |f: Failure| {
        if let Err(e) = io::write_error_log(out, &f.message) {
            log::error!("could not write error log: {e}");
        }
        f
    };
    let text = fs::read_to_string(config)
        .map_err(|e| input_error(format!("cannot read {}: {e}", config.display())))
        .map_err(logged)?;
    let mut doc = io::parse_document(&text).map_err(Failure::from).map_err(logged)?;
    if let Some(k) = picard {
        doc.picard_k = k;
    }
    let cfg = doc.resolve().map_err(Failure::from).map_err(logged)?;
    let sim = Simulation::new(cfg).map_err(Failure::from).map_err(logged)?;
    let (initial, init) = sim.initial_state().map_err(Failure::from).map_err(logged)?;
    for (i, gap) in init.boundary_overwrite.iter().enumerate() {
        if *gap > 0.0 {
            log::warn!("species {}: initial boundary values replaced by the boundary data (max change {gap:e})", i + 1);
        }
    }
    let manifest = RunManifest::new(doc, Some(config.to_path_buf()), out.to_path_buf());
    match sim.run(initial) {
        Ok(traj) => {
            io::write_run(out, &manifest, &traj)?;
            Ok(format!(
                "completed t={:?} steps={} records={}",
                traj.final_state.t,
                traj.steps.len(),
                traj.records.len()
            ))
        }
        Err(failure) => {
            io::write_failure(out, &manifest, &failure)?;
            Err(Failure {
                code: 2,
                message: format!("run failed: {}", failure.error),
            })
        }
    }
}

fn emit(out: Option<&Path>, file: &str, body: &str, summary: String) -> Result<String, Failure> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(NpeError::from)?;
            io::output::write_atomic(&dir.join(file), body.as_bytes())?;
        }
        None => print!("{body}"),
    }
    Ok(summary)
}

fn mms(case: &str, grids: &[usize], dts: &[f64], out: Option<&Path>) -> Result<String, Failure> {
    let case = ManufacturedCase::by_name(case)?;
    let report = convergence_study(&case, grids, dts)?;
    emit(out, &format!("mms_{}.csv", case.name), &report.to_csv(), report.summary())
}

fn kernel_check(samples: usize, seed: u64, out: Option<&Path>) -> Result<String, Failure> {
    let bound = verify_gaussian_bound_seeded(&KernelSpec::unit(0), samples, seed)?;
    let gradient = verify_gaussian_bound_seeded(&KernelSpec::unit(1), samples, seed)?;
    let times = [0.1, 0.03, 0.01, 0.003, 0.001];
    let rates = verify_sharp_family(Grid::unit(129)?, 4.0, &times, 2.0)?;
    let mut csv = String::from("t,distance,ratio,gradient_ratio\n");
    for (a, b) in bound.samples.iter().zip(&gradient.samples) {
        let _ = writeln!(csv, "{:e},{:e},{:e},{:e}", a.t, a.distance(), a.ratio, b.ratio);
    }
    let passed = bound.passed() && gradient.passed() && rates.passed();
    let summary = format!(
        "max_ratio={:e} half_max_ratio={:e} gradient_max_ratio={:e} value_rate_sup={:e} gradient_rate_sup={:e} passed={passed}",
        bound.max_ratio, bound.half_max_ratio, gradient.max_ratio, rates.value_sup, rates.gradient_sup
    );
    let summary = emit(out, "kernel_check.csv", &csv, summary)?;
    if passed {
        Ok(summary)
    } else {
        println!("{summary}");
        Err(Failure { code: 2, message: "heat-kernel checks failed".into() })
    }
}

fn diag(dir: &Path) -> Result<String, Failure> {
    let records = io::recompute_diagnostics(dir)?;
    Ok(format!(
        "records={} written={}",
        records.len(),
        dir.join(io::output::RECOMPUTED_FILE).display()
    ))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Run { config, out, picard } => run(config, out, *picard),
        Command::Mms { case, grids, dts, out } => mms(case, grids, dts, out.as_deref()),
        Command::KernelCheck { samples, seed, out } => kernel_check(*samples, *seed, out.as_deref()),
        Command::Diag { out } => diag(out),
    });
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
