//! Run directories: resolved config, manifest, diagnostics CSV and VTK
//! snapshots. Every file is written under a temporary name and renamed into
//! place, so a reader never sees a half-written file.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use crate::coupling::{RunFailure, SimConfig, SimState, Simulation, Trajectory};
use crate::diagnostics::{self, csv_header, csv_row, DiagnosticsRecord, SeriesRecorder};
use crate::error::{NpeError, Result};
use crate::mesh::export::{read_vtk, write_vtk};
use crate::mesh::ScalarField;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CONFIG_FILE: &str = "config.cfg";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const RECOMPUTED_FILE: &str = "diagnostics_recomputed.csv";
pub const FAILURE_FILE: &str = "FAILURE";
pub const ERROR_LOG: &str = "error.log";

/// Provenance of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: RunConfig,
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub tool_version: String,
    /// SHA-256 of the canonical config text.
    pub checksum: String,
}

impl RunManifest {
    pub fn new(config: RunConfig, input: Option<PathBuf>, output_dir: PathBuf) -> Self {
        let checksum = config.checksum();
        Self {
            config,
            input,
            output_dir,
            tool_version: TOOL_VERSION.to_string(),
            checksum,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.checksum == self.config.checksum()
    }

    pub fn to_text(&self) -> String {
        let input = self
            .input
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        format!(
            "tool_version = {}\ninput = {}\noutput_dir = {}\nconfig = {}\nconfig_sha256 = {}\n",
            self.tool_version,
            input,
            self.output_dir.display(),
            CONFIG_FILE,
            self.checksum
        )
    }
}

/// Writes `bytes` to `path` via a `.partial` sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord], species: usize) -> String {
    let mut s = csv_header(species);
    s.push('\n');
    for r in records {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}

pub fn snapshot_name(index: usize) -> String {
    format!("snapshot_{index:04}.vtk")
}

const TITLE_PREFIX: &str = "npe snapshot t=";

/// Legacy VTK text of one state.
pub fn snapshot_vtk(state: &SimState) -> Result<Vec<u8>> {
    let names: Vec<String> = (1..=state.c.len()).map(|i| format!("c_{i}")).collect();
    let mut fields: Vec<(&str, &ScalarField)> =
        names.iter().map(String::as_str).zip(state.c.iter()).collect();
    let v = &state.vorticity;
    fields.extend([
        ("rho", &state.rho),
        ("phi", &state.phi),
        ("omega", &v.omega),
        ("theta", &v.theta),
        ("u_x", &v.u.x),
        ("u_y", &v.u.y),
    ]);
    let mut out = Vec::new();
    write_vtk(&mut out, &format!("{TITLE_PREFIX}{:?}", state.t), &fields)?;
    Ok(out)
}

fn write_common(dir: &Path, manifest: &RunManifest, traj: &Trajectory, species: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    let _ = fs::remove_file(dir.join(FAILURE_FILE));
    write_atomic(&dir.join(CONFIG_FILE), manifest.config.to_canonical().as_bytes())?;
    write_atomic(&dir.join(MANIFEST_FILE), manifest.to_text().as_bytes())?;
    for stale in snapshot_files(dir)? {
        fs::remove_file(stale)?;
    }
    if manifest.config.snapshots {
        for (k, s) in traj.snapshots.iter().enumerate() {
            write_atomic(&dir.join(snapshot_name(k)), &snapshot_vtk(s)?)?;
        }
    }
    write_atomic(
        &dir.join(DIAGNOSTICS_FILE),
        diagnostics_csv(&traj.records, species).as_bytes(),
    )
}

/// Writes the outputs of a completed run.
pub fn write_run(dir: &Path, manifest: &RunManifest, traj: &Trajectory) -> Result<()> {
    write_common(dir, manifest, traj, manifest.config.species.len())
}

/// Writes what a failed run produced, followed by the `FAILURE` marker.
pub fn write_failure(dir: &Path, manifest: &RunManifest, failure: &RunFailure) -> Result<()> {
    write_common(dir, manifest, &failure.trajectory, manifest.config.species.len())?;
    let t = failure.trajectory.final_state.t;
    let text = format!(
        "run failed after t = {t:?} ({} steps): {}\n",
        failure.trajectory.steps.len(),
        failure.error
    );
    write_atomic(&dir.join(FAILURE_FILE), text.as_bytes())
}

/// Leaves only an error log in `dir`.
pub fn write_error_log(dir: &Path, message: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join(ERROR_LOG), format!("{message}\n").as_bytes())
}

/// Snapshot files of a run directory in index order.
pub fn snapshot_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snapshot_") && n.ends_with(".vtk"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Reads a snapshot back into a consistent state of `sim`.
pub fn read_snapshot(sim: &Simulation, path: &Path) -> Result<SimState> {
    let snap = read_vtk(BufReader::new(fs::File::open(path)?))?;
    let bad = |m: String| NpeError::Snapshot(format!("{}: {m}", path.display()));
    let t: f64 = snap
        .title
        .strip_prefix(TITLE_PREFIX)
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| bad("missing time in title".into()))?;
    let grid = sim.config().grid;
    let take = |name: &str| -> Result<ScalarField> {
        let f = snap
            .field(name)
            .ok_or_else(|| bad(format!("missing field {name}")))?;
        if f.grid().nx() != grid.nx() || f.grid().ny() != grid.ny() {
            return Err(bad("grid differs from the run configuration".into()));
        }
        ScalarField::from_values(grid, f.values().to_vec())
    };
    let c = (1..=sim.config().species.len())
        .map(|i| take(&format!("c_{i}")))
        .collect::<Result<Vec<_>>>()?;
    sim.state_from(t, c, take("omega")?)
}

/// Recomputes diagnostics from the stored config and snapshots of a run
/// directory, writes them next to the originals and returns them.
pub fn recompute_diagnostics(dir: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = fs::read_to_string(dir.join(CONFIG_FILE))?;
    let cfg: SimConfig = super::config::parse_config(&text)?;
    let sim = Simulation::new(cfg)?;
    let files = snapshot_files(dir)?;
    if files.is_empty() {
        return Err(NpeError::Snapshot(format!("no snapshots in {}", dir.display())));
    }
    let mut recorder = SeriesRecorder::new(sim.config());
    let records = files
        .iter()
        .map(|p| {
            let s = read_snapshot(&sim, p)?;
            Ok(recorder.push(diagnostics::record(&s, sim.config()), None))
        })
        .collect::<Result<Vec<_>>>()?;
    write_atomic(
        &dir.join(RECOMPUTED_FILE),
        diagnostics_csv(&records, sim.config().species.len()).as_bytes(),
    )?;
    Ok(records)
}
