//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [grid]        nx, ny, lx, ly
//! [physics]     epsilon, K, mode, interpolation, advection, omega0
//! [species.N]   z, d, c0, gamma, gamma.bottom|top|left|right
//! [boundary]    h, h.bottom|top|left|right
//! [time]        t_final, cfl, picard_k, picard_tol
//! [output]      cadence, p_monitor, snapshots
//! ```
//!
//! `#` and `;` start comments. Missing keys take their defaults except
//! `nx`, `ny` and each species' `z` and `d`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::profile::{parse_error, EdgeProfile, EdgeSet, FieldProfile};
use crate::coupling::SimConfig;
use crate::error::{NpeError, Result};
use crate::euler::Interpolation;
use crate::mesh::Grid;
use crate::nernst_planck::{AdvectionScheme, Species, SpeciesMode, SpeciesSet};

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesSpec {
    pub z: f64,
    pub d: f64,
    pub c0: FieldProfile,
    pub gamma: EdgeSet,
}

/// A configuration document with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub epsilon: f64,
    pub k: f64,
    pub mode: SpeciesMode,
    pub interpolation: Interpolation,
    pub advection: AdvectionScheme,
    pub omega0: FieldProfile,
    pub species: Vec<SpeciesSpec>,
    pub h: EdgeSet,
    pub t_final: f64,
    pub cfl: f64,
    pub picard_k: usize,
    pub picard_tol: f64,
    pub cadence: f64,
    pub p_monitor: f64,
    /// Write field snapshots at every output time.
    pub snapshots: bool,
}

#[derive(Default)]
struct PartialSpecies {
    z: Option<f64>,
    d: Option<f64>,
    c0: Option<FieldProfile>,
    gamma: Option<EdgeProfile>,
    edges: BTreeMap<String, EdgeProfile>,
    line: usize,
}

fn number(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("expected a finite number, got '{v}'"))
}

fn count(v: &str) -> std::result::Result<usize, String> {
    v.parse::<usize>()
        .map_err(|_| format!("expected a nonnegative integer, got '{v}'"))
}

fn flag(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got '{v}'")),
    }
}

/// Parses a document and applies defaults. Does not check physical
/// constraints; see [`RunConfig::resolve`].
pub fn parse_document(text: &str) -> Result<RunConfig> {
    let mut seen: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut values: BTreeMap<(String, String), (String, usize)> = BTreeMap::new();
    let mut species: BTreeMap<usize, PartialSpecies> = BTreeMap::new();
    let mut section: Option<String> = None;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = parse_error(line);
        let content = raw.split(['#', ';']).next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(format!("unterminated section header '{content}'")))?
                .trim();
            let known = matches!(name, "grid" | "physics" | "boundary" | "time" | "output");
            if let Some(idx) = name.strip_prefix("species.") {
                let i = idx
                    .parse::<usize>()
                    .ok()
                    .filter(|&i| i >= 1)
                    .ok_or_else(|| err(format!("bad species index in '[{name}]'")))?;
                species.entry(i).or_default().line = line;
            } else if !known {
                return Err(err(format!("unknown section '[{name}]'")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'key = value', got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section
            .clone()
            .ok_or_else(|| err(format!("key '{key}' appears before any section")))?;
        if let Some(first) = seen.insert((sec.clone(), key.to_string()), line) {
            return Err(err(format!("duplicate key '{key}' (first set on line {first})")));
        }
        if let Some(idx) = sec.strip_prefix("species.") {
            let sp = species.get_mut(&idx.parse().expect("validated header")).expect("header seen");
            match key {
                "z" => sp.z = Some(number(value).map_err(&err)?),
                "d" => sp.d = Some(number(value).map_err(&err)?),
                "c0" => sp.c0 = Some(FieldProfile::parse(value).map_err(&err)?),
                "gamma" => sp.gamma = Some(EdgeProfile::parse(value).map_err(&err)?),
                _ => match key.strip_prefix("gamma.") {
                    Some(edge @ ("bottom" | "top" | "left" | "right")) => {
                        sp.edges
                            .insert(edge.to_string(), EdgeProfile::parse(value).map_err(&err)?);
                    }
                    _ => return Err(err(format!("unknown key '{key}' in [{sec}]"))),
                },
            }
            continue;
        }
        let allowed: &[&str] = match sec.as_str() {
            "grid" => &["nx", "ny", "lx", "ly"],
            "physics" => &["epsilon", "K", "mode", "interpolation", "advection", "omega0"],
            "boundary" => &["h", "h.bottom", "h.top", "h.left", "h.right"],
            "time" => &["t_final", "cfl", "picard_k", "picard_tol"],
            _ => &["cadence", "p_monitor", "snapshots"],
        };
        if !allowed.contains(&key) {
            return Err(err(format!("unknown key '{key}' in [{sec}]")));
        }
        values.insert((sec, key.to_string()), (value.to_string(), line));
    }

    let get = |sec: &str, key: &str| values.get(&(sec.to_string(), key.to_string()));
    fn typed<T>(
        entry: Option<&(String, usize)>,
        default: Option<T>,
        what: &str,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Result<T> {
        match entry {
            Some((v, line)) => parse(v).map_err(parse_error(*line)),
            None => default.ok_or_else(|| NpeError::Validation(format!("missing required key {what}"))),
        }
    }
    let edge_set = |sec: &str, base: &str| -> Result<EdgeSet> {
        let mut set = EdgeSet::uniform(typed(
            get(sec, base),
            Some(EdgeProfile::constant(0.0)),
            base,
            EdgeProfile::parse,
        )?);
        for edge in ["bottom", "top", "left", "right"] {
            if let Some((v, line)) = get(sec, &format!("{base}.{edge}")) {
                *set.edge_mut(edge).expect("edge name") =
                    EdgeProfile::parse(v).map_err(parse_error(*line))?;
            }
        }
        Ok(set)
    };

    let mut specs = Vec::with_capacity(species.len());
    for (expected, (i, sp)) in species.into_iter().enumerate() {
        if i != expected + 1 {
            return Err(parse_error(sp.line)(format!(
                "species sections must be numbered 1, 2, ... without gaps (found {i})"
            )));
        }
        let missing = |k: &str| NpeError::Validation(format!("missing required key [species.{i}] {k}"));
        let mut gamma = EdgeSet::uniform(sp.gamma.unwrap_or_else(|| EdgeProfile::constant(0.0)));
        for (edge, p) in sp.edges {
            *gamma.edge_mut(&edge).expect("edge name") = p;
        }
        specs.push(SpeciesSpec {
            z: sp.z.ok_or_else(|| missing("z"))?,
            d: sp.d.ok_or_else(|| missing("d"))?,
            c0: sp.c0.unwrap_or_else(|| FieldProfile::constant(0.0)),
            gamma,
        });
    }
    if specs.is_empty() {
        return Err(NpeError::Validation("at least one [species.N] section is required".into()));
    }
    let zd: Vec<(f64, f64)> = specs.iter().map(|s| (s.z, s.d)).collect();

    Ok(RunConfig {
        nx: typed(get("grid", "nx"), None, "[grid] nx", count)?,
        ny: typed(get("grid", "ny"), None, "[grid] ny", count)?,
        lx: typed(get("grid", "lx"), Some(1.0), "", number)?,
        ly: typed(get("grid", "ly"), Some(1.0), "", number)?,
        epsilon: typed(get("physics", "epsilon"), Some(1.0), "", number)?,
        k: typed(get("physics", "K"), Some(1.0), "", number)?,
        mode: typed(get("physics", "mode"), Some(SpeciesMode::infer_from(&zd)), "", |v| {
            SpeciesMode::parse(v).ok_or_else(|| {
                format!("unknown mode '{v}' (expected two-species, equal-dz or unrestricted)")
            })
        })?,
        interpolation: typed(get("physics", "interpolation"), Some(Interpolation::default()), "", |v| {
            Interpolation::parse(v)
                .ok_or_else(|| format!("unknown interpolation '{v}' (expected bilinear or bicubic)"))
        })?,
        advection: typed(get("physics", "advection"), Some(AdvectionScheme::default()), "", |v| {
            AdvectionScheme::parse(v)
                .ok_or_else(|| format!("unknown advection '{v}' (expected fitted or upwind)"))
        })?,
        omega0: typed(
            get("physics", "omega0"),
            Some(FieldProfile::constant(0.0)),
            "",
            FieldProfile::parse,
        )?,
        species: specs,
        h: edge_set("boundary", "h")?,
        t_final: typed(get("time", "t_final"), Some(1.0), "", number)?,
        cfl: typed(get("time", "cfl"), Some(0.5), "", number)?,
        picard_k: typed(get("time", "picard_k"), Some(1), "", count)?,
        picard_tol: typed(get("time", "picard_tol"), Some(1e-10), "", number)?,
        cadence: typed(get("output", "cadence"), Some(0.1), "", number)?,
        p_monitor: typed(get("output", "p_monitor"), Some(4.0), "", number)?,
        snapshots: typed(get("output", "snapshots"), Some(true), "", flag)?,
    })
}

/// Parses and resolves in one go.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    parse_document(text)?.resolve()
}

fn write_edges(out: &mut String, base: &str, set: &EdgeSet) {
    if set.is_uniform() {
        let _ = writeln!(out, "{base} = {}", set.bottom);
    } else {
        for (edge, p) in [("bottom", &set.bottom), ("top", &set.top), ("left", &set.left), ("right", &set.right)] {
            let _ = writeln!(out, "{base}.{edge} = {p}");
        }
    }
}

impl RunConfig {
    /// Canonical text: fixed key order, every key explicit, shortest
    /// round-trip number formatting.
    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[grid]\nnx = {}\nny = {}\nlx = {:?}\nly = {:?}", self.nx, self.ny, self.lx, self.ly);
        let _ = writeln!(
            s,
            "\n[physics]\nepsilon = {:?}\nK = {:?}\nmode = {}\ninterpolation = {}\nadvection = {}\nomega0 = {}",
            self.epsilon,
            self.k,
            self.mode.name(),
            self.interpolation.name(),
            self.advection.name(),
            self.omega0
        );
        for (i, sp) in self.species.iter().enumerate() {
            let _ = writeln!(s, "\n[species.{}]\nz = {:?}\nd = {:?}\nc0 = {}", i + 1, sp.z, sp.d, sp.c0);
            write_edges(&mut s, "gamma", &sp.gamma);
        }
        s.push_str("\n[boundary]\n");
        write_edges(&mut s, "h", &self.h);
        let _ = writeln!(
            s,
            "\n[time]\nt_final = {:?}\ncfl = {:?}\npicard_k = {}\npicard_tol = {:?}",
            self.t_final, self.cfl, self.picard_k, self.picard_tol
        );
        let _ = writeln!(
            s,
            "\n[output]\ncadence = {:?}\np_monitor = {:?}\nsnapshots = {}",
            self.cadence, self.p_monitor, self.snapshots
        );
        s
    }

    /// SHA-256 of the canonical text, lowercase hex.
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical().as_bytes()))
    }

    /// Builds the solver configuration, enforcing every constraint.
    pub fn resolve(&self) -> Result<SimConfig> {
        let grid = Grid::new(self.nx, self.ny, self.lx, self.ly)?;
        let species = self
            .species
            .iter()
            .enumerate()
            .map(|(i, sp)| {
                let gamma = sp.gamma.trace(grid).map_err(|e| {
                    NpeError::Validation(format!("species {}: {e}", i + 1))
                })?;
                Species::new(sp.z, sp.d, gamma, sp.c0.field(grid))
                    .map_err(|e| NpeError::Validation(format!("species {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut cfg = SimConfig::new(grid, SpeciesSet::new(species, self.mode)?);
        cfg.epsilon = self.epsilon;
        cfg.k = self.k;
        cfg.h = self.h.trace(grid)?;
        cfg.omega0 = self.omega0.field(grid);
        cfg.t_final = self.t_final;
        cfg.cfl = self.cfl;
        cfg.picard_k = self.picard_k;
        cfg.picard_tol = self.picard_tol;
        cfg.cadence = self.cadence;
        cfg.p_monitor = self.p_monitor;
        cfg.interpolation = self.interpolation;
        cfg.advection = self.advection;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[grid]
nx = 17
ny = 17

[species.1]
z = 1
d = 1
c0 = const:1

[species.2]
z = -1
d = 1
c0 = const:1
";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.species.len(), 2);
        assert_eq!(cfg.species.mode(), SpeciesMode::TwoSpecies);
        assert_eq!((cfg.epsilon, cfg.k, cfg.cfl), (1.0, 1.0, 0.5));
        assert_eq!((cfg.picard_k, cfg.p_monitor), (1, 4.0));
        assert!(cfg.h.is_zero());
    }

    #[test]
    fn canonical_text_is_a_fixed_point() {
        let text = format!(
            "{MINIMAL}\n[species.3]\nz = 2\nd = 0.3\ngamma = const:0.5 sine:0.25\n\
             c0 = bump:1.0:0.5:0.5:0.2 const:0.5\n[physics]\nmode = unrestricted\n\
             [boundary]\nh.bottom = linear:0:1\nh.right = const:1\nh.top = linear:0:1\n\
             h.left = const:0\n[time]\ncfl = 0.3\n"
        );
        let doc = parse_document(&text).unwrap();
        let once = doc.to_canonical();
        let again = parse_document(&once).unwrap();
        assert_eq!(again, doc);
        assert_eq!(again.to_canonical(), once);
        assert_eq!(doc.checksum(), again.checksum());
        assert_eq!(doc.checksum().len(), 64);
        doc.resolve().unwrap();
    }

    #[test]
    fn unknown_key_reports_name_and_line() {
        let text = MINIMAL.replace("d = 1\nc0 = const:1\n\n", "d = 1\nc0 = const:1\ncolour = red\n\n");
        match parse_document(&text) {
            Err(NpeError::Parse { line, message }) => {
                assert_eq!(line, 9);
                assert!(message.contains("colour"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_document("[grid]\nnx = 5\nnx = 6\n"),
            Err(NpeError::Parse { line: 3, .. })
        ));
        assert!(matches!(parse_document("[mesh]\n"), Err(NpeError::Parse { line: 1, .. })));
        assert!(matches!(parse_document("nx = 4\n"), Err(NpeError::Parse { line: 1, .. })));
    }

    #[test]
    fn violated_constraints_name_themselves() {
        let zero_d = MINIMAL.replacen("d = 1", "d = 0", 1);
        let e = parse_config(&zero_d).unwrap_err();
        assert!(e.to_string().contains("D > 0"), "{e}");
        let neg_gamma = MINIMAL.replacen("c0 = const:1", "c0 = const:1\ngamma = const:-1", 1);
        assert!(parse_config(&neg_gamma).unwrap_err().to_string().contains("gamma >= 0"));
        let bad_eps = format!("{MINIMAL}[physics]\nepsilon = 0\n");
        assert!(parse_config(&bad_eps).unwrap_err().to_string().contains("epsilon > 0"));
    }

    #[test]
    fn like_signed_pair_is_accepted() {
        let text = MINIMAL.replace("z = -1", "z = 1");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.species.mode(), SpeciesMode::TwoSpecies);
        assert!(cfg.species.opposite_pair().is_none());
    }

    #[test]
    fn missing_required_keys_are_reported() {
        assert!(parse_document("[grid]\nnx = 5\n[species.1]\nz = 1\nd = 1\n")
            .unwrap_err()
            .to_string()
            .contains("ny"));
        assert!(parse_document("[grid]\nnx = 5\nny = 5\n[species.1]\nz = 1\n")
            .unwrap_err()
            .to_string()
            .contains("[species.1] d"));
        assert!(matches!(
            parse_document("[grid]\nnx = 5\nny = 5\n[species.2]\nz = 1\nd = 1\n"),
            Err(NpeError::Parse { line: 4, .. })
        ));
    }
}
