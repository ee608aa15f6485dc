//! Named analytic profiles for initial fields and boundary data, written as
//! whitespace-separated `kind:arg:arg` terms that are summed.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{NpeError, Result};
use crate::mesh::{BoundaryTrace, Grid, ScalarField};

fn parse_args(term: &str, kind: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let args: Vec<&str> = term.split(':').skip(1).collect();
    if args.len() != n {
        return Err(format!("'{kind}' takes {n} argument(s) in '{term}'"));
    }
    args.iter()
        .map(|a| {
            a.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("bad number '{a}' in '{term}'"))
        })
        .collect()
}

fn join<T: fmt::Display>(f: &mut fmt::Formatter<'_>, terms: &[T]) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "const:0.0");
    }
    for (k, t) in terms.iter().enumerate() {
        if k > 0 {
            write!(f, " ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

/// One term of an edge profile; `s` runs along the edge, `L` is its length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeTerm {
    /// `v`
    Const(f64),
    /// `a sin(pi s / L)`
    Sine(f64),
    /// `a + (b - a) s / L`
    Linear(f64, f64),
}

impl fmt::Display for EdgeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeTerm::Const(v) => write!(f, "const:{v:?}"),
            EdgeTerm::Sine(a) => write!(f, "sine:{a:?}"),
            EdgeTerm::Linear(a, b) => write!(f, "linear:{a:?}:{b:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeProfile(pub Vec<EdgeTerm>);

impl EdgeProfile {
    pub fn constant(v: f64) -> Self {
        Self(vec![EdgeTerm::Const(v)])
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut terms = Vec::new();
        for term in text.split_whitespace() {
            let kind = term.split(':').next().unwrap_or_default();
            terms.push(match kind {
                "const" => EdgeTerm::Const(parse_args(term, kind, 1)?[0]),
                "sine" => EdgeTerm::Sine(parse_args(term, kind, 1)?[0]),
                "linear" => {
                    let a = parse_args(term, kind, 2)?;
                    EdgeTerm::Linear(a[0], a[1])
                }
                _ => {
                    return Err(format!(
                        "unknown edge profile '{term}' (expected const:v, sine:a or linear:a:b)"
                    ))
                }
            });
        }
        if terms.is_empty() {
            return Err("empty edge profile".into());
        }
        Ok(Self(terms))
    }

    pub fn eval(&self, s: f64, length: f64) -> f64 {
        self.0
            .iter()
            .map(|t| match *t {
                EdgeTerm::Const(v) => v,
                EdgeTerm::Sine(a) => a * (PI * s / length).sin(),
                EdgeTerm::Linear(a, b) => a + (b - a) * s / length,
            })
            .sum()
    }
}

impl fmt::Display for EdgeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        join(f, &self.0)
    }
}

/// Profiles of the four edges. Bottom and top run in `x`, left and right
/// in `y`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeSet {
    pub bottom: EdgeProfile,
    pub top: EdgeProfile,
    pub left: EdgeProfile,
    pub right: EdgeProfile,
}

impl EdgeSet {
    pub fn uniform(p: EdgeProfile) -> Self {
        Self {
            bottom: p.clone(),
            top: p.clone(),
            left: p.clone(),
            right: p,
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.bottom == self.top && self.bottom == self.left && self.bottom == self.right
    }

    pub fn edge_mut(&mut self, name: &str) -> Option<&mut EdgeProfile> {
        match name {
            "bottom" => Some(&mut self.bottom),
            "top" => Some(&mut self.top),
            "left" => Some(&mut self.left),
            "right" => Some(&mut self.right),
            _ => None,
        }
    }

    pub fn trace(&self, grid: Grid) -> Result<BoundaryTrace> {
        let along = |p: &EdgeProfile, n: usize, h: f64, l: f64| -> Vec<f64> {
            (0..n).map(|k| p.eval(k as f64 * h, l)).collect()
        };
        let (nx, ny, hx, hy) = (grid.nx(), grid.ny(), grid.hx(), grid.hy());
        BoundaryTrace::new(
            grid,
            along(&self.bottom, nx, hx, grid.lx()),
            along(&self.top, nx, hx, grid.lx()),
            along(&self.left, ny, hy, grid.ly()),
            along(&self.right, ny, hy, grid.ly()),
        )
    }
}

/// One term of an interior field profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldTerm {
    /// `v`
    Const(f64),
    /// `a sin(m pi x / Lx) sin(n pi y / Ly)`
    Sines { a: f64, m: u32, n: u32 },
    /// `a exp(-|p - p0|^2 / r^2)`
    Gaussian { a: f64, x0: f64, y0: f64, r: f64 },
    /// Smooth compactly supported bump of height `a` and radius `r`.
    Bump { a: f64, x0: f64, y0: f64, r: f64 },
}

impl fmt::Display for FieldTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FieldTerm::Const(v) => write!(f, "const:{v:?}"),
            FieldTerm::Sines { a, m, n } => write!(f, "sines:{a:?}:{m}:{n}"),
            FieldTerm::Gaussian { a, x0, y0, r } => write!(f, "gaussian:{a:?}:{x0:?}:{y0:?}:{r:?}"),
            FieldTerm::Bump { a, x0, y0, r } => write!(f, "bump:{a:?}:{x0:?}:{y0:?}:{r:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldProfile(pub Vec<FieldTerm>);

impl FieldProfile {
    pub fn constant(v: f64) -> Self {
        Self(vec![FieldTerm::Const(v)])
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut terms = Vec::new();
        for term in text.split_whitespace() {
            let kind = term.split(':').next().unwrap_or_default();
            let positive_radius = |r: f64| {
                if r > 0.0 {
                    Ok(r)
                } else {
                    Err(format!("radius must be positive in '{term}'"))
                }
            };
            terms.push(match kind {
                "const" => FieldTerm::Const(parse_args(term, kind, 1)?[0]),
                "sines" => {
                    let a = parse_args(term, kind, 3)?;
                    let wave = |v: f64| {
                        if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                            Ok(v as u32)
                        } else {
                            Err(format!("mode numbers must be positive integers in '{term}'"))
                        }
                    };
                    FieldTerm::Sines { a: a[0], m: wave(a[1])?, n: wave(a[2])? }
                }
                "gaussian" | "bump" => {
                    let a = parse_args(term, kind, 4)?;
                    let (a, x0, y0, r) = (a[0], a[1], a[2], positive_radius(a[3])?);
                    if kind == "bump" {
                        FieldTerm::Bump { a, x0, y0, r }
                    } else {
                        FieldTerm::Gaussian { a, x0, y0, r }
                    }
                }
                _ => {
                    return Err(format!(
                        "unknown field profile '{term}' (expected const, sines, gaussian or bump)"
                    ))
                }
            });
        }
        if terms.is_empty() {
            return Err("empty field profile".into());
        }
        Ok(Self(terms))
    }

    pub fn eval(&self, x: f64, y: f64, lx: f64, ly: f64) -> f64 {
        self.0
            .iter()
            .map(|t| match *t {
                FieldTerm::Const(v) => v,
                FieldTerm::Sines { a, m, n } => {
                    a * (m as f64 * PI * x / lx).sin() * (n as f64 * PI * y / ly).sin()
                }
                FieldTerm::Gaussian { a, x0, y0, r } => {
                    a * (-((x - x0).powi(2) + (y - y0).powi(2)) / (r * r)).exp()
                }
                FieldTerm::Bump { a, x0, y0, r } => {
                    let q = ((x - x0).powi(2) + (y - y0).powi(2)) / (r * r);
                    if q < 1.0 {
                        a * (1.0 - 1.0 / (1.0 - q)).exp()
                    } else {
                        0.0
                    }
                }
            })
            .sum()
    }

    pub fn field(&self, grid: Grid) -> ScalarField {
        ScalarField::from_fn(grid, |x, y| self.eval(x, y, grid.lx(), grid.ly()))
    }
}

impl fmt::Display for FieldProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        join(f, &self.0)
    }
}

pub(crate) fn parse_error(line: usize) -> impl Fn(String) -> NpeError {
    move |message| NpeError::Parse { line, message }
}
