use super::{Grid, ScalarField};
use crate::error::{NpeError, Result};

const CORNER_TOL: f64 = 1e-12;

/// Dirichlet data on the four edges of the rectangle.
///
/// `bottom`/`top` are indexed by `i` (length `nx`) and include the corners;
/// `left`/`right` are indexed by `j` (length `ny`). Corner values must agree
/// between adjacent edges.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    grid: Grid,
    bottom: Vec<f64>,
    top: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl BoundaryTrace {
    pub fn new(
        grid: Grid,
        bottom: Vec<f64>,
        top: Vec<f64>,
        left: Vec<f64>,
        right: Vec<f64>,
    ) -> Result<Self> {
        let (nx, ny) = (grid.nx(), grid.ny());
        for (name, edge, n) in [
            ("bottom", &bottom, nx),
            ("top", &top, nx),
            ("left", &left, ny),
            ("right", &right, ny),
        ] {
            if edge.len() != n {
                return Err(NpeError::InvalidBoundary(format!(
                    "{name} edge has {} values, expected {n}",
                    edge.len()
                )));
            }
            if let Some(v) = edge.iter().find(|v| !v.is_finite()) {
                return Err(NpeError::InvalidBoundary(format!(
                    "{name} edge holds non-finite value {v}"
                )));
            }
        }
        let corners = [
            ("bottom-left", bottom[0], left[0]),
            ("bottom-right", bottom[nx - 1], right[0]),
            ("top-left", top[0], left[ny - 1]),
            ("top-right", top[nx - 1], right[ny - 1]),
        ];
        for (name, a, b) in corners {
            if (a - b).abs() > CORNER_TOL {
                return Err(NpeError::InvalidBoundary(format!(
                    "{name} corner disagrees between edges ({a} vs {b})"
                )));
            }
        }
        Ok(Self {
            grid,
            bottom,
            top,
            left,
            right,
        })
    }

    pub fn zero(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, v: f64) -> Self {
        Self {
            grid,
            bottom: vec![v; grid.nx()],
            top: vec![v; grid.nx()],
            left: vec![v; grid.ny()],
            right: vec![v; grid.ny()],
        }
    }

    /// Samples `f` at the boundary nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let (lx, ly) = (grid.lx(), grid.ly());
        Self::new(
            grid,
            (0..grid.nx()).map(|i| f(grid.x(i), 0.0)).collect(),
            (0..grid.nx()).map(|i| f(grid.x(i), ly)).collect(),
            (0..grid.ny()).map(|j| f(0.0, grid.y(j))).collect(),
            (0..grid.ny()).map(|j| f(lx, grid.y(j))).collect(),
        )
    }

    /// Reads the boundary values of a field.
    pub fn from_field(f: &ScalarField) -> Self {
        let g = *f.grid();
        let (nx, ny) = (g.nx(), g.ny());
        Self {
            grid: g,
            bottom: (0..nx).map(|i| f.at(i, 0)).collect(),
            top: (0..nx).map(|i| f.at(i, ny - 1)).collect(),
            left: (0..ny).map(|j| f.at(0, j)).collect(),
            right: (0..ny).map(|j| f.at(nx - 1, j)).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn bottom(&self) -> &[f64] {
        &self.bottom
    }
    pub fn top(&self) -> &[f64] {
        &self.top
    }
    pub fn left(&self) -> &[f64] {
        &self.left
    }
    pub fn right(&self) -> &[f64] {
        &self.right
    }

    /// Value at boundary node `(i, j)`. Corners come from the bottom/top edges.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        if j == 0 {
            self.bottom[i]
        } else if j + 1 == ny {
            self.top[i]
        } else if i == 0 {
            self.left[j]
        } else if i + 1 == nx {
            self.right[j]
        } else {
            panic!("node ({i}, {j}) is not on the boundary")
        }
    }

    fn all(&self) -> impl Iterator<Item = f64> + '_ {
        self.bottom
            .iter()
            .chain(&self.top)
            .chain(&self.left)
            .chain(&self.right)
            .copied()
    }

    pub fn min(&self) -> f64 {
        self.all().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.all().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.all().all(|v| v == 0.0)
    }

    /// Overwrites the boundary nodes of `f`, returning the largest change made.
    pub fn apply(&self, f: &mut ScalarField) -> f64 {
        let g = self.grid;
        let mut change: f64 = 0.0;
        for (i, j) in g.boundary_nodes() {
            let v = self.value(i, j);
            change = change.max((f.at(i, j) - v).abs());
            f.set(i, j, v);
        }
        change
    }

    /// Transfinite bilinear (Coons) extension of the edge data into the
    /// interior; equals the trace exactly on the boundary nodes.
    pub fn lift(&self) -> ScalarField {
        let g = self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let (sw, se) = (self.bottom[0], self.bottom[nx - 1]);
        let (nw, ne) = (self.top[0], self.top[nx - 1]);
        let mut f = ScalarField::from_fn(g, |_, _| 0.0);
        for j in 0..ny {
            let r = g.y(j) / g.ly();
            for i in 0..nx {
                let s = g.x(i) / g.lx();
                let v = (1.0 - s) * self.left[j] + s * self.right[j] + (1.0 - r) * self.bottom[i]
                    + r * self.top[i]
                    - ((1.0 - s) * (1.0 - r) * sw
                        + s * (1.0 - r) * se
                        + (1.0 - s) * r * nw
                        + s * r * ne);
                f.set(i, j, v);
            }
        }
        self.apply(&mut f);
        f
    }
}
