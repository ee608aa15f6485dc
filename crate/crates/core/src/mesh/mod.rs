//! Uniform node lattice on a rectangle, node-centred fields, and the finite
//! difference machinery shared by every solver.
//!
//! Nodes are stored row-major with `x` running fastest: node `(i, j)` sits at
//! `(i * hx, j * hy)` and lives at index `j * nx + i`.

mod boundary;
pub mod export;
pub(crate) mod ops;

pub use boundary::BoundaryTrace;
pub use ops::{
    curl, divergence, gradient, integrate, interpolate, interpolate_bicubic, laplacian, lp_norm,
    perp_gradient,
};

use crate::error::{NpeError, Result};

/// Uniform grid over `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    hx: f64,
    hy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(NpeError::InvalidGrid(format!(
                "need at least 3 nodes per axis, got {nx} x {ny}"
            )));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(NpeError::InvalidGrid(format!(
                "side lengths must be positive, got {lx} x {ly}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            hx: lx / (nx - 1) as f64,
            hy: ly / (ny - 1) as f64,
        })
    }

    /// Square grid on the unit square.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    pub fn hy(&self) -> f64 {
        self.hy
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Inverse of [`Grid::idx`].
    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.lx
        } else {
            i as f64 * self.hx
        }
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        if j + 1 == self.ny {
            self.ly
        } else {
            j as f64 * self.hy
        }
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// Interior nodes diagonally adjacent to the four corners.
    pub fn corner_neighbours(&self) -> [(usize, usize); 4] {
        let (a, b) = (self.nx - 2, self.ny - 2);
        [(1, 1), (a, 1), (1, b), (a, b)]
    }

    /// Iterator over boundary node indices, each visited once.
    pub fn boundary_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (nx, ny) = (self.nx, self.ny);
        (0..nx)
            .flat_map(move |i| [(i, 0), (i, ny - 1)])
            .chain((1..ny - 1).flat_map(move |j| [(0, j), (nx - 1, j)]))
    }
}

/// Real value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, v: f64) -> Self {
        Self {
            grid,
            values: vec![v; grid.len()],
        }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                values.push(f(grid.x(i), y));
            }
        }
        Self { grid, values }
    }

    /// Wraps raw node values, checking the length and that every entry is finite.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(NpeError::FieldLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let field = Self { grid, values };
        field.check_finite()?;
        Ok(field)
    }

    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(NpeError::NonFinite {
                index,
                value: self.values[index],
            }),
            None => Ok(()),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Nodewise `f(self, other)`.
    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(NpeError::GridMismatch)
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Max-norm distance to another field on the same grid.
    pub fn max_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Smallest value over interior nodes.
    pub fn interior_min(&self) -> f64 {
        let g = self.grid;
        let mut m = f64::INFINITY;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                m = m.min(self.at(i, j));
            }
        }
        m
    }
}

/// Two-component field on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self> {
        x.same_grid(&y)?;
        Ok(Self { x, y })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        Self {
            x: ScalarField::from_fn(grid, |x, y| f(x, y).0),
            y: ScalarField::from_fn(grid, |x, y| f(x, y).1),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    /// Largest Euclidean length over all nodes.
    pub fn max_norm(&self) -> f64 {
        self.x
            .values()
            .iter()
            .zip(self.y.values())
            .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }

    /// Nodewise dot product.
    pub fn dot(&self, other: &VectorField) -> Result<ScalarField> {
        let xx = self.x.zip_with(&other.x, |a, b| a * b)?;
        let yy = self.y.zip_with(&other.y, |a, b| a * b)?;
        xx.zip_with(&yy, |a, b| a + b)
    }

    /// Nodewise squared length.
    pub fn norm_squared(&self) -> ScalarField {
        let grid = *self.grid();
        let values = self
            .x
            .values()
            .iter()
            .zip(self.y.values())
            .map(|(a, b)| a * a + b * b)
            .collect();
        ScalarField::from_values_unchecked(grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_degenerate_sizes() {
        assert!(Grid::new(2, 5, 1.0, 1.0).is_err());
        assert!(Grid::new(5, 5, 0.0, 1.0).is_err());
        assert!(Grid::new(5, 5, 1.0, f64::NAN).is_err());
        let g = Grid::new(5, 9, 2.0, 4.0).unwrap();
        assert_eq!(g.hx(), 0.5);
        assert_eq!(g.hy(), 0.5);
        assert_eq!(g.x(4), 2.0);
        assert_eq!(g.y(8), 4.0);
    }

    #[test]
    fn boundary_nodes_are_visited_once() {
        let g = Grid::new(5, 4, 1.0, 1.0).unwrap();
        let mut seen: Vec<_> = g.boundary_nodes().map(|(i, j)| g.idx(i, j)).collect();
        seen.sort_unstable();
        let before = seen.len();
        seen.dedup();
        assert_eq!(before, seen.len());
        assert_eq!(seen.len(), 2 * 5 + 2 * 2);
    }

    #[test]
    fn from_values_checks_length_and_finiteness() {
        let g = Grid::unit(3).unwrap();
        assert!(matches!(
            ScalarField::from_values(g, vec![0.0; 8]),
            Err(NpeError::FieldLength { .. })
        ));
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        assert!(matches!(
            ScalarField::from_values(g, v),
            Err(NpeError::NonFinite { index: 4, .. })
        ));
    }
}
