//! Solvers for the five-point M-matrix systems produced by the implicit
//! concentration update. Both keep every iterate nonnegative for
//! nonnegative data, exactly in floating point: each operation combines
//! nonnegative quantities with nonnegative weights.

use crate::error::{NpeError, Result};

/// Relative residual required of a solve.
pub(crate) const SOLVE_TOLERANCE: f64 = 1e-10;
const TARGET: f64 = 1e-13;

/// Five-point operator on an `mx` by `my` interior lattice. Off-diagonal
/// coefficients are nonpositive; entries pointing outside the lattice are
/// ignored.
#[derive(Debug, Clone)]
pub(crate) struct FivePoint {
    pub mx: usize,
    pub my: usize,
    pub diag: Vec<f64>,
    pub west: Vec<f64>,
    pub east: Vec<f64>,
    pub south: Vec<f64>,
    pub north: Vec<f64>,
}

impl FivePoint {
    pub fn new(mx: usize, my: usize) -> Self {
        let n = mx * my;
        Self {
            mx,
            my,
            diag: vec![0.0; n],
            west: vec![0.0; n],
            east: vec![0.0; n],
            south: vec![0.0; n],
            north: vec![0.0; n],
        }
    }

    #[inline]
    fn off_sum(&self, x: &[f64], k: usize) -> f64 {
        let (i, j) = (k % self.mx, k / self.mx);
        let mut s = 0.0;
        if i > 0 {
            s += self.west[k] * x[k - 1];
        }
        if i + 1 < self.mx {
            s += self.east[k] * x[k + 1];
        }
        if j > 0 {
            s += self.south[k] * x[k - self.mx];
        }
        if j + 1 < self.my {
            s += self.north[k] * x[k + self.mx];
        }
        s
    }

    /// `max |b - A x| / max(|b|, |diag| |x|)`.
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut r: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for k in 0..b.len() {
            let ax = self.diag[k] * x[k] + self.off_sum(x, k);
            r = r.max((b[k] - ax).abs());
            scale = scale.max(b[k].abs()).max((self.diag[k] * x[k]).abs());
        }
        if scale == 0.0 {
            r
        } else {
            r / scale
        }
    }

    /// Row-sum bound on the Jacobi iteration matrix.
    fn jacobi_contraction(&self) -> f64 {
        (0..self.diag.len())
            .map(|k| {
                -(self.west[k] + self.east[k] + self.south[k] + self.north[k]) / self.diag[k]
            })
            .fold(0.0, f64::max)
    }

    pub fn solve(&self, b: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
        let rho = self.jacobi_contraction();
        let band = self.mx.min(self.my) as f64;
        let sweeps = if rho <= 0.0 {
            1.0
        } else if rho < 1.0 {
            (TARGET.ln() / (2.0 * rho.ln())).ceil().max(1.0)
        } else {
            f64::INFINITY
        };
        let x = if sweeps * 12.0 < 2.0 * band * band {
            match self.gauss_seidel(b, guess, 3 * sweeps as usize + 20) {
                Some(x) => x,
                None => self.banded_lu(b),
            }
        } else {
            self.banded_lu(b)
        };
        let res = self.relative_residual(&x, b);
        if !(res <= SOLVE_TOLERANCE) {
            return Err(NpeError::SolverFailure {
                iterations: 0,
                residual: res,
            });
        }
        Ok(x)
    }

    fn gauss_seidel(&self, b: &[f64], guess: &[f64], max_sweeps: usize) -> Option<Vec<f64>> {
        let mut x: Vec<f64> = guess.iter().map(|v| v.max(0.0)).collect();
        for sweep in 0..max_sweeps {
            for k in 0..b.len() {
                x[k] = (b[k] - self.off_sum(&x, k)) / self.diag[k];
            }
            if sweep % 4 == 3 && self.relative_residual(&x, b) <= TARGET {
                return Some(x);
            }
        }
        (self.relative_residual(&x, b) <= TARGET).then_some(x)
    }

    /// Band LU without pivoting, with bandwidth `mx`. The elimination of an
    /// M-matrix keeps the multipliers nonpositive, so no pivoting is needed.
    fn banded_lu(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let bw = self.mx;
        let width = 2 * bw + 1;
        let mut a = vec![0.0; n * width];
        let at = |r: usize, c: usize| r * width + c + bw - r;
        for k in 0..n {
            let (i, j) = (k % self.mx, k / self.mx);
            a[at(k, k)] = self.diag[k];
            if i > 0 {
                a[at(k, k - 1)] = self.west[k];
            }
            if i + 1 < self.mx {
                a[at(k, k + 1)] = self.east[k];
            }
            if j > 0 {
                a[at(k, k - bw)] = self.south[k];
            }
            if j + 1 < self.my {
                a[at(k, k + bw)] = self.north[k];
            }
        }
        for k in 0..n {
            let last = (k + bw).min(n - 1);
            let pivot = a[at(k, k)];
            for r in k + 1..=last {
                let ark = a[at(r, k)];
                if ark == 0.0 {
                    continue;
                }
                let l = ark / pivot;
                a[at(r, k)] = l;
                let (src, dst) = (at(k, k + 1), at(r, k + 1));
                let len = last - k;
                let (head, tail) = a.split_at_mut(dst);
                for (d, s) in tail[..len].iter_mut().zip(&head[src..src + len]) {
                    *d -= l * s;
                }
            }
        }
        let mut x = b.to_vec();
        for r in 0..n {
            let mut s = x[r];
            for c in r.saturating_sub(bw)..r {
                s -= a[at(r, c)] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..=(r + bw).min(n - 1) {
                s -= a[at(r, c)] * x[c];
            }
            x[r] = s / a[at(r, r)];
        }
        x
    }
}
