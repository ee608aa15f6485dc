use crate::error::{NpeError, Result};

/// Applies the negative five-point Laplacian to interior values `w`
/// (`mx` by `my`, zero Dirichlet data outside).
pub(crate) fn apply_neg_laplacian(w: &[f64], out: &mut [f64], mx: usize, my: usize, hx: f64, hy: f64) {
    let (ax, ay) = (1.0 / (hx * hx), 1.0 / (hy * hy));
    for j in 0..my {
        for i in 0..mx {
            let k = j * mx + i;
            let c = w[k];
            let west = if i > 0 { w[k - 1] } else { 0.0 };
            let east = if i + 1 < mx { w[k + 1] } else { 0.0 };
            let south = if j > 0 { w[k - mx] } else { 0.0 };
            let north = if j + 1 < my { w[k + mx] } else { 0.0 };
            out[k] = ax * (2.0 * c - west - east) + ay * (2.0 * c - south - north);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unpreconditioned conjugate gradients for `-Lap w = b` on the interior.
/// The diagonal is constant, so Jacobi scaling would change nothing.
pub(crate) fn conjugate_gradient(
    b: &[f64],
    mx: usize,
    my: usize,
    hx: f64,
    hy: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for it in 0..max_iter {
        apply_neg_laplacian(&p, &mut ap, mx, my, hx, hy);
        let alpha = rr / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= tol * b_norm {
            log::trace!("cg converged in {} iterations", it + 1);
            return Ok(x);
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    Err(NpeError::SolverFailure {
        iterations: max_iter,
        residual: rr.sqrt() / b_norm,
    })
}
