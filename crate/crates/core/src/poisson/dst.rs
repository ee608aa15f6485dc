use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Unnormalised type-I discrete sine transform of length `n`:
/// `X[k] = sum_{j=1..n} x[j] sin(pi j k / (n + 1))`, applied through a
/// complex FFT of length `2 (n + 1)`. Applying it twice scales by `(n + 1) / 2`.
#[derive(Clone)]
pub(crate) struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst1 {
    pub(crate) fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Self { n, fft }
    }

    /// Transforms `count` contiguous lines of length `n` stored in `data`.
    pub(crate) fn apply_lines(&self, data: &mut [f64]) {
        let n = self.n;
        let m = 2 * (n + 1);
        let count = data.len() / n;
        let mut buf = vec![Complex::new(0.0, 0.0); m * count];
        for (line, chunk) in data.chunks(n).zip(buf.chunks_mut(m)) {
            for (j, &v) in line.iter().enumerate() {
                chunk[j + 1].re = v;
                chunk[m - 1 - j].re = -v;
            }
        }
        self.fft.process(&mut buf);
        for (line, chunk) in data.chunks_mut(n).zip(buf.chunks(m)) {
            for (k, v) in line.iter_mut().enumerate() {
                *v = -0.5 * chunk[k + 1].im;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn matches_direct_sum() {
        let n = 7;
        let x: Vec<f64> = (0..n).map(|j| (j as f64 * 0.37).cos() + 0.1 * j as f64).collect();
        let mut y = x.clone();
        Dst1::new(n).apply_lines(&mut y);
        for k in 1..=n {
            let direct: f64 = (1..=n)
                .map(|j| x[j - 1] * (PI * (j * k) as f64 / (n + 1) as f64).sin())
                .sum();
            assert!((y[k - 1] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn twice_applied_is_scaled_identity() {
        let n = 12;
        let x: Vec<f64> = (0..2 * n).map(|j| (j as f64).sqrt()).collect();
        let mut y = x.clone();
        let dst = Dst1::new(n);
        dst.apply_lines(&mut y);
        dst.apply_lines(&mut y);
        let s = (n + 1) as f64 / 2.0;
        for (a, b) in x.iter().zip(&y) {
            assert!((a * s - b).abs() < 1e-11);
        }
    }
}
