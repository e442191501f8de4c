//! Thin FFT layer over `rustfft` plus the few spectral helpers shared by the
//! grid, Wigner, star-product and fractional-Fourier code.
//!
//! All transforms here are unnormalized; callers apply the physical
//! measure (`dx`, `1/√(2πħ)`, ...) themselves.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// In-place forward transform, `X_k = Σ_j x_j e^{-2πi jk/n}`.
pub fn forward(buf: &mut [Complex64]) {
    if buf.len() > 1 {
        plan(buf.len(), false).process(buf);
    }
}

/// In-place inverse transform without the `1/n` factor.
pub fn inverse(buf: &mut [Complex64]) {
    if buf.len() > 1 {
        plan(buf.len(), true).process(buf);
    }
}

/// Forward transform of every row of a row-major `rows × cols` array.
pub fn forward_rows(data: &mut [Complex64], cols: usize) {
    let fft = plan(cols, false);
    for row in data.chunks_exact_mut(cols) {
        fft.process(row);
    }
}

pub fn inverse_rows(data: &mut [Complex64], cols: usize) {
    let fft = plan(cols, true);
    for row in data.chunks_exact_mut(cols) {
        fft.process(row);
    }
}

/// Row-major transpose of a `rows × cols` array.
pub fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

/// Unnormalized 2-D forward transform of a row-major `rows × cols` array.
pub fn forward_2d(data: &mut Vec<Complex64>, rows: usize, cols: usize) {
    forward_rows(data, cols);
    let mut t = transpose(data, rows, cols);
    forward_rows(&mut t, rows);
    *data = transpose(&t, cols, rows);
}

pub fn inverse_2d(data: &mut Vec<Complex64>, rows: usize, cols: usize) {
    inverse_rows(data, cols);
    let mut t = transpose(data, rows, cols);
    inverse_rows(&mut t, rows);
    *data = transpose(&t, cols, rows);
}

/// Signed frequency index of FFT bin `k` for a length-`n` transform, with
/// the Nyquist bin mapped to `-n/2`.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Band-limited interpolation onto a grid twice as fine.
///
/// Returns `2n` samples with `out[2j] == input[j]` (to rounding) and the odd
/// entries at the half-way points of the periodic trigonometric
/// interpolant.
pub fn upsample2(input: &[Complex64]) -> Vec<Complex64> {
    upsample(input, 2)
}

/// Band-limited interpolation onto a grid `factor` times as fine, with
/// `out[factor·j] == input[j]`. The Nyquist coefficient is split evenly
/// between `±n/2`.
pub fn upsample(input: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = input.len();
    if factor <= 1 || n == 0 {
        return input.to_vec();
    }
    let mut spectrum = input.to_vec();
    forward(&mut spectrum);
    let m = factor * n;
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    padded[..half].copy_from_slice(&spectrum[..half]);
    for k in half + 1..n {
        padded[k + m - n] = spectrum[k];
    }
    padded[half] = spectrum[half] * 0.5;
    padded[m - half] = spectrum[half] * 0.5;
    inverse(&mut padded);
    let scale = 1.0 / n as f64;
    for v in padded.iter_mut() {
        *v *= scale;
    }
    padded
}

/// Periodic trigonometric interpolant of equally spaced samples, with the
/// same Nyquist convention as [`upsample`].
#[derive(Debug, Clone)]
pub struct Interpolant {
    coeffs: Vec<Complex64>,
}

impl Interpolant {
    pub fn new(samples: &[Complex64]) -> Self {
        let mut coeffs = samples.to_vec();
        forward(&mut coeffs);
        let scale = 1.0 / samples.len() as f64;
        coeffs.iter_mut().for_each(|c| *c *= scale);
        Self { coeffs }
    }

    /// Value at fractional sample index `t`.
    pub fn eval(&self, t: f64) -> Complex64 {
        let n = self.coeffs.len();
        let base = 2.0 * std::f64::consts::PI * t / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate() {
            if n.is_multiple_of(2) && k == n / 2 {
                acc += c * (base * k as f64).cos();
            } else {
                acc += c * Complex64::from_polar(1.0, base * signed_index(k, n) as f64);
            }
        }
        acc
    }
}

/// Spectral first derivative of periodic samples with spacing `h`.
/// The Nyquist mode is zeroed.
pub fn spectral_derivative(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut spectrum = values.to_vec();
    forward(&mut spectrum);
    let base = 2.0 * std::f64::consts::PI / (n as f64 * h);
    for (k, v) in spectrum.iter_mut().enumerate() {
        if n.is_multiple_of(2) && k == n / 2 {
            *v = Complex64::new(0.0, 0.0);
            continue;
        }
        let w = base * signed_index(k, n) as f64;
        *v *= Complex64::new(0.0, w);
    }
    inverse(&mut spectrum);
    let scale = 1.0 / n as f64;
    spectrum.iter().map(|v| v * scale).collect()
}
