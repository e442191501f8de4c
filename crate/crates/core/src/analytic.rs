//! Closed-form time-dependent states used as oracles.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::grid::{Grid, PhysicsConfig, Wavefunction};

/// Freely evolved packet that starts as
/// `(πσ²)^{-1/4} exp(−(x−x0)²/2σ² + i p0 x/ħ)`:
///
/// ```text
/// ψ(x,t) = (πσ²)^{-1/4} (1+iτ)^{-1/2}
///          exp[−(x − x0 − p0t/m)² / (2σ²(1+iτ)) + i p0 x/ħ − i p0² t/(2mħ)],
/// τ = ħt/(mσ²).
/// ```
pub fn free_gaussian_at(x: f64, t: f64, x0: f64, p0: f64, sigma: f64, config: &PhysicsConfig) -> Complex64 {
    let (hbar, m) = (config.hbar, config.mass);
    let tau = hbar * t / (m * sigma * sigma);
    let s = Complex64::new(1.0, tau);
    let xi = x - x0 - p0 * t / m;
    let norm = (std::f64::consts::PI * sigma * sigma).powf(-0.25);
    let expo = -xi * xi / (2.0 * sigma * sigma * s) + Complex64::i() * (p0 * x / hbar - p0 * p0 * t / (2.0 * m * hbar));
    norm / s.sqrt() * expo.exp()
}

pub fn free_gaussian(
    grid: &Grid,
    t: f64,
    x0: f64,
    p0: f64,
    sigma: f64,
    config: &PhysicsConfig,
) -> Result<Wavefunction> {
    if sigma <= 0.0 {
        return Err(invalid("sigma", "must be positive"));
    }
    Wavefunction::from_fn(*grid, *config, |x| free_gaussian_at(x, t, x0, p0, sigma, config))
}

/// Coherent state of `V = mω²x²/2` whose centre follows the classical orbit
/// from `(q0, p0)`; width `√(ħ/mω)/√2` in `Δx`.
pub fn coherent_at(x: f64, t: f64, q0: f64, p0: f64, omega: f64, config: &PhysicsConfig) -> Complex64 {
    let (hbar, m) = (config.hbar, config.mass);
    let mw = m * omega;
    let (a, b) = (q0, p0 / mw);
    let (s, c) = (omega * t).sin_cos();
    let q = a * c + b * s;
    let p = mw * (-a * s + b * c);
    let (s2, c2) = (2.0 * omega * t).sin_cos();
    let gamma = 0.25 * mw * (a * a - b * b) * s2 + 0.5 * mw * a * b * (1.0 - c2) - 0.5 * hbar * omega * t;
    let norm = (mw / (std::f64::consts::PI * hbar)).powf(0.25);
    let expo = Complex64::new(-mw * (x - q) * (x - q) / (2.0 * hbar), (p * x + gamma) / hbar);
    norm * expo.exp()
}

pub fn coherent_state(
    grid: &Grid,
    t: f64,
    q0: f64,
    p0: f64,
    omega: f64,
    config: &PhysicsConfig,
) -> Result<Wavefunction> {
    if omega <= 0.0 {
        return Err(invalid("omega", "must be positive"));
    }
    Wavefunction::from_fn(*grid, *config, |x| coherent_at(x, t, q0, p0, omega, config))
}
