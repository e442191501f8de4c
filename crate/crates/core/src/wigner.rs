//! Wigner transform of pure states, marginals, phase-space expectations and
//! the characteristic function.
//!
//! With ħ restored,
//!
//! ```text
//! W(x, p) = (2πħ)^{-1} ∫ ψ*(x − τ/2) e^{-ipτ/ħ} ψ(x + τ/2) dτ.
//! ```
//!
//! τ is sampled at `dx`, which puts `x ± τ/2` on the half grid; those values
//! come from a 2× band-limited upsampling of ψ (zero outside the grid, so
//! periodic images never enter). For each `x_j` the τ sum is one FFT whose
//! output bins land exactly on the momentum grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fourier;
use crate::grid::{Representation, Wavefunction};
use crate::phase_space::PhaseSpaceFunction;

/// Imaginary residue above which the transform is rejected.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-8;

/// Wigner function of a position-space pure state.
pub fn wigner_transform(wf: &Wavefunction) -> Result<PhaseSpaceFunction> {
    if wf.representation() != Representation::Position {
        return Err(invalid(
            "wf",
            "Wigner transform expects a position-space state",
        ));
    }
    let grid = *wf.grid();
    let n = grid.n();
    let half = n / 2;
    let up = fourier::upsample2(wf.amplitudes());
    let at = |m: i64| -> Complex64 {
        if m < 0 || m >= up.len() as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            up[m as usize]
        }
    };
    let scale = grid.dx() / (2.0 * PI * grid.hbar());
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let c = 2 * j as i64;
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for k in -(half as i64)..(half as i64) {
                let g = if k == -(half as i64) {
                    // ±n/2 alias to the same bin; share it symmetrically.
                    let lo = at(c - k).conj() * at(c + k);
                    let hi = at(c + k).conj() * at(c - k);
                    (lo + hi) * 0.5
                } else {
                    at(c - k).conj() * at(c + k)
                };
                let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                buf[k.rem_euclid(n as i64) as usize] = g * sign;
            }
            fourier::forward(&mut buf);
            let residue = buf.iter().map(|v| v.im.abs()).fold(0.0, f64::max) * scale;
            (buf.iter().map(|v| v.re * scale).collect(), residue)
        })
        .collect();
    let residue = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if residue > IMAG_RESIDUE_LIMIT {
        return Err(Error::ImaginaryResidue { residue });
    }
    let values = rows.into_iter().flat_map(|r| r.0).collect();
    PhaseSpaceFunction::new(grid, values, *wf.config())
}

/// Position and momentum marginals `(∫ f dp, ∫ f dx)`.
pub fn marginals(f: &PhaseSpaceFunction) -> (Vec<f64>, Vec<f64>) {
    let g = f.grid();
    let n = g.n();
    let mut px = vec![0.0; n];
    let mut pp = vec![0.0; n];
    for j in 0..n {
        for k in 0..n {
            let v = f.at(j, k);
            px[j] += v;
            pp[k] += v;
        }
    }
    px.iter_mut().for_each(|v| *v *= g.dp());
    pp.iter_mut().for_each(|v| *v *= g.dx());
    (px, pp)
}

/// `∬ a(x,p) f(x,p) dx dp`.
pub fn expectation(symbol: &PhaseSpaceFunction, f: &PhaseSpaceFunction) -> Result<f64> {
    symbol.grid().check_same(f.grid())?;
    let g = f.grid();
    Ok(symbol
        .values()
        .iter()
        .zip(f.values())
        .map(|(a, w)| a * w)
        .sum::<f64>()
        * g.dx()
        * g.dp())
}

/// `(2πħ) ∬ f² dx dp`, equal to 1 for pure states.
pub fn purity(f: &PhaseSpaceFunction) -> f64 {
    let g = f.grid();
    2.0 * PI * g.hbar() * f.values().iter().map(|v| v * v).sum::<f64>() * g.dx() * g.dp()
}

/// `f_ρ(α, β) = ∬ W(x,p) e^{i(αp + βx)/ħ} dx dp` on the dual grid
/// `α_a = (a − n/2)·dx`, `β_b = (b − n/2)·dp`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicFunction {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Row-major with α outermost: `values[a * n_beta + b]`.
    pub values: Vec<Complex64>,
}

impl CharacteristicFunction {
    pub fn at(&self, a: usize, b: usize) -> Complex64 {
        self.values[a * self.beta.len() + b]
    }

    /// Index of the origin `(α, β) = (0, 0)`.
    pub fn origin(&self) -> (usize, usize) {
        (self.alpha.len() / 2, self.beta.len() / 2)
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest `|f(−α,−β) − conj f(α,β)|` over index pairs that have a
    /// mirrored partner on the grid.
    pub fn hermitian_defect(&self) -> f64 {
        let (na, nb) = (self.alpha.len(), self.beta.len());
        let mut worst = 0.0f64;
        for a in 1..na {
            for b in 1..nb {
                let d = self.at(na - a, nb - b) - self.at(a, b).conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }
}

/// Symplectic 2-D Fourier transform of a Wigner function.
pub fn characteristic_function(f: &PhaseSpaceFunction) -> CharacteristicFunction {
    let g = f.grid();
    let n = g.n();
    let mut buf: Vec<Complex64> = Vec::with_capacity(n * n);
    for j in 0..n {
        for l in 0..n {
            let sign = if (j + l) % 2 == 0 { 1.0 } else { -1.0 };
            buf.push(Complex64::new(f.at(j, l) * sign, 0.0));
        }
    }
    // rows indexed by j → β index b; columns by l → α index a
    fourier::inverse_2d(&mut buf, n, n);
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    let measure = g.dx() * g.dp();
    for b in 0..n {
        let beta = (b as f64 - (n / 2) as f64) * g.dp();
        let shift = Complex64::from_polar(measure, beta * g.x_min() / g.hbar());
        for a in 0..n {
            let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
            values[a * n + b] = buf[b * n + a] * shift * sign;
        }
    }
    CharacteristicFunction {
        alpha: (0..n)
            .map(|a| (a as f64 - (n / 2) as f64) * g.dx())
            .collect(),
        beta: (0..n)
            .map(|b| (b as f64 - (n / 2) as f64) * g.dp())
            .collect(),
        values,
    }
}
