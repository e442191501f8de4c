//! Uniform 1-D grids, wavefunctions on them, the position ↔ momentum
//! transform and the polar split `ψ = R e^{iS/ħ}`.
//!
//! Fourier convention (used by every other module): the momentum
//! amplitude is `φ(p) = (2πħ)^{-1/2} ∫ ψ(x) e^{-ipx/ħ} dx`. The momentum
//! grid is centered, `p_k = (k − n/2)·dp` with `dp = 2πħ/(n·dx)`.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier;

/// Physical constants. ħ is kept configurable so that classical-limit
/// sweeps can vary it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsConfig {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

impl PhysicsConfig {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        let cfg = Self { hbar, mass };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_hbar(hbar: f64) -> Result<Self> {
        Self::new(hbar, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(invalid(
                "hbar",
                format!("must be positive, got {}", self.hbar),
            ));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(invalid(
                "mass",
                format!("must be positive, got {}", self.mass),
            ));
        }
        Ok(())
    }
}

/// Uniform periodic position grid together with its dual momentum grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    x_min: f64,
    x_max: f64,
    dx: f64,
    dp: f64,
    hbar: f64,
}

impl Grid {
    /// `n` points covering `[x_min, x_max)`, so `dx = (x_max − x_min)/n`.
    pub fn new(n: usize, x_min: f64, x_max: f64, config: &PhysicsConfig) -> Result<Self> {
        config.validate()?;
        if n < 8 || !n.is_power_of_two() {
            return Err(invalid("n", format!("must be a power of two ≥ 8, got {n}")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(invalid(
                "x_max",
                format!("need x_min < x_max, got [{x_min}, {x_max}]"),
            ));
        }
        let dx = (x_max - x_min) / n as f64;
        let dp = 2.0 * PI * config.hbar / (n as f64 * dx);
        Ok(Self {
            n,
            x_min,
            x_max,
            dx,
            dp,
            hbar: config.hbar,
        })
    }

    /// Centered grid with `dx == dp` (up to rounding), so the position and
    /// momentum grids coincide. This is the natural geometry for
    /// phase-space rotations.
    pub fn symmetric(n: usize, config: &PhysicsConfig) -> Result<Self> {
        config.validate()?;
        let dx = (2.0 * PI * config.hbar / n as f64).sqrt();
        let half = dx * n as f64 / 2.0;
        Self::new(n, -half, half, config)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dp(&self) -> f64 {
        self.dp
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }
    pub fn center(&self) -> f64 {
        0.5 * (self.x_min + self.x_max)
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn p(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.dp
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.p(k)).collect()
    }

    /// Half-width of the momentum grid, `n·dp/2`.
    pub fn p_max(&self) -> f64 {
        self.dp * (self.n / 2) as f64
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Which coordinate a set of amplitudes is sampled against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Representation {
    Position,
    Momentum,
    /// Fractional Fourier domain of angle θ, sampled on the position grid
    /// geometry.
    Fractional {
        theta: f64,
    },
}

/// Complex amplitudes on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    grid: Grid,
    amplitudes: Vec<Complex64>,
    config: PhysicsConfig,
    repr: Representation,
}

impl Wavefunction {
    /// Position-space wavefunction from raw samples (not normalized).
    pub fn from_samples(
        grid: Grid,
        amplitudes: Vec<Complex64>,
        config: PhysicsConfig,
    ) -> Result<Self> {
        Self::from_samples_in(grid, amplitudes, config, Representation::Position)
    }

    pub fn from_samples_in(
        grid: Grid,
        amplitudes: Vec<Complex64>,
        config: PhysicsConfig,
        repr: Representation,
    ) -> Result<Self> {
        config.validate()?;
        if grid.hbar() != config.hbar {
            return Err(Error::GridMismatch);
        }
        if amplitudes.len() != grid.n() {
            return Err(invalid(
                "amplitudes",
                format!("expected {} samples, got {}", grid.n(), amplitudes.len()),
            ));
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(invalid("amplitudes", "non-finite entry"));
        }
        Ok(Self {
            grid,
            amplitudes,
            config,
            repr,
        })
    }

    pub fn from_fn(
        grid: Grid,
        config: PhysicsConfig,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let amps = grid.positions().into_iter().map(f).collect();
        Self::from_samples(grid, amps, config)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn config(&self) -> &PhysicsConfig {
        &self.config
    }
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }
    pub fn representation(&self) -> Representation {
        self.repr
    }
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub(crate) fn with_amplitudes(&self, amplitudes: Vec<Complex64>, repr: Representation) -> Self {
        Self {
            grid: self.grid,
            amplitudes,
            config: self.config,
            repr,
        }
    }

    /// Sample spacing in the current representation.
    pub fn spacing(&self) -> f64 {
        match self.repr {
            Representation::Momentum => self.grid.dp(),
            _ => self.grid.dx(),
        }
    }

    /// Sample coordinates in the current representation.
    pub fn coords(&self) -> Vec<f64> {
        match self.repr {
            Representation::Momentum => self.grid.momenta(),
            _ => self.grid.positions(),
        }
    }

    pub fn densities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `Σ |ψ_i|² · h` for the representation's spacing `h`.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.spacing()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 1e-14) {
            return Err(Error::ZeroVector { norm });
        }
        let inv = 1.0 / norm;
        for a in self.amplitudes.iter_mut() {
            *a *= inv;
        }
        Ok(self)
    }

    /// `⟨self|other⟩ = Σ conj(ψ_i) χ_i · h`.
    pub fn inner(&self, other: &Wavefunction) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        if self.repr != other.repr {
            return Err(Error::GridMismatch);
        }
        let s: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.spacing())
    }

    /// Mean of the representation's coordinate under `|ψ|²`.
    pub fn mean_coordinate(&self) -> f64 {
        let h = self.spacing();
        let norm = self.norm_sqr();
        self.coords()
            .iter()
            .zip(&self.amplitudes)
            .map(|(q, a)| q * a.norm_sqr())
            .sum::<f64>()
            * h
            / norm
    }

    /// Standard deviation of the representation's coordinate.
    pub fn coordinate_spread(&self) -> f64 {
        let h = self.spacing();
        let norm = self.norm_sqr();
        let mean = self.mean_coordinate();
        let var = self
            .coords()
            .iter()
            .zip(&self.amplitudes)
            .map(|(q, a)| (q - mean).powi(2) * a.norm_sqr())
            .sum::<f64>()
            * h
            / norm;
        var.sqrt()
    }

    /// Largest of the two end-point densities of the normalized state.
    pub fn boundary_density(&self) -> f64 {
        let norm = self.norm_sqr();
        let first = self.amplitudes.first().map(|a| a.norm_sqr()).unwrap_or(0.0);
        let last = self.amplitudes.last().map(|a| a.norm_sqr()).unwrap_or(0.0);
        first.max(last) / norm
    }

    /// Probability in the outer `fraction` of the grid on either side.
    pub fn edge_mass(&self, fraction: f64) -> f64 {
        let n = self.amplitudes.len();
        let k = ((n as f64 * fraction).ceil() as usize).max(1).min(n / 2);
        let h = self.spacing();
        let norm = self.norm_sqr();
        let head: f64 = self.amplitudes[..k].iter().map(|a| a.norm_sqr()).sum();
        let tail: f64 = self.amplitudes[n - k..].iter().map(|a| a.norm_sqr()).sum();
        (head + tail) * h / norm
    }
}

pub(crate) fn gaussian_sample(x: f64, x0: f64, p0: f64, sigma: f64, hbar: f64) -> Complex64 {
    let amp = (PI * sigma * sigma).powf(-0.25) * (-(x - x0).powi(2) / (2.0 * sigma * sigma)).exp();
    Complex64::from_polar(amp, p0 * x / hbar)
}

/// Normalized Gaussian `(πσ²)^{-1/4} exp(−(x−x0)²/2σ² + i p0 x/ħ)`.
///
/// With this convention `Δx = σ/√2` and `Δp = ħ/(σ√2)`, so `σ = 1` at
/// `ħ = m = ω = 1` is the oscillator ground state.
pub fn gaussian_packet(
    grid: &Grid,
    x0: f64,
    p0: f64,
    sigma: f64,
    config: &PhysicsConfig,
) -> Result<Wavefunction> {
    config.validate()?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid("sigma", format!("must be positive, got {sigma}")));
    }
    if sigma < 3.0 * grid.dx() {
        return Err(Error::GridTooCoarse {
            sigma,
            min: 3.0 * grid.dx(),
        });
    }
    let wf = Wavefunction::from_fn(*grid, *config, |x| {
        gaussian_sample(x, x0, p0, sigma, config.hbar)
    })?;
    let tail = wf.boundary_density();
    if tail > 1e-12 {
        return Err(Error::SupportOverflow { tail, limit: 1e-12 });
    }
    wf.normalized()
}

/// Normalized linear combination `Σ c_i ψ_i`.
pub fn superpose(terms: &[(Complex64, &Wavefunction)]) -> Result<Wavefunction> {
    let (_, first) = terms
        .first()
        .ok_or_else(|| invalid("terms", "at least one term is required"))?;
    let mut acc = vec![Complex64::new(0.0, 0.0); first.len()];
    for (c, wf) in terms {
        first.grid.check_same(&wf.grid)?;
        if wf.config != first.config || wf.repr != first.repr {
            return Err(Error::GridMismatch);
        }
        for (a, b) in acc.iter_mut().zip(&wf.amplitudes) {
            *a += c * b;
        }
    }
    first.with_amplitudes(acc, first.repr).normalized()
}

/// Position → momentum amplitudes with kernel `e^{-ipx/ħ}/√(2πħ)`.
pub fn to_momentum(wf: &Wavefunction) -> Result<Wavefunction> {
    if wf.repr != Representation::Position {
        return Err(invalid("wf", "expected a position-space wavefunction"));
    }
    let g = wf.grid;
    let mut buf: Vec<Complex64> = wf
        .amplitudes
        .iter()
        .enumerate()
        .map(|(j, a)| if j % 2 == 0 { *a } else { -*a })
        .collect();
    fourier::forward(&mut buf);
    let scale = g.dx() / (2.0 * PI * g.hbar()).sqrt();
    let out = buf
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            let phase = -g.p(k) * g.x_min() / g.hbar();
            v * Complex64::from_polar(scale, phase)
        })
        .collect();
    Ok(wf.with_amplitudes(out, Representation::Momentum))
}

/// Inverse of [`to_momentum`].
pub fn to_position(phi: &Wavefunction) -> Result<Wavefunction> {
    if phi.repr != Representation::Momentum {
        return Err(invalid("phi", "expected a momentum-space wavefunction"));
    }
    let g = phi.grid;
    let mut buf: Vec<Complex64> = phi
        .amplitudes
        .iter()
        .enumerate()
        .map(|(k, v)| v * Complex64::from_polar(1.0, g.p(k) * g.x_min() / g.hbar()))
        .collect();
    fourier::inverse(&mut buf);
    let scale = g.dp() / (2.0 * PI * g.hbar()).sqrt();
    let out = buf
        .into_iter()
        .enumerate()
        .map(|(j, v)| if j % 2 == 0 { v * scale } else { -v * scale })
        .collect();
    Ok(phi.with_amplitudes(out, Representation::Position))
}

/// Density floor used to decide where the phase is meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Floor {
    /// Fraction of the peak density.
    Relative(f64),
    Absolute(f64),
}

impl Default for Floor {
    fn default() -> Self {
        Floor::Relative(1e-8)
    }
}

impl Floor {
    pub fn resolve(&self, densities: &[f64]) -> Result<f64> {
        let v = match *self {
            Floor::Relative(r) => r * densities.iter().cloned().fold(0.0, f64::max),
            Floor::Absolute(a) => a,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(
                "density_floor",
                format!("must be positive, got {v}"),
            ));
        }
        Ok(v)
    }
}

/// Amplitude `R`, phase `S` (action units) and validity mask of a
/// wavefunction.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarFields {
    pub coords: Vec<f64>,
    pub spacing: f64,
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
    pub valid: Vec<bool>,
    pub floor: f64,
    pub hbar: f64,
    pub repr: Representation,
}

impl PolarFields {
    /// Maximal runs of consecutive valid points.
    pub fn runs(&self) -> Vec<Range<usize>> {
        mask_runs(&self.valid)
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitude.iter().map(|r| r * r).collect()
    }

    /// `R e^{iS/ħ}` at point `i`.
    pub fn reconstruct(&self, i: usize) -> Complex64 {
        Complex64::from_polar(self.amplitude[i], self.phase[i] / self.hbar)
    }
}

pub fn mask_runs(mask: &[bool]) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &m) in mask.iter().enumerate() {
        match (m, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push(s..mask.len());
    }
    runs
}

/// Wrap an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Split `ψ = R e^{iS/ħ}`. The phase is unwrapped along increasing
/// coordinate, restarting at the beginning of each valid run. Outside the
/// mask `S` is the wrapped phase, so `reconstruct` works everywhere.
pub fn polar_decompose(wf: &Wavefunction, floor: Floor) -> Result<PolarFields> {
    let density = wf.densities();
    let floor = floor.resolve(&density)?;
    let valid: Vec<bool> = density.iter().map(|d| *d >= floor).collect();
    if !valid.iter().any(|v| *v) {
        return Err(Error::AllBelowFloor { floor });
    }
    let hbar = wf.config.hbar;
    let mut phase: Vec<f64> = wf.amplitudes.iter().map(|a| a.arg()).collect();
    for run in mask_runs(&valid) {
        let mut acc = wf.amplitudes[run.start].arg();
        phase[run.start] = acc;
        for i in run.start + 1..run.end {
            acc += wrap_angle(wf.amplitudes[i].arg() - wf.amplitudes[i - 1].arg());
            phase[i] = acc;
        }
    }
    for s in phase.iter_mut() {
        *s *= hbar;
    }
    Ok(PolarFields {
        coords: wf.coords(),
        spacing: wf.spacing(),
        amplitude: wf.amplitudes.iter().map(|a| a.norm()).collect(),
        phase,
        valid,
        floor,
        hbar,
        repr: wf.repr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid512() -> (Grid, PhysicsConfig) {
        let cfg = PhysicsConfig::default();
        (Grid::new(512, -20.0, 20.0, &cfg).unwrap(), cfg)
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        let cfg = PhysicsConfig::default();
        assert!(Grid::new(4, -1.0, 1.0, &cfg).is_err());
        assert!(Grid::new(100, -1.0, 1.0, &cfg).is_err());
        assert!(Grid::new(16, 1.0, -1.0, &cfg).is_err());
        assert!(PhysicsConfig::new(0.0, 1.0).is_err());
        assert!(PhysicsConfig::new(1.0, -1.0).is_err());
    }

    #[test]
    fn dual_grid_relation() {
        for hbar in [1.0, 0.5, 0.125, 3.7] {
            let cfg = PhysicsConfig::with_hbar(hbar).unwrap();
            let g = Grid::new(256, -13.0, 17.0, &cfg).unwrap();
            let lhs = g.dp() * g.dx() * g.n() as f64;
            let rhs = 2.0 * PI * hbar;
            assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs);
            let again = Grid::new(256, -13.0, 17.0, &cfg).unwrap();
            assert_eq!(g.dp().to_bits(), again.dp().to_bits());
        }
    }

    #[test]
    fn symmetric_grid_has_equal_spacings() {
        let cfg = PhysicsConfig::default();
        let g = Grid::symmetric(128, &cfg).unwrap();
        assert!((g.dx() - g.dp()).abs() < 1e-14);
        assert!((g.x(0) - g.p(0)).abs() < 1e-12);
    }

    #[test]
    fn symmetric_gaussian_moments() {
        let (g, cfg) = grid512();
        let wf = gaussian_packet(&g, 0.0, 0.0, 1.0, &cfg).unwrap();
        assert!((wf.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(wf.mean_coordinate().abs() < 1e-12);
        assert!((wf.coordinate_spread() - 1.0 / 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn displaced_gaussian_moments_by_quadrature() {
        let (g, cfg) = grid512();
        let wf = gaussian_packet(&g, 2.0, 5.0, 1.0, &cfg).unwrap();
        // direct quadrature oracle: ⟨x⟩ = Σ x|ψ|²dx, ⟨p⟩ = ħ Σ Im(ψ* ψ') dx with an
        // analytic derivative of the sampled Gaussian.
        let mut mx = 0.0;
        let mut mp = 0.0;
        for (j, a) in wf.amplitudes().iter().enumerate() {
            let x = g.x(j);
            mx += x * a.norm_sqr() * g.dx();
            let da = a * Complex64::new(-(x - 2.0), 5.0);
            mp += (a.conj() * da).im * g.dx();
        }
        assert!((mx - 2.0).abs() < 1e-8);
        assert!((mp - 5.0).abs() < 1e-8);
        let phi = to_momentum(&wf).unwrap();
        assert!((phi.mean_coordinate() - 5.0).abs() < 1e-8);
    }

    #[test]
    fn coarse_and_overflowing_packets_rejected() {
        let (g, cfg) = grid512();
        let err = gaussian_packet(&g, 0.0, 0.0, 0.01 * g.dx(), &cfg).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }));
        let err = gaussian_packet(&g, 18.0, 0.0, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::SupportOverflow { .. }));
    }

    #[test]
    fn superpose_identity_and_cancellation() {
        let (g, cfg) = grid512();
        let a = gaussian_packet(&g, 0.5, 1.0, 1.0, &cfg).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let same = superpose(&[(one, &a)]).unwrap();
        for (x, y) in same.amplitudes().iter().zip(a.amplitudes()) {
            assert!((x - y).norm() < 1e-14);
        }
        let err = superpose(&[(one, &a), (-one, &a)]).unwrap_err();
        assert!(matches!(err, Error::ZeroVector { .. }));
    }

    #[test]
    fn cat_state_is_centered() {
        let (g, cfg) = grid512();
        let l = gaussian_packet(&g, -2.0, 0.0, 0.5, &cfg).unwrap();
        let r = gaussian_packet(&g, 2.0, 0.0, 0.5, &cfg).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let cat = superpose(&[(one, &l), (one, &r)]).unwrap();
        let mean: f64 = g
            .positions()
            .iter()
            .zip(cat.amplitudes())
            .map(|(x, a)| x * a.norm_sqr() * g.dx())
            .sum();
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn momentum_transform_minimum_uncertainty() {
        let (g, cfg) = grid512();
        for sigma in [0.7, 1.0, 1.6] {
            let wf = gaussian_packet(&g, 0.0, 0.0, sigma, &cfg).unwrap();
            let phi = to_momentum(&wf).unwrap();
            assert!((phi.norm_sqr() - 1.0).abs() < 1e-10);
            let prod = wf.coordinate_spread() * phi.coordinate_spread();
            assert!((prod - 0.5).abs() < 1e-8, "σ={sigma}: {prod}");
        }
    }

    #[test]
    fn momentum_density_peaks_at_p0() {
        let (g, cfg) = grid512();
        let wf = gaussian_packet(&g, 1.0, 3.0, 1.2, &cfg).unwrap();
        let phi = to_momentum(&wf).unwrap();
        let (k, _) = phi
            .densities()
            .iter()
            .enumerate()
            .fold(
                (0, 0.0),
                |acc, (k, d)| if *d > acc.1 { (k, *d) } else { acc },
            );
        assert!((g.p(k) - 3.0).abs() <= g.dp() / 2.0 + 1e-12);
    }

    #[test]
    fn momentum_roundtrip() {
        let (g, cfg) = grid512();
        let wf = gaussian_packet(&g, -1.0, 2.0, 0.8, &cfg).unwrap();
        let back = to_position(&to_momentum(&wf).unwrap()).unwrap();
        for (a, b) in back.amplitudes().iter().zip(wf.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn polar_of_plane_wave_is_linear() {
        let cfg = PhysicsConfig::with_hbar(0.5).unwrap();
        let g = Grid::new(256, -10.0, 10.0, &cfg).unwrap();
        let p0 = 3.0;
        let wf = Wavefunction::from_fn(g, cfg, |x| Complex64::from_polar(1.0, p0 * x / cfg.hbar))
            .unwrap();
        let polar = polar_decompose(&wf, Floor::default()).unwrap();
        assert!(polar.valid.iter().all(|v| *v));
        for j in 1..g.n() {
            let slope = (polar.phase[j] - polar.phase[j - 1]) / g.dx();
            assert!((slope - p0).abs() < 1e-9);
        }
    }

    #[test]
    fn polar_of_real_gaussian_is_constant() {
        let (g, cfg) = grid512();
        let wf = gaussian_packet(&g, 0.0, 0.0, 1.0, &cfg).unwrap();
        let polar = polar_decompose(&wf, Floor::default()).unwrap();
        for (i, v) in polar.valid.iter().enumerate() {
            if *v {
                assert_eq!(polar.phase[i], 0.0);
                assert!((polar.amplitude[i] - wf.amplitudes()[i].norm()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn polar_masks_cat_node() {
        let (g, cfg) = grid512();
        let l = gaussian_packet(&g, -3.0, 0.0, 0.5, &cfg).unwrap();
        let r = gaussian_packet(&g, 3.0, 0.0, 0.5, &cfg).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let cat = superpose(&[(one, &l), (one, &r)]).unwrap();
        let polar = polar_decompose(&cat, Floor::default()).unwrap();
        // analytic two-Gaussian oracle: |ψ(0)|² = 4e^{-36}/(√π σ) / (2(1 + e^{-36}))
        let mid = g.n() / 2;
        assert_eq!(g.x(mid), 0.0);
        let peak = cat.densities().iter().cloned().fold(0.0, f64::max);
        let analytic_mid = 4.0 * (-36.0f64).exp() / (PI.sqrt() * 0.5) / 2.0;
        assert!((cat.densities()[mid] - analytic_mid).abs() < 1e-20);
        assert!(analytic_mid < 1e-8 * peak);
        assert!(!polar.valid[mid]);
        assert_eq!(polar.runs().len(), 2);
    }

    #[test]
    fn all_below_floor() {
        let (g, cfg) = grid512();
        let wf = gaussian_packet(&g, 0.0, 0.0, 1.0, &cfg).unwrap();
        let err = polar_decompose(&wf, Floor::Absolute(10.0)).unwrap_err();
        assert!(matches!(err, Error::AllBelowFloor { .. }));
    }
}
