//! Conditional-expectation fields, the quantum potential and the quantum
//! Hamilton-Jacobi residual.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fourier;
use crate::grid::{mask_runs, polar_decompose, to_position, wrap_angle, Floor, PhysicsConfig, PolarFields, Representation, Wavefunction};
use crate::stencil::{central, differentiate_runs, Derivative, DEFAULT_HALF_WIDTH};
use crate::wigner::wigner_transform;

/// Shortest run the phase-derivative route accepts.
pub const MIN_RUN: usize = 5;

/// A conditional mean on one coordinate axis. Entries outside `valid`
/// are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalField {
    pub domain: Representation,
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
    pub density: Vec<f64>,
    pub valid: Vec<bool>,
    /// Largest disagreement with the independent Wigner-moment route on
    /// `valid`, when that route was evaluated.
    pub route_gap: Option<f64>,
}

impl ConditionalField {
    /// Largest `|a − b|` over points valid in both fields.
    pub fn max_abs_diff(&self, other: &ConditionalField) -> Result<f64> {
        if self.coords.len() != other.coords.len() {
            return Err(Error::GridMismatch);
        }
        Ok((0..self.values.len())
            .filter(|&i| self.valid[i] && other.valid[i])
            .map(|i| (self.values[i] - other.values[i]).abs())
            .fold(0.0, f64::max))
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// A real field on a coordinate axis, `NaN` outside `valid`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl ScalarField {
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.valid)
            .filter(|(_, v)| **v)
            .map(|(x, _)| x.abs())
            .fold(0.0, f64::max)
    }
}

/// `ħ Im(ψ* ∂ψ)/|ψ|²` with a spectral derivative, without the Wigner
/// cross-check.
pub fn momentum_field(wf: &Wavefunction, floor: Floor) -> Result<ConditionalField> {
    if wf.representation() != Representation::Position {
        return Err(invalid("wf", "expected a position-space wavefunction"));
    }
    let density = wf.densities();
    let cut = floor.resolve(&density)?;
    let valid: Vec<bool> = density.iter().map(|d| *d >= cut).collect();
    if !valid.iter().any(|v| *v) {
        return Err(Error::AllBelowFloor { floor: cut });
    }
    let hbar = wf.config().hbar;
    let deriv = fourier::spectral_derivative(wf.amplitudes(), wf.grid().dx());
    let values: Vec<f64> = (0..wf.len())
        .map(|i| {
            if valid[i] {
                hbar * (wf.amplitudes()[i].conj() * deriv[i]).im / density[i]
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(ConditionalField {
        domain: Representation::Position,
        coords: wf.coords(),
        values,
        density,
        valid,
        route_gap: None,
    })
}

/// `ħ Im(ψ* ∂ψ)/|ψ|²`, cross-checked against `∫ p W dp / |ψ|²`.
pub fn conditional_momentum(wf: &Wavefunction, floor: Floor) -> Result<ConditionalField> {
    let mut field = momentum_field(wf, floor)?;
    let w = wigner_transform(wf)?;
    let g = wf.grid();
    let n = g.n();
    let mut gap = 0.0f64;
    for j in (0..n).filter(|&j| field.valid[j]) {
        let moment: f64 = (0..n).map(|k| g.p(k) * w.at(j, k)).sum::<f64>() * g.dp();
        gap = gap.max((moment / field.density[j] - field.values[j]).abs());
    }
    field.route_gap = Some(gap);
    Ok(field)
}

fn longest_run(valid: &[bool]) -> usize {
    mask_runs(valid).iter().map(|r| r.len()).max().unwrap_or(0)
}

/// Refinement factor for phase and amplitude derivatives.
pub const REFINE: usize = 32;

/// Largest phase turn (radians) between neighbouring stencil samples.
/// Near interference nodes the refined grid exceeds it and the stencil
/// step is shortened.
const MAX_PHASE_STEP: f64 = 0.02;

/// `R e^{iS/ħ}` interpolated onto a grid `REFINE` times finer, with the
/// mask carried over: a fine point is valid when both bracketing coarse
/// points are valid and its own density clears the floor.
struct Refined {
    coarse: Vec<Complex64>,
    fine: Vec<Complex64>,
    amplitude: Vec<f64>,
    phase: Vec<f64>,
    runs: Vec<std::ops::Range<usize>>,
    h: f64,
}

fn refine(polar: &PolarFields) -> Refined {
    let n = polar.amplitude.len();
    let coarse: Vec<Complex64> = (0..n).map(|j| polar.reconstruct(j)).collect();
    let fine = fourier::upsample(&coarse, REFINE);
    let valid: Vec<bool> = (0..fine.len())
        .map(|m| {
            let (j, r) = (m / REFINE, m % REFINE);
            let ends = if r == 0 { polar.valid[j] } else { j + 1 < n && polar.valid[j] && polar.valid[j + 1] };
            ends && fine[m].norm_sqr() >= polar.floor
        })
        .collect();
    let runs = mask_runs(&valid);
    let mut phase = vec![0.0; fine.len()];
    for run in &runs {
        let mut acc = fine[run.start].arg();
        phase[run.start] = acc;
        for m in run.start + 1..run.end {
            acc += wrap_angle(fine[m].arg() - fine[m - 1].arg());
            phase[m] = acc * polar.hbar;
        }
        phase[run.start] *= polar.hbar;
    }
    Refined {
        amplitude: fine.iter().map(|v| v.norm()).collect(),
        coarse,
        fine,
        phase,
        runs,
        h: polar.spacing / REFINE as f64,
    }
}

/// Differentiate on the refined grid and read back the coarse points where
/// the widest stencil fits.
fn refined_derivative(polar: &PolarFields, of_phase: bool, which: Derivative) -> (Vec<f64>, Vec<bool>, Vec<f64>) {
    let r = refine(polar);
    let field = if of_phase { &r.phase } else { &r.amplitude };
    let d = differentiate_runs(field, &r.runs, r.h, which, DEFAULT_HALF_WIDTH);
    let n = polar.amplitude.len();
    let mut values = vec![f64::NAN; n];
    let mut valid = vec![false; n];
    for j in 0..n {
        let m = j * REFINE;
        if polar.valid[j] && d.interior[m] {
            values[j] = d.values[m];
            valid[j] = true;
        }
    }
    if of_phase && which == Derivative::First {
        sharpen_slope(polar, &r, &mut values, &mut valid);
    }
    let amplitude = (0..n).map(|j| r.amplitude[j * REFINE]).collect();
    (values, valid, amplitude)
}

/// Recompute the phase slope with a shorter step wherever the refined grid
/// turns by more than [`MAX_PHASE_STEP`] between samples of the stencil.
/// The samples come from the band-limited interpolant itself; a point whose
/// shortened stencil dips below the floor is dropped from the mask.
fn sharpen_slope(polar: &PolarFields, r: &Refined, values: &mut [f64], valid: &mut [bool]) {
    let half = DEFAULT_HALF_WIDTH as isize;
    let turn = |a: Complex64, b: Complex64| wrap_angle(b.arg() - a.arg()).abs();
    let steep: Vec<usize> = (0..values.len())
        .filter(|&j| valid[j])
        .filter(|&j| {
            let m = (j * REFINE) as isize;
            (-half..half).any(|o| {
                let (a, b) = ((m + o) as usize, (m + o + 1) as usize);
                b < r.fine.len() && turn(r.fine[a], r.fine[b]) > MAX_PHASE_STEP
            })
        })
        .collect();
    if steep.is_empty() {
        return;
    }
    let interp = fourier::Interpolant::new(&r.coarse);
    for j in steep {
        let mut step = 1.0 / REFINE as f64;
        let mut ok = false;
        let mut samples = Vec::new();
        for _ in 0..40 {
            let z: Vec<Complex64> = (-half..=half).map(|o| interp.eval(j as f64 + o as f64 * step)).collect();
            if z.iter().any(|v| v.norm_sqr() < polar.floor) {
                break;
            }
            let worst = z.windows(2).map(|w| turn(w[0], w[1])).fold(0.0, f64::max);
            if worst <= MAX_PHASE_STEP {
                samples = z;
                ok = true;
                break;
            }
            step *= (0.9 * MAX_PHASE_STEP / worst).max(1.0 / 64.0);
        }
        if !ok {
            valid[j] = false;
            values[j] = f64::NAN;
            continue;
        }
        let mut phase = vec![0.0; samples.len()];
        for i in 1..samples.len() {
            phase[i] = phase[i - 1] + wrap_angle(samples[i].arg() - samples[i - 1].arg());
        }
        values[j] = polar.hbar * central(&phase, step * polar.spacing, Derivative::First);
    }
}

/// `∂S/∂q` of the unwrapped phase, by central differences on a
/// band-limited refinement of the grid kept inside each valid run.
fn phase_slope(polar: &PolarFields) -> Result<(Vec<f64>, Vec<bool>)> {
    if longest_run(&polar.valid) < MIN_RUN {
        return Err(Error::MaskFragmented { min_run: MIN_RUN });
    }
    let (values, valid, _) = refined_derivative(polar, true, Derivative::First);
    Ok((values, valid))
}

/// Guidance field `p̄ = ∂S/∂x` (or the analogous slope in any other domain).
pub fn guidance_from_phase(polar: &PolarFields) -> Result<ConditionalField> {
    let (values, valid) = phase_slope(polar)?;
    Ok(ConditionalField {
        domain: polar.repr,
        coords: polar.coords.clone(),
        values,
        density: polar.density(),
        valid,
        route_gap: None,
    })
}

/// `x̄(p) = −∂S_p/∂p` from a momentum-space state, cross-checked against
/// `∫ x W dx / |φ|²`.
pub fn conditional_position(phi: &Wavefunction, floor: Floor) -> Result<ConditionalField> {
    if phi.representation() != Representation::Momentum {
        return Err(invalid("phi", "expected a momentum-space wavefunction"));
    }
    let polar = polar_decompose(phi, floor)?;
    let (slope, valid) = phase_slope(&polar)?;
    let values: Vec<f64> = slope.iter().zip(&valid).map(|(s, v)| if *v { -s } else { f64::NAN }).collect();
    let density = polar.density();

    let w = wigner_transform(&to_position(phi)?)?;
    let g = phi.grid();
    let n = g.n();
    let mut gap = 0.0f64;
    for k in (0..n).filter(|&k| valid[k]) {
        let moment: f64 = (0..n).map(|j| g.x(j) * w.at(j, k)).sum::<f64>() * g.dx();
        gap = gap.max((moment / density[k] - values[k]).abs());
    }
    Ok(ConditionalField {
        domain: Representation::Momentum,
        coords: polar.coords.clone(),
        values,
        density,
        valid,
        route_gap: Some(gap),
    })
}

/// `Q = −(ħ²/2m) R''/R` on the valid runs, differentiated on the refined
/// grid.
pub fn quantum_potential(polar: &PolarFields, config: &PhysicsConfig) -> ScalarField {
    let (d2, valid, r) = refined_derivative(polar, false, Derivative::Second);
    let scale = -config.hbar * config.hbar / (2.0 * config.mass);
    let values = (0..d2.len())
        .map(|i| if valid[i] { scale * d2[i] / r[i] } else { f64::NAN })
        .collect();
    ScalarField {
        coords: polar.coords.clone(),
        values,
        valid,
    }
}

/// QHJ residual at every interior slice of a time series.
#[derive(Debug, Clone, PartialEq)]
pub struct QhjResidual {
    /// One field per slice `1 ..= len − 2`.
    pub slices: Vec<ScalarField>,
    pub max_abs: f64,
}

/// Phase change `arg ψ_b − arg ψ_a` taken on the nearest branch at each
/// point, checked for consistency along `x`.
fn slice_phase_step(a: &Wavefunction, b: &Wavefunction, valid: &[bool], slice: usize, next: usize) -> Result<Vec<f64>> {
    let d: Vec<f64> = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(u, v)| wrap_angle(v.arg() - u.arg()))
        .collect();
    let coords = a.coords();
    for run in mask_runs(valid) {
        for i in run.start + 1..run.end {
            let jump = d[i] - d[i - 1];
            if jump.abs() > std::f64::consts::PI {
                return Err(Error::UnwrapDiscontinuity { slice, next, x: coords[i], jump });
            }
        }
    }
    Ok(d)
}

/// `∂ₜS + (∂ₓS)²/2m + V + Q` for slices sampled `dt` apart.
pub fn qhj_residual(
    series: &[Wavefunction],
    dt: f64,
    potential: &[f64],
    config: &PhysicsConfig,
    floor: Floor,
) -> Result<QhjResidual> {
    if series.len() < 3 {
        return Err(invalid("series", "need at least three time slices"));
    }
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be positive"));
    }
    let grid = series[0].grid();
    if series.iter().any(|w| w.grid() != grid || w.representation() != Representation::Position) {
        return Err(Error::GridMismatch);
    }
    if potential.len() != grid.n() {
        return Err(invalid("potential", "length differs from the grid"));
    }
    let mut slices = Vec::with_capacity(series.len() - 2);
    let mut max_abs = 0.0f64;
    for i in 1..series.len() - 1 {
        let polar = polar_decompose(&series[i], floor)?;
        let before = polar_decompose(&series[i - 1], floor)?;
        let after = polar_decompose(&series[i + 1], floor)?;
        let joint: Vec<bool> = (0..grid.n()).map(|j| polar.valid[j] && before.valid[j] && after.valid[j]).collect();
        let up = slice_phase_step(&series[i], &series[i + 1], &joint, i, i + 1)?;
        let down = slice_phase_step(&series[i], &series[i - 1], &joint, i, i - 1)?;
        let guidance = guidance_from_phase(&polar)?;
        let q = quantum_potential(&polar, config);
        let mut values = vec![f64::NAN; grid.n()];
        let mut valid = vec![false; grid.n()];
        for j in 0..grid.n() {
            if !(joint[j] && guidance.valid[j] && q.valid[j]) {
                continue;
            }
            let st = config.hbar * (up[j] - down[j]) / (2.0 * dt);
            let v = guidance.values[j];
            let r = st + v * v / (2.0 * config.mass) + potential[j] + q.values[j];
            values[j] = r;
            valid[j] = true;
            max_abs = max_abs.max(r.abs());
        }
        slices.push(ScalarField {
            coords: polar.coords.clone(),
            values,
            valid,
        });
    }
    Ok(QhjResidual { slices, max_abs })
}

/// `∂ₜρ + ∂ₓ(ρ p̄/m)` at the middle slice of three, with a spectral `∂ₓ` of
/// the current `ħ Im(ψ*∂ψ)/m` (which needs no mask).
pub fn continuity_residual(series: &[Wavefunction; 3], dt: f64) -> Result<Vec<f64>> {
    let mid = &series[1];
    let cfg = mid.config();
    let deriv = fourier::spectral_derivative(mid.amplitudes(), mid.grid().dx());
    let current: Vec<Complex64> = mid
        .amplitudes()
        .iter()
        .zip(&deriv)
        .map(|(a, d)| Complex64::new(cfg.hbar * (a.conj() * d).im / cfg.mass, 0.0))
        .collect();
    let div = fourier::spectral_derivative(&current, mid.grid().dx());
    let (r0, r2) = (series[0].densities(), series[2].densities());
    Ok((0..mid.len()).map(|j| (r2[j] - r0[j]) / (2.0 * dt) + div[j].re).collect())
}
