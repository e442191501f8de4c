//! Split-step propagation, two-slit states and streamline ensembles.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bohm::momentum_field;
use crate::error::{invalid, Error, Result};
use crate::fourier;
use crate::grid::{mask_runs, Floor, Grid, PhysicsConfig, Representation, Wavefunction};

/// Outer fraction of the grid watched for boundary contact.
pub const EDGE_FRACTION: f64 = 0.05;
/// Largest probability tolerated in the watched edges.
pub const EDGE_LIMIT: f64 = 1e-8;
/// `dt ≤ STABILITY · m dx²/ħ`.
pub const STABILITY: f64 = 0.1;
/// Largest relative change of the field between slices along a path.
pub const MAX_FIELD_CHANGE: f64 = 0.1;
pub const MIN_PATHS: usize = 100;
pub const TV_BINS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Free,
    Harmonic { omega: f64 },
    Tabulated,
}

/// Potential sampled on a position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    kind: PotentialKind,
    values: Vec<f64>,
}

impl Potential {
    pub fn free(grid: &Grid) -> Self {
        Self {
            kind: PotentialKind::Free,
            values: vec![0.0; grid.n()],
        }
    }

    /// `½ m ω² x²`.
    pub fn harmonic(grid: &Grid, omega: f64, config: &PhysicsConfig) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(invalid("omega", format!("must be positive, got {omega}")));
        }
        let k = 0.5 * config.mass * omega * omega;
        Ok(Self {
            kind: PotentialKind::Harmonic { omega },
            values: grid.positions().iter().map(|x| k * x * x).collect(),
        })
    }

    pub fn tabulated(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(invalid("potential", format!("expected {} values, got {}", grid.n(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("potential", "non-finite value"));
        }
        Ok(Self {
            kind: PotentialKind::Tabulated,
            values,
        })
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// States recorded at increasing times.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub states: Vec<Wavefunction>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &Wavefunction {
        self.states.last().expect("a series holds at least the initial state")
    }
}

pub fn max_stable_dt(grid: &Grid, config: &PhysicsConfig) -> f64 {
    STABILITY * config.mass * grid.dx() * grid.dx() / config.hbar
}

fn edge_mass(amps: &[Complex64], h: f64) -> f64 {
    let n = amps.len();
    let k = ((n as f64 * EDGE_FRACTION).ceil() as usize).clamp(1, n / 2);
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * h;
    let edges: f64 = amps[..k].iter().chain(&amps[n - k..]).map(|a| a.norm_sqr()).sum::<f64>() * h;
    edges / norm
}

/// Strang splitting `e^{−iVdt/2ħ} e^{−iTdt/ħ} e^{−iVdt/2ħ}`, recording every
/// `record_every` steps (and always the initial and final state).
pub fn split_step_evolve(
    wf0: &Wavefunction,
    potential: &Potential,
    dt: f64,
    steps: usize,
    record_every: usize,
) -> Result<TimeSeries> {
    if wf0.representation() != Representation::Position {
        return Err(invalid("wf0", "expected a position-space wavefunction"));
    }
    let grid = *wf0.grid();
    let cfg = *wf0.config();
    if potential.values.len() != grid.n() {
        return Err(Error::GridMismatch);
    }
    let limit = max_stable_dt(&grid, &cfg);
    if !(dt > 0.0 && dt <= limit) {
        return Err(invalid("dt", format!("need 0 < dt ≤ {limit:e}, got {dt:e}")));
    }
    if record_every == 0 {
        return Err(invalid("record_every", "must be at least 1"));
    }
    let h = grid.dx();
    let mass = edge_mass(wf0.amplitudes(), h);
    if mass > EDGE_LIMIT {
        return Err(Error::BoundaryContact { step: 0, mass });
    }

    let n = grid.n();
    let half_v: Vec<Complex64> = potential
        .values
        .iter()
        .map(|v| Complex64::from_polar(1.0, -v * dt / (2.0 * cfg.hbar)))
        .collect();
    let inv_n = 1.0 / n as f64;
    let kinetic: Vec<Complex64> = (0..n)
        .map(|k| {
            let p = fourier::signed_index(k, n) as f64 * grid.dp();
            Complex64::from_polar(inv_n, -p * p * dt / (2.0 * cfg.mass * cfg.hbar))
        })
        .collect();

    let mut psi = wf0.amplitudes().to_vec();
    let mut series = TimeSeries {
        times: vec![0.0],
        states: vec![wf0.clone()],
    };
    for step in 1..=steps {
        psi.iter_mut().zip(&half_v).for_each(|(a, v)| *a *= v);
        fourier::forward(&mut psi);
        psi.iter_mut().zip(&kinetic).for_each(|(a, k)| *a *= k);
        fourier::inverse(&mut psi);
        psi.iter_mut().zip(&half_v).for_each(|(a, v)| *a *= v);
        let mass = edge_mass(&psi, h);
        if mass > EDGE_LIMIT {
            return Err(Error::BoundaryContact { step, mass });
        }
        if step % record_every == 0 || step == steps {
            series.times.push(step as f64 * dt);
            series.states.push(Wavefunction::from_samples(grid, psi.clone(), cfg)?);
        }
    }
    Ok(series)
}

/// `⟨T⟩ + ⟨V⟩` of a normalized position-space state.
pub fn energy(wf: &Wavefunction, potential: &Potential) -> Result<f64> {
    let g = wf.grid();
    if potential.values.len() != g.n() {
        return Err(Error::GridMismatch);
    }
    let cfg = wf.config();
    let mut spectrum = wf.amplitudes().to_vec();
    fourier::forward(&mut spectrum);
    let n = g.n();
    let total: f64 = spectrum.iter().map(|a| a.norm_sqr()).sum();
    let kinetic: f64 = spectrum
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let p = fourier::signed_index(k, n) as f64 * g.dp();
            a.norm_sqr() * p * p
        })
        .sum::<f64>()
        / (2.0 * cfg.mass * total);
    let norm = wf.norm_sqr();
    let pot: f64 = wf.densities().iter().zip(&potential.values).map(|(d, v)| d * v).sum::<f64>() * g.dx() / norm;
    Ok(kinetic + pot)
}

/// Transverse two-slit geometry. The evolution time stands in for the
/// distance travelled, `z = p0 t/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSlit {
    pub separation: f64,
    pub width: f64,
    pub forward_momentum: f64,
}

impl Default for TwoSlit {
    fn default() -> Self {
        Self {
            separation: 4.0,
            width: 0.5,
            forward_momentum: 1.0,
        }
    }
}

impl TwoSlit {
    pub fn time_of_flight(&self, distance: f64, config: &PhysicsConfig) -> f64 {
        config.mass * distance / self.forward_momentum
    }

    /// Far-field fringe spacing in momentum, `2πħ/d`.
    pub fn fringe_spacing(&self, config: &PhysicsConfig) -> f64 {
        2.0 * PI * config.hbar / self.separation
    }

    /// First `count` positive density minima at time `t`:
    /// `x_k = (2k+1)πσ²(1+τ²)/(dτ)`, `τ = ħt/mσ²`.
    pub fn minima(&self, t: f64, config: &PhysicsConfig, count: usize) -> Vec<f64> {
        let s2 = self.width * self.width;
        let tau = config.hbar * t / (config.mass * s2);
        (0..count)
            .map(|k| (2 * k + 1) as f64 * PI * s2 * (1.0 + tau * tau) / (self.separation * tau))
            .collect()
    }
}

/// Equal-weight superposition of Gaussians at `±d/2` with zero transverse
/// momentum.
pub fn two_slit_state(slit: &TwoSlit, grid: &Grid, config: &PhysicsConfig) -> Result<Wavefunction> {
    let TwoSlit {
        separation: d,
        width: sigma,
        forward_momentum: p0,
    } = *slit;
    if !(sigma > 0.0 && d.is_finite()) {
        return Err(invalid("width", format!("must be positive, got {sigma}")));
    }
    if d < 4.0 * sigma {
        return Err(invalid("separation", format!("need d ≥ 4σ = {}, got {d}", 4.0 * sigma)));
    }
    if !(p0 > 0.0 && p0.is_finite()) {
        return Err(invalid("forward_momentum", format!("must be positive, got {p0}")));
    }
    let upper = crate::grid::gaussian_packet(grid, 0.5 * d, 0.0, sigma, config)?;
    let lower = crate::grid::gaussian_packet(grid, -0.5 * d, 0.0, sigma, config)?;
    let one = Complex64::new(1.0, 0.0);
    crate::grid::superpose(&[(one, &upper), (one, &lower)])
}

/// How initial positions were drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    /// Inverse CDF at the midpoints `(i + ½)/N`.
    Quantile,
    Random { seed: u64 },
    Explicit,
}

/// Band-limited refinement used for cumulative distributions.
const CDF_REFINE: usize = 8;

/// Cumulative distribution of `|ψ|²` by the trapezoid rule on a grid
/// `CDF_REFINE` times finer, normalized to end at one. Returns the fine
/// coordinates and the distribution.
fn cdf(wf: &Wavefunction) -> (Vec<f64>, Vec<f64>) {
    let fine = fourier::upsample(wf.amplitudes(), CDF_REFINE);
    let x0 = wf.coords()[0];
    let h = wf.spacing() / CDF_REFINE as f64;
    let last = fine.len() - CDF_REFINE + 1;
    let xs: Vec<f64> = (0..last).map(|m| x0 + m as f64 * h).collect();
    let d: Vec<f64> = fine[..last].iter().map(|a| a.norm_sqr()).collect();
    let mut acc = vec![0.0; d.len()];
    for i in 1..d.len() {
        acc[i] = acc[i - 1] + 0.5 * (d[i] + d[i - 1]);
    }
    let total = *acc.last().unwrap_or(&1.0);
    (xs, acc.iter().map(|a| a / total).collect())
}

fn inverse_cdf(xs: &[f64], c: &[f64], u: f64) -> f64 {
    let i = c.partition_point(|v| *v < u).clamp(1, c.len() - 1);
    let (c0, c1) = (c[i - 1], c[i]);
    let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
    xs[i - 1] + w * (xs[i] - xs[i - 1])
}

/// Initial positions distributed as `|ψ|²`, sorted.
pub fn sample_positions(wf: &Wavefunction, count: usize, sampling: Sampling) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(invalid("count", "must be positive"));
    }
    let (xs, c) = cdf(wf);
    let mut out: Vec<f64> = match sampling {
        Sampling::Quantile => (0..count).map(|i| inverse_cdf(&xs, &c, (i as f64 + 0.5) / count as f64)).collect(),
        Sampling::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| inverse_cdf(&xs, &c, rng.random::<f64>())).collect()
        }
        Sampling::Explicit => return Err(invalid("sampling", "explicit positions are supplied, not sampled")),
    };
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// A velocity `dx/dt` defined on part of the `(x, t)` plane.
pub trait VelocityField: Send + Sync {
    fn name(&self) -> &str;
    /// `None` where the field is undefined (masked or out of range).
    fn velocity(&self, x: f64, t: f64) -> Option<f64>;
    /// Relative change of the field between stored time slices along the
    /// paths of `ensemble`. Fields known at every time report zero.
    fn undersampling(&self, _ensemble: &TrajectoryEnsemble) -> f64 {
        0.0
    }
}

/// Natural cubic spline on one run of a uniform grid.
#[derive(Debug, Clone)]
struct Spline {
    start: usize,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn new(start: usize, y: Vec<f64>, h: f64) -> Self {
        let n = y.len();
        let mut m = vec![0.0; n];
        if n >= 3 {
            // Thomas algorithm for M_{i−1} + 4M_i + M_{i+1} = 6Δ²y/h²
            let k = n - 2;
            let mut c = vec![0.0; k];
            let mut d = vec![0.0; k];
            for i in 0..k {
                let rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]) / (h * h);
                let denom = 4.0 - if i > 0 { c[i - 1] } else { 0.0 };
                c[i] = 1.0 / denom;
                d[i] = (rhs - if i > 0 { d[i - 1] } else { 0.0 }) / denom;
            }
            for i in (0..k).rev() {
                m[i + 1] = d[i] - if i + 1 < k { c[i] * m[i + 2] } else { 0.0 };
            }
        }
        Self { start, y, m }
    }

    /// Value at local coordinate `u = (x − x_start)/h`.
    fn eval(&self, u: f64, h: f64) -> Option<f64> {
        let last = self.y.len() - 1;
        if !(u >= 0.0 && u <= last as f64) {
            return None;
        }
        let i = (u.floor() as usize).min(last.saturating_sub(1));
        if last == 0 {
            return Some(self.y[0]);
        }
        let a = (i + 1) as f64 - u;
        let b = u - i as f64;
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        Some(a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0)
    }
}

#[derive(Debug, Clone)]
struct Slice {
    splines: Vec<Spline>,
    /// `(∫ρ v² dx)^{1/2}` on the mask.
    rms: f64,
}

impl Slice {
    fn eval(&self, x: f64, x_min: f64, h: f64) -> Option<f64> {
        let u = (x - x_min) / h;
        let s = self.splines.iter().find(|s| u >= s.start as f64 && u <= (s.start + s.y.len() - 1) as f64)?;
        s.eval(u - s.start as f64, h)
    }
}

/// `p̄(x,t)/m` from a propagated series: cubic splines in `x` on each valid
/// run, linear in `t` between slices.
#[derive(Debug, Clone)]
pub struct SeriesField {
    name: String,
    times: Vec<f64>,
    slices: Vec<Slice>,
    x_min: f64,
    h: f64,
}

impl Slice {
    fn build(velocity: &[f64], valid: &[bool], density: &[f64], h: f64) -> Self {
        let splines = mask_runs(valid)
            .into_iter()
            .map(|r| Spline::new(r.start, velocity[r.clone()].to_vec(), h))
            .collect();
        let (mut num, mut den) = (0.0, 0.0);
        for j in (0..velocity.len()).filter(|&j| valid[j]) {
            num += density[j] * velocity[j] * velocity[j];
            den += density[j];
        }
        let rms = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
        Self { splines, rms }
    }
}

/// One time slice of a sampled velocity field.
#[derive(Debug, Clone)]
pub struct VelocitySlice {
    pub velocity: Vec<f64>,
    pub valid: Vec<bool>,
    /// Weights for the RMS speed used by the undersampling check.
    pub density: Vec<f64>,
}

impl SeriesField {
    pub fn new(series: &TimeSeries, floor: Floor) -> Result<Self> {
        if series.len() < 2 {
            return Err(invalid("series", "need at least two time slices"));
        }
        let grid = *series.states[0].grid();
        let slices = series
            .states
            .par_iter()
            .map(|wf| {
                if wf.grid() != &grid {
                    return Err(Error::GridMismatch);
                }
                let f = momentum_field(wf, floor)?;
                let mass = wf.config().mass;
                Ok(VelocitySlice {
                    velocity: f.values.iter().map(|p| p / mass).collect(),
                    valid: f.valid,
                    density: f.density,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_slices("series", series.times.clone(), &grid, slices)
    }

    /// Field from precomputed slices on the coordinates of `grid`.
    pub fn from_slices(name: &str, times: Vec<f64>, grid: &Grid, slices: Vec<VelocitySlice>) -> Result<Self> {
        if times.len() != slices.len() || times.len() < 2 {
            return Err(invalid("slices", "need one slice per time and at least two times"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("times", "must be strictly increasing"));
        }
        if slices.iter().any(|s| s.velocity.len() != grid.n() || s.valid.len() != grid.n() || s.density.len() != grid.n()) {
            return Err(Error::GridMismatch);
        }
        let slices = slices.par_iter().map(|s| Slice::build(&s.velocity, &s.valid, &s.density, grid.dx())).collect();
        Ok(Self {
            name: name.to_string(),
            times,
            slices,
            x_min: grid.x_min(),
            h: grid.dx(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn at_slice(&self, k: usize, x: f64) -> Option<f64> {
        self.slices[k].eval(x, self.x_min, self.h)
    }

    /// Largest `|v(x_k, t_{k+1}) − v(x_k, t_k)|` along the recorded paths,
    /// relative to the largest speed met along them or the largest RMS
    /// speed of any slice, whichever is bigger.
    pub fn undersampling(&self, ensemble: &TrajectoryEnsemble) -> f64 {
        let mut worst = 0.0f64;
        let mut scale = self.slices.iter().map(|s| s.rms).fold(0.0, f64::max);
        for (path, stop) in ensemble.paths.iter().zip(&ensemble.stopped) {
            let end = stop.unwrap_or(self.times.len() - 1);
            for k in 0..end.min(self.times.len() - 1) {
                let x = path[k];
                if let (Some(a), Some(b)) = (self.at_slice(k, x), self.at_slice(k + 1, x)) {
                    worst = worst.max((b - a).abs());
                    scale = scale.max(a.abs()).max(b.abs());
                }
            }
        }
        if scale > 0.0 { worst / scale } else { 0.0 }
    }
}

impl VelocityField for SeriesField {
    fn name(&self) -> &str {
        &self.name
    }

    fn undersampling(&self, ensemble: &TrajectoryEnsemble) -> f64 {
        SeriesField::undersampling(self, ensemble)
    }

    fn velocity(&self, x: f64, t: f64) -> Option<f64> {
        let (t0, t1) = (self.times[0], *self.times.last()?);
        if !(t >= t0 - 1e-12 && t <= t1 + 1e-12) {
            return None;
        }
        let k = self.times.partition_point(|s| *s <= t).clamp(1, self.times.len() - 1) - 1;
        let (ta, tb) = (self.times[k], self.times[k + 1]);
        let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        let a = self.at_slice(k, x)?;
        let b = self.at_slice(k + 1, x)?;
        Some((1.0 - w) * a + w * b)
    }
}

/// Guidance velocity of the freely spreading Gaussian, in closed form.
#[derive(Debug, Clone, Copy)]
pub struct FreeGaussianField {
    pub x0: f64,
    pub p0: f64,
    pub sigma: f64,
    pub config: PhysicsConfig,
}

impl VelocityField for FreeGaussianField {
    fn name(&self) -> &str {
        "free-gaussian"
    }

    fn velocity(&self, x: f64, t: f64) -> Option<f64> {
        let (hbar, m) = (self.config.hbar, self.config.mass);
        let s2 = self.sigma * self.sigma;
        let tau = hbar * t / (m * s2);
        let centre = self.x0 + self.p0 * t / m;
        Some(self.p0 / m + hbar * tau * (x - centre) / (m * s2 * (1.0 + tau * tau)))
    }
}

/// Guidance velocity of a harmonic coherent state: uniform, equal to the
/// classical `p(t)/m`.
#[derive(Debug, Clone, Copy)]
pub struct CoherentField {
    pub q0: f64,
    pub p0: f64,
    pub omega: f64,
    pub config: PhysicsConfig,
}

impl VelocityField for CoherentField {
    fn name(&self) -> &str {
        "coherent"
    }

    fn velocity(&self, _x: f64, t: f64) -> Option<f64> {
        let m = self.config.mass;
        let (s, c) = (self.omega * t).sin_cos();
        Some((self.p0 * c - m * self.omega * self.q0 * s) / m)
    }
}

/// Streamlines sampled at common times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEnsemble {
    pub times: Vec<f64>,
    /// One path per initial point, ordered by initial coordinate.
    pub paths: Vec<Vec<f64>>,
    /// Index of the last time reached before the path entered an undefined
    /// region; later entries repeat that position.
    pub stopped: Vec<Option<usize>>,
    pub sampling: Sampling,
    pub metadata: BTreeMap<String, String>,
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn endpoints(&self) -> Vec<f64> {
        self.paths.iter().map(|p| *p.last().unwrap_or(&f64::NAN)).collect()
    }

    fn live(&self, i: usize, k: usize) -> bool {
        self.stopped[i].is_none_or(|s| k <= s)
    }

    /// Smallest gap between neighbouring paths over all times; negative if
    /// two paths swapped order.
    pub fn min_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for k in 0..self.times.len() {
            for i in 1..self.paths.len() {
                if self.live(i - 1, k) && self.live(i, k) {
                    gap = gap.min(self.paths[i][k] - self.paths[i - 1][k]);
                }
            }
        }
        gap
    }

    pub fn stopped_count(&self) -> usize {
        self.stopped.iter().filter(|s| s.is_some()).count()
    }
}

fn rk4_path(field: &dyn VelocityField, x0: f64, times: &[f64], substeps: usize) -> (Vec<f64>, Option<usize>) {
    let mut path = Vec::with_capacity(times.len());
    path.push(x0);
    let mut x = x0;
    for k in 0..times.len() - 1 {
        let h = (times[k + 1] - times[k]) / substeps as f64;
        let mut ok = true;
        for s in 0..substeps {
            let t = times[k] + s as f64 * h;
            let step = (|| {
                let k1 = field.velocity(x, t)?;
                let k2 = field.velocity(x + 0.5 * h * k1, t + 0.5 * h)?;
                let k3 = field.velocity(x + 0.5 * h * k2, t + 0.5 * h)?;
                let k4 = field.velocity(x + h * k3, t + h)?;
                Some(h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0)
            })();
            match step {
                Some(dx) => x += dx,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            let last = path[k];
            path.resize(times.len(), last);
            return (path, Some(k));
        }
        path.push(x);
    }
    (path, None)
}

/// Fourth-order Runge-Kutta streamlines of `field`, with `substeps` steps
/// between consecutive output times.
pub fn integrate_in_field(
    field: &dyn VelocityField,
    x0: &[f64],
    times: &[f64],
    substeps: usize,
    sampling: Sampling,
) -> Result<TrajectoryEnsemble> {
    if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("times", "need at least two strictly increasing times"));
    }
    if substeps == 0 {
        return Err(invalid("substeps", "must be at least 1"));
    }
    let mut starts = x0.to_vec();
    starts.sort_by(f64::total_cmp);
    if let Some(bad) = starts.iter().find(|x| field.velocity(**x, times[0]).is_none()) {
        return Err(invalid("x0", format!("initial point {bad} is outside the field's valid region")));
    }
    let results: Vec<(Vec<f64>, Option<usize>)> = starts.par_iter().map(|&x| rk4_path(field, x, times, substeps)).collect();
    let (paths, stopped) = results.into_iter().unzip();
    let mut metadata = BTreeMap::new();
    metadata.insert("field".to_string(), field.name().to_string());
    metadata.insert("substeps".to_string(), substeps.to_string());
    Ok(TrajectoryEnsemble {
        times: times.to_vec(),
        paths,
        stopped,
        sampling,
        metadata,
    })
}

/// Streamlines through the conditional-momentum field of a propagated
/// series, with the post-hoc check that the series resolves the field in
/// time.
pub fn integrate_trajectories(
    series: &TimeSeries,
    x0: &[f64],
    floor: Floor,
    substeps: usize,
    sampling: Sampling,
) -> Result<TrajectoryEnsemble> {
    let field = SeriesField::new(series, floor)?;
    let ensemble = integrate_in_field(&field, x0, &series.times, substeps, sampling)?;
    let change = field.undersampling(&ensemble);
    if change > MAX_FIELD_CHANGE {
        return Err(Error::FieldUndersampled {
            change,
            limit: MAX_FIELD_CHANGE,
        });
    }
    Ok(ensemble)
}

/// Total-variation distance between the endpoint histogram and `|ψ(t)|²`
/// over `TV_BINS` bins spanning all but `1e-6` of the final density.
pub fn transported_density_check(ensemble: &TrajectoryEnsemble, final_state: &Wavefunction) -> Result<f64> {
    if ensemble.len() < MIN_PATHS {
        return Err(Error::TooFewPaths {
            got: ensemble.len(),
            need: MIN_PATHS,
        });
    }
    let (xs, c) = cdf(final_state);
    let (lo, hi) = (inverse_cdf(&xs, &c, 5e-7), inverse_cdf(&xs, &c, 1.0 - 5e-7));
    let width = (hi - lo) / TV_BINS as f64;
    let mut counts = vec![0usize; TV_BINS];
    let mut outside = 0usize;
    for x in ensemble.endpoints() {
        let b = ((x - lo) / width).floor();
        if b >= 0.0 && (b as usize) < TV_BINS {
            counts[b as usize] += 1;
        } else {
            outside += 1;
        }
    }
    let cdf_at = |x: f64| {
        let i = xs.partition_point(|v| *v < x).clamp(1, xs.len() - 1);
        let w = ((x - xs[i - 1]) / (xs[i] - xs[i - 1])).clamp(0.0, 1.0);
        c[i - 1] + w * (c[i] - c[i - 1])
    };
    let total = ensemble.len() as f64;
    let mut tv = outside as f64 / total;
    let mut inside_mass = 0.0;
    for (b, count) in counts.iter().enumerate() {
        let mass = cdf_at(lo + (b + 1) as f64 * width) - cdf_at(lo + b as f64 * width);
        inside_mass += mass;
        tv += (*count as f64 / total - mass).abs();
    }
    tv += (1.0 - inside_mass).abs();
    Ok(0.5 * tv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{coherent_at, free_gaussian};
    use crate::grid::{gaussian_packet, to_momentum};

    fn setup() -> (Grid, PhysicsConfig) {
        let cfg = PhysicsConfig::default();
        (Grid::new(512, -20.0, 20.0, &cfg).unwrap(), cfg)
    }

    #[test]
    fn harmonic_potential_matches_formula() {
        let cfg = PhysicsConfig::new(1.0, 2.0).unwrap();
        let g = Grid::new(256, -10.0, 10.0, &cfg).unwrap();
        let v = Potential::harmonic(&g, 1.5, &cfg).unwrap();
        for (x, v) in g.positions().iter().zip(v.values()) {
            assert!((v - 0.5 * 2.0 * 2.25 * x * x).abs() < 1e-12);
        }
        assert!(Potential::tabulated(&g, vec![f64::NAN; 256]).is_err());
        assert!(Potential::harmonic(&g, 0.0, &cfg).is_err());
    }

    #[test]
    fn free_packet_follows_closed_form() {
        let (g, cfg) = setup();
        let sigma = 1.0;
        let wf = gaussian_packet(&g, -2.0, 1.0, sigma, &cfg).unwrap();
        let dt = max_stable_dt(&g, &cfg);
        let steps = (1.0 / dt).ceil() as usize;
        let dt = 1.0 / steps as f64;
        let series = split_step_evolve(&wf, &Potential::free(&g), dt, steps, steps).unwrap();
        let end = series.last();
        let want = sigma / 2f64.sqrt() * (1.0 + 1.0f64 / sigma.powi(4)).sqrt();
        assert!((end.coordinate_spread() - want).abs() < 1e-6, "{}", end.coordinate_spread());
        let exact = free_gaussian(&g, 1.0, -2.0, 1.0, sigma, &cfg).unwrap();
        let err = end.amplitudes().iter().zip(exact.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn norm_is_preserved() {
        let (g, cfg) = setup();
        let wf = gaussian_packet(&g, 1.0, -0.5, 1.2, &cfg).unwrap();
        let v = Potential::harmonic(&g, 1.0, &cfg).unwrap();
        let s = split_step_evolve(&wf, &v, 5e-4, 1000, 1000).unwrap();
        assert!((s.last().norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coherent_state_tracks_classical_orbit() {
        let (g, cfg) = setup();
        let (q0, p0, w) = (2.0, 0.5, 1.0);
        let wf = Wavefunction::from_fn(g, cfg, |x| coherent_at(x, 0.0, q0, p0, w, &cfg)).unwrap().normalized().unwrap();
        let v = Potential::harmonic(&g, w, &cfg).unwrap();
        let period = 2.0 * PI / w;
        let steps = 12_000;
        let dt = period / steps as f64;
        let s = split_step_evolve(&wf, &v, dt, steps, 100).unwrap();
        let e0 = energy(&s.states[0], &v).unwrap();
        for (t, st) in s.times.iter().zip(&s.states) {
            let want = q0 * (w * t).cos() + p0 / w * (w * t).sin();
            assert!((st.mean_coordinate() - want).abs() < 1e-6, "t={t}");
            assert!((energy(st, &v).unwrap() - e0).abs() < 1e-6 * e0);
        }
        assert!((s.last().mean_coordinate() - q0).abs() < 1e-6);
    }

    #[test]
    fn window_phase_advances_with_dispersion() {
        let (g, cfg) = setup();
        let (p0, sigma, t) = (1.0, 3.0, 0.5);
        let wf = gaussian_packet(&g, -2.0, p0, sigma, &cfg).unwrap();
        let dt = max_stable_dt(&g, &cfg);
        let steps = (t / dt).ceil() as usize;
        let s = split_step_evolve(&wf, &Potential::free(&g), t / steps as f64, steps, steps).unwrap();
        let j = ((-2.0 + p0 * t - g.x_min()) / g.dx()).round() as usize;
        let x = g.x(j);
        let before = wf.amplitudes()[j] * Complex64::from_polar(1.0, -p0 * x);
        let after = s.last().amplitudes()[j] * Complex64::from_polar(1.0, -p0 * x);
        let tau: f64 = t / (sigma * sigma);
        let xi = x - (-2.0 + p0 * t);
        let spread = -0.5 * tau.atan() + xi * xi * tau / (2.0 * sigma * sigma * (1.0 + tau * tau));
        let advance = (after / before).arg() - spread;
        assert!((advance + p0 * p0 * t / 2.0).abs() < 1e-8, "{advance}");
    }

    #[test]
    fn boundary_and_step_checks() {
        let (g, cfg) = setup();
        let wf = gaussian_packet(&g, 10.0, 8.0, 1.0, &cfg).unwrap();
        let dt = max_stable_dt(&g, &cfg);
        let err = split_step_evolve(&wf, &Potential::free(&g), dt, 5000, 100);
        assert!(matches!(err, Err(Error::BoundaryContact { .. })));
        assert!(split_step_evolve(&wf, &Potential::free(&g), 2.0 * dt, 1, 1).is_err());
    }

    fn slit_grid() -> (Grid, PhysicsConfig) {
        let cfg = PhysicsConfig::default();
        (Grid::new(1024, -40.0, 40.0, &cfg).unwrap(), cfg)
    }

    #[test]
    fn two_slit_far_field() {
        let (g, cfg) = slit_grid();
        let slit = TwoSlit::default();
        let wf = two_slit_state(&slit, &g, &cfg).unwrap();
        assert!(wf.mean_coordinate().abs() < 1e-12);
        let phi = to_momentum(&wf).unwrap();
        let s2 = slit.width * slit.width;
        let norm = 2.0 * (s2 / PI).sqrt() / (1.0 + (-slit.separation.powi(2) / (4.0 * s2)).exp());
        for (p, d) in phi.coords().iter().zip(phi.densities()) {
            let want = norm * (-p * p * s2).exp() * (p * slit.separation / 2.0).cos().powi(2);
            assert!((d - want).abs() < 1e-10, "{p}");
        }
        assert!((slit.fringe_spacing(&cfg) - PI / 2.0).abs() < 1e-15);
        assert!(two_slit_state(&TwoSlit { separation: 1.0, ..slit }, &g, &cfg).is_err());
    }

    fn evolve_slits(t: f64, record_every: usize) -> TimeSeries {
        let (g, cfg) = slit_grid();
        let wf = two_slit_state(&TwoSlit::default(), &g, &cfg).unwrap();
        let dt = max_stable_dt(&g, &cfg);
        let steps = (t / dt).ceil() as usize;
        split_step_evolve(&wf, &Potential::free(&g), t / steps as f64, steps, record_every).unwrap()
    }

    #[test]
    fn two_slit_minima_match_fringe_formula() {
        let slit = TwoSlit::default();
        let cfg = PhysicsConfig::default();
        let t = 2.0;
        let s = evolve_slits(t, 1_000_000);
        let wf = s.last();
        let d = wf.densities();
        let xs = wf.coords();
        let minima: Vec<f64> = (1..d.len() - 1).filter(|&j| d[j] < d[j - 1] && d[j] < d[j + 1] && xs[j] > 0.0 && d[j] > 1e-12).map(|j| xs[j]).collect();
        for (want, got) in slit.minima(t, &cfg, 2).iter().zip(&minima) {
            assert!((want - got).abs() <= wf.grid().dx(), "{want} vs {got}");
        }
    }

    #[test]
    fn straight_line_at_symmetry_point() {
        let (g, cfg) = setup();
        let wf = gaussian_packet(&g, 0.0, 0.0, 1.0, &cfg).unwrap();
        let dt = max_stable_dt(&g, &cfg);
        let s = split_step_evolve(&wf, &Potential::free(&g), dt, 2000, 50).unwrap();
        let e = integrate_trajectories(&s, &[0.0], Floor::default(), 2, Sampling::Explicit).unwrap();
        assert!(e.paths[0].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn coherent_streamline_is_sinusoid() {
        let (g, cfg) = setup();
        let field = CoherentField {
            q0: 1.0,
            p0: 0.0,
            omega: 1.0,
            config: cfg,
        };
        let times: Vec<f64> = (0..=64).map(|k| k as f64 * 2.0 * PI / 64.0).collect();
        let e = integrate_in_field(&field, &[-0.5, 0.3], &times, 4, Sampling::Explicit).unwrap();
        for (k, t) in times.iter().enumerate() {
            assert!((e.paths[0][k] - (-0.5 + t.cos() - 1.0)).abs() < 1e-6);
        }
        assert!((e.paths[1][64] - 0.3).abs() < 1e-6);

        let wf = Wavefunction::from_fn(g, cfg, |x| coherent_at(x, 0.0, 1.0, 0.0, 1.0, &cfg)).unwrap().normalized().unwrap();
        let v = Potential::harmonic(&g, 1.0, &cfg).unwrap();
        let dt = 2.0 * PI / 12_000.0;
        let s = split_step_evolve(&wf, &v, dt, 12_000, 10).unwrap();
        let e = integrate_trajectories(&s, &[0.5, 1.5], Floor::default(), 2, Sampling::Explicit).unwrap();
        for (k, t) in s.times.iter().enumerate() {
            assert!((e.paths[0][k] - (0.5 + t.cos() - 1.0)).abs() < 1e-5, "t={t}");
        }
    }

    #[test]
    fn two_slit_paths_do_not_cross() {
        let s = evolve_slits(2.0, 20);
        let x0 = sample_positions(&s.states[0], 100, Sampling::Quantile).unwrap();
        let e = integrate_trajectories(&s, &x0, Floor::default(), 2, Sampling::Quantile).unwrap();
        assert_eq!(e.stopped_count(), 0);
        assert!(e.min_gap() > 0.0);
        for p in e.paths.iter().filter(|p| p[0] > 0.0) {
            assert!(p.iter().all(|x| *x > 0.0));
        }
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let s = evolve_slits(1.0, 20);
        let x0 = sample_positions(&s.states[0], 50, Sampling::Quantile).unwrap();
        let run = |sub| integrate_trajectories(&s, &x0, Floor::default(), sub, Sampling::Explicit).unwrap().endpoints();
        let reference = run(64);
        let err = |sub| (run(sub).iter().zip(&reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / x0.len() as f64).sqrt();
        let errs: Vec<f64> = [1, 2, 4, 8].into_iter().map(err).collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((8.0..=32.0).contains(&ratio), "{errs:?}");
        }
    }

    #[test]
    fn free_ensemble_stays_distributed() {
        let (g, cfg) = setup();
        let wf = gaussian_packet(&g, -1.0, 0.5, 1.0, &cfg).unwrap();
        let dt = max_stable_dt(&g, &cfg);
        let s = split_step_evolve(&wf, &Potential::free(&g), dt, 3000, 60).unwrap();
        let x0 = sample_positions(&wf, 1000, Sampling::Quantile).unwrap();
        let e = integrate_trajectories(&s, &x0, Floor::default(), 2, Sampling::Quantile).unwrap();
        let tv = transported_density_check(&e, s.last()).unwrap();
        assert!(tv < 0.05, "{tv}");

        let x0 = sample_positions(&wf, 1000, Sampling::Random { seed: 3 }).unwrap();
        let e = integrate_trajectories(&s, &x0, Floor::default(), 2, Sampling::Random { seed: 3 }).unwrap();
        // plain Monte Carlo noise for 1000 draws in 64 bins is about 0.07
        assert!(transported_density_check(&e, s.last()).unwrap() < 0.12);

        let few = integrate_trajectories(&s, &x0[..50], Floor::default(), 1, Sampling::Explicit).unwrap();
        assert!(matches!(transported_density_check(&few, s.last()), Err(Error::TooFewPaths { .. })));
    }

    #[test]
    fn two_slit_endpoints_in_bright_fringes() {
        let s = evolve_slits(2.0, 20);
        let x0 = sample_positions(&s.states[0], 1000, Sampling::Quantile).unwrap();
        let e = integrate_trajectories(&s, &x0, Floor::default(), 2, Sampling::Quantile).unwrap();
        assert!(transported_density_check(&e, s.last()).unwrap() < 0.05);
        let fin = s.last();
        let d = fin.densities();
        let peak = d.iter().cloned().fold(0.0, f64::max);
        let bright = e
            .endpoints()
            .iter()
            .filter(|x| {
                let j = ((**x - fin.grid().x_min()) / fin.grid().dx()).round() as usize;
                d[j] > 0.1 * peak
            })
            .count();
        assert!(bright as f64 > 0.9 * e.len() as f64);
    }

    #[test]
    fn quantile_sampling_reproduces_gaussian_quantiles() {
        let (g, cfg) = setup();
        let wf = gaussian_packet(&g, 0.0, 0.0, 1.0, &cfg).unwrap();
        let x = sample_positions(&wf, 4, Sampling::Quantile).unwrap();
        // |ψ|² is N(0, ½); its 0.875 quantile is 1.15035/√2
        assert!((x[3] - 1.150_349_380_376_008 / 2f64.sqrt()).abs() < 1e-3, "{x:?}");
        assert!((x[0] + x[3]).abs() < 1e-12);
        let a = sample_positions(&wf, 10, Sampling::Random { seed: 9 }).unwrap();
        let b = sample_positions(&wf, 10, Sampling::Random { seed: 9 }).unwrap();
        assert_eq!(a, b);
    }
}
