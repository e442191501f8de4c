//! Fractional Fourier representations and the conditional fields and
//! streamlines they carry.
//!
//! `F_θ` rotates phase space by `θ`: the new coordinate is
//! `u = x cos θ + p sin θ` and its conjugate `v = −x sin θ + p cos θ`.
//! [`shadow_field`] returns `v̄(u) = ∂S_θ/∂u`, so θ = 0 gives `p̄(x)` and
//! θ = π/2 gives `−x̄(p)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bohm::{guidance_from_phase, ConditionalField};
use crate::dynamics::{
    integrate_in_field, max_stable_dt, sample_positions, split_step_evolve, Potential, PotentialKind, Sampling,
    SeriesField, TrajectoryEnsemble, VelocitySlice, MAX_FIELD_CHANGE,
};
use crate::error::{invalid, Error, Result};
use crate::fourier;
use crate::grid::{polar_decompose, Floor, Grid, Representation, Wavefunction};

/// Phase-space support must sit inside `|x|, |p| ≤ SUPPORT_RADIUS · r`, with
/// `r` the smaller of the grid's position and momentum half-widths.
pub const SUPPORT_RADIUS: f64 = 0.45;
pub const SUPPORT_LIMIT: f64 = 1e-10;

/// Angle of a representation, `None` for momentum (which is sampled on the
/// momentum grid rather than the shared position geometry).
fn angle_of(repr: Representation) -> Option<f64> {
    match repr {
        Representation::Position => Some(0.0),
        Representation::Fractional { theta } => Some(theta),
        Representation::Momentum => None,
    }
}

/// `θ` reduced to `(−π, π]`.
fn reduce(theta: f64) -> f64 {
    let r = theta.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Probability outside the central square of phase space.
fn support_tail(amps: &[Complex64], grid: &Grid) -> f64 {
    let n = amps.len();
    let radius = SUPPORT_RADIUS * grid.x_max().min(-grid.x_min()).max(0.0).min(grid.p_max());
    let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let outside_x: f64 = amps
        .iter()
        .enumerate()
        .filter(|(j, _)| grid.x(*j).abs() > radius)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    let mut spectrum = amps.to_vec();
    fourier::forward(&mut spectrum);
    let spec_total: f64 = spectrum.iter().map(|a| a.norm_sqr()).sum();
    let outside_p: f64 = spectrum
        .iter()
        .enumerate()
        .filter(|(k, _)| (fourier::signed_index(*k, n) as f64 * grid.dp()).abs() > radius)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    outside_x / total + outside_p / spec_total
}

/// Kernel `√((1 − i cot θ)/2πħ) exp(i[(u² + x²) cos θ − 2ux]/(2ħ sin θ))`
/// applied by chirp multiplication and a Bluestein convolution. Accurate for
/// `|sin θ| ≥ 1/√2`.
fn direct(psi: &[Complex64], grid: &Grid, theta: f64) -> Vec<Complex64> {
    let n = psi.len();
    let (s, c) = theta.sin_cos();
    let cot = c / s;
    let hbar = grid.hbar();
    let (x0, h) = (grid.x_min(), grid.dx());
    let pre = ((Complex64::new(1.0, -cot)) / (2.0 * PI * hbar)).sqrt() * h;
    let m = 2 * n;
    let phase = |v: f64| Complex64::from_polar(1.0, v / hbar);
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for (k, v) in psi.iter().enumerate() {
        let kf = k as f64;
        let x = x0 + kf * h;
        a[k] = v * phase(0.5 * cot * x * x - x0 * h * kf / s - 0.5 * h * h * kf * kf / s);
    }
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    for d in 0..n {
        let w = phase(0.5 * h * h * (d * d) as f64 / s);
        b[d] = w;
        if d > 0 {
            b[m - d] = w;
        }
    }
    fourier::forward(&mut a);
    fourier::forward(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fourier::inverse(&mut a);
    let inv_m = 1.0 / m as f64;
    (0..n)
        .map(|j| {
            let jf = j as f64;
            let u = x0 + jf * h;
            let outer = phase(0.5 * cot * u * u - x0 * x0 / s - x0 * h * jf / s - 0.5 * h * h * jf * jf / s);
            pre * outer * a[j] * inv_m
        })
        .collect()
}

fn in_direct_range(theta: f64) -> bool {
    (FRAC_PI_4..=3.0 * FRAC_PI_4).contains(&theta.abs())
}

/// Fractional Fourier transform by `theta`, a unitary group with
/// `F_θ = Σ e^{−inθ}|n⟩⟨n|` in oscillator units (`m ω = 1`). The output is
/// sampled at the input grid's position coordinates.
pub fn frft(wf: &Wavefunction, theta: f64) -> Result<Wavefunction> {
    let start = angle_of(wf.representation())
        .ok_or_else(|| invalid("wf", "momentum-grid input; transform the position form instead"))?;
    if !theta.is_finite() {
        return Err(invalid("theta", "must be finite"));
    }
    let grid = *wf.grid();
    let tail = support_tail(wf.amplitudes(), &grid);
    if tail > SUPPORT_LIMIT {
        return Err(Error::SupportOverflow {
            tail,
            limit: SUPPORT_LIMIT,
        });
    }
    let r = reduce(theta);
    let amps = if r == 0.0 {
        wf.amplitudes().to_vec()
    } else if in_direct_range(r) {
        direct(wf.amplitudes(), &grid, r)
    } else {
        let first = if r < -3.0 * FRAC_PI_4 { -FRAC_PI_2 } else { FRAC_PI_2 };
        let mid = direct(wf.amplitudes(), &grid, first);
        direct(&mid, &grid, r - first)
    };
    let total = reduce(start + theta);
    let repr = if total == 0.0 {
        Representation::Position
    } else {
        Representation::Fractional {
            theta: total.rem_euclid(2.0 * PI),
        }
    };
    Wavefunction::from_samples_in(grid, amps, *wf.config(), repr)
}

/// `(x, p)` of the point with coordinates `(u, v)` in the θ frame.
pub fn to_phase_space(u: f64, v: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (u * c - v * s, u * s + v * c)
}

/// Conditional mean `v̄(u) = ∂S_θ/∂u` of the conjugate coordinate in the θ
/// representation. At θ = π/2, `x̄(p) = −v̄`.
pub fn shadow_field(wf: &Wavefunction, theta: f64, floor: Floor) -> Result<ConditionalField> {
    let rotated = frft(wf, theta)?;
    let polar = polar_decompose(&rotated, floor)?;
    guidance_from_phase(&polar)
}

/// Comparison of streamlines in two representations.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub theta1: f64,
    pub theta2: f64,
    pub times: Vec<f64>,
    /// Cumulative-probability label of each path pair.
    pub labels: Vec<f64>,
    /// Largest `|c₁ − c₂|` over labels and times, with `c` the standardized
    /// coordinate `(u − ⟨u⟩)/Δu` of each domain.
    pub divergence: f64,
    pub worst_label: f64,
    pub worst_time: f64,
    pub first: TrajectoryEnsemble,
    pub second: TrajectoryEnsemble,
}

struct DomainRun {
    ensemble: TrajectoryEnsemble,
    /// `(⟨u⟩, Δu)` per time.
    moments: Vec<(f64, f64)>,
}

/// `E[u̇ | u]` for `H = p²/2m + mω²x²/2`, which is linear in `(u, v̄)`.
fn theta_velocity(u: f64, v: f64, theta: f64, mass: f64, omega: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let (x, p) = (u * c - v * s, u * s + v * c);
    p * c / mass - mass * omega * omega * x * s
}

fn moments(wf: &Wavefunction) -> (f64, f64) {
    let d = wf.densities();
    let u = wf.coords();
    let total: f64 = d.iter().sum();
    let mean = d.iter().zip(&u).map(|(w, x)| w * x).sum::<f64>() / total;
    let var = d.iter().zip(&u).map(|(w, x)| w * (x - mean) * (x - mean)).sum::<f64>() / total;
    (mean, var.sqrt())
}

fn run_domain(states: &[Wavefunction], times: &[f64], theta: f64, omega: f64, paths: usize, floor: Floor) -> Result<DomainRun> {
    let grid = *states[0].grid();
    let mass = states[0].config().mass;
    let rotated: Vec<Wavefunction> = states.par_iter().map(|wf| frft(wf, theta)).collect::<Result<_>>()?;
    let slices = rotated
        .par_iter()
        .map(|w| {
            let f = guidance_from_phase(&polar_decompose(w, floor)?)?;
            let velocity = f
                .coords
                .iter()
                .zip(&f.values)
                .map(|(u, v)| theta_velocity(*u, *v, theta, mass, omega))
                .collect();
            Ok(VelocitySlice {
                velocity,
                valid: f.valid,
                density: f.density,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let field = SeriesField::from_slices(&format!("shadow θ={theta}"), times.to_vec(), &grid, slices)?;
    let x0 = sample_positions(&rotated[0], paths, Sampling::Quantile)?;
    let ensemble = integrate_in_field(&field, &x0, times, 4, Sampling::Quantile)
        .map_err(|e| match e {
            Error::InvalidParameter { name: "x0", .. } => Error::ChartIncompatible { path: 0, theta },
            other => other,
        })?;
    if let Some(path) = ensemble.stopped.iter().position(|s| s.is_some()) {
        return Err(Error::ChartIncompatible { path, theta });
    }
    let change = field.undersampling(&ensemble);
    if change > MAX_FIELD_CHANGE {
        return Err(Error::FieldUndersampled {
            change,
            limit: MAX_FIELD_CHANGE,
        });
    }
    Ok(DomainRun {
        ensemble,
        moments: rotated.iter().map(moments).collect(),
    })
}

/// Evolve `initial` under a free or harmonic potential, follow quantile
/// paths in the θ₁ and θ₂ representations and compare them in standardized
/// coordinates.
pub fn streamline_divergence(
    initial: &Wavefunction,
    potential: &Potential,
    theta1: f64,
    theta2: f64,
    times: &[f64],
    paths: usize,
    floor: Floor,
) -> Result<DivergenceReport> {
    let omega = match potential.kind() {
        PotentialKind::Free => 0.0,
        PotentialKind::Harmonic { omega } => omega,
        PotentialKind::Tabulated => {
            return Err(invalid("potential", "θ-streamlines need a free or harmonic potential"));
        }
    };
    if times.len() < 2 || times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("times", "need increasing times starting at 0"));
    }
    if paths < 2 {
        return Err(invalid("paths", "need at least two paths"));
    }
    let limit = max_stable_dt(initial.grid(), initial.config());
    let mut states = vec![initial.clone()];
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let steps = (span / limit).ceil() as usize;
        let next = split_step_evolve(states.last().expect("non-empty"), potential, span / steps as f64, steps, steps)?;
        states.push(next.last().clone());
    }
    let (a, b) = rayon::join(
        || run_domain(&states, times, theta1, omega, paths, floor),
        || run_domain(&states, times, theta2, omega, paths, floor),
    );
    let (a, b) = (a?, b?);
    let labels: Vec<f64> = (0..paths).map(|i| (i as f64 + 0.5) / paths as f64).collect();
    let (mut divergence, mut worst_label, mut worst_time) = (0.0f64, labels[0], times[0]);
    for (k, t) in times.iter().enumerate() {
        let ((m1, s1), (m2, s2)) = (a.moments[k], b.moments[k]);
        for i in 0..paths {
            let c1 = (a.ensemble.paths[i][k] - m1) / s1;
            let c2 = (b.ensemble.paths[i][k] - m2) / s2;
            let d = (c1 - c2).abs();
            if d > divergence {
                (divergence, worst_label, worst_time) = (d, labels[i], *t);
            }
        }
    }
    Ok(DivergenceReport {
        theta1,
        theta2,
        times: times.to_vec(),
        labels,
        divergence,
        worst_label,
        worst_time,
        first: a.ensemble,
        second: b.ensemble,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::coherent_at;
    use crate::bohm::{conditional_momentum, conditional_position};
    use crate::grid::{gaussian_packet, superpose, to_momentum, PhysicsConfig};

    fn setup() -> (Grid, PhysicsConfig) {
        let cfg = PhysicsConfig::default();
        (Grid::symmetric(512, &cfg).unwrap(), cfg)
    }

    fn max_diff(a: &Wavefunction, b: &Wavefunction) -> f64 {
        a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn cat(g: &Grid, cfg: &PhysicsConfig) -> Wavefunction {
        let l = gaussian_packet(g, -2.0, 0.5, 1.0, cfg).unwrap();
        let r = gaussian_packet(g, 2.0, -0.5, 1.0, cfg).unwrap();
        superpose(&[(Complex64::new(1.0, 0.0), &l), (Complex64::new(0.0, 1.0), &r)]).unwrap()
    }

    #[test]
    fn group_laws() {
        let (g, cfg) = setup();
        let wf = cat(&g, &cfg);
        assert!(max_diff(&frft(&wf, 0.0).unwrap(), &wf) < 1e-10);
        let f = frft(&wf, 2.0 * PI).unwrap();
        assert!(max_diff(&f, &wf) < 1e-7);
        assert_eq!(f.representation(), Representation::Position);
        let direct = frft(&wf, FRAC_PI_2).unwrap();
        let composed = frft(&frft(&wf, PI / 3.0).unwrap(), PI / 6.0).unwrap();
        assert!(max_diff(&direct, &composed) < 1e-7);
        for theta in [0.1, 0.7, 1.9, 2.8, -2.5, 4.0] {
            assert!((frft(&wf, theta).unwrap().norm_sqr() - 1.0).abs() < 1e-10, "{theta}");
            let back = frft(&frft(&wf, theta).unwrap(), -theta).unwrap();
            assert!(max_diff(&back, &wf) < 1e-9, "{theta}");
        }
    }

    #[test]
    fn quarter_turn_is_the_momentum_transform() {
        let (g, cfg) = setup();
        for wf in [gaussian_packet(&g, 0.0, 0.0, 1.0, &cfg).unwrap(), cat(&g, &cfg)] {
            let f = frft(&wf, FRAC_PI_2).unwrap();
            let m = to_momentum(&wf).unwrap();
            let err = f.amplitudes().iter().zip(m.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "{err}");
        }
    }

    #[test]
    fn harmonic_evolution_is_rotation() {
        let (g, cfg) = setup();
        let (q0, p0) = (1.5, -0.5);
        let wf = Wavefunction::from_fn(g, cfg, |x| coherent_at(x, 0.0, q0, p0, 1.0, &cfg)).unwrap();
        let t = 0.9;
        let rotated = frft(&wf, t).unwrap();
        let evolved = Wavefunction::from_fn(g, cfg, |x| coherent_at(x, t, q0, p0, 1.0, &cfg)).unwrap();
        // e^{−iHt/ħ} = e^{−it/2} F_t
        let phase = Complex64::from_polar(1.0, -t / 2.0);
        let err = rotated.amplitudes().iter().zip(evolved.amplitudes()).map(|(a, b)| (phase * a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn support_overflow_rejected() {
        let (g, cfg) = setup();
        let far = gaussian_packet(&g, 20.0, 0.0, 1.0, &cfg).unwrap();
        assert!(matches!(frft(&far, 0.5), Err(Error::SupportOverflow { .. })));
    }

    #[test]
    fn field_examples() {
        let (g, cfg) = setup();
        let p0 = 4.0 * g.dp();
        let plane = gaussian_packet(&g, 0.0, p0, 2.5, &cfg).unwrap();
        let f = shadow_field(&plane, 0.0, Floor::Relative(1e-6)).unwrap();
        assert!(f.values.iter().zip(&f.valid).filter(|(_, v)| **v).all(|(x, _)| (x - p0).abs() < 1e-8));

        let shifted = gaussian_packet(&g, 1.25, 0.0, 1.0, &cfg).unwrap();
        let f = shadow_field(&shifted, FRAC_PI_2, Floor::Relative(1e-6)).unwrap();
        assert!(f.values.iter().zip(&f.valid).filter(|(_, v)| **v).all(|(x, _)| (x + 1.25).abs() < 1e-8));

        let (q, p) = (1.0, 2.0);
        let coh = Wavefunction::from_fn(g, cfg, |x| coherent_at(x, 0.0, q, p, 1.0, &cfg)).unwrap();
        let theta = FRAC_PI_4;
        let f = shadow_field(&coh, theta, Floor::Relative(1e-6)).unwrap();
        let want = -q * theta.sin() + p * theta.cos();
        assert!(f.values.iter().zip(&f.valid).filter(|(_, v)| **v).all(|(x, _)| (x - want).abs() < 1e-8));
    }

    #[test]
    fn agrees_with_position_and_momentum_routes() {
        let cfg = PhysicsConfig::default();
        let g = Grid::symmetric(1024, &cfg).unwrap();
        let wf = cat(&g, &cfg);
        let floor = Floor::Relative(1e-6);
        let s0 = shadow_field(&wf, 0.0, floor).unwrap();
        assert!(s0.max_abs_diff(&conditional_momentum(&wf, floor).unwrap()).unwrap() < 1e-5);
        let s1 = shadow_field(&wf, FRAC_PI_2, floor).unwrap();
        let xbar = conditional_position(&to_momentum(&wf).unwrap(), floor).unwrap();
        let worst = (0..g.n())
            .filter(|&k| s1.valid[k] && xbar.valid[k])
            .map(|k| (-s1.values[k] - xbar.values[k]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-5, "{worst}");
        assert!(xbar.route_gap.unwrap() < 1e-5);
    }

    #[test]
    fn harmonic_covariance_of_fields() {
        let (g, cfg) = setup();
        let wf = cat(&g, &cfg);
        let v = Potential::harmonic(&g, 1.0, &cfg).unwrap();
        let t = 0.6;
        let steps = (t / max_stable_dt(&g, &cfg)).ceil() as usize;
        let evolved = split_step_evolve(&wf, &v, t / steps as f64, steps, steps).unwrap();
        let floor = Floor::Relative(1e-6);
        for theta in [0.0, 0.4, FRAC_PI_2] {
            let a = shadow_field(evolved.last(), theta, floor).unwrap();
            let b = shadow_field(&wf, theta + t, floor).unwrap();
            let worst = a.max_abs_diff(&b).unwrap();
            assert!(worst < 1e-5, "θ={theta}: {worst}");
        }
    }

    #[test]
    fn divergence_examples() {
        let (g, cfg) = setup();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
        let free = Potential::free(&g);
        let floor = Floor::Relative(1e-8);
        let single = gaussian_packet(&g, 0.5, 0.3, 1.3, &cfg).unwrap();
        let r = streamline_divergence(&single, &free, 0.0, FRAC_PI_2, &times, 50, floor).unwrap();
        assert!(r.divergence < 1e-3, "{}", r.divergence);

        let l = gaussian_packet(&g, -2.5, 0.0, 1.0, &cfg).unwrap();
        let rr = gaussian_packet(&g, 2.5, 0.0, 1.0, &cfg).unwrap();
        let two = superpose(&[(Complex64::new(1.0, 0.0), &l), (Complex64::new(1.0, 0.0), &rr)]).unwrap();
        let r = streamline_divergence(&two, &free, 0.0, FRAC_PI_2, &times, 50, floor).unwrap();
        assert!(r.divergence > 0.1, "{}", r.divergence);

        let r = streamline_divergence(&two, &free, 0.3, 0.3, &times, 50, floor).unwrap();
        assert_eq!(r.divergence, 0.0);

        let tab = Potential::tabulated(&g, vec![0.0; g.n()]).unwrap();
        assert!(streamline_divergence(&two, &tab, 0.0, 1.0, &times, 50, floor).is_err());
    }
}
