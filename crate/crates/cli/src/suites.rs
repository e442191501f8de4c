//! Check suites: invariants run at fixed desk-scale settings.
//!
//! Each public function returns the line items of one suite so that other
//! front ends (the acceptance runner, the `clifford-demo` analysis) can reuse
//! them.

use std::f64::consts::{FRAC_PI_2, PI};

use moyal_core::analytic::{coherent_state, free_gaussian};
use moyal_core::bohm::{conditional_momentum, conditional_position, guidance_from_phase, qhj_residual};
use moyal_core::clifford::{
    arrow_compose, arrow_element, exploding_transform, generate_algebra, rotor_conjugate, rotor_from_tan_half, IdempotentSet, LabelSet,
    Matrix, Multivector,
};
use moyal_core::dynamics::{
    integrate_trajectories, max_stable_dt, sample_positions, split_step_evolve, transported_density_check, two_slit_state, Potential,
    Sampling, TwoSlit,
};
use moyal_core::exact::{int, rat, ExactComplex, Rational};
use moyal_core::shadow::{frft, streamline_divergence};
use moyal_core::star::{sample_poly, star_grid, star_poly, FlatTopWindow, PolySymbol};
use moyal_core::weyl::{char_via_trace, coherent_fock, expectation_cross_check, fock_to_wavefunction, in_faithful_range, DensityOperator};
use moyal_core::{
    characteristic_function, gaussian_packet, marginals, polar_decompose, superpose, to_momentum, wigner_transform, ComplexPhaseSpaceFunction, Floor, Grid,
    PhysicsConfig, Region, Result, Wavefunction,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analyses::{bracket_sweep, wigner_moment};
use crate::registry::{CheckSuite, Registry};
use crate::report::{fmt_f64, CheckItem};

/// Seed of the random superpositions in the marginals suite.
pub const MARGINALS_SEED: u64 = 20_231_105;

pub fn register(r: &mut Registry) {
    r.add_suite(Box::new(Suite {
        name: "star-identities",
        summary: "canonical commutator and classical-limit scaling of the Moyal bracket",
        run: |s| {
            let mut items = canonical_star(s)?;
            items.extend(classical_limit(s)?);
            Ok(items)
        },
    }));
    r.add_suite(Box::new(Suite {
        name: "marginals",
        summary: "Wigner marginals of random Gaussian superpositions",
        run: |s| marginals_suite(s, MARGINALS_SEED),
    }));
    r.add_suite(Box::new(Suite {
        name: "weyl-duality",
        summary: "characteristic function and expectation values by trace and phase-space routes",
        run: weyl_duality,
    }));
    r.add_suite(Box::new(Suite {
        name: "guidance",
        summary: "conditional momentum and position by the phase and Wigner-moment routes",
        run: guidance,
    }));
    r.add_suite(Box::new(Suite {
        name: "qhj",
        summary: "quantum Hamilton-Jacobi residual of analytic evolutions and its refinement",
        run: qhj,
    }));
    r.add_suite(Box::new(Suite {
        name: "trajectories",
        summary: "two-slit streamlines: non-crossing and transported density",
        run: trajectories,
    }));
    r.add_suite(Box::new(Suite {
        name: "shadow-divergence",
        summary: "position versus momentum streamlines for one and two Gaussians",
        run: shadow_divergence,
    }));
    r.add_suite(Box::new(Suite {
        name: "frft-laws",
        summary: "identity, quarter turn, additivity and unitarity of the fractional Fourier transform",
        run: frft_laws,
    }));
    r.add_suite(Box::new(Suite {
        name: "clifford-identities",
        summary: "quaternions, Dirac generators, groupoid composition, exploding transformation",
        run: |_| clifford_identities(),
    }));
}

struct Suite {
    name: &'static str,
    summary: &'static str,
    run: fn(f64) -> Result<Vec<CheckItem>>,
}

impl CheckSuite for Suite {
    fn name(&self) -> &'static str {
        self.name
    }
    fn summary(&self) -> &'static str {
        self.summary
    }
    fn run(&self, tolerance_scale: f64) -> Result<Vec<CheckItem>> {
        (self.run)(tolerance_scale)
    }
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max)
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

fn unit() -> PhysicsConfig {
    PhysicsConfig::default()
}

// ------------------------------------------------------------------ star

/// `x⋆p − p⋆x = iħ`: exact on polynomials, and on the grid in the central
/// quarter.
pub fn canonical_star(scale: f64) -> Result<Vec<CheckItem>> {
    let mut items = Vec::new();
    for h in [int(1), rat(1, 2), rat(1, 8)] {
        let x = PolySymbol::x(h.clone())?;
        let p = PolySymbol::p(h.clone())?;
        let c = star_poly(&x, &p)?.sub(&star_poly(&p, &x)?)?;
        let want = PolySymbol::constant(ExactComplex::imag(h.clone()), h.clone())?;
        items.push(CheckItem::holds(format!("x⋆p − p⋆x = iħ exactly at ħ = {h}"), c == want, format!("got {}", c.coefficient(0, 0).to_c64())));
    }
    let cfg = unit();
    let g = Grid::symmetric(256, &cfg)?;
    let w = FlatTopWindow::default();
    let x = sample_poly(&PolySymbol::x(int(1))?, &g, w)?;
    let p = sample_poly(&PolySymbol::p(int(1))?, &g, w)?;
    let c = star_grid(&x, &p)?.zip_with(&star_grid(&p, &x)?, |a, b| a - b)?;
    let want = ComplexPhaseSpaceFunction::from_fn(g, cfg, |_, _| Complex64::new(0.0, cfg.hbar));
    let err = c.max_abs_diff_on(&want, &Region::central_quarter(&g))?;
    items.push(CheckItem::below("x⋆p − p⋆x = iħ on the grid (central quarter)", err, 1e-6, scale));
    Ok(items)
}

/// `{x³,p³}_MB − {x³,p³}_PB = −(3/2)ħ²` over ħ ∈ {½, ¼, ⅛}.
pub fn classical_limit(scale: f64) -> Result<Vec<CheckItem>> {
    let rows = bracket_sweep("x^3", "p^3", &[0.5, 0.25, 0.125], 256)?;
    let mut items = Vec::new();
    for r in &rows {
        let want: Rational = rat(3, 2) * &r.hbar * &r.hbar;
        items.push(CheckItem::holds(
            format!("‖MB − PB‖ = (3/2)ħ² at ħ = {}", r.hbar),
            r.exact == want,
            format!("got {}, want {want}", r.exact),
        ));
        if let Some(q) = &r.ratio {
            items.push(CheckItem::holds(format!("exact ×4 decrement at ħ = {}", r.hbar), *q == int(4), format!("ratio {q}")));
        }
        if let (Some(g), Some(e)) = (r.grid, r.reference) {
            items.push(CheckItem::below(format!("grid defect within 5% at ħ = {}", r.hbar), (g / e - 1.0).abs(), 0.05, scale));
        }
    }
    Ok(items)
}

// ------------------------------------------------------------------ wigner

/// One to five Gaussians with random centres, widths and complex weights.
pub fn random_superposition(rng: &mut ChaCha8Rng, grid: &Grid, cfg: &PhysicsConfig) -> Result<Wavefunction> {
    loop {
        let count = rng.random_range(1..=5);
        let mut states = Vec::with_capacity(count);
        for _ in 0..count {
            let x0 = rng.random_range(-4.0..4.0);
            let p0 = rng.random_range(-2.0..2.0);
            let sigma = rng.random_range(0.8..1.6);
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            states.push((c, gaussian_packet(grid, x0, p0, sigma, cfg)?));
        }
        let terms: Vec<(Complex64, &Wavefunction)> = states.iter().map(|(c, w)| (*c, w)).collect();
        // a draw that cancels to nothing is redrawn
        if let Ok(wf) = superpose(&terms) {
            return Ok(wf);
        }
    }
}

pub fn marginals_suite(scale: f64, seed: u64) -> Result<Vec<CheckItem>> {
    let cfg = unit();
    let g = Grid::new(512, -20.0, 20.0, &cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<Wavefunction> = (0..20).map(|_| random_superposition(&mut rng, &g, &cfg)).collect::<Result<_>>()?;
    let mut worst = (0.0f64, 0.0f64);
    for wf in &states {
        let (px, pp) = marginals(&wigner_transform(wf)?);
        worst.0 = worst.0.max(max_gap(&px, &wf.densities()));
        worst.1 = worst.1.max(max_gap(&pp, &to_momentum(wf)?.densities()));
    }
    Ok(vec![
        CheckItem::below("position marginal = |ψ|² (20 superpositions)", worst.0, 1e-8, scale),
        CheckItem::below("momentum marginal = |φ|² (20 superpositions)", worst.1, 1e-8, scale),
    ])
}

// ------------------------------------------------------------------ weyl

pub fn weyl_duality(scale: f64) -> Result<Vec<CheckItem>> {
    let cfg = unit();
    let n = 64;
    let mut items = Vec::new();

    let g = Grid::symmetric(128, &cfg)?;
    let a = coherent_fock(1.0, -0.5, n, cfg.hbar);
    let b = coherent_fock(-1.0, 0.5, n, cfg.hbar);
    let cat: Vec<Complex64> = a.iter().zip(&b).map(|(u, v)| u + v).collect();
    let rho = DensityOperator::pure(&cat, cfg)?;
    let wf = fock_to_wavefunction(&cat, &g, &cfg)?.normalized()?;
    let fourier = characteristic_function(&wigner_transform(&wf)?);
    let trace = char_via_trace(&rho, &fourier.alpha, &fourier.beta);
    let (mut worst, mut checked) = (0.0f64, 0usize);
    for (ai, &al) in fourier.alpha.iter().enumerate() {
        for (bi, &be) in fourier.beta.iter().enumerate() {
            if in_faithful_range(al, be, n, cfg.hbar) {
                checked += 1;
                worst = worst.max((fourier.at(ai, bi) - trace.at(ai, bi)).norm());
            }
        }
    }
    items.push(CheckItem::below("Tr[ρŜ] = Fourier of W on the faithful range", worst, 1e-5, scale).with_detail(format!("{checked} points")));

    let g = Grid::symmetric(256, &cfg)?;
    let rho = DensityOperator::pure(&coherent_fock(1.0, -0.5, n, cfg.hbar), cfg)?;
    for text in ["x", "p", "x^2 + p^2", "x*p"] {
        let sym = PolySymbol::parse(text, int(1))?;
        let (phase_space, operator) = expectation_cross_check(&sym, &rho, &g)?;
        items.push(
            CheckItem::below(format!("⟨{text}⟩: ∬a·W = Tr[ρÂ]"), (phase_space - operator).abs(), 1e-5, scale)
                .with_detail(format!("{} vs {}", fmt_f64(phase_space), fmt_f64(operator))),
        );
    }
    Ok(items)
}

// ------------------------------------------------------------------ bohm

pub fn guidance(scale: f64) -> Result<Vec<CheckItem>> {
    let cfg = unit();
    let g = Grid::new(1024, -40.0, 40.0, &cfg)?;
    let floor = Floor::Relative(1e-6);
    let a = gaussian_packet(&g, -2.5, 0.8, 1.0, &cfg)?;
    let b = gaussian_packet(&g, 2.5, -0.4, 1.2, &cfg)?;
    let cat = superpose(&[(Complex64::new(1.0, 0.0), &a), (Complex64::new(0.0, 1.0), &b)])?;
    let mut items = Vec::new();
    for (label, wf) in [("gaussian", &a), ("cat", &cat)] {
        let p = conditional_momentum(wf, floor)?;
        items.push(CheckItem::below(format!("ħ Im(ψ*ψ')/|ψ|² vs Wigner p-moment ({label})"), p.route_gap.unwrap_or(f64::NAN), 1e-6, scale));
        let phase = guidance_from_phase(&polar_decompose(wf, floor)?)?;
        let moment = wigner_moment(&wigner_transform(wf)?, true);
        items.push(CheckItem::below(format!("p̄ = ∇S vs Wigner p-moment ({label})"), crate::analyses::max_gap(&phase.values, &moment, &phase.valid), 1e-5, scale));
        let x = conditional_position(&to_momentum(wf)?, floor)?;
        items.push(CheckItem::below(format!("x̄ = −∂S_p/∂p vs Wigner x-moment ({label})"), x.route_gap.unwrap_or(f64::NAN), 1e-5, scale));
    }
    Ok(items)
}

fn three_slices(f: impl Fn(f64) -> Result<Wavefunction>, t0: f64, dt: f64) -> Result<Vec<Wavefunction>> {
    (0..3).map(|k| f(t0 + k as f64 * dt)).collect()
}

pub fn qhj(scale: f64) -> Result<Vec<CheckItem>> {
    let cfg = unit();
    let omega = 1.2;
    let residual = |n: usize, dt: f64, harmonic: bool| -> Result<f64> {
        let g = Grid::new(n, -20.0, 20.0, &cfg)?;
        let (series, v) = if harmonic {
            let v: Vec<f64> = g.positions().iter().map(|x| 0.5 * cfg.mass * omega * omega * x * x).collect();
            (three_slices(|t| coherent_state(&g, t, 1.0, 0.5, omega, &cfg), 0.3, dt)?, v)
        } else {
            (three_slices(|t| free_gaussian(&g, t, -1.0, 1.0, 1.0, &cfg), 0.5, dt)?, vec![0.0; n])
        };
        Ok(qhj_residual(&series, dt, &v, &cfg, Floor::default())?.max_abs)
    };
    let mut items = Vec::new();
    for (label, harmonic) in [("free Gaussian", false), ("coherent state", true)] {
        let fine = residual(512, 1e-3, harmonic)?;
        let coarse = residual(256, 2e-3, harmonic)?;
        items.push(CheckItem::below(format!("QHJ residual, {label}, dt = 1e-3, n = 512"), fine, 1e-4, scale));
        items.push(CheckItem::above(format!("QHJ refinement gain, {label}"), coarse / fine, 3.0, 1.0).with_detail(format!(
            "{} → {}",
            fmt_f64(coarse),
            fmt_f64(fine)
        )));
    }
    Ok(items)
}

// ------------------------------------------------------------------ dynamics

/// Two-slit state at `n = 512` on `[−30, 30]` evolved to `t = 2`.
pub fn two_slit_series() -> Result<moyal_core::dynamics::TimeSeries> {
    let cfg = unit();
    let g = Grid::new(512, -30.0, 30.0, &cfg)?;
    let wf = two_slit_state(&TwoSlit::default(), &g, &cfg)?;
    let t = 2.0;
    let steps = (t / max_stable_dt(&g, &cfg)).ceil() as usize;
    split_step_evolve(&wf, &Potential::free(&g), t / steps as f64, steps, 10)
}

pub fn trajectories(scale: f64) -> Result<Vec<CheckItem>> {
    let s = two_slit_series()?;
    let floor = Floor::default();
    let x0 = sample_positions(&s.states[0], 100, Sampling::Quantile)?;
    let e = integrate_trajectories(&s, &x0, floor, 2, Sampling::Quantile)?;
    let mut items = vec![
        CheckItem::above("100 paths do not cross (smallest neighbour gap)", e.min_gap(), 0.0, 1.0),
        CheckItem::exact("100 paths stay in the valid region", e.stopped_count(), ""),
    ];
    let x0 = sample_positions(&s.states[0], 1000, Sampling::Quantile)?;
    let dense = integrate_trajectories(&s, &x0, floor, 2, Sampling::Quantile)?;
    let tv = transported_density_check(&dense, s.last())?;
    items.push(CheckItem::below("1000-path endpoint histogram vs |ψ(T)|² (TV)", tv, 0.05, scale));
    Ok(items)
}

pub fn shadow_divergence(scale: f64) -> Result<Vec<CheckItem>> {
    let cfg = unit();
    let g = Grid::symmetric(512, &cfg)?;
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
    let free = Potential::free(&g);
    let floor = Floor::Relative(1e-8);
    let single = gaussian_packet(&g, 0.5, 0.3, 1.3, &cfg)?;
    let l = gaussian_packet(&g, -2.5, 0.0, 1.0, &cfg)?;
    let r = gaussian_packet(&g, 2.5, 0.0, 1.0, &cfg)?;
    let cat = superpose(&[(Complex64::new(1.0, 0.0), &l), (Complex64::new(1.0, 0.0), &r)])?;
    let one = streamline_divergence(&single, &free, 0.0, FRAC_PI_2, &times, 50, floor)?;
    let two = streamline_divergence(&cat, &free, 0.0, FRAC_PI_2, &times, 50, floor)?;
    Ok(vec![
        CheckItem::below("single Gaussian: x vs p streamline divergence", one.divergence, 1e-3, scale),
        CheckItem::above("two Gaussians: x vs p streamline divergence", two.divergence, 0.1, scale),
    ])
}

// ------------------------------------------------------------------ frft

pub fn frft_laws(scale: f64) -> Result<Vec<CheckItem>> {
    let cfg = unit();
    let g = Grid::symmetric(512, &cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(MARGINALS_SEED);
    let states: Vec<Wavefunction> = (0..5).map(|_| random_superposition(&mut rng, &g, &cfg)).collect::<Result<_>>()?;
    let (mut identity, mut quarter, mut additive, mut unitary) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let angles = [(0.3, 0.9), (1.1, -2.4), (2.0, 2.5), (-0.7, PI)];
    for wf in &states {
        identity = identity.max(max_diff(frft(wf, 0.0)?.amplitudes(), wf.amplitudes()));
        quarter = quarter.max(max_diff(frft(wf, FRAC_PI_2)?.amplitudes(), to_momentum(wf)?.amplitudes()));
        for (a, b) in angles {
            let fa = frft(wf, a)?;
            unitary = unitary.max((fa.norm_sqr() - 1.0).abs());
            additive = additive.max(max_diff(frft(&fa, b)?.amplitudes(), frft(wf, a + b)?.amplitudes()));
        }
    }
    Ok(vec![
        CheckItem::below("F₀ = identity", identity, 1e-7, scale),
        CheckItem::below("F_{π/2} = Fourier transform", quarter, 1e-7, scale),
        CheckItem::below("F_a F_b = F_{a+b}", additive, 1e-7, scale),
        CheckItem::below("‖F_a ψ‖ = ‖ψ‖", unitary, 1e-7, scale),
    ])
}

// ------------------------------------------------------------------ clifford

fn mv(p: u32, q: u32, text: &str) -> Result<Multivector> {
    Multivector::parse(p, q, text)
}

/// Exact identities; no tolerance applies.
pub fn clifford_identities() -> Result<Vec<CheckItem>> {
    let mut items = Vec::new();

    let (i, j) = (mv(0, 2, "e1")?, mv(0, 2, "e2")?);
    let k = i.mul(&j)?;
    let minus_one = mv(0, 2, "-1")?;
    let quaternions = i.mul(&i)? == minus_one
        && j.mul(&j)? == minus_one
        && k.mul(&k)? == minus_one
        && i.mul(&j)?.mul(&k)? == minus_one
        && j.mul(&k)? == i
        && k.mul(&i)? == j;
    items.push(CheckItem::holds("quaternions in Cl(0,2): i² = j² = k² = ijk = −1", quaternions, "i = e1, j = e2, k = e1e2"));

    let mut bad = 0;
    for mu in 1..=4u32 {
        for nu in 1..=4u32 {
            let (a, b) = (Multivector::generator(1, 3, mu)?, Multivector::generator(1, 3, nu)?);
            let eta = match (mu == nu, mu) {
                (false, _) => 0,
                (true, 1) => 2,
                (true, _) => -2,
            };
            if a.mul(&b)?.add(&b.mul(&a)?)? != Multivector::scalar(1, 3, int(eta))? {
                bad += 1;
            }
        }
    }
    items.push(CheckItem::exact("γ_μγ_ν + γ_νγ_μ = 2η_μν in Cl(1,3)", bad, "16 pairs"));

    let t = LabelSet::numbered(4)?;
    let (a12, a23, a34, a11) = (t.arrow("T1", "T2")?, t.arrow("T2", "T3")?, t.arrow("T3", "T4")?, t.arrow("T1", "T1")?);
    let a13 = t.arrow("T1", "T3")?;
    items.push(CheckItem::holds("[T1,T2]∘[T2,T3] = [T1,T3]", arrow_compose(&a12, &a23) == Some(a13.clone()), ""));
    items.push(CheckItem::holds("[T1,T2]∘[T3,T4] is undefined", arrow_compose(&a12, &a34).is_none(), ""));
    items.push(CheckItem::holds("[T1,T1]∘[T1,T1] = [T1,T1]", arrow_compose(&a11, &a11) == Some(a11.clone()), ""));
    let (g12, g23) = (arrow_element(&a12, &t)?, arrow_element(&a23, &t)?);
    let anti = g12.mul(&g23)?.add(&g23.mul(&g12)?)?.is_zero() && g12.mul(&g23)? == arrow_element(&a13, &t)?;
    items.push(CheckItem::holds("[T1,T2][T2,T3] + [T2,T3][T1,T2] = 0", anti, "arrows as e_i e_j in Cl(4,0)"));

    let eps = IdempotentSet::standard(3)?;
    let a = Matrix::from_ints(&[&[2, 1, 1], &[1, 3, 1], &[1, 1, 4]])?;
    let x = exploding_transform(&a, &eps)?;
    let complete = x.transformed.sum() == Matrix::identity(3) && x.transformed.is_orthogonal();
    items.push(CheckItem::holds("exploding transformation: Σ ε′_j = 1, orthogonal", complete, ""));
    let h = Matrix::from_ints(&[&[1, 1], &[1, -1]])?;
    let mixing = exploding_transform(&h, &IdempotentSet::standard(2)?)?.mixing;
    let half = rat(1, 2);
    let want = vec![vec![half.clone(), half.clone()], vec![half.clone(), half]];
    items.push(CheckItem::holds("Hadamard mixing tensor = [[½,½],[½,½]]", mixing == want, ""));

    let e123 = mv(3, 0, "e1^e2^e3")?;
    let dim = generate_algebra(3, 0)?.dimension();
    items.push(CheckItem::holds("Cl(3,0): (e1e2e3)² = −1, dimension 8", e123.mul(&e123)? == mv(3, 0, "-1")? && dim == 8, ""));
    let r = rotor_from_tan_half(&mv(3, 0, "e1^e2")?, int(1))?;
    items.push(CheckItem::holds("quarter-turn rotor sends e1 to e2", rotor_conjugate(&r, &mv(3, 0, "e1")?)? == mv(3, 0, "e2")?, "R = 1 − e1e2"));
    Ok(items)
}
