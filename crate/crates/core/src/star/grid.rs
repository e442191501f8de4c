//! Spectral (twisted-convolution) star product on the phase-space grid.
//!
//! A grid symbol is expanded in plane waves `e^{i(αp + βx)/ħ}` with
//! `α = s·dx`, `β = t·dp`. Two plane waves multiply under ⋆ into a single
//! plane wave times the phase `exp(−iπ(t₁s₂ − s₁t₂)/n)`, so the product of
//! two symbols is a convolution of their coefficients with that twist.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::to_f64;
use crate::fourier;
use crate::grid::Grid;
use crate::phase_space::ComplexPhaseSpaceFunction;
use crate::star::poly::PolySymbol;

/// Largest tolerated fraction of coefficient energy outside the central
/// half of the dual grid.
pub const BAND_LIMIT: f64 = 1e-8;

/// `w(x, p) = exp(−((x − x_c)/R)^k) · exp(−(p/R_p)^k)` with `R` a fixed
/// fraction of each axis length. Used to sample polynomials as band-limited
/// grid symbols; the window is flat to rounding on the central quarter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatTopWindow {
    pub radius_fraction: f64,
    pub power: i32,
}

impl Default for FlatTopWindow {
    fn default() -> Self {
        Self {
            radius_fraction: 0.3,
            power: 24,
        }
    }
}

impl FlatTopWindow {
    pub fn weight(&self, grid: &Grid, x: f64, p: f64) -> f64 {
        let rx = self.radius_fraction * grid.length();
        let rp = self.radius_fraction * 2.0 * grid.p_max();
        let u = (x - grid.center()) / rx;
        let v = p / rp;
        (-(u.powi(self.power)) - v.powi(self.power)).exp()
    }
}

/// Sample a polynomial symbol on the grid, multiplied by `window`.
pub fn sample_poly(
    symbol: &PolySymbol,
    grid: &Grid,
    window: FlatTopWindow,
) -> Result<ComplexPhaseSpaceFunction> {
    let hbar = to_f64(symbol.hbar());
    if (hbar - grid.hbar()).abs() > 1e-14 * hbar {
        return Err(Error::GridMismatch);
    }
    let config = crate::grid::PhysicsConfig::with_hbar(grid.hbar())?;
    Ok(ComplexPhaseSpaceFunction::from_fn(*grid, config, |x, p| {
        symbol.eval(x, p) * window.weight(grid, x, p)
    }))
}

/// Plane-wave coefficients in centered layout: entry `(t + n/2)·n + (s + n/2)`.
pub(crate) fn coefficients(f: &ComplexPhaseSpaceFunction) -> Vec<Complex64> {
    let n = f.n();
    let mut spectrum = f.values().to_vec();
    fourier::forward_2d(&mut spectrum, n, n);
    let scale = 1.0 / (n * n) as f64;
    let h = n / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for u in 0..n {
        let tc = (u + h) % n;
        for v in 0..n {
            let sc = (v + h) % n;
            out[tc * n + sc] = spectrum[u * n + v] * scale;
        }
    }
    out
}

fn from_coefficients(
    template: &ComplexPhaseSpaceFunction,
    coeffs: &[Complex64],
) -> ComplexPhaseSpaceFunction {
    let n = template.n();
    let h = n / 2;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n * n];
    for tc in 0..n {
        let u = (tc + h) % n;
        for sc in 0..n {
            spectrum[u * n + (sc + h) % n] = coeffs[tc * n + sc];
        }
    }
    fourier::inverse_2d(&mut spectrum, n, n);
    template.map_values(spectrum)
}

/// Fraction of coefficient energy with `|t| ≥ n/4` or `|s| ≥ n/4`.
pub fn tail_fraction(f: &ComplexPhaseSpaceFunction) -> f64 {
    tail_of(&coefficients(f), f.n())
}

pub(crate) fn tail_of(coeffs: &[Complex64], n: usize) -> f64 {
    let (lo, hi) = (n / 4, 3 * n / 4);
    let mut total = 0.0;
    let mut tail = 0.0;
    for tc in 0..n {
        for sc in 0..n {
            let e = coeffs[tc * n + sc].norm_sqr();
            total += e;
            if tc < lo || tc >= hi || sc < lo || sc >= hi {
                tail += e;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

fn band_limited(f: &ComplexPhaseSpaceFunction) -> Result<Vec<Complex64>> {
    let c = coefficients(f);
    let tail = tail_of(&c, f.n());
    if tail > BAND_LIMIT {
        return Err(Error::BandLimit {
            tail,
            limit: BAND_LIMIT,
        });
    }
    Ok(c)
}

/// Zero-padded length-`2n` transforms of each coefficient row.
fn padded_rows(coeffs: &[Complex64], n: usize) -> Vec<Vec<Complex64>> {
    (0..n)
        .map(|tc| {
            let mut row = vec![Complex64::new(0.0, 0.0); 2 * n];
            row[..n].copy_from_slice(&coeffs[tc * n..(tc + 1) * n]);
            fourier::forward(&mut row);
            row
        })
        .collect()
}

/// Moyal product of two grid symbols.
///
/// The α-direction convolution is done with zero padding to `2n`; both
/// twists become index shifts of the padded spectra, so each output row
/// costs one inverse FFT.
pub fn star_grid(
    a: &ComplexPhaseSpaceFunction,
    b: &ComplexPhaseSpaceFunction,
) -> Result<ComplexPhaseSpaceFunction> {
    a.grid().check_same(b.grid())?;
    let n = a.n();
    let big = 2 * n;
    let h = n as i64 / 2;
    let fa = padded_rows(&band_limited(a)?, n);
    let fb = padded_rows(&band_limited(b)?, n);

    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|tc| {
            let t = tc as i64 - h;
            let mut z = vec![Complex64::new(0.0, 0.0); big];
            for t1c in 0..n {
                let t1 = t1c as i64 - h;
                let t2c = t - t1 + h;
                if !(0..n as i64).contains(&t2c) {
                    continue;
                }
                let ra = &fa[t1c];
                let rb = &fb[t2c as usize];
                let sign = if t1.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let shift_a = (t1 - t).rem_euclid(big as i64) as usize;
                let shift_b = t1.rem_euclid(big as i64) as usize;
                for (k, zk) in z.iter_mut().enumerate() {
                    *zk += sign * ra[(k + shift_a) % big] * rb[(k + shift_b) % big];
                }
            }
            fourier::inverse(&mut z);
            let phase = Complex64::from_polar(1.0 / big as f64, -PI * t as f64 / 2.0);
            z[n / 2..n / 2 + n].iter().map(|v| v * phase).collect()
        })
        .collect();

    let coeffs: Vec<Complex64> = rows.into_iter().flatten().collect();
    Ok(from_coefficients(a, &coeffs))
}

/// `∂ₓ` (`axis = 0`) or `∂ₚ` (`axis = 1`) by spectral differentiation.
pub fn spectral_partial(f: &ComplexPhaseSpaceFunction, axis: usize) -> ComplexPhaseSpaceFunction {
    let n = f.n();
    let g = f.grid();
    let mut c = coefficients(f);
    let h = n as i64 / 2;
    for tc in 0..n {
        for sc in 0..n {
            let (t, s) = (tc as i64 - h, sc as i64 - h);
            let v = &mut c[tc * n + sc];
            let (idx, step) = if axis == 0 { (t, g.dp()) } else { (s, g.dx()) };
            if idx == -h {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= Complex64::new(0.0, idx as f64 * step / g.hbar());
            }
        }
    }
    from_coefficients(f, &c)
}

pub fn poisson_grid(
    a: &ComplexPhaseSpaceFunction,
    b: &ComplexPhaseSpaceFunction,
) -> Result<ComplexPhaseSpaceFunction> {
    a.grid().check_same(b.grid())?;
    let lhs = spectral_partial(a, 0).zip_with(&spectral_partial(b, 1), |u, v| u * v)?;
    let rhs = spectral_partial(a, 1).zip_with(&spectral_partial(b, 0), |u, v| u * v)?;
    lhs.zip_with(&rhs, |u, v| u - v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::grid::PhysicsConfig;
    use crate::phase_space::Region;
    use crate::star::poly::star_poly;

    fn setup(n: usize, hbar: f64) -> (Grid, PhysicsConfig) {
        let cfg = PhysicsConfig::with_hbar(hbar).unwrap();
        (Grid::symmetric(n, &cfg).unwrap(), cfg)
    }

    fn gaussian(grid: &Grid, cfg: &PhysicsConfig, a: f64) -> ComplexPhaseSpaceFunction {
        let hb = cfg.hbar;
        ComplexPhaseSpaceFunction::from_fn(*grid, *cfg, |x, p| {
            Complex64::new((-a * (x * x + p * p) / hb).exp(), 0.0)
        })
    }

    #[test]
    fn constant_is_identity() {
        let (g, cfg) = setup(64, 1.0);
        let one = ComplexPhaseSpaceFunction::from_fn(g, cfg, |_, _| Complex64::new(1.0, 0.0));
        let b = gaussian(&g, &cfg, 0.7);
        let prod = star_grid(&one, &b).unwrap();
        let prod2 = star_grid(&b, &one).unwrap();
        let all = Region {
            half_x: f64::INFINITY,
            half_p: f64::INFINITY,
        };
        assert!(prod.max_abs_diff_on(&b, &all).unwrap() < 1e-10);
        assert!(prod2.max_abs_diff_on(&b, &all).unwrap() < 1e-10);
    }

    #[test]
    fn gaussian_closed_form() {
        let (g, cfg) = setup(128, 1.0);
        let (a, b) = (0.6, 1.3);
        let prod = star_grid(&gaussian(&g, &cfg, a), &gaussian(&g, &cfg, b)).unwrap();
        let c = (a + b) / (1.0 + a * b);
        let want = gaussian(&g, &cfg, c).map(|v| v / (1.0 + a * b));
        let err = prod
            .max_abs_diff_on(&want, &Region::central_quarter(&g))
            .unwrap();
        assert!(err < 1e-10, "{err}");
    }

    /// Direct quadrature of
    /// `a⋆b(r) = (πħ)⁻² ∬ a(r+s) b(r+t) exp((2i/ħ)(s_p t_x − t_p s_x)) ds dt`.
    fn brute_force(
        a: impl Fn(f64, f64) -> f64,
        b: impl Fn(f64, f64) -> f64,
        x: f64,
        p: f64,
        hbar: f64,
    ) -> Complex64 {
        let m = 64;
        let span = 6.0;
        let h = 2.0 * span / m as f64;
        let nodes: Vec<f64> = (0..m).map(|i| -span + (i as f64 + 0.5) * h).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for &sx in &nodes {
            for &sp in &nodes {
                let av = a(x + sx, p + sp);
                if av < 1e-18 {
                    continue;
                }
                for &tx in &nodes {
                    for &tp in &nodes {
                        let bv = b(x + tx, p + tp);
                        let phase = 2.0 / hbar * (sp * tx - tp * sx);
                        acc += av * bv * Complex64::from_polar(1.0, phase);
                    }
                }
            }
        }
        acc * h.powi(4) / (PI * hbar).powi(2)
    }

    #[test]
    fn gaussian_self_product_matches_quadrature() {
        let (g, cfg) = setup(128, 1.0);
        let gauss = |x: f64, p: f64| (-(x * x + p * p)).exp();
        let f = gaussian(&g, &cfg, 1.0);
        let prod = star_grid(&f, &f).unwrap();
        let j0 = g.n() / 2;
        for (dj, dk) in [(0usize, 0usize), (2, 1), (5, 3)] {
            let (j, k) = (j0 + dj, g.n() / 2 + dk);
            let want = brute_force(gauss, gauss, g.x(j), g.p(k), 1.0);
            assert!(
                (prod.at(j, k) - want).norm() < 1e-6,
                "{} vs {}",
                prod.at(j, k),
                want
            );
        }
    }

    #[test]
    fn canonical_commutator_on_grid() {
        for hbar in [1.0, 0.25] {
            let (g, _) = setup(256, hbar);
            let hr = crate::exact::from_f64(hbar).unwrap();
            let w = FlatTopWindow::default();
            let x = sample_poly(&PolySymbol::x(hr.clone()).unwrap(), &g, w).unwrap();
            let p = sample_poly(&PolySymbol::p(hr.clone()).unwrap(), &g, w).unwrap();
            let comm = star_grid(&x, &p)
                .unwrap()
                .zip_with(&star_grid(&p, &x).unwrap(), |u, v| u - v)
                .unwrap();
            let region = Region::central_quarter(&g);
            let want = comm.map(|_| Complex64::new(0.0, hbar));
            let err = comm.max_abs_diff_on(&want, &region).unwrap();
            assert!(err < 1e-6, "hbar {hbar}: {err}");
        }
    }

    #[test]
    fn agrees_with_series_for_quartic_inputs() {
        let hbar = rat(1, 2);
        let (g, _) = setup(256, 0.5);
        let w = FlatTopWindow::default();
        let a = PolySymbol::parse("x^2*p - 0.5*p^3 + x", hbar.clone()).unwrap();
        let b = PolySymbol::parse("x^3*p + p^2", hbar.clone()).unwrap();
        let exact = star_poly(&a, &b).unwrap();
        let got = star_grid(
            &sample_poly(&a, &g, w).unwrap(),
            &sample_poly(&b, &g, w).unwrap(),
        )
        .unwrap();
        let want = sample_poly(
            &exact,
            &g,
            FlatTopWindow {
                radius_fraction: 1e6,
                power: 2,
            },
        )
        .unwrap();
        let region = Region::central_quarter(&g);
        let scale = (0..g.n())
            .flat_map(|j| (0..g.n()).map(move |k| (j, k)))
            .filter(|&(j, k)| region.contains(&g, j, k))
            .map(|(j, k)| want.at(j, k).norm())
            .fold(0.0, f64::max);
        let err = got.max_abs_diff_on(&want, &region).unwrap();
        assert!(err < 1e-6 * scale, "{err} vs scale {scale}");
    }

    #[test]
    fn rejects_unresolved_symbols() {
        let (g, cfg) = setup(64, 1.0);
        let noise = ComplexPhaseSpaceFunction::from_fn(g, cfg, |x, p| {
            Complex64::new((40.0 * x + 13.0 * p).sin(), 0.0)
        });
        assert!(matches!(
            star_grid(&noise, &noise),
            Err(Error::BandLimit { .. })
        ));
    }

    #[test]
    fn spectral_poisson_of_gaussians() {
        let (g, cfg) = setup(128, 1.0);
        let f = ComplexPhaseSpaceFunction::from_fn(g, cfg, |x, p| {
            Complex64::new((-(x - 0.5).powi(2) - p * p).exp(), 0.0)
        });
        let k = ComplexPhaseSpaceFunction::from_fn(g, cfg, |x, p| {
            Complex64::new((-x * x - (p + 0.3).powi(2)).exp(), 0.0)
        });
        let pb = poisson_grid(&f, &k).unwrap();
        let want = ComplexPhaseSpaceFunction::from_fn(g, cfg, |x, p| {
            let fv = (-(x - 0.5).powi(2) - p * p).exp();
            let kv = (-x * x - (p + 0.3).powi(2)).exp();
            let v = (-2.0 * (x - 0.5)) * (-2.0 * (p + 0.3)) - (-2.0 * p) * (-2.0 * x);
            Complex64::new(v * fv * kv, 0.0)
        });
        let all = Region {
            half_x: f64::INFINITY,
            half_p: f64::INFINITY,
        };
        assert!(pb.max_abs_diff_on(&want, &all).unwrap() < 1e-10);
    }
}
