//! Moyal star product and the Moyal, Baker and Poisson brackets.
//!
//! Two realizations share the [`Symbol`] interface: exact polynomials
//! ([`PolySymbol`]) and sampled grid functions
//! ([`ComplexPhaseSpaceFunction`]). The brackets are written once against
//! that interface.

pub mod grid;
pub mod poly;

use num_complex::Complex64;
use num_traits::One;

use crate::error::Result;
use crate::exact::{int, ExactComplex, Rational};
use crate::phase_space::{ComplexPhaseSpaceFunction, Region};

pub use grid::{poisson_grid, sample_poly, star_grid, tail_fraction, FlatTopWindow};
pub use poly::{poisson_poly, star_poly, PolySymbol};

/// Operations a symbol realization provides to the bracket functions.
pub trait Symbol: Clone {
    fn star(&self, other: &Self) -> Result<Self>;
    fn pointwise(&self, other: &Self) -> Result<Self>;
    fn poisson(&self, other: &Self) -> Result<Self>;
    fn plus(&self, other: &Self) -> Result<Self>;
    fn minus(&self, other: &Self) -> Result<Self>;
    /// `self / (iħ)`.
    fn over_i_hbar(&self) -> Self;
    fn half(&self) -> Self;
}

/// `{a,b}_MB = (a⋆b − b⋆a)/iħ`.
pub fn moyal_bracket<S: Symbol>(a: &S, b: &S) -> Result<S> {
    Ok(a.star(b)?.minus(&b.star(a)?)?.over_i_hbar())
}

/// `{a,b}_BB = (a⋆b + b⋆a)/2`.
pub fn baker_bracket<S: Symbol>(a: &S, b: &S) -> Result<S> {
    Ok(a.star(b)?.plus(&b.star(a)?)?.half())
}

/// `{a,b}_PB = ∂ₓa ∂ₚb − ∂ₚa ∂ₓb`.
pub fn poisson_bracket<S: Symbol>(a: &S, b: &S) -> Result<S> {
    a.poisson(b)
}

impl Symbol for PolySymbol {
    fn star(&self, other: &Self) -> Result<Self> {
        star_poly(self, other)
    }
    fn pointwise(&self, other: &Self) -> Result<Self> {
        self.mul(other)
    }
    fn poisson(&self, other: &Self) -> Result<Self> {
        poisson_poly(self, other)
    }
    fn plus(&self, other: &Self) -> Result<Self> {
        self.add(other)
    }
    fn minus(&self, other: &Self) -> Result<Self> {
        self.sub(other)
    }
    fn over_i_hbar(&self) -> Self {
        let f: Rational = -(Rational::one() / self.hbar());
        self.scale(&ExactComplex::imag(f))
    }
    fn half(&self) -> Self {
        self.scale(&ExactComplex::real(Rational::one() / int(2)))
    }
}

impl Symbol for ComplexPhaseSpaceFunction {
    fn star(&self, other: &Self) -> Result<Self> {
        star_grid(self, other)
    }
    fn pointwise(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }
    fn poisson(&self, other: &Self) -> Result<Self> {
        poisson_grid(self, other)
    }
    fn plus(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }
    fn minus(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }
    fn over_i_hbar(&self) -> Self {
        let f = Complex64::new(0.0, -1.0 / self.config().hbar);
        self.map(|v| v * f)
    }
    fn half(&self) -> Self {
        self.map(|v| v * 0.5)
    }
}

/// Size of `{a,b}_MB − {a,b}_PB` for polynomials: the exact coefficient norm.
pub fn classical_defect_poly(a: &PolySymbol, b: &PolySymbol) -> Result<Rational> {
    Ok(moyal_bracket(a, b)?
        .sub(&poisson_bracket(a, b)?)?
        .coefficient_norm())
}

/// Size of `{a,b}_MB − {a,b}_PB` for grid symbols: the largest modulus on `region`.
pub fn classical_defect_grid(
    a: &ComplexPhaseSpaceFunction,
    b: &ComplexPhaseSpaceFunction,
    region: &Region,
) -> Result<f64> {
    moyal_bracket(a, b)?.max_abs_diff_on(&poisson_bracket(a, b)?, region)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn sym(s: &str, h: &Rational) -> PolySymbol {
        PolySymbol::parse(s, h.clone()).unwrap()
    }

    #[test]
    fn bracket_examples() {
        let h = rat(1, 3);
        let one = sym("1", &h);
        assert_eq!(moyal_bracket(&sym("x", &h), &sym("p", &h)).unwrap(), one);
        assert_eq!(
            moyal_bracket(&sym("x^2", &h), &sym("p^2", &h)).unwrap(),
            sym("4*x*p", &h)
        );
        assert_eq!(
            moyal_bracket(&sym("x^3", &h), &sym("p^2", &h)).unwrap(),
            sym("6*x^2*p", &h)
        );
        // 9x²p² − (3/2)ħ² with ħ = 1/3
        assert_eq!(
            moyal_bracket(&sym("x^3", &h), &sym("p^3", &h)).unwrap(),
            sym("9*x^2*p^2", &h)
                .sub(&sym("1", &h).scale(&ExactComplex::real(rat(1, 6))))
                .unwrap()
        );
        assert_eq!(
            baker_bracket(&sym("x", &h), &sym("p", &h)).unwrap(),
            sym("x*p", &h)
        );
        assert_eq!(
            baker_bracket(&sym("x^2", &h), &sym("p^2", &h)).unwrap(),
            sym("x^2*p^2", &h)
                .sub(&sym("1", &h).scale(&ExactComplex::real(rat(1, 18))))
                .unwrap()
        );
        let a = sym("x^2*p - 3*p + 0.25", &h);
        assert_eq!(baker_bracket(&a, &one).unwrap(), a);
        assert_eq!(poisson_bracket(&sym("x", &h), &sym("p", &h)).unwrap(), one);
    }

    #[test]
    fn classical_limit_is_quadratic_in_hbar() {
        let mut prev: Option<Rational> = None;
        for d in [2, 4, 8] {
            let h = rat(1, d);
            let defect = classical_defect_poly(&sym("x^3", &h), &sym("p^3", &h)).unwrap();
            assert_eq!(defect, rat(3, 2) * &h * &h);
            if let Some(p) = prev {
                assert_eq!(p / &defect, int(4));
            }
            prev = Some(defect);
        }
    }

    #[test]
    fn grid_classical_limit_within_five_percent() {
        use crate::grid::{Grid, PhysicsConfig};
        let mut prev: Option<f64> = None;
        for d in [2i64, 4, 8] {
            let hbar = 1.0 / d as f64;
            let cfg = PhysicsConfig::with_hbar(hbar).unwrap();
            let g = Grid::symmetric(256, &cfg).unwrap();
            let h = rat(1, d);
            let w = FlatTopWindow::default();
            let a = sample_poly(&sym("x^3", &h), &g, w).unwrap();
            let b = sample_poly(&sym("p^3", &h), &g, w).unwrap();
            let defect = classical_defect_grid(&a, &b, &Region::central_quarter(&g)).unwrap();
            assert!(
                (defect / (1.5 * hbar * hbar) - 1.0).abs() < 0.05,
                "hbar {hbar}: {defect}"
            );
            if let Some(p) = prev {
                assert!((p / defect / 4.0 - 1.0).abs() < 0.05);
            }
            prev = Some(defect);
        }
    }
}
