//! Exact polynomial symbols and the terminating Moyal series.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};

use crate::error::{invalid, Error, Result};
use crate::exact::{self, int, ExactComplex, Rational};

/// Polynomial in `(x, p)` with Gaussian-rational coefficients. Real and
/// imaginary parts are kept separately in each coefficient; zero terms are
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolySymbol {
    terms: BTreeMap<(u32, u32), ExactComplex>,
    hbar: Rational,
}

impl PolySymbol {
    pub fn zero(hbar: Rational) -> Result<Self> {
        if !hbar.is_positive() {
            return Err(invalid("hbar", "must be positive"));
        }
        Ok(Self {
            terms: BTreeMap::new(),
            hbar,
        })
    }

    pub fn constant(c: ExactComplex, hbar: Rational) -> Result<Self> {
        Self::monomial(c, 0, 0, hbar)
    }

    pub fn monomial(c: ExactComplex, px: u32, pp: u32, hbar: Rational) -> Result<Self> {
        let mut s = Self::zero(hbar)?;
        s.add_term((px, pp), &c);
        Ok(s)
    }

    pub fn x(hbar: Rational) -> Result<Self> {
        Self::monomial(ExactComplex::one(), 1, 0, hbar)
    }

    pub fn p(hbar: Rational) -> Result<Self> {
        Self::monomial(ExactComplex::one(), 0, 1, hbar)
    }

    /// Parse a signed monomial sum such as `x^2*p - 0.5*p^3 + 2*i`.
    ///
    /// ```text
    /// sum     := sign? product (sign product)*
    /// product := factor ('*' factor)*
    /// factor  := number | 'i' | ('x' | 'p') ('^' digits)? | '(' sum ')'
    /// number  := decimal ('/' decimal)?
    /// decimal := digits ('.' digits)? (('e' | 'E') sign? digits)?
    /// ```
    /// Whitespace is ignored between tokens. Decimals are read exactly.
    pub fn parse(text: &str, hbar: Rational) -> Result<Self> {
        Parser {
            src: text.as_bytes(),
            pos: 0,
        }
        .sum(hbar)
    }

    pub fn hbar(&self) -> &Rational {
        &self.hbar
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &ExactComplex)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, px: u32, pp: u32) -> ExactComplex {
        self.terms
            .get(&(px, pp))
            .cloned()
            .unwrap_or_else(ExactComplex::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(ExactComplex::is_real)
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(a, b)| a + b).max().unwrap_or(0)
    }

    pub fn max_power_x(&self) -> u32 {
        self.terms.keys().map(|k| k.0).max().unwrap_or(0)
    }

    pub fn max_power_p(&self) -> u32 {
        self.terms.keys().map(|k| k.1).max().unwrap_or(0)
    }

    pub fn real_part(&self) -> Self {
        self.map_coeffs(|c| ExactComplex::real(c.re.clone()))
    }

    pub fn imag_part(&self) -> Self {
        self.map_coeffs(|c| ExactComplex::real(c.im.clone()))
    }

    /// Sum of `|Re c| + |Im c|` over all coefficients.
    pub fn coefficient_norm(&self) -> Rational {
        self.terms
            .values()
            .fold(Rational::zero(), |acc, c| acc + c.l1())
    }

    /// Same polynomial with a different ħ attached.
    pub fn with_hbar(&self, hbar: Rational) -> Result<Self> {
        let mut s = Self::zero(hbar)?;
        s.terms = self.terms.clone();
        Ok(s)
    }

    pub fn eval(&self, x: f64, p: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|((a, b), c)| c.to_c64() * x.powi(*a as i32) * p.powi(*b as i32))
            .sum()
    }

    fn add_term(&mut self, key: (u32, u32), c: &ExactComplex) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(key).or_insert_with(ExactComplex::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&key);
        }
    }

    fn map_coeffs(&self, f: impl Fn(&ExactComplex) -> ExactComplex) -> Self {
        let mut out = Self {
            terms: BTreeMap::new(),
            hbar: self.hbar.clone(),
        };
        for (k, c) in &self.terms {
            out.add_term(*k, &f(c));
        }
        out
    }

    fn check_hbar(&self, other: &Self) -> Result<()> {
        if self.hbar != other.hbar {
            return Err(invalid("hbar", "symbols carry different hbar"));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_hbar(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(*k, c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-ExactComplex::one()))
    }

    pub fn scale(&self, c: &ExactComplex) -> Self {
        self.map_coeffs(|v| v * c)
    }

    /// Pointwise (commutative) product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_hbar(other)?;
        let mut out = Self {
            terms: BTreeMap::new(),
            hbar: self.hbar.clone(),
        };
        for ((a1, b1), c1) in &self.terms {
            for ((a2, b2), c2) in &other.terms {
                out.add_term((a1 + a2, b1 + b2), &(c1 * c2));
            }
        }
        Ok(out)
    }

    /// `∂ₓ^i ∂ₚ^j` of the polynomial.
    pub fn derivative(&self, i: u32, j: u32) -> Self {
        let mut out = Self {
            terms: BTreeMap::new(),
            hbar: self.hbar.clone(),
        };
        for ((a, b), c) in &self.terms {
            if *a < i || *b < j {
                continue;
            }
            let f = falling(*a, i) * falling(*b, j);
            out.add_term((a - i, b - j), &c.scale(&f));
        }
        out
    }
}

fn falling(n: u32, k: u32) -> Rational {
    (0..k).fold(Rational::one(), |acc, t| acc * int((n - t) as i64))
}

fn binomial(n: u32, k: u32) -> Rational {
    falling(n, k) / falling(k, k)
}

/// Moyal product `a ⋆ b` as the bidifferential series
/// `Σₙ (iħ/2)ⁿ/n! Σₖ C(n,k) (−1)ᵏ (∂ₓⁿ⁻ᵏ∂ₚᵏ a)(∂ₚⁿ⁻ᵏ∂ₓᵏ b)`,
/// which terminates for polynomials.
pub fn star_poly(a: &PolySymbol, b: &PolySymbol) -> Result<PolySymbol> {
    a.check_hbar(b)?;
    let order = (a.max_power_x() + a.max_power_p()).min(b.max_power_x() + b.max_power_p());
    let half_ih = ExactComplex::imag(a.hbar.clone() / int(2));
    let mut prefactor = ExactComplex::one();
    let mut out = PolySymbol::zero(a.hbar.clone())?;
    for n in 0..=order {
        if n > 0 {
            prefactor = (&prefactor * &half_ih).scale(&(Rational::one() / int(n as i64)));
        }
        for k in 0..=n {
            let left = a.derivative(n - k, k);
            let right = b.derivative(k, n - k);
            if left.is_zero() || right.is_zero() {
                continue;
            }
            let mut c = prefactor.scale(&binomial(n, k));
            if k % 2 == 1 {
                c = -c;
            }
            out = out.add(&left.mul(&right)?.scale(&c))?;
        }
    }
    Ok(out)
}

pub fn poisson_poly(a: &PolySymbol, b: &PolySymbol) -> Result<PolySymbol> {
    a.derivative(1, 0)
        .mul(&b.derivative(0, 1))?
        .sub(&a.derivative(0, 1).mul(&b.derivative(1, 0))?)
}

impl fmt::Display for PolySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        // highest total degree first
        let mut keys: Vec<_> = self.terms.keys().collect();
        keys.sort_by_key(|k| std::cmp::Reverse((k.0 + k.1, k.0)));
        for key in keys {
            let c = &self.terms[key];
            let (negative, c) = if (c.im.is_zero() && c.re.is_negative()) || (c.re.is_zero() && c.im.is_negative()) {
                (true, -c.clone())
            } else {
                (false, c.clone())
            };
            if first {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if negative { '-' } else { '+' })?;
            }
            first = false;
            let mut factors = Vec::new();
            let unit = c.is_real() && c.re.is_one();
            if !unit || *key == (0, 0) {
                factors.push(c.to_string());
            }
            for (sym, pow) in [("x", key.0), ("p", key.1)] {
                match pow {
                    0 => {}
                    1 => factors.push(sym.to_string()),
                    k => factors.push(format!("{sym}^{k}")),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn sum(&mut self, hbar: Rational) -> Result<PolySymbol> {
        let out = self.terms(&hbar)?;
        match self.peek() {
            None => Ok(out),
            Some(other) => Err(self.err(format!("unexpected `{}`", other as char))),
        }
    }

    fn terms(&mut self, hbar: &Rational) -> Result<PolySymbol> {
        let mut out = PolySymbol::zero(hbar.clone())?;
        let mut negate = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            None => return Err(self.err("empty expression")),
            _ => false,
        };
        loop {
            let term = self.product(hbar)?;
            out = if negate { out.sub(&term)? } else { out.add(&term)? };
            match self.peek() {
                Some(b'+') => negate = false,
                Some(b'-') => negate = true,
                _ => return Ok(out),
            }
            self.pos += 1;
        }
    }

    fn product(&mut self, hbar: &Rational) -> Result<PolySymbol> {
        let mut acc = self.factor(hbar)?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = acc.mul(&self.factor(hbar)?)?;
        }
        Ok(acc)
    }

    fn factor(&mut self, hbar: &Rational) -> Result<PolySymbol> {
        let unit = |c: ExactComplex| PolySymbol::constant(c, hbar.clone());
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.terms(hbar)?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'x') | Some(b'p') => {
                let is_x = self.src[self.pos] == b'x';
                self.pos += 1;
                let pow = if self.peek() == Some(b'^') {
                    self.pos += 1;
                    self.skip_ws();
                    let start = self.pos;
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                    digits.parse::<u32>().map_err(|_| Error::Parse {
                        offset: start,
                        message: "expected a non-negative integer power".into(),
                    })?
                } else {
                    1
                };
                let (a, b) = if is_x { (pow, 0) } else { (0, pow) };
                PolySymbol::monomial(ExactComplex::one(), a, b, hbar.clone())
            }
            Some(b'i') => {
                self.pos += 1;
                unit(ExactComplex::i())
            }
            Some(ch) if ch.is_ascii_digit() || ch == b'.' => {
                let mut v = self.decimal()?;
                if self.peek() == Some(b'/') {
                    self.pos += 1;
                    self.skip_ws();
                    let at = self.pos;
                    let d = self.decimal()?;
                    if d.is_zero() {
                        return Err(Error::Parse {
                            offset: at,
                            message: "division by zero".into(),
                        });
                    }
                    v /= d;
                }
                unit(ExactComplex::real(v))
            }
            Some(ch) => Err(self.err(format!("unexpected `{}`", ch as char))),
            None => Err(self.err("unexpected end of expression")),
        }
    }

    fn decimal(&mut self) -> Result<Rational> {
        let start = self.pos;
        while self.pos < self.src.len() {
            let ch = self.src[self.pos];
            let exp_sign = (ch == b'-' || ch == b'+')
                && self.pos > start
                && matches!(self.src[self.pos - 1], b'e' | b'E');
            if ch.is_ascii_digit() || ch == b'.' || ch == b'e' || ch == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        exact::parse_decimal(text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                offset: start,
                message,
            },
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn sym(s: &str) -> PolySymbol {
        PolySymbol::parse(s, int(1)).unwrap()
    }

    fn sym_h(s: &str, h: &Rational) -> PolySymbol {
        PolySymbol::parse(s, h.clone()).unwrap()
    }

    #[test]
    fn parser_round_trip() {
        let a = sym("x^2*p - 0.5*p^3");
        assert_eq!(a.coefficient(2, 1), ExactComplex::one());
        assert_eq!(a.coefficient(0, 3), ExactComplex::real(rat(-1, 2)));
        let b = PolySymbol::parse(&a.to_string(), int(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(sym("3/4*x"), sym("0.75*x"));
        assert_eq!(sym("(x + p)*(x - p)"), sym("x^2 - p^2"));
        let z = sym("(1/2 - 1/3*i)*x*p + 2*i");
        assert_eq!(PolySymbol::parse(&z.to_string(), int(1)).unwrap(), z);
        let c = sym(" - 2 * i * x + 3 + x*x ");
        assert_eq!(c.coefficient(1, 0), ExactComplex::imag(int(-2)));
        assert_eq!(c.coefficient(2, 0), ExactComplex::one());
        assert_eq!(sym("x - x"), PolySymbol::zero(int(1)).unwrap());
    }

    #[test]
    fn parser_errors_carry_offsets() {
        for (bad, at) in [("x^", 2), ("x + * p", 4), ("y", 0), ("", 0), ("x p", 2), ("(x", 2)] {
            match PolySymbol::parse(bad, int(1)) {
                Err(Error::Parse { offset, .. }) => assert_eq!(offset, at, "{bad}"),
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    #[test]
    fn canonical_commutator() {
        let h = rat(1, 3);
        let x = PolySymbol::x(h.clone()).unwrap();
        let p = PolySymbol::p(h.clone()).unwrap();
        let comm = star_poly(&x, &p)
            .unwrap()
            .sub(&star_poly(&p, &x).unwrap())
            .unwrap();
        assert_eq!(
            comm,
            PolySymbol::constant(ExactComplex::imag(h.clone()), h).unwrap()
        );
        assert_eq!(star_poly(&x, &x).unwrap(), sym_h("x^2", &rat(1, 3)));
    }

    #[test]
    fn quadratic_product() {
        let h = rat(1, 2);
        let got = star_poly(&sym_h("x^2", &h), &sym_h("p^2", &h)).unwrap();
        // x²p² + 2iħxp − ħ²/2
        let want = sym_h("x^2*p^2 + 1*i*x*p - 0.125", &h);
        assert_eq!(got, want);
    }

    #[test]
    fn derivative_and_poisson() {
        let a = sym("x^3*p^2");
        assert_eq!(a.derivative(1, 1), sym("6*x^2*p"));
        assert_eq!(
            poisson_poly(&sym("x^2"), &sym("p^2")).unwrap(),
            sym("4*x*p")
        );
        let hamiltonian = sym("0.5*p^2 + 0.5*x^2");
        assert!(poisson_poly(&hamiltonian, &hamiltonian).unwrap().is_zero());
    }

    #[test]
    fn mismatched_hbar_rejected() {
        assert!(star_poly(&sym("x"), &sym_h("p", &rat(1, 2))).is_err());
        assert!(PolySymbol::zero(int(0)).is_err());
    }
}
