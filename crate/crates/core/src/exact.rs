//! Exact rational and Gaussian-rational scalars.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Exact rational with the same value as `v` (every finite double is a
/// dyadic rational).
pub fn from_f64(v: f64) -> Option<Rational> {
    Rational::from_float(v)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parse an unsigned decimal literal such as `12`, `0.5` or `2.5e-3`
/// into an exact rational.
pub fn parse_decimal(s: &str) -> Result<Rational> {
    let bad = |m: &str| Error::Parse {
        offset: 0,
        message: format!("{m}: `{s}`"),
    };
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..].parse().map_err(|_| bad("bad exponent"))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (whole, frac) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return Err(bad("empty number"));
    }
    if !whole
        .chars()
        .chain(frac.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad("invalid digit"));
    }
    let digits = format!("{whole}{frac}");
    let num: BigInt = digits.parse().map_err(|_| bad("invalid digits"))?;
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// `re + im·i` over the rationals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExactComplex {
    pub re: Rational,
    pub im: Rational,
}

impl ExactComplex {
    pub fn new(re: Rational, im: Rational) -> Self {
        Self { re, im }
    }

    pub fn real(re: Rational) -> Self {
        Self {
            re,
            im: Rational::zero(),
        }
    }

    pub fn imag(im: Rational) -> Self {
        Self {
            re: Rational::zero(),
            im,
        }
    }

    pub fn i() -> Self {
        Self::imag(Rational::one())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    pub fn scale(&self, r: &Rational) -> Self {
        Self::new(&self.re * r, &self.im * r)
    }

    /// `|re| + |im|`, an exact norm.
    pub fn l1(&self) -> Rational {
        self.re.abs() + self.im.abs()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn to_c64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(to_f64(&self.re), to_f64(&self.im))
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        let d = &self.re * &self.re + &self.im * &self.im;
        if d.is_zero() {
            None
        } else {
            Some(Self::new(&self.re / &d, -&self.im / &d))
        }
    }
}

impl Zero for ExactComplex {
    fn zero() -> Self {
        Self::new(Rational::zero(), Rational::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for ExactComplex {
    fn one() -> Self {
        Self::real(Rational::one())
    }
}

impl From<Rational> for ExactComplex {
    fn from(r: Rational) -> Self {
        Self::real(r)
    }
}

impl Add for ExactComplex {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
}

impl<'a> Add<&'a ExactComplex> for &'a ExactComplex {
    type Output = ExactComplex;
    fn add(self, o: &ExactComplex) -> ExactComplex {
        ExactComplex::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl AddAssign<&ExactComplex> for ExactComplex {
    fn add_assign(&mut self, o: &ExactComplex) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl Sub for ExactComplex {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
}

impl<'a> Sub<&'a ExactComplex> for &'a ExactComplex {
    type Output = ExactComplex;
    fn sub(self, o: &ExactComplex) -> ExactComplex {
        ExactComplex::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl Mul for ExactComplex {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        &self * &o
    }
}

impl<'a> Mul<&'a ExactComplex> for &'a ExactComplex {
    type Output = ExactComplex;
    fn mul(self, o: &ExactComplex) -> ExactComplex {
        ExactComplex::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Neg for ExactComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

impl fmt::Display for ExactComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => write!(f, "{}*i", self.im),
            (false, false) if self.im.is_negative() => {
                write!(f, "({} - {}*i)", self.re, -self.im.clone())
            }
            (false, false) => write!(f, "({} + {}*i)", self.re, self.im),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_decimal("0.5").unwrap(), rat(1, 2));
        assert_eq!(parse_decimal("12").unwrap(), int(12));
        assert_eq!(parse_decimal("2.5e-3").unwrap(), rat(1, 400));
        assert_eq!(parse_decimal("1e2").unwrap(), int(100));
        assert!(parse_decimal("1.2.3").is_err());
        assert!(parse_decimal("").is_err());
    }

    #[test]
    fn complex_arithmetic() {
        let i = ExactComplex::i();
        assert_eq!(&i * &i, -ExactComplex::one());
        let z = ExactComplex::new(rat(3, 2), rat(-1, 3));
        assert_eq!(&z * &z.inv().unwrap(), ExactComplex::one());
        assert_eq!(from_f64(0.125).unwrap(), rat(1, 8));
    }
}
