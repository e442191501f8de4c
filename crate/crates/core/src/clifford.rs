//! Groupoid arrows, orthogonal Clifford algebras and idempotent sets, all in
//! exact rational arithmetic.
//!
//! Blades are bitmasks: bit `i` stands for generator `e_{i+1}`. The first `p`
//! generators square to `+1`, the remaining `q` to `−1`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::exact::{int, parse_decimal, Rational};

pub const MAX_GENERATORS: u32 = 8;

// ---------------------------------------------------------------- groupoid

/// Arrow `[T_source, T_target]` between labelled points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupoidArrow {
    pub source: usize,
    pub target: usize,
}

/// Finite set of point labels, `T1 … Tn`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    names: Vec<String>,
}

impl LabelSet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(invalid("labels", "need at least one label"));
        }
        let mut seen = names.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != names.len() {
            return Err(invalid("labels", "duplicate label"));
        }
        Ok(Self { names })
    }

    /// `T1 … Tn`.
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| format!("T{i}")))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn arrow(&self, source: &str, target: &str) -> Result<GroupoidArrow> {
        let find = |s: &str| {
            self.names
                .iter()
                .position(|n| n == s)
                .ok_or_else(|| invalid("label", format!("`{s}` is not declared")))
        };
        Ok(GroupoidArrow {
            source: find(source)?,
            target: find(target)?,
        })
    }

    pub fn show(&self, a: &GroupoidArrow) -> String {
        format!("[{},{}]", self.names[a.source], self.names[a.target])
    }
}

/// `[a, b]∘[c, d] = [a, d]` when `b = c`; `None` (undefined) otherwise.
pub fn arrow_compose(a: &GroupoidArrow, b: &GroupoidArrow) -> Option<GroupoidArrow> {
    (a.target == b.source).then_some(GroupoidArrow {
        source: a.source,
        target: b.target,
    })
}

/// Image of an arrow in `Cl(n, 0)`: `[T_i, T_j] ↦ e_i e_j`. Composable
/// arrows multiply as in the groupoid, `[T_i, T_i] ↦ 1`, and distinct arrows
/// sharing one endpoint anticommute.
pub fn arrow_element(a: &GroupoidArrow, labels: &LabelSet) -> Result<Multivector> {
    let n = labels.len() as u32;
    if a.source >= labels.len() || a.target >= labels.len() {
        return Err(invalid("arrow", "label outside the declared set"));
    }
    let ei = Multivector::generator(n, 0, a.source as u32 + 1)?;
    let ej = Multivector::generator(n, 0, a.target as u32 + 1)?;
    ei.mul(&ej)
}

// ---------------------------------------------------------------- blades

/// Sign from reordering the product of two canonical blades.
fn reorder_sign(a: u32, b: u32) -> bool {
    let mut a = a >> 1;
    let mut swaps = 0;
    while a != 0 {
        swaps += (a & b).count_ones();
        a >>= 1;
    }
    swaps % 2 == 1
}

/// `e_A e_B = ± e_{A xor B}`; returns `(negative, blade)`.
fn blade_product(a: u32, b: u32, p: u32) -> (bool, u32) {
    let mut neg = reorder_sign(a, b);
    let negative_squares = ((a & b) >> p).count_ones();
    neg ^= negative_squares % 2 == 1;
    (neg, a ^ b)
}

fn grade(blade: u32) -> u32 {
    blade.count_ones()
}

// ---------------------------------------------------------------- multivectors

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multivector {
    p: u32,
    q: u32,
    coeffs: BTreeMap<u32, Rational>,
}

impl Multivector {
    pub fn zero(p: u32, q: u32) -> Result<Self> {
        if p + q > MAX_GENERATORS {
            return Err(Error::SizeLimit(p + q, MAX_GENERATORS));
        }
        Ok(Self {
            p,
            q,
            coeffs: BTreeMap::new(),
        })
    }

    pub fn scalar(p: u32, q: u32, value: Rational) -> Result<Self> {
        Self::blade(p, q, 0, value)
    }

    /// `value · e_blade`.
    pub fn blade(p: u32, q: u32, blade: u32, value: Rational) -> Result<Self> {
        let mut m = Self::zero(p, q)?;
        if blade >> (p + q) != 0 {
            return Err(invalid("blade", format!("bitmask {blade:#b} outside Cl({p},{q})")));
        }
        if !value.is_zero() {
            m.coeffs.insert(blade, value);
        }
        Ok(m)
    }

    /// Generator `e_i`, `1 ≤ i ≤ p + q`.
    pub fn generator(p: u32, q: u32, i: u32) -> Result<Self> {
        if i == 0 || i > p + q {
            return Err(invalid("generator", format!("e{i} outside Cl({p},{q})")));
        }
        Self::blade(p, q, 1 << (i - 1), Rational::one())
    }

    pub fn signature(&self) -> (u32, u32) {
        (self.p, self.q)
    }

    pub fn dimension(&self) -> usize {
        1 << (self.p + self.q)
    }

    /// Nonzero coefficients by blade bitmask.
    pub fn coefficients(&self) -> &BTreeMap<u32, Rational> {
        &self.coeffs
    }

    pub fn coefficient(&self, blade: u32) -> Rational {
        self.coeffs.get(&blade).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `Some(c)` when the element is the scalar `c`.
    pub fn as_scalar(&self) -> Option<Rational> {
        match self.coeffs.len() {
            0 => Some(Rational::zero()),
            1 => self.coeffs.get(&0).cloned(),
            _ => None,
        }
    }

    pub fn is_even(&self) -> bool {
        self.coeffs.keys().all(|b| grade(*b).is_multiple_of(2))
    }

    pub fn grades(&self) -> Vec<u32> {
        let mut g: Vec<u32> = self.coeffs.keys().map(|b| grade(*b)).collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    fn check(&self, other: &Self) -> Result<()> {
        if (self.p, self.q) != (other.p, other.q) {
            return Err(Error::SignatureMismatch(self.p, self.q, other.p, other.q));
        }
        Ok(())
    }

    fn accumulate(&mut self, blade: u32, value: Rational) {
        let entry = self.coeffs.entry(blade).or_insert_with(Rational::zero);
        *entry += value;
        if entry.is_zero() {
            self.coeffs.remove(&blade);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (b, c) in &other.coeffs {
            out.accumulate(*b, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, r: &Rational) -> Self {
        let mut out = Self {
            p: self.p,
            q: self.q,
            coeffs: BTreeMap::new(),
        };
        if !r.is_zero() {
            out.coeffs = self.coeffs.iter().map(|(b, c)| (*b, c * r)).collect();
        }
        out
    }

    /// Clifford (geometric) product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = Self {
            p: self.p,
            q: self.q,
            coeffs: BTreeMap::new(),
        };
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                let (neg, blade) = blade_product(*a, *b, self.p);
                let v = ca * cb;
                out.accumulate(blade, if neg { -v } else { v });
            }
        }
        Ok(out)
    }

    /// Reversion: grade `k` picks up `(−1)^{k(k−1)/2}`.
    pub fn reverse(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(b, c)| {
                let k = grade(*b);
                (*b, if (k * k.saturating_sub(1) / 2) % 2 == 1 { -c } else { c.clone() })
            })
            .collect();
        Self {
            p: self.p,
            q: self.q,
            coeffs,
        }
    }

    /// `R⁻¹ = reverse(R) / (R reverse(R))` when that product is a nonzero
    /// scalar.
    pub fn versor_inverse(&self) -> Result<Self> {
        let rev = self.reverse();
        let norm = self.mul(&rev)?.as_scalar().ok_or(Error::NonInvertible)?;
        if norm.is_zero() {
            return Err(Error::NonInvertible);
        }
        Ok(rev.scale(&norm.recip()))
    }

    /// Parse `"2*e1^e2 - 3 + 1/2*e3"` in `Cl(p, q)`. Blades may be written
    /// in any order and with repeats; they are reduced by the product rule.
    pub fn parse(p: u32, q: u32, text: &str) -> Result<Self> {
        Parser::new(p, q, text)?.parse()
    }
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut blades: Vec<&u32> = self.coeffs.keys().collect();
        blades.sort_by_key(|b| (grade(**b), **b));
        for (i, b) in blades.into_iter().enumerate() {
            let c = &self.coeffs[b];
            let mag = c.abs();
            match (i, c.is_negative()) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let name: Vec<String> = (0..32).filter(|k| b >> k & 1 == 1).map(|k| format!("e{}", k + 1)).collect();
            match (*b, mag.is_one()) {
                (0, _) => write!(f, "{mag}")?,
                (_, true) => write!(f, "{}", name.join("^"))?,
                _ => write!(f, "{mag}*{}", name.join("^"))?,
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    p: u32,
    q: u32,
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(p: u32, q: u32, text: &'a str) -> Result<Self> {
        Multivector::zero(p, q)?;
        Ok(Self { p, q, text, pos: 0 })
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.text[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<Rational> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let mut end = 0;
        let bytes = rest.as_bytes();
        while end < bytes.len() {
            let c = bytes[end];
            let exp_sign = (c == b'+' || c == b'-') && end > 0 && matches!(bytes[end - 1], b'e' | b'E');
            let exp = (c == b'e' || c == b'E') && end > 0 && bytes.get(end + 1).is_some_and(|n| n.is_ascii_digit() || *n == b'-' || *n == b'+');
            if c.is_ascii_digit() || c == b'.' || exp || exp_sign {
                end += 1;
            } else {
                break;
            }
        }
        if end == 0 {
            return self.err("expected a number");
        }
        let value = parse_decimal(&rest[..end]).map_err(|_| Error::Parse {
            offset: self.pos,
            message: format!("bad number `{}`", &rest[..end]),
        })?;
        self.pos += end;
        if self.eat('/') {
            let start = self.pos;
            let den = self.number()?;
            if den.is_zero() {
                self.pos = start;
                return self.err("zero denominator");
            }
            return Ok(value / den);
        }
        Ok(value)
    }

    fn generator(&mut self) -> Result<Multivector> {
        if !self.eat('e') {
            return self.err("expected a generator `e<i>`");
        }
        let rest = &self.text[self.pos..];
        let digits = rest.chars().take_while(char::is_ascii_digit).count();
        if digits == 0 {
            return self.err("expected a generator index");
        }
        let i: u32 = rest[..digits].parse().map_err(|_| Error::Parse {
            offset: self.pos,
            message: "bad generator index".into(),
        })?;
        if i == 0 || i > self.p + self.q {
            return self.err(format!("e{i} outside Cl({},{})", self.p, self.q));
        }
        self.pos += digits;
        Multivector::generator(self.p, self.q, i)
    }

    fn blade(&mut self) -> Result<Multivector> {
        let mut m = self.generator()?;
        while self.eat('^') {
            m = m.mul(&self.generator()?)?;
        }
        Ok(m)
    }

    fn term(&mut self) -> Result<Multivector> {
        match self.peek() {
            Some('e') => self.blade(),
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let c = self.number()?;
                if self.eat('*') {
                    Ok(self.blade()?.scale(&c))
                } else {
                    Multivector::scalar(self.p, self.q, c)
                }
            }
            _ => self.err("expected a term"),
        }
    }

    fn parse(mut self) -> Result<Multivector> {
        let mut total = Multivector::zero(self.p, self.q)?;
        let mut negative = self.eat('-');
        loop {
            let t = self.term()?;
            total = total.add(&if negative { t.neg() } else { t })?;
            if self.eat('+') {
                negative = false;
            } else if self.eat('-') {
                negative = true;
            } else if self.peek().is_none() {
                return Ok(total);
            } else {
                return self.err("expected `+`, `-` or end of input");
            }
        }
    }
}

// ---------------------------------------------------------------- tables

/// Full blade multiplication table of `Cl(p, q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliffordTable {
    pub p: u32,
    pub q: u32,
    /// Row-major `(negative, blade)` for `e_a e_b`.
    entries: Vec<(bool, u32)>,
}

impl CliffordTable {
    pub fn dimension(&self) -> usize {
        1 << (self.p + self.q)
    }

    /// `(sign, blade)` of `e_a e_b`, with sign `±1`.
    pub fn product(&self, a: u32, b: u32) -> (i8, u32) {
        let (neg, blade) = self.entries[a as usize * self.dimension() + b as usize];
        (if neg { -1 } else { 1 }, blade)
    }

    fn triple(&self, a: u32, b: u32, c: u32) -> bool {
        let (s1, ab) = self.product(a, b);
        let (s2, left) = self.product(ab, c);
        let (s3, bc) = self.product(b, c);
        let (s4, right) = self.product(a, bc);
        left == right && s1 * s2 == s3 * s4
    }

    /// Associativity on every triple of blades when `p + q ≤ 4`, otherwise
    /// on `samples` seeded random triples. Returns the first failing triple.
    pub fn check_associativity(&self, samples: usize, seed: u64) -> Option<(u32, u32, u32)> {
        let d = self.dimension() as u32;
        if self.p + self.q <= 4 {
            for a in 0..d {
                for b in 0..d {
                    for c in 0..d {
                        if !self.triple(a, b, c) {
                            return Some((a, b, c));
                        }
                    }
                }
            }
            return None;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples)
            .map(|_| (rng.random_range(0..d), rng.random_range(0..d), rng.random_range(0..d)))
            .find(|&(a, b, c)| !self.triple(a, b, c))
    }
}

/// Multiplication table of `Cl(p, q)` for `p + q ≤ 8`.
pub fn generate_algebra(p: u32, q: u32) -> Result<CliffordTable> {
    if p + q > MAX_GENERATORS {
        return Err(Error::SizeLimit(p + q, MAX_GENERATORS));
    }
    let d = 1u32 << (p + q);
    let entries = (0..d).flat_map(|a| (0..d).map(move |b| blade_product(a, b, p))).collect();
    Ok(CliffordTable { p, q, entries })
}

/// `R A R⁻¹`.
pub fn rotor_conjugate(r: &Multivector, a: &Multivector) -> Result<Multivector> {
    r.check(a)?;
    let inv = r.versor_inverse()?;
    r.mul(a)?.mul(&inv)
}

/// `1 − t B` for a unit bivector `B`: a scalar multiple of
/// `exp(−θB/2)` with `tan(θ/2) = t`. For `B = e1e2` in a positive plane the
/// conjugation turns `e1` towards `e2` by `θ`.
pub fn rotor_from_tan_half(plane: &Multivector, t: Rational) -> Result<Multivector> {
    if plane.grades() != [2] || plane.coeffs.len() != 1 {
        return Err(invalid("plane", "must be a single bivector blade"));
    }
    let (p, q) = plane.signature();
    Multivector::scalar(p, q, Rational::one())?.sub(&plane.scale(&t))
}

// ---------------------------------------------------------------- matrices

/// Square matrix over the rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    n: usize,
    data: Vec<Rational>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(invalid("matrix", "rows must form a non-empty square"));
        }
        Ok(Self {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Integer entries, for tests and examples.
    pub fn from_ints(rows: &[&[i64]]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|v| int(*v)).collect()).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Rational::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    pub fn diagonal(values: Vec<Rational>) -> Self {
        let mut m = Self::zeros(values.len());
        let n = m.n;
        for (i, v) in values.into_iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<Rational>> {
        self.data.chunks(self.n).map(<[Rational]>::to_vec).collect()
    }

    fn same(&self, o: &Self) -> Result<()> {
        if self.n != o.n {
            return Err(invalid("matrix", format!("dimension {} vs {}", self.n, o.n)));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.same(o)?;
        Ok(Self {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.same(o)?;
        Ok(Self {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.same(o)?;
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * &o.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> Rational {
        (0..self.n).map(|i| self.get(i, i).clone()).fold(Rational::zero(), |a, b| a + b)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Gauss-Jordan inverse.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[r * n + col].is_zero()).ok_or(Error::NonInvertible)?;
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                    inv.swap(pivot * n + j, col * n + j);
                }
            }
            let scale = a[col * n + col].recip();
            for j in 0..n {
                a[col * n + j] *= &scale;
                inv[col * n + j] *= &scale;
            }
            for r in 0..n {
                if r == col || a[r * n + col].is_zero() {
                    continue;
                }
                let f = a[r * n + col].clone();
                for j in 0..n {
                    let (av, iv) = (a[col * n + j].clone(), inv[col * n + j].clone());
                    a[r * n + j] -= &f * av;
                    inv[r * n + j] -= &f * iv;
                }
            }
        }
        Ok(Self { n, data: inv })
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows()
            .iter()
            .map(|r| format!("[{}]", r.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")))
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

// ---------------------------------------------------------------- idempotents

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdempotentSet {
    members: Vec<Matrix>,
    dim: usize,
}

impl IdempotentSet {
    /// Every member must satisfy `ε² = ε` exactly.
    pub fn new(members: Vec<Matrix>) -> Result<Self> {
        let dim = members.first().ok_or_else(|| invalid("idempotents", "empty set"))?.dim();
        for (i, e) in members.iter().enumerate() {
            if e.dim() != dim {
                return Err(invalid("idempotents", format!("member {i} has dimension {}", e.dim())));
            }
            if &e.mul(e)? != e {
                return Err(invalid("idempotents", format!("member {i} is not idempotent")));
            }
        }
        Ok(Self { members, dim })
    }

    /// Diagonal projectors `e_{kk}`, `k < d`.
    pub fn standard(d: usize) -> Result<Self> {
        Self::new(
            (0..d)
                .map(|k| Matrix::diagonal((0..d).map(|i| if i == k { Rational::one() } else { Rational::zero() }).collect()))
                .collect(),
        )
    }

    pub fn members(&self) -> &[Matrix] {
        &self.members
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_orthogonal(&self) -> bool {
        self.members.iter().enumerate().all(|(i, a)| {
            self.members
                .iter()
                .enumerate()
                .all(|(j, b)| i == j || a.mul(b).is_ok_and(|m| m.is_zero()))
        })
    }

    pub fn sum(&self) -> Matrix {
        self.members
            .iter()
            .fold(Matrix::zeros(self.dim), |acc, e| acc.add(e).expect("same dimension"))
    }

    pub fn is_complete(&self) -> bool {
        self.sum() == Matrix::identity(self.dim)
    }
}

/// Conjugated set `ε′_j = A ε_j A⁻¹` and its overlap with the original set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exploded {
    pub transformed: IdempotentSet,
    /// `M[j][k] = Tr(ε′_j ε_k)`; row `j` sums to `rank ε_j`.
    pub mixing: Vec<Vec<Rational>>,
}

/// Exploding transformation of a complete orthogonal set.
pub fn exploding_transform(a: &Matrix, eps: &IdempotentSet) -> Result<Exploded> {
    if a.dim() != eps.dim() {
        return Err(invalid("A", format!("dimension {} vs set dimension {}", a.dim(), eps.dim())));
    }
    if !eps.is_complete() {
        return Err(Error::IncompleteSet("members do not sum to the identity".into()));
    }
    if !eps.is_orthogonal() {
        return Err(Error::IncompleteSet("members are not mutually orthogonal".into()));
    }
    let inv = a.inverse()?;
    let transformed = eps
        .members()
        .iter()
        .map(|e| a.mul(e)?.mul(&inv))
        .collect::<Result<Vec<_>>>()?;
    let mixing = transformed
        .iter()
        .map(|t| eps.members().iter().map(|e| Ok(t.mul(e)?.trace())).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(Exploded {
        transformed: IdempotentSet::new(transformed)?,
        mixing,
    })
}

/// `ε₁ε₂ − ε₂ε₁`.
pub fn commutator_witness(e1: &Matrix, e2: &Matrix) -> Result<Matrix> {
    e1.mul(e2)?.sub(&e2.mul(e1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn mv(p: u32, q: u32, s: &str) -> Multivector {
        Multivector::parse(p, q, s).unwrap()
    }

    #[test]
    fn groupoid_composition() {
        let t = LabelSet::numbered(4).unwrap();
        let a12 = t.arrow("T1", "T2").unwrap();
        let a23 = t.arrow("T2", "T3").unwrap();
        let a34 = t.arrow("T3", "T4").unwrap();
        let a11 = t.arrow("T1", "T1").unwrap();
        assert_eq!(arrow_compose(&a12, &a23), Some(t.arrow("T1", "T3").unwrap()));
        assert_eq!(arrow_compose(&a12, &a34), None);
        assert_eq!(arrow_compose(&a11, &a11), Some(a11.clone()));
        assert_eq!(t.show(&a12), "[T1,T2]");
        assert!(t.arrow("T1", "T9").is_err());
        assert!(LabelSet::new(["a", "a"]).is_err());
    }

    #[test]
    fn arrows_in_the_alternating_algebra() {
        let t = LabelSet::numbered(3).unwrap();
        let el = |s: &str, d: &str| arrow_element(&t.arrow(s, d).unwrap(), &t).unwrap();
        let (a12, a23, a13) = (el("T1", "T2"), el("T2", "T3"), el("T1", "T3"));
        assert_eq!(a12.mul(&a23).unwrap(), a13);
        assert!(a12.mul(&a23).unwrap().add(&a23.mul(&a12).unwrap()).unwrap().is_zero());
        assert_eq!(el("T1", "T1").as_scalar(), Some(int(1)));
        assert_eq!(a12.mul(&el("T2", "T1")).unwrap().as_scalar(), Some(int(1)));
    }

    #[test]
    fn quaternions_in_cl02() {
        let (i, j, k) = (mv(0, 2, "e1"), mv(0, 2, "e2"), mv(0, 2, "e1^e2"));
        let minus_one = mv(0, 2, "-1");
        for u in [&i, &j, &k] {
            assert_eq!(u.mul(u).unwrap(), minus_one);
        }
        assert_eq!(i.mul(&j).unwrap(), k);
        assert_eq!(j.mul(&k).unwrap(), i);
        assert_eq!(k.mul(&i).unwrap(), j);
        assert_eq!(j.mul(&i).unwrap(), k.neg());
    }

    #[test]
    fn table_examples() {
        let c = generate_algebra(0, 1).unwrap();
        assert_eq!(c.dimension(), 2);
        assert_eq!(c.product(1, 1), (-1, 0));
        let pauli = generate_algebra(3, 0).unwrap();
        assert_eq!(pauli.dimension(), 8);
        let e123 = mv(3, 0, "e1^e2^e3");
        assert_eq!(e123.mul(&e123).unwrap(), mv(3, 0, "-1"));
        assert!(matches!(generate_algebra(5, 4), Err(Error::SizeLimit(9, 8))));
    }

    #[test]
    fn dirac_anticommutation() {
        let t = generate_algebra(1, 3).unwrap();
        assert_eq!(t.dimension(), 16);
        for mu in 1..=4 {
            for nu in 1..=4 {
                let g = |i| Multivector::generator(1, 3, i).unwrap();
                let s = g(mu).mul(&g(nu)).unwrap().add(&g(nu).mul(&g(mu)).unwrap()).unwrap();
                let eta = if mu != nu { 0 } else if mu == 1 { 2 } else { -2 };
                assert_eq!(s.as_scalar(), Some(int(eta)), "γ{mu} γ{nu}");
            }
        }
    }

    #[test]
    fn associativity_and_signature() {
        for (p, q) in [(0, 1), (2, 0), (0, 2), (1, 3), (2, 2), (4, 0), (3, 3), (5, 3)] {
            let t = generate_algebra(p, q).unwrap();
            assert_eq!(t.check_associativity(10_000, 7), None, "Cl({p},{q})");
            for i in 0..p + q {
                let want = if i < p { 1 } else { -1 };
                assert_eq!(t.product(1 << i, 1 << i), (want, 0));
            }
        }
    }

    #[test]
    fn rotors() {
        let a = mv(3, 0, "3 + e1 - 1/2*e2^e3");
        let one = mv(3, 0, "1");
        assert_eq!(rotor_conjugate(&one, &a).unwrap(), a);
        let plane = mv(3, 0, "e1^e2");
        let quarter = rotor_from_tan_half(&plane, int(1)).unwrap();
        assert_eq!(rotor_conjugate(&quarter, &mv(3, 0, "e1")).unwrap(), mv(3, 0, "e2"));
        assert_eq!(rotor_conjugate(&quarter, &mv(3, 0, "e3")).unwrap(), mv(3, 0, "e3"));
        // tan(θ/2) = 1/2: cos θ = 3/5, sin θ = 4/5
        let r = rotor_from_tan_half(&plane, rat(1, 2)).unwrap();
        assert_eq!(rotor_conjugate(&r, &mv(3, 0, "e1")).unwrap(), mv(3, 0, "3/5*e1 + 4/5*e2"));
        let b = mv(3, 0, "e2 - 2*e1^e3 + 7");
        let lhs = rotor_conjugate(&r, &a).unwrap().mul(&rotor_conjugate(&r, &b).unwrap()).unwrap();
        assert_eq!(lhs, rotor_conjugate(&r, &a.mul(&b).unwrap()).unwrap());
        let bad = mv(1, 1, "1 + e1^e2");
        assert_eq!(bad.versor_inverse(), Err(Error::NonInvertible));
        assert!(rotor_conjugate(&mv(2, 0, "1"), &a).is_err());
    }

    #[test]
    fn parse_and_print() {
        let m = mv(2, 1, "2*e1^e2 - 3");
        assert_eq!(m.to_string(), "-3 + 2*e1^e2");
        assert_eq!(mv(2, 1, "e2^e1"), mv(2, 1, "-e1^e2"));
        assert_eq!(mv(2, 1, "e3^e3"), mv(2, 1, "-1"));
        assert_eq!(mv(2, 1, "0.5*e1 + 1/2*e1"), mv(2, 1, "e1"));
        for s in ["-3 + 2*e1^e2", "1/3*e1 - e2^e3", "0", "e1^e2^e3"] {
            assert_eq!(mv(2, 1, s).to_string(), s);
        }
        for bad in ["e4", "2*", "e1 e2", "1/0", "e", "+"] {
            assert!(Multivector::parse(2, 1, bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn exploding_examples() {
        let eps = IdempotentSet::standard(2).unwrap();
        let id = exploding_transform(&Matrix::identity(2), &eps).unwrap();
        assert_eq!(id.mixing, vec![vec![int(1), int(0)], vec![int(0), int(1)]]);
        let swap = Matrix::from_ints(&[&[0, 1], &[1, 0]]).unwrap();
        let s = exploding_transform(&swap, &eps).unwrap();
        assert_eq!(s.mixing, vec![vec![int(0), int(1)], vec![int(1), int(0)]]);
        let h = Matrix::from_ints(&[&[1, 1], &[1, -1]]).unwrap();
        let x = exploding_transform(&h, &eps).unwrap();
        let half = rat(1, 2);
        assert_eq!(x.mixing, vec![vec![half.clone(), half.clone()], vec![half.clone(), half]]);
        assert!(x.transformed.is_complete() && x.transformed.is_orthogonal());

        let singular = Matrix::from_ints(&[&[1, 1], &[1, 1]]).unwrap();
        assert_eq!(exploding_transform(&singular, &eps), Err(Error::NonInvertible));
        let partial = IdempotentSet::new(vec![eps.members()[0].clone()]).unwrap();
        assert!(matches!(exploding_transform(&h, &partial), Err(Error::IncompleteSet(_))));
    }

    #[test]
    fn exploding_mixes_all_idempotents() {
        let eps = IdempotentSet::standard(3).unwrap();
        let a = Matrix::from_ints(&[&[2, 1, 1], &[1, 3, 1], &[1, 1, 4]]).unwrap();
        let x = exploding_transform(&a, &eps).unwrap();
        assert_eq!(x.transformed.sum(), Matrix::identity(3));
        for (j, row) in x.mixing.iter().enumerate() {
            assert_eq!(row.iter().fold(Rational::zero(), |s, v| s + v), int(1), "row {j}");
            assert!(row.iter().all(|v| !v.is_zero()));
        }
    }

    #[test]
    fn commutators() {
        let p0 = Matrix::from_ints(&[&[1, 0], &[0, 0]]).unwrap();
        let p1 = Matrix::from_ints(&[&[0, 0], &[0, 1]]).unwrap();
        assert!(commutator_witness(&p0, &p1).unwrap().is_zero());
        assert!(commutator_witness(&p0, &p0).unwrap().is_zero());
        let half = rat(1, 2);
        let h = Matrix::from_rows(vec![vec![half.clone(), half.clone()], vec![half.clone(), half.clone()]]).unwrap();
        let c = commutator_witness(&p0, &h).unwrap();
        assert_eq!(c.rows(), vec![vec![int(0), half.clone()], vec![-half, int(0)]]);
    }
}
