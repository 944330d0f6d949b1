use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::rational::{format_rational, format_rational_latex, parse_rational};
use super::AlgebraError;

/// A polynomial indeterminate that knows how to print and parse itself.
pub trait Variable: Ord + Clone + fmt::Debug {
    fn write_plain(&self, out: &mut String);
    fn write_latex(&self, out: &mut String);
    /// Reads a variable at the start of `text`, returning it with the number
    /// of bytes consumed.
    fn parse_prefix(text: &str) -> Option<(Self, usize)>;
}

/// Runge-Kutta coefficient `b[i]`, `c[i]` or `a[i,j]` with 1-based indices.
///
/// The derived order puts all `b` before all `c` before all `a`, with `a`
/// row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CoeffVar {
    B(usize),
    C(usize),
    A(usize, usize),
}

impl Variable for CoeffVar {
    fn write_plain(&self, out: &mut String) {
        use fmt::Write;
        let _ = match self {
            CoeffVar::B(i) => write!(out, "b[{i}]"),
            CoeffVar::C(i) => write!(out, "c[{i}]"),
            CoeffVar::A(i, j) => write!(out, "a[{i},{j}]"),
        };
    }

    fn write_latex(&self, out: &mut String) {
        use fmt::Write;
        let _ = match self {
            CoeffVar::B(i) => write!(out, "b_{{{i}}}"),
            CoeffVar::C(i) => write!(out, "c_{{{i}}}"),
            CoeffVar::A(i, j) => write!(out, "a_{{{i},{j}}}"),
        };
    }

    fn parse_prefix(text: &str) -> Option<(Self, usize)> {
        let kind = text.chars().next()?;
        if !matches!(kind, 'a' | 'b' | 'c') {
            return None;
        }
        let rest = text[1..].strip_prefix('[')?;
        let close = rest.find(']')?;
        let inner = &rest[..close];
        let index = |s: &str| -> Option<usize> {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || s.starts_with('0') {
                return None;
            }
            s.parse().ok()
        };
        let var = match kind {
            'a' => {
                let (i, j) = inner.split_once(',')?;
                CoeffVar::A(index(i)?, index(j)?)
            }
            'b' => CoeffVar::B(index(inner)?),
            _ => CoeffVar::C(index(inner)?),
        };
        Some((var, 2 + close + 1))
    }
}

impl fmt::Display for CoeffVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_plain(&mut s);
        f.write_str(&s)
    }
}

/// Power product of variables with positive exponents, sorted by variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial<V> {
    factors: Vec<(V, u32)>,
}

impl<V: Variable> Monomial<V> {
    pub fn one() -> Self {
        Monomial {
            factors: Vec::new(),
        }
    }

    pub fn var(v: V) -> Self {
        Monomial {
            factors: vec![(v, 1)],
        }
    }

    pub fn from_factors(factors: impl IntoIterator<Item = (V, u32)>) -> Self {
        let mut merged: BTreeMap<V, u32> = BTreeMap::new();
        for (v, e) in factors {
            *merged.entry(v).or_insert(0) += e;
        }
        Monomial {
            factors: merged.into_iter().filter(|&(_, e)| e > 0).collect(),
        }
    }

    pub fn factors(&self) -> &[(V, u32)] {
        &self.factors
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: &V) -> u32 {
        self.factors
            .binary_search_by(|(w, _)| w.cmp(v))
            .map_or(0, |k| self.factors[k].1)
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (a, ea) = &self.factors[i];
            let (b, eb) = &other.factors[j];
            match a.cmp(b) {
                Ordering::Less => {
                    out.push((a.clone(), *ea));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((b.clone(), *eb));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a.clone(), ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.factors[i..]);
        out.extend_from_slice(&other.factors[j..]);
        Monomial { factors: out }
    }

    /// Splits off the power of `v`: returns its exponent and the remaining monomial.
    fn split(&self, v: &V) -> (u32, Self) {
        match self.factors.binary_search_by(|(w, _)| w.cmp(v)) {
            Ok(k) => {
                let mut rest = self.factors.clone();
                let (_, e) = rest.remove(k);
                (e, Monomial { factors: rest })
            }
            Err(_) => (0, self.clone()),
        }
    }

    fn write(&self, style: RenderStyle, out: &mut String) {
        for (k, (v, e)) in self.factors.iter().enumerate() {
            if k > 0 {
                out.push_str(match style {
                    RenderStyle::Plain => "*",
                    RenderStyle::Latex => " ",
                });
            }
            match style {
                RenderStyle::Plain => {
                    v.write_plain(out);
                    if *e > 1 {
                        out.push_str(&format!("^{e}"));
                    }
                }
                RenderStyle::Latex => {
                    v.write_latex(out);
                    if *e > 1 {
                        out.push_str(&format!("^{{{e}}}"));
                    }
                }
            }
        }
    }
}

/// Graded order: lower total degree first; within a degree, the monomial
/// with the larger exponent on the earliest variable comes first.
impl<V: Variable> Ord for Monomial<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let mut lhs = self.factors.iter();
            let mut rhs = other.factors.iter();
            loop {
                match (lhs.next(), rhs.next()) {
                    (None, None) => return Ordering::Equal,
                    (Some(_), None) => return Ordering::Less,
                    (None, Some(_)) => return Ordering::Greater,
                    (Some((v1, e1)), Some((v2, e2))) => match v1.cmp(v2) {
                        Ordering::Equal => match e2.cmp(e1) {
                            Ordering::Equal => continue,
                            ord => return ord,
                        },
                        ord => return ord,
                    },
                }
            }
        })
    }
}

impl<V: Variable> PartialOrd for Monomial<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderStyle {
    Plain,
    Latex,
}

/// Sparse polynomial with exact rational coefficients; zero coefficients
/// are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial<V> {
    terms: BTreeMap<Monomial<V>, BigRational>,
}

/// Polynomial in the Butcher coefficients.
pub type CoeffPolynomial = Polynomial<CoeffVar>;

impl<V: Variable> Default for Polynomial<V> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<V: Variable> Polynomial<V> {
    pub fn zero() -> Self {
        Polynomial {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(r: BigRational) -> Self {
        Self::from_terms([(Monomial::one(), r)])
    }

    pub fn var(v: V) -> Self {
        Self::from_terms([(Monomial::var(v), BigRational::one())])
    }

    /// Sums the given terms, merging equal monomials and dropping zeros.
    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial<V>, BigRational)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial<V>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in rendering order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial<V>, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn variables(&self) -> BTreeSet<V> {
        self.terms
            .keys()
            .flat_map(|m| m.factors.iter().map(|(v, _)| v.clone()))
            .collect()
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * r)).collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Replaces bound variables by values; unbound variables stay symbolic.
    pub fn substitute(&self, binding: &BTreeMap<V, BigRational>) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, c)| {
            let mut coeff = c.clone();
            let mut rest = Vec::new();
            for (v, e) in &m.factors {
                match binding.get(v) {
                    Some(value) => coeff *= num_traits::pow(value.clone(), *e as usize),
                    None => rest.push((v.clone(), *e)),
                }
            }
            (Monomial { factors: rest }, coeff)
        }))
    }

    /// Replaces bound variables by polynomials.
    pub fn substitute_polys(&self, binding: &BTreeMap<V, Polynomial<V>>) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut term = Polynomial::from_terms([(Monomial::one(), c.clone())]);
            let mut rest = Vec::new();
            for (v, e) in &m.factors {
                match binding.get(v) {
                    Some(p) => term = &term * &p.pow(*e),
                    None => rest.push((v.clone(), *e)),
                }
            }
            term =
                &term * &Polynomial::from_terms([(Monomial { factors: rest }, BigRational::one())]);
            out = &out + &term;
        }
        out
    }

    /// The value of a polynomial without variables.
    pub fn evaluate_constant(&self) -> Result<BigRational, AlgebraError> {
        match self.terms.len() {
            0 => Ok(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().expect("one term");
                if m.is_one() {
                    Ok(c.clone())
                } else {
                    Err(self.free_variables_error())
                }
            }
            _ => Err(self.free_variables_error()),
        }
    }

    fn free_variables_error(&self) -> AlgebraError {
        let names: Vec<String> = self
            .variables()
            .iter()
            .map(|v| {
                let mut s = String::new();
                v.write_plain(&mut s);
                s
            })
            .collect();
        AlgebraError::FreeVariables(names.join(", "))
    }

    /// Evaluates with every variable bound by `value`.
    pub fn eval(&self, value: impl Fn(&V) -> BigRational) -> BigRational {
        let mut sum = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in &m.factors {
                t *= num_traits::pow(value(v), *e as usize);
            }
            sum += t;
        }
        sum
    }

    pub fn derivative(&self, v: &V) -> Self {
        Self::from_terms(self.terms.iter().filter_map(|(m, c)| {
            let (e, rest) = m.split(v);
            if e == 0 {
                return None;
            }
            let m = rest.mul(&Monomial {
                factors: if e > 1 {
                    vec![(v.clone(), e - 1)]
                } else {
                    vec![]
                },
            });
            Some((m, c * BigRational::from_integer(e.into())))
        }))
    }

    pub fn render(&self, style: RenderStyle) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let negative = c.is_negative();
            match (k, negative) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            let magnitude = c.abs();
            if m.is_one() || !magnitude.is_one() {
                out.push_str(&match style {
                    RenderStyle::Plain => format_rational(&magnitude),
                    RenderStyle::Latex => format_rational_latex(&magnitude),
                });
                if !m.is_one() {
                    out.push_str(match style {
                        RenderStyle::Plain => "*",
                        RenderStyle::Latex => " ",
                    });
                }
            }
            m.write(style, &mut out);
        }
        out
    }

    /// Parses the plain rendering; also accepts parentheses, repeated
    /// factors, and whitespace anywhere between tokens.
    pub fn parse(text: &str) -> Result<Self, AlgebraError> {
        let mut parser = PolyParser { text, pos: 0 };
        let p = parser.expr()?;
        parser.skip_ws();
        if parser.pos < text.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(p)
    }
}

impl<V: Variable> fmt::Display for Polynomial<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(RenderStyle::Plain))
    }
}

impl<V: Variable> From<BigRational> for Polynomial<V> {
    fn from(r: BigRational) -> Self {
        Self::constant(r)
    }
}

impl<'a, V: Variable> Add<&'a Polynomial<V>> for &'a Polynomial<V> {
    type Output = Polynomial<V>;

    fn add(self, rhs: &'a Polynomial<V>) -> Polynomial<V> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<'a, V: Variable> Sub<&'a Polynomial<V>> for &'a Polynomial<V> {
    type Output = Polynomial<V>;

    fn sub(self, rhs: &'a Polynomial<V>) -> Polynomial<V> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl<'a, V: Variable> Mul<&'a Polynomial<V>> for &'a Polynomial<V> {
    type Output = Polynomial<V>;

    fn mul(self, rhs: &'a Polynomial<V>) -> Polynomial<V> {
        let mut out = Polynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl<V: Variable> Neg for &Polynomial<V> {
    type Output = Polynomial<V>;

    fn neg(self) -> Polynomial<V> {
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl<V: Variable> Add for Polynomial<V> {
    type Output = Polynomial<V>;

    fn add(self, rhs: Self) -> Self {
        &self + &rhs
    }
}

impl<V: Variable> Sub for Polynomial<V> {
    type Output = Polynomial<V>;

    fn sub(self, rhs: Self) -> Self {
        &self - &rhs
    }
}

impl<V: Variable> Mul for Polynomial<V> {
    type Output = Polynomial<V>;

    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl<V: Variable> Neg for Polynomial<V> {
    type Output = Polynomial<V>;

    fn neg(self) -> Self {
        -&self
    }
}

struct PolyParser<'a> {
    text: &'a str,
    pos: usize,
}

impl PolyParser<'_> {
    fn error(&self, reason: impl Into<String>) -> AlgebraError {
        AlgebraError::MalformedPolynomial {
            pos: self.pos,
            reason: reason.into(),
        }
    }

    fn rest(&self) -> &str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr<V: Variable>(&mut self) -> Result<Polynomial<V>, AlgebraError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term<V: Variable>(&mut self) -> Result<Polynomial<V>, AlgebraError> {
        let mut acc = self.factor()?;
        while self.eat('*') {
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor<V: Variable>(&mut self) -> Result<Polynomial<V>, AlgebraError> {
        self.skip_ws();
        if self.eat('-') {
            return Ok(-self.factor()?);
        }
        let base = if self.eat('(') {
            let inner = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected ')'"));
            }
            inner
        } else if self.rest().starts_with(|c: char| c.is_ascii_digit()) {
            let len = self
                .rest()
                .find(|c: char| !(c.is_ascii_digit() || c == '/' || c == '.'))
                .unwrap_or(self.rest().len());
            let literal = &self.rest()[..len];
            let value = parse_rational(literal).map_err(|e| self.error(e.to_string()))?;
            self.pos += len;
            Polynomial::constant(value)
        } else if let Some((v, len)) = V::parse_prefix(self.rest()) {
            self.pos += len;
            Polynomial::var(v)
        } else if self.rest().is_empty() {
            return Err(self.error("unexpected end of input"));
        } else {
            return Err(self.error("expected a number, variable or '('"));
        };
        if self.eat('^') {
            self.skip_ws();
            let len = self
                .rest()
                .find(|c: char| !c.is_ascii_digit())
                .unwrap_or(self.rest().len());
            let e: u32 = self.rest()[..len]
                .parse()
                .map_err(|_| self.error("expected a nonnegative integer exponent"))?;
            self.pos += len;
            Ok(base.pow(e))
        } else {
            Ok(base)
        }
    }
}
