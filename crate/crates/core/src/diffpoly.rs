//! The differential polynomial algebra in the variables `a^(p)(n)`.
//!
//! A variable carries a generator name, a derivative order `p >= 0` and an
//! integer index `n`. The derivation raises `p` by one, the weight of a
//! variable is `p - 1`, and the Novikov product is `f o g = d(f) g`.
//! Index-free polynomials (free Novikov algebra on letters) pin `n = 0`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::exactnum::{fmt_rational, rat, Rational};

/// Largest index magnitude the kernel is meant to handle.
pub const INDEX_RANGE: i64 = 1_000_000;

/// Opaque generator identifier, ordered by name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Gen(Arc<str>);

impl Gen {
    pub fn new(name: &str) -> Self {
        Gen(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Gen {
    fn from(s: &str) -> Self {
        Gen::new(s)
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// The variable `gen^(p)(n)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct DiffVar {
    pub gen: Gen,
    pub p: u32,
    pub n: i64,
}

impl DiffVar {
    pub fn new(gen: impl Into<Gen>, p: u32, n: i64) -> Self {
        DiffVar { gen: gen.into(), p, n }
    }

    pub fn weight(&self) -> i64 {
        self.p as i64 - 1
    }

    pub fn derived(&self) -> DiffVar {
        DiffVar { gen: self.gen.clone(), p: self.p + 1, n: self.n }
    }
}

impl fmt::Display for DiffVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^({})({})", self.gen, self.p, self.n)
    }
}

/// A commutative monomial: a sorted multiset of variables.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial(Vec<DiffVar>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn from_vars(mut vars: Vec<DiffVar>) -> Self {
        vars.sort();
        Monomial(vars)
    }

    pub fn var(v: DiffVar) -> Self {
        Monomial(vec![v])
    }

    pub fn factors(&self) -> &[DiffVar] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> i64 {
        self.0.iter().map(DiffVar::weight).sum()
    }

    pub fn index_sum(&self) -> i64 {
        self.0.iter().map(|v| v.n).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            if self.0[i] <= other.0[j] {
                out.push(self.0[i].clone());
                i += 1;
            } else {
                out.push(other.0[j].clone());
                j += 1;
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Leibniz: `d(v1...vk) = sum_i v1..d(vi)..vk`, one entry per factor.
    fn derive(&self) -> Vec<Monomial> {
        (0..self.0.len())
            .map(|i| {
                let mut vars = self.0.clone();
                vars[i] = vars[i].derived();
                Monomial::from_vars(vars)
            })
            .collect()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let mut i = 0;
        let mut first = true;
        while i < self.0.len() {
            let mut k = 1;
            while i + k < self.0.len() && self.0[i + k] == self.0[i] {
                k += 1;
            }
            if !first {
                f.write_str("*")?;
            }
            write!(f, "{}", self.0[i])?;
            if k > 1 {
                write!(f, "^{k}")?;
            }
            first = false;
            i += k;
        }
        Ok(())
    }
}

/// Result of asking for the weight of a polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    /// The zero polynomial lies in every graded piece.
    Any,
    Homogeneous(i64),
    Mixed,
}

impl Weight {
    pub fn value(self) -> Option<i64> {
        match self {
            Weight::Homogeneous(w) => Some(w),
            _ => None,
        }
    }
}

/// Element of the polynomial ring: monomial -> nonzero coefficient.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct DiffPoly {
    terms: BTreeMap<Monomial, Rational>,
}

impl DiffPoly {
    pub fn zero() -> Self {
        DiffPoly::default()
    }

    pub fn one() -> Self {
        DiffPoly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        DiffPoly::term(Monomial::one(), c)
    }

    pub fn var(v: DiffVar) -> Self {
        DiffPoly::term(Monomial::var(v), Rational::one())
    }

    /// Shorthand for the variable `gen^(p)(n)`.
    pub fn x(gen: &str, p: u32, n: i64) -> Self {
        DiffPoly::var(DiffVar::new(gen, p, n))
    }

    pub fn term(m: Monomial, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        DiffPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &DiffPoly, c: &Rational) {
        if c.is_zero() {
            return;
        }
        for (m, v) in &other.terms {
            self.add_term(m.clone(), v * c);
        }
    }

    pub fn scale(&self, c: &Rational) -> DiffPoly {
        if c.is_zero() {
            return DiffPoly::zero();
        }
        DiffPoly { terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }

    pub fn mul_monomial(&self, u: &Monomial) -> DiffPoly {
        DiffPoly { terms: self.terms.iter().map(|(m, v)| (m.mul(u), v.clone())).collect() }
    }

    pub fn pow(&self, k: u32) -> DiffPoly {
        (0..k).fold(DiffPoly::one(), |acc, _| &acc * self)
    }

    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// The derivation `d(a^(p)(n)) = a^(p+1)(n)`, extended by Leibniz.
    pub fn derive(&self) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m, c) in &self.terms {
            for dm in m.derive() {
                out.add_term(dm, c.clone());
            }
        }
        out
    }

    pub fn derive_n(&self, s: u32) -> DiffPoly {
        (0..s).fold(self.clone(), |acc, _| acc.derive())
    }

    pub fn weight(&self) -> Weight {
        let mut ws = self.terms.keys().map(Monomial::weight);
        match ws.next() {
            None => Weight::Any,
            Some(w) => {
                if ws.all(|v| v == w) {
                    Weight::Homogeneous(w)
                } else {
                    Weight::Mixed
                }
            }
        }
    }

    /// `f o g = d(f) g`.
    pub fn novikov_product(&self, g: &DiffPoly) -> DiffPoly {
        &self.derive() * g
    }

    /// Smallest and largest index appearing in any variable.
    pub fn index_span(&self) -> Option<(i64, i64)> {
        let mut it = self.terms.keys().flat_map(|m| m.factors().iter().map(|v| v.n));
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), n| (lo.min(n), hi.max(n))))
    }
}

impl From<DiffVar> for DiffPoly {
    fn from(v: DiffVar) -> Self {
        DiffPoly::var(v)
    }
}

impl Add for &DiffPoly {
    type Output = DiffPoly;
    fn add(self, rhs: &DiffPoly) -> DiffPoly {
        let mut out = self.clone();
        out.add_scaled(rhs, &Rational::one());
        out
    }
}

impl Sub for &DiffPoly {
    type Output = DiffPoly;
    fn sub(self, rhs: &DiffPoly) -> DiffPoly {
        let mut out = self.clone();
        out.add_scaled(rhs, &-Rational::one());
        out
    }
}

impl Neg for &DiffPoly {
    type Output = DiffPoly;
    fn neg(self) -> DiffPoly {
        self.scale(&-Rational::one())
    }
}

impl Mul for &DiffPoly {
    type Output = DiffPoly;
    fn mul(self, rhs: &DiffPoly) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for DiffPoly {
            type Output = DiffPoly;
            fn $m(self, rhs: DiffPoly) -> DiffPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for DiffPoly {
    /// Renders as `3/2*x^(2)(0)*y^(0)(1) - z^(0)(0)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c < &Rational::zero();
            let abs = if neg { -c } else { c.clone() };
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if m.is_one() {
                f.write_str(&fmt_rational(&abs))?;
            } else if abs == Rational::one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", fmt_rational(&abs))?;
            }
        }
        Ok(())
    }
}

/// Residuals of the two Novikov identities under `f o g = d(f) g`.
#[derive(Debug, Clone, PartialEq)]
pub struct NovikovReport {
    /// `(f o g) o h - f o (g o h) - (f o h) o g + f o (h o g)`
    pub right_symmetry: DiffPoly,
    /// `f o (g o h) - g o (f o h)`
    pub left_commutativity: DiffPoly,
}

impl NovikovReport {
    pub fn holds(&self) -> bool {
        self.right_symmetry.is_zero() && self.left_commutativity.is_zero()
    }
}

pub fn check_novikov_axioms(f: &DiffPoly, g: &DiffPoly, h: &DiffPoly) -> NovikovReport {
    let assoc = |a: &DiffPoly, b: &DiffPoly, c: &DiffPoly| {
        &a.novikov_product(b).novikov_product(c) - &a.novikov_product(&b.novikov_product(c))
    };
    let right_symmetry = &assoc(f, g, h) - &assoc(f, h, g);
    let left_commutativity =
        &f.novikov_product(&g.novikov_product(h)) - &g.novikov_product(&f.novikov_product(h));
    NovikovReport { right_symmetry, left_commutativity }
}

/// Integer-coefficient convenience constructor used in tests and examples.
pub fn poly_from(terms: &[(i64, &[(&str, u32, i64)])]) -> DiffPoly {
    let mut out = DiffPoly::zero();
    for (c, vars) in terms {
        let m = Monomial::from_vars(vars.iter().map(|&(g, p, n)| DiffVar::new(g, p, n)).collect());
        out.add_term(m, rat(*c));
    }
    out
}
