//! Finite sums of formal distributions in several formal variables.
//!
//! A term is a polynomial coefficient times a product of generator series
//! `a^(p)(v) = sum_s a^(p)(s) v^(-s-1)`, at most one per formal variable,
//! times a Laurent monomial. Coefficient extraction and residues are exact
//! on such finite sums, so no infinite series is ever materialised.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::diffpoly::{DiffPoly, DiffVar, Gen};
use crate::exactnum::{choose, fmt_rational, int, sign, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistError {
    #[error("two series in the same formal variable `{0}` within one term")]
    RepeatedSeries(FVar),
    #[error("coefficient index missing for formal variable `{0}`")]
    MissingIndex(FVar),
}

/// A formal variable such as `z`, `w` or `zeta`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FVar(Arc<str>);

impl FVar {
    pub fn new(name: &str) -> Self {
        FVar(Arc::from(name))
    }
}

impl From<&str> for FVar {
    fn from(s: &str) -> Self {
        FVar::new(s)
    }
}

impl fmt::Display for FVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for FVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

pub type Exponents = BTreeMap<FVar, i64>;

fn add_exps(a: &Exponents, b: &Exponents) -> Exponents {
    let mut out = a.clone();
    for (v, e) in b {
        let slot = out.entry(v.clone()).or_insert(0);
        *slot += e;
        if *slot == 0 {
            out.remove(v);
        }
    }
    out
}

/// Laurent polynomial with rational coefficients in formal variables.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Laurent {
    terms: BTreeMap<Exponents, Rational>,
}

impl Laurent {
    pub fn zero() -> Self {
        Laurent::default()
    }

    pub fn one() -> Self {
        Laurent::monomial(Exponents::new(), Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Laurent::monomial(Exponents::new(), c)
    }

    pub fn var(v: &FVar) -> Self {
        Laurent::power(v, 1)
    }

    /// `v^e`, any integer `e`.
    pub fn power(v: &FVar, e: i64) -> Self {
        let mut exps = Exponents::new();
        if e != 0 {
            exps.insert(v.clone(), e);
        }
        Laurent::monomial(exps, Rational::one())
    }

    pub fn monomial(exps: Exponents, c: Rational) -> Self {
        let mut l = Laurent::zero();
        l.add_term(exps, c);
        l
    }

    pub fn add_term(&mut self, mut exps: Exponents, c: Rational) {
        if c.is_zero() {
            return;
        }
        exps.retain(|_, e| *e != 0);
        let slot = self.terms.entry(exps.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&exps);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &Laurent) -> Laurent {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Laurent) -> Laurent {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> Laurent {
        let mut out = Laurent::zero();
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &Laurent) -> Laurent {
        let mut out = Laurent::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                out.add_term(add_exps(e1, e2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Laurent {
        (0..k).fold(Laurent::one(), |acc, _| acc.mul(self))
    }
}

impl fmt::Display for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (exps, c)) in self.terms.iter().enumerate() {
            let neg = c < &Rational::zero();
            let abs = if neg { -c } else { c.clone() };
            f.write_str(match (i, neg) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            })?;
            let mono = render_exps(exps);
            match (abs.is_one(), mono.is_empty()) {
                (_, true) => f.write_str(&fmt_rational(&abs))?,
                (true, false) => f.write_str(&mono)?,
                (false, false) => write!(f, "{}*{mono}", fmt_rational(&abs))?,
            }
        }
        Ok(())
    }
}

fn render_exps(exps: &Exponents) -> String {
    exps.iter()
        .map(|(v, e)| if *e == 1 { v.to_string() } else { format!("{v}^{e}") })
        .collect::<Vec<_>>()
        .join("*")
}

/// `(a - b)^n = sum_s (-1)^s C(n,s) a^(n-s) b^s`.
pub fn binom_power(a: &FVar, b: &FVar, n: u32) -> Laurent {
    let mut out = Laurent::zero();
    for s in 0..=n {
        let mut exps = Exponents::new();
        exps.insert(a.clone(), (n - s) as i64);
        exps.insert(b.clone(), s as i64);
        out.add_term(exps, int(&(sign(s as i64) * choose(n as u64, s as u64))));
    }
    out
}

/// Splits `(w - z)^(a+b) = (w - zeta)^a P + (zeta - z)^b Q` by expanding
/// `((w - zeta) + (zeta - z))^(a+b)`: the terms whose `(w - zeta)` power is at
/// least `a` go to `P`, the rest to `Q`.
pub fn binom_split(w: &FVar, z: &FVar, zeta: &FVar, a: u32, b: u32) -> (Laurent, Laurent) {
    let n = a + b;
    let left = Laurent::var(w).sub(&Laurent::var(zeta));
    let right = Laurent::var(zeta).sub(&Laurent::var(z));
    let mut p = Laurent::zero();
    let mut q = Laurent::zero();
    for j in 0..=n {
        let c = int(&choose(n as u64, j as u64));
        if j >= a {
            p = p.add(&left.pow(j - a).mul(&right.pow(n - j)).scale(&c));
        } else {
            q = q.add(&left.pow(j).mul(&right.pow(n - j - b)).scale(&c));
        }
    }
    (p, q)
}

/// The product of series and the Laurent monomial of one term.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct TermShape {
    pub series: BTreeMap<FVar, (Gen, u32)>,
    pub exps: Exponents,
}

/// A finite sum of `coefficient * series product * Laurent monomial` terms
/// with coefficients in the differential polynomial ring.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Distribution {
    terms: BTreeMap<TermShape, DiffPoly>,
}

impl Distribution {
    pub fn zero() -> Self {
        Distribution::default()
    }

    /// The distribution with a single variable-free term.
    pub fn constant(c: DiffPoly) -> Self {
        let mut d = Distribution::zero();
        d.add_term(TermShape::default(), c);
        d
    }

    /// `gen^(p)(v)`.
    pub fn series(gen: impl Into<Gen>, p: u32, v: &FVar) -> Self {
        let mut shape = TermShape::default();
        shape.series.insert(v.clone(), (gen.into(), p));
        let mut d = Distribution::zero();
        d.add_term(shape, DiffPoly::one());
        d
    }

    pub fn add_term(&mut self, shape: TermShape, c: DiffPoly) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&shape) {
            Some(slot) => {
                *slot = &*slot + &c;
                if slot.is_zero() {
                    self.terms.remove(&shape);
                }
            }
            None => {
                self.terms.insert(shape, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermShape, &DiffPoly)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Every formal variable mentioned by a series or an exponent.
    pub fn vars(&self) -> BTreeSet<FVar> {
        self.terms
            .keys()
            .flat_map(|s| s.series.keys().chain(s.exps.keys()).cloned())
            .collect()
    }

    pub fn add(&self, other: &Distribution) -> Distribution {
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(s.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Distribution) -> Distribution {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> Distribution {
        let mut out = Distribution::zero();
        for (s, v) in &self.terms {
            out.add_term(s.clone(), v.scale(c));
        }
        out
    }

    pub fn mul_laurent(&self, l: &Laurent) -> Distribution {
        let mut out = Distribution::zero();
        for (shape, c) in &self.terms {
            for (exps, lc) in l.terms() {
                let s = TermShape { series: shape.series.clone(), exps: add_exps(&shape.exps, exps) };
                out.add_term(s, c.scale(lc));
            }
        }
        out
    }

    /// Product of distributions. Two series in one variable is an error.
    pub fn mul(&self, other: &Distribution) -> Result<Distribution, DistError> {
        let mut out = Distribution::zero();
        for (s1, c1) in &self.terms {
            for (s2, c2) in &other.terms {
                let mut series = s1.series.clone();
                for (v, g) in &s2.series {
                    if series.insert(v.clone(), g.clone()).is_some() {
                        return Err(DistError::RepeatedSeries(v.clone()));
                    }
                }
                out.add_term(TermShape { series, exps: add_exps(&s1.exps, &s2.exps) }, c1 * c2);
            }
        }
        Ok(out)
    }

    /// Coefficient-wise derivation: each series raises its derivative order
    /// (Leibniz over the series factors) and the polynomial coefficient is
    /// differentiated too. Laurent exponents are untouched.
    pub fn derive(&self) -> Distribution {
        let mut out = Distribution::zero();
        for (shape, c) in &self.terms {
            out.add_term(shape.clone(), c.derive());
            for (v, (g, p)) in &shape.series {
                let mut s = shape.clone();
                s.series.insert(v.clone(), (g.clone(), p + 1));
                out.add_term(s, c.clone());
            }
        }
        out
    }

    /// The coefficient at `prod_v v^(-idx[v]-1)`.
    pub fn coefficient(&self, idx: &BTreeMap<FVar, i64>) -> Result<DiffPoly, DistError> {
        for v in self.vars() {
            if !idx.contains_key(&v) {
                return Err(DistError::MissingIndex(v));
            }
        }
        let mut out = DiffPoly::zero();
        'terms: for (shape, c) in &self.terms {
            let mut value = c.clone();
            for (v, &k) in idx {
                let e = shape.exps.get(v).copied().unwrap_or(0);
                match shape.series.get(v) {
                    Some((g, p)) => value = &value * &DiffPoly::var(DiffVar::new(g.clone(), *p, k + e)),
                    None if e == -k - 1 => {}
                    None => continue 'terms,
                }
            }
            out = &out + &value;
        }
        Ok(out)
    }

    /// Residue in `v`: the coefficient at `v^(-1)`, as a distribution in the
    /// remaining variables.
    pub fn residue(&self, v: &FVar) -> Distribution {
        let mut out = Distribution::zero();
        for (shape, c) in &self.terms {
            let e = shape.exps.get(v).copied().unwrap_or(0);
            let mut s = shape.clone();
            s.exps.remove(v);
            match s.series.remove(v) {
                Some((g, p)) => out.add_term(s, c * &DiffPoly::var(DiffVar::new(g, p, e))),
                None if e == -1 => out.add_term(s, c.clone()),
                None => {}
            }
        }
        out
    }
}

fn render_series(g: &Gen, p: u32, v: &FVar) -> String {
    match p {
        0 => format!("{g}({v})"),
        1 => format!("{g}'({v})"),
        2 => format!("{g}''({v})"),
        _ => format!("{g}^({p})({v})"),
    }
}

impl fmt::Display for Distribution {
    /// Renders as `(c)*a''(zeta)*x(w)*y(z)*w^2*z`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (shape, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let mut parts: Vec<String> = Vec::new();
            if *c != DiffPoly::one() {
                parts.push(format!("({c})"));
            }
            parts.extend(shape.series.iter().map(|(v, (g, p))| render_series(g, *p, v)));
            let mono = render_exps(&shape.exps);
            if !mono.is_empty() {
                parts.push(mono);
            }
            if parts.is_empty() {
                parts.push("1".into());
            }
            f.write_str(&parts.join("*"))?;
        }
        Ok(())
    }
}
