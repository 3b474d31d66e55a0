//! The coefficient algebra of a presented conformal algebra.
//!
//! Elements are finite combinations of symbols `g(n)`; every `del` is
//! eliminated on injection, so equality is map equality.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::confalg::{n_product, ConfElement, ConfError, ConfPresentation, OpPoly, Sym};
use crate::diffpoly::Gen;
use crate::exactnum::{falling, fmt_rational, generalized_binomial, int, rat, sign, Rational};
use crate::sampling::small_rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoeffError {
    #[error("coefficient contains bracket variable `{0}`")]
    BracketVariable(Sym),
    #[error(transparent)]
    Conf(#[from] ConfError),
}

#[derive(Clone, PartialEq, Eq, Default, PartialOrd, Ord)]
pub struct CoeffElement {
    terms: BTreeMap<(Gen, i64), Rational>,
}

impl CoeffElement {
    pub fn zero() -> Self {
        CoeffElement::default()
    }

    pub fn symbol(g: impl Into<Gen>, n: i64) -> Self {
        let mut e = CoeffElement::zero();
        e.add_term(g.into(), n, Rational::one());
        e
    }

    pub fn add_term(&mut self, g: Gen, n: i64, c: Rational) {
        if c.is_zero() {
            return;
        }
        let key = (g, n);
        let slot = self.terms.entry(key.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, g: &Gen, n: i64) -> Rational {
        self.terms.get(&(g.clone(), n)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Gen, i64), &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &CoeffElement) -> CoeffElement {
        let mut out = self.clone();
        for ((g, n), c) in &other.terms {
            out.add_term(g.clone(), *n, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &CoeffElement) -> CoeffElement {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> CoeffElement {
        let mut out = CoeffElement::zero();
        for ((g, n), v) in &self.terms {
            out.add_term(g.clone(), *n, v * c);
        }
        out
    }
}

impl fmt::Display for CoeffElement {
    /// Renders as `v2(-1) - 3*x(4)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, ((g, n), c)) in self.terms.iter().enumerate() {
            let neg = c < &Rational::zero();
            let abs = if neg { -c } else { c.clone() };
            f.write_str(match (i, neg) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            })?;
            if !abs.is_one() {
                write!(f, "{}*", fmt_rational(&abs))?;
            }
            write!(f, "{g}({n})")?;
        }
        Ok(())
    }
}

impl fmt::Debug for CoeffElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for CoeffElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `u(n)`, with `(del^j g)(n) = (-1)^j falling(n, j) g(n - j)`.
pub fn inject(a: &ConfPresentation, u: &ConfElement, n: i64) -> Result<CoeffElement, CoeffError> {
    let mut out = CoeffElement::zero();
    for (g, poly) in u.iter() {
        if !a.has_generator(g) {
            return Err(ConfError::UnknownGenerator(g.clone()).into());
        }
        if let Err(sym) = poly.only_uses(&[Sym::Del]) {
            return Err(CoeffError::BracketVariable(sym));
        }
        let deg = poly.degree_in(&Sym::Del).unwrap_or(0);
        for j in 0..=deg {
            let c = poly.coeff_of(&Sym::Del, j).constant_term();
            if c.is_zero() {
                continue;
            }
            let factor = int(&(sign(j as i64) * falling(n, j)));
            out.add_term(g.clone(), n - j as i64, c * factor);
        }
    }
    Ok(out)
}

/// Caches the nonzero `s`-products of generator pairs.
struct ProductTable<'a> {
    algebra: &'a ConfPresentation,
    cache: RefCell<BTreeMap<(Gen, Gen), Vec<ConfElement>>>,
}

impl<'a> ProductTable<'a> {
    fn new(algebra: &'a ConfPresentation) -> Self {
        ProductTable { algebra, cache: RefCell::new(BTreeMap::new()) }
    }

    fn products(&self, g: &Gen, h: &Gen) -> Result<Vec<ConfElement>, CoeffError> {
        let key = (g.clone(), h.clone());
        if let Some(hit) = self.cache.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let (eg, eh) = (ConfElement::gen(g.clone()), ConfElement::gen(h.clone()));
        let deg = self.algebra.table(g, h).and_then(|v| v.degree_in(&Sym::lam()));
        let mut list = Vec::new();
        if let Some(d) = deg {
            for s in 0..=d {
                list.push(n_product(self.algebra, &eg, &eh, s)?);
            }
        }
        self.cache.borrow_mut().insert(key, list.clone());
        Ok(list)
    }

    fn product(&self, x: &CoeffElement, y: &CoeffElement) -> Result<CoeffElement, CoeffError> {
        let algebra = self.algebra;
        let mut out = CoeffElement::zero();
        for ((g, n), c1) in x.terms() {
            for ((h, m), c2) in y.terms() {
                let products = self.products(g, h)?;
                let c = c1 * c2;
                for (s, p) in products.iter().enumerate() {
                    if p.is_zero() {
                        continue;
                    }
                    let binom = generalized_binomial(*n, s as u32);
                    if binom.is_zero() {
                        continue;
                    }
                    let injected = inject(algebra, p, n + m - s as i64)?;
                    out = out.add(&injected.scale(&(&c * binom)));
                }
            }
        }
        Ok(out)
    }
}

/// `g(n) h(m) = sum_s C(n, s) (g_(s) h)(n + m - s)`, extended bilinearly.
pub fn product(a: &ConfPresentation, x: &CoeffElement, y: &CoeffElement) -> Result<CoeffElement, CoeffError> {
    ProductTable::new(a).product(x, y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalityWitness {
    pub n: i64,
    pub m: i64,
    pub residual: CoeffElement,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalityReport {
    pub checked: usize,
    pub failures: Vec<LocalityWitness>,
}

impl LocalityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `sum_s (-1)^s C(N, s) g(n - s) h(m + s)` for all `n, m` in `lo..=hi`.
pub fn check_locality_relations(
    a: &ConfPresentation,
    g: &Gen,
    h: &Gen,
    big_n: u32,
    lo: i64,
    hi: i64,
) -> Result<LocalityReport, CoeffError> {
    let table = ProductTable::new(a);
    let mut failures = Vec::new();
    let mut checked = 0;
    for n in lo..=hi {
        for m in lo..=hi {
            let mut residual = CoeffElement::zero();
            for s in 0..=big_n {
                let c = rat(if s % 2 == 0 { 1 } else { -1 }) * int(&crate::exactnum::choose(big_n as u64, s as u64));
                let term = table.product(
                    &CoeffElement::symbol(g.clone(), n - s as i64),
                    &CoeffElement::symbol(h.clone(), m + s as i64),
                )?;
                residual = residual.add(&term.scale(&c));
            }
            checked += 1;
            if !residual.is_zero() {
                failures.push(LocalityWitness { n, m, residual });
            }
        }
    }
    Ok(LocalityReport { checked, failures })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffIdentity {
    Novikov,
    Commutative,
    Associative,
    Lie,
}

impl CoeffIdentity {
    pub fn name(self) -> &'static str {
        match self {
            CoeffIdentity::Novikov => "novikov",
            CoeffIdentity::Commutative => "commutative",
            CoeffIdentity::Associative => "associative",
            CoeffIdentity::Lie => "lie",
        }
    }
}

impl std::str::FromStr for CoeffIdentity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [CoeffIdentity::Novikov, CoeffIdentity::Commutative, CoeffIdentity::Associative, CoeffIdentity::Lie]
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| format!("unknown coefficient identity `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffFailure {
    pub relation: &'static str,
    pub args: [CoeffElement; 3],
    pub residual: CoeffElement,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffIdentityReport {
    pub identity: CoeffIdentity,
    pub samples: usize,
    pub failures: Vec<CoeffFailure>,
}

impl CoeffIdentityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Random combination of one or two symbols with indices in `lo..=hi`.
pub fn random_coeff<R: Rng>(rng: &mut R, a: &ConfPresentation, lo: i64, hi: i64) -> CoeffElement {
    let mut out = CoeffElement::zero();
    let gens = a.generators();
    if gens.is_empty() {
        return out;
    }
    for _ in 0..rng.gen_range(1..=2) {
        let g = gens[rng.gen_range(0..gens.len())].clone();
        out.add_term(g, rng.gen_range(lo..=hi), small_rational(rng));
    }
    out
}

/// Evaluates `which` on `samples` random triples with indices in `lo..=hi`.
pub fn check_coeff_identities<R: Rng>(
    a: &ConfPresentation,
    which: CoeffIdentity,
    samples: usize,
    lo: i64,
    hi: i64,
    rng: &mut R,
) -> Result<CoeffIdentityReport, CoeffError> {
    let table = ProductTable::new(a);
    let mut failures = Vec::new();
    for _ in 0..samples {
        let x = random_coeff(rng, a, lo, hi);
        let y = random_coeff(rng, a, lo, hi);
        let z = random_coeff(rng, a, lo, hi);
        let p = |l: &CoeffElement, r: &CoeffElement| table.product(l, r);
        let relations: Vec<(&'static str, CoeffElement)> = match which {
            CoeffIdentity::Novikov => {
                let xy_z = p(&p(&x, &y)?, &z)?;
                let x_yz = p(&x, &p(&y, &z)?)?;
                let xz_y = p(&p(&x, &z)?, &y)?;
                let x_zy = p(&x, &p(&z, &y)?)?;
                let y_xz = p(&y, &p(&x, &z)?)?;
                vec![
                    ("right_symmetry", xy_z.sub(&x_yz).sub(&xz_y.sub(&x_zy))),
                    ("left_commutativity", x_yz.sub(&y_xz)),
                ]
            }
            CoeffIdentity::Commutative => vec![("commutativity", p(&x, &y)?.sub(&p(&y, &x)?))],
            CoeffIdentity::Associative => vec![("associativity", p(&p(&x, &y)?, &z)?.sub(&p(&x, &p(&y, &z)?)?))],
            CoeffIdentity::Lie => {
                let jac = p(&x, &p(&y, &z)?)?.sub(&p(&y, &p(&x, &z)?)?).sub(&p(&p(&x, &y)?, &z)?);
                vec![("anticommutativity", p(&x, &y)?.add(&p(&y, &x)?)), ("jacobi", jac)]
            }
        };
        for (relation, residual) in relations {
            if !residual.is_zero() {
                failures.push(CoeffFailure { relation, args: [x.clone(), y.clone(), z.clone()], residual });
            }
        }
    }
    Ok(CoeffIdentityReport { identity: which, samples, failures })
}

/// Helper for tests and reports: the element `del^j g` of the conformal algebra.
pub fn partial_power(g: impl Into<Gen>, j: u32) -> ConfElement {
    ConfElement::term(g, OpPoly::del().pow(j))
}
