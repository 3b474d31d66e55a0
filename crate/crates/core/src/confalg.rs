//! Finitely presented conformal algebras and lambda-bracket calculus.
//!
//! Elements live in the free `k[del]`-module over named generators. All
//! operator symbols (`del`, `lam`, `mu`, fresh bracket variables) commute, so
//! coefficients are ordinary multivariate polynomials and the substitution
//! `lam -> -del - mu` is polynomial substitution.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::diffpoly::Gen;
use crate::exactnum::{factorial, fmt_rational, int, rat, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(Gen),
    #[error("duplicate generator `{0}`")]
    DuplicateGenerator(Gen),
    #[error("symbol `{sym}` is not allowed in {context}")]
    ForeignSymbol { sym: Sym, context: String },
    #[error("derivation image does not close under the bracket at pair ({0}, {1})")]
    Closure(Gen, Gen),
    #[error("Novikov-Poisson axiom {axiom} fails on basis triple {triple:?}")]
    NpAxiom { axiom: NpAxiom, triple: (usize, usize, usize) },
    #[error("structure constants have dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
}

/// A commuting operator symbol.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sym {
    Del,
    Var(Arc<str>),
}

/// Bracket variable used by tables and by the identity checkers.
pub const LAM: &str = "lam";
pub const MU: &str = "mu";
const FRESH: &str = "#t";
const FRESH_N: &str = "#n";

impl Sym {
    pub fn var(name: &str) -> Self {
        Sym::Var(Arc::from(name))
    }

    pub fn lam() -> Self {
        Sym::var(LAM)
    }

    pub fn mu() -> Self {
        Sym::var(MU)
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::Del => f.write_str("del"),
            Sym::Var(v) => f.write_str(v),
        }
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

type OpMono = BTreeMap<Sym, u32>;

/// Polynomial in commuting operator symbols with rational coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct OpPoly {
    terms: BTreeMap<OpMono, Rational>,
}

impl OpPoly {
    pub fn zero() -> Self {
        OpPoly::default()
    }

    pub fn one() -> Self {
        OpPoly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = OpPoly::zero();
        p.add_term(OpMono::new(), c);
        p
    }

    pub fn int(c: i64) -> Self {
        OpPoly::constant(rat(c))
    }

    pub fn sym(s: &Sym) -> Self {
        let mut m = OpMono::new();
        m.insert(s.clone(), 1);
        let mut p = OpPoly::zero();
        p.add_term(m, Rational::one());
        p
    }

    pub fn del() -> Self {
        OpPoly::sym(&Sym::Del)
    }

    pub fn lam() -> Self {
        OpPoly::sym(&Sym::lam())
    }

    pub fn mu() -> Self {
        OpPoly::sym(&Sym::mu())
    }

    fn add_term(&mut self, m: OpMono, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &OpPoly) -> OpPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &OpPoly) -> OpPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> OpPoly {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, c: &Rational) -> OpPoly {
        let mut out = OpPoly::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &OpPoly) -> OpPoly {
        let mut out = OpPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                for (s, e) in m2 {
                    *m.entry(s.clone()).or_insert(0) += e;
                }
                out.add_term(m, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> OpPoly {
        (0..k).fold(OpPoly::one(), |acc, _| acc.mul(self))
    }

    /// Replaces every occurrence of `s` by `by`.
    pub fn subst(&self, s: &Sym, by: &OpPoly) -> OpPoly {
        let mut powers: Vec<OpPoly> = vec![OpPoly::one()];
        let mut out = OpPoly::zero();
        for (m, c) in &self.terms {
            let mut rest = m.clone();
            let k = rest.remove(s).unwrap_or(0) as usize;
            while powers.len() <= k {
                let next = powers.last().unwrap().mul(by);
                powers.push(next);
            }
            let mut base = OpPoly::zero();
            base.add_term(rest, c.clone());
            out = out.add(&base.mul(&powers[k]));
        }
        out
    }

    pub fn degree_in(&self, s: &Sym) -> Option<u32> {
        self.terms.keys().map(|m| m.get(s).copied().unwrap_or(0)).max()
    }

    /// Coefficient of `s^k`, as a polynomial in the remaining symbols.
    pub fn coeff_of(&self, s: &Sym, k: u32) -> OpPoly {
        let mut out = OpPoly::zero();
        for (m, c) in &self.terms {
            if m.get(s).copied().unwrap_or(0) == k {
                let mut rest = m.clone();
                rest.remove(s);
                out.add_term(rest, c.clone());
            }
        }
        out
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Sym> {
        self.terms.keys().flat_map(|m| m.keys())
    }

    pub fn only_uses(&self, allowed: &[Sym]) -> Result<(), Sym> {
        match self.symbols().find(|s| !allowed.contains(s)) {
            Some(s) => Err(s.clone()),
            None => Ok(()),
        }
    }

    /// Coefficient of the empty monomial.
    pub fn constant_term(&self) -> Rational {
        self.terms.get(&OpMono::new()).cloned().unwrap_or_else(Rational::zero)
    }
}

impl fmt::Display for OpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c < &Rational::zero();
            let abs = if neg { -c } else { c.clone() };
            f.write_str(match (i, neg) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            })?;
            let mono = m
                .iter()
                .map(|(s, e)| if *e == 1 { s.to_string() } else { format!("{s}^{e}") })
                .collect::<Vec<_>>()
                .join("*");
            match (abs.is_one(), mono.is_empty()) {
                (_, true) => f.write_str(&fmt_rational(&abs))?,
                (true, false) => f.write_str(&mono)?,
                (false, false) => write!(f, "{}*{mono}", fmt_rational(&abs))?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for OpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Element of the free `k[del]`-module, possibly with bracket variables in
/// its coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct ConfElement {
    coeffs: BTreeMap<Gen, OpPoly>,
}

impl ConfElement {
    pub fn zero() -> Self {
        ConfElement::default()
    }

    pub fn gen(g: impl Into<Gen>) -> Self {
        ConfElement::term(g, OpPoly::one())
    }

    pub fn term(g: impl Into<Gen>, c: OpPoly) -> Self {
        let mut e = ConfElement::zero();
        e.add_term(g.into(), c);
        e
    }

    pub fn add_term(&mut self, g: Gen, c: OpPoly) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(g.clone()).or_default();
        *slot = slot.add(&c);
        if slot.is_zero() {
            self.coeffs.remove(&g);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, g: &Gen) -> OpPoly {
        self.coeffs.get(g).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Gen, &OpPoly)> {
        self.coeffs.iter()
    }

    pub fn add(&self, other: &ConfElement) -> ConfElement {
        let mut out = self.clone();
        for (g, c) in &other.coeffs {
            out.add_term(g.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &ConfElement) -> ConfElement {
        self.add(&other.scale(&OpPoly::int(-1)))
    }

    /// Multiplies every coefficient by `c`.
    pub fn scale(&self, c: &OpPoly) -> ConfElement {
        self.map(|p| p.mul(c))
    }

    pub fn partial(&self) -> ConfElement {
        self.scale(&OpPoly::del())
    }

    pub fn subst(&self, s: &Sym, by: &OpPoly) -> ConfElement {
        self.map(|p| p.subst(s, by))
    }

    pub fn map(&self, f: impl Fn(&OpPoly) -> OpPoly) -> ConfElement {
        let mut out = ConfElement::zero();
        for (g, c) in &self.coeffs {
            out.add_term(g.clone(), f(c));
        }
        out
    }

    pub fn degree_in(&self, s: &Sym) -> Option<u32> {
        self.coeffs.values().filter_map(|c| c.degree_in(s)).max()
    }

    pub fn coeff_of(&self, s: &Sym, k: u32) -> ConfElement {
        self.map(|p| p.coeff_of(s, k))
    }

    pub fn only_uses(&self, allowed: &[Sym]) -> Result<(), Sym> {
        self.coeffs.values().try_for_each(|c| c.only_uses(allowed))
    }
}

impl fmt::Display for ConfElement {
    /// Renders as `(2*del*lam + del^2 + lam^2)*v2 + x`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        for (i, (g, c)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if *c == OpPoly::one() {
                write!(f, "{g}")?;
            } else {
                write!(f, "({c})*{g}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ConfElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Generators plus a lambda-bracket table in `del` and `lam`. Missing pairs
/// bracket to zero.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ConfPresentation {
    generators: Vec<Gen>,
    bracket: BTreeMap<(Gen, Gen), ConfElement>,
}

impl ConfPresentation {
    pub fn new<I, G>(generators: I) -> Result<Self, ConfError>
    where
        I: IntoIterator<Item = G>,
        G: Into<Gen>,
    {
        let mut gens: Vec<Gen> = Vec::new();
        for g in generators {
            let g = g.into();
            if gens.contains(&g) {
                return Err(ConfError::DuplicateGenerator(g));
            }
            gens.push(g);
        }
        Ok(ConfPresentation { generators: gens, bracket: BTreeMap::new() })
    }

    pub fn generators(&self) -> &[Gen] {
        &self.generators
    }

    pub fn has_generator(&self, g: &Gen) -> bool {
        self.generators.contains(g)
    }

    pub fn set_bracket(&mut self, a: impl Into<Gen>, b: impl Into<Gen>, value: ConfElement) -> Result<(), ConfError> {
        let (a, b) = (a.into(), b.into());
        for g in [&a, &b].into_iter().chain(value.iter().map(|(g, _)| g)) {
            if !self.has_generator(g) {
                return Err(ConfError::UnknownGenerator(g.clone()));
            }
        }
        value
            .only_uses(&[Sym::Del, Sym::lam()])
            .map_err(|sym| ConfError::ForeignSymbol { sym, context: format!("bracket table entry ({a}, {b})") })?;
        if value.is_zero() {
            self.bracket.remove(&(a, b));
        } else {
            self.bracket.insert((a, b), value);
        }
        Ok(())
    }

    /// Table value of `(a lam b)` for generators.
    pub fn table(&self, a: &Gen, b: &Gen) -> Option<&ConfElement> {
        self.bracket.get(&(a.clone(), b.clone()))
    }

    pub fn table_entries(&self) -> impl Iterator<Item = (&(Gen, Gen), &ConfElement)> {
        self.bracket.iter()
    }

    fn check_element(&self, u: &ConfElement) -> Result<(), ConfError> {
        match u.iter().find(|(g, _)| !self.has_generator(g)) {
            Some((g, _)) => Err(ConfError::UnknownGenerator(g.clone())),
            None => Ok(()),
        }
    }
}

/// `(u_{at} v)` where `at` is any polynomial in the commuting symbols.
///
/// Sesquilinearity: `del^j` on the left contributes `(-t)^j`, `del^j` on the
/// right contributes `(del + t)^j`, with `t` a fresh variable that is finally
/// replaced by `at`. Other symbols in the coefficients pass through.
pub fn bracket_at(a: &ConfPresentation, u: &ConfElement, v: &ConfElement, at: &OpPoly) -> Result<ConfElement, ConfError> {
    a.check_element(u)?;
    a.check_element(v)?;
    let t = Sym::var(FRESH);
    let t_poly = OpPoly::sym(&t);
    let minus_t = t_poly.neg();
    let del_plus_t = OpPoly::del().add(&t_poly);
    let mut out = ConfElement::zero();
    for (g, p) in u.iter() {
        let left = p.subst(&Sym::Del, &minus_t);
        for (h, q) in v.iter() {
            let Some(value) = a.table(g, h) else { continue };
            let right = q.subst(&Sym::Del, &del_plus_t);
            let factor = left.mul(&right);
            out = out.add(&value.subst(&Sym::lam(), &t_poly).scale(&factor));
        }
    }
    Ok(out.subst(&t, at))
}

/// `(u_{s} v)` with output bracket variable `s`.
pub fn bracket(a: &ConfPresentation, u: &ConfElement, v: &ConfElement, out_var: &Sym) -> Result<ConfElement, ConfError> {
    bracket_at(a, u, v, &OpPoly::sym(out_var))
}

/// `n! * [lam^n] (u_lam v)`.
pub fn n_product(a: &ConfPresentation, u: &ConfElement, v: &ConfElement, n: u32) -> Result<ConfElement, ConfError> {
    let s = Sym::var(FRESH_N);
    let b = bracket(a, u, v, &s)?;
    Ok(b.coeff_of(&s, n).scale(&OpPoly::constant(int(&factorial(n)))))
}

/// Zero for a zero bracket, otherwise one more than the lambda degree.
pub fn locality(a: &ConfPresentation, u: &ConfElement, v: &ConfElement) -> Result<u32, ConfError> {
    let s = Sym::var(FRESH_N);
    let b = bracket(a, u, v, &s)?;
    Ok(match b.degree_in(&s) {
        None => 0,
        Some(d) => d + 1,
    })
}

/// Replaces `var` by the operator `-del - target`.
pub fn subst_neg_partial(e: &ConfElement, var: &Sym, target: &Sym) -> ConfElement {
    e.subst(var, &OpPoly::del().neg().sub(&OpPoly::sym(target)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    Commutative,
    Anticommutative,
    Associative,
    Jacobi,
    RsymNovikov,
    LcomNovikov,
}

impl Identity {
    pub const ALL: [Identity; 6] = [
        Identity::Commutative,
        Identity::Anticommutative,
        Identity::Associative,
        Identity::Jacobi,
        Identity::RsymNovikov,
        Identity::LcomNovikov,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Identity::Commutative => "commutative",
            Identity::Anticommutative => "anticommutative",
            Identity::Associative => "associative",
            Identity::Jacobi => "jacobi",
            Identity::RsymNovikov => "rsym_novikov",
            Identity::LcomNovikov => "lcom_novikov",
        }
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Identity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Identity::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| format!("unknown identity `{s}`"))
    }
}

/// Left-minus-right of the selected identity on `(u, v, w)`, in the
/// independent variables `lam` and `mu`.
pub fn check_identity(
    a: &ConfPresentation,
    which: Identity,
    u: &ConfElement,
    v: &ConfElement,
    w: &ConfElement,
) -> Result<ConfElement, ConfError> {
    for e in [u, v, w] {
        e.only_uses(&[Sym::Del])
            .map_err(|sym| ConfError::ForeignSymbol { sym, context: "identity arguments".into() })?;
    }
    let (lam, mu) = (Sym::lam(), Sym::mu());
    let lam_mu = OpPoly::lam().add(&OpPoly::mu());
    let neg_del_lam = OpPoly::del().neg().sub(&OpPoly::lam());
    let neg_del_mu = OpPoly::del().neg().sub(&OpPoly::mu());
    let br = |x: &ConfElement, y: &ConfElement, s: &Sym| bracket(a, x, y, s);
    let br_at = |x: &ConfElement, y: &ConfElement, at: &OpPoly| bracket_at(a, x, y, at);
    Ok(match which {
        Identity::Commutative => br(u, v, &lam)?.sub(&br_at(v, u, &neg_del_lam)?),
        Identity::Anticommutative => br(u, v, &lam)?.add(&br_at(v, u, &neg_del_lam)?),
        Identity::Associative => {
            let left = br(u, &br(v, w, &mu)?, &lam)?;
            left.sub(&br_at(&br(u, v, &lam)?, w, &lam_mu)?)
        }
        Identity::Jacobi => {
            let a1 = br(u, &br(v, w, &mu)?, &lam)?;
            let a2 = br(v, &br(u, w, &lam)?, &mu)?;
            a1.sub(&a2).sub(&br_at(&br(u, v, &lam)?, w, &lam_mu)?)
        }
        Identity::RsymNovikov => {
            let l1 = br_at(&br(u, v, &lam)?, w, &lam_mu)?;
            let l2 = br(u, &br(v, w, &mu)?, &lam)?;
            let r1 = br_at(&br(u, w, &lam)?, v, &neg_del_mu)?;
            let r2 = br(u, &br_at(w, v, &neg_del_mu)?, &lam)?;
            l1.sub(&l2).sub(&r1.sub(&r2))
        }
        Identity::LcomNovikov => br(u, &br(v, w, &mu)?, &lam)?.sub(&br(v, &br(u, w, &lam)?, &mu)?),
    })
}

/// A triple on which an identity has a nonzero residual.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityFailure {
    pub identity: Identity,
    pub args: [ConfElement; 3],
    pub residual: ConfElement,
}

/// Runs `which` on every ordered triple of generators.
pub fn check_on_generators(a: &ConfPresentation, which: Identity) -> Result<Vec<IdentityFailure>, ConfError> {
    let gens: Vec<ConfElement> = a.generators.iter().cloned().map(ConfElement::gen).collect();
    let mut failures = Vec::new();
    for u in &gens {
        for v in &gens {
            for w in &gens {
                let residual = check_identity(a, which, u, v, w)?;
                if !residual.is_zero() {
                    failures.push(IdentityFailure { identity: which, args: [u.clone(), v.clone(), w.clone()], residual });
                }
            }
        }
    }
    Ok(failures)
}

/// Random `k[del]`-combination of the generators.
pub fn random_element<R: Rng>(rng: &mut R, a: &ConfPresentation, max_del: u32) -> ConfElement {
    let mut out = ConfElement::zero();
    let picks = rng.gen_range(1..=3.min(a.generators.len().max(1)));
    for _ in 0..picks {
        if a.generators.is_empty() {
            break;
        }
        let g = a.generators[rng.gen_range(0..a.generators.len())].clone();
        let mut c = OpPoly::zero();
        for j in 0..=max_del {
            let k = rng.gen_range(-3i64..=3);
            c = c.add(&OpPoly::del().pow(j).scale(&rat(k)));
        }
        out.add_term(g, c);
    }
    out
}

/// Runs `which` on `samples` random triples of module elements.
pub fn check_on_random<R: Rng>(
    a: &ConfPresentation,
    which: Identity,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<IdentityFailure>, ConfError> {
    let mut failures = Vec::new();
    for _ in 0..samples {
        let args = [random_element(rng, a, 2), random_element(rng, a, 2), random_element(rng, a, 2)];
        let residual = check_identity(a, which, &args[0], &args[1], &args[2])?;
        if !residual.is_zero() {
            failures.push(IdentityFailure { identity: which, args, residual });
        }
    }
    Ok(failures)
}

/// Images of the generators under a `k[del]`-linear map commuting with `del`.
/// Generators without an entry map to zero.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct DerivationTable {
    images: BTreeMap<Gen, ConfElement>,
}

impl DerivationTable {
    pub fn new() -> Self {
        DerivationTable::default()
    }

    /// The derivation `del` itself.
    pub fn partial(a: &ConfPresentation) -> Self {
        let mut d = DerivationTable::new();
        for g in a.generators() {
            d.set(g.clone(), ConfElement::gen(g.clone()).partial());
        }
        d
    }

    pub fn set(&mut self, g: impl Into<Gen>, image: ConfElement) {
        self.images.insert(g.into(), image);
    }

    pub fn image(&self, g: &Gen) -> ConfElement {
        self.images.get(g).cloned().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Gen, &ConfElement)> {
        self.images.iter()
    }

    pub fn apply(&self, u: &ConfElement) -> ConfElement {
        let mut out = ConfElement::zero();
        for (g, c) in u.iter() {
            out = out.add(&self.image(g).scale(c));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivationReport {
    /// `(g, h, D(g_lam h) - (Dg_lam h) - (g_lam Dh))` for every failing pair.
    pub failures: Vec<(Gen, Gen, ConfElement)>,
}

impl DerivationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn validate_derivation(a: &ConfPresentation, d: &DerivationTable) -> Result<(), ConfError> {
    for (g, image) in d.entries() {
        if !a.has_generator(g) {
            return Err(ConfError::UnknownGenerator(g.clone()));
        }
        image
            .only_uses(&[Sym::Del])
            .map_err(|sym| ConfError::ForeignSymbol { sym, context: format!("derivation image of {g}") })?;
    }
    Ok(())
}

pub fn check_derivation(a: &ConfPresentation, d: &DerivationTable) -> Result<DerivationReport, ConfError> {
    validate_derivation(a, d)?;
    let lam = Sym::lam();
    let mut failures = Vec::new();
    for g in a.generators() {
        for h in a.generators() {
            let (eg, eh) = (ConfElement::gen(g.clone()), ConfElement::gen(h.clone()));
            let lhs = d.apply(&bracket(a, &eg, &eh, &lam)?);
            let dg = d.apply(&eg);
            let dh = d.apply(&eh);
            let closure = |r: Result<ConfElement, ConfError>| r.map_err(|_| ConfError::Closure(g.clone(), h.clone()));
            let rhs = closure(bracket(a, &dg, &eh, &lam))?.add(&closure(bracket(a, &eg, &dh, &lam))?);
            let residual = lhs.sub(&rhs);
            if !residual.is_zero() {
                failures.push((g.clone(), h.clone(), residual));
            }
        }
    }
    Ok(DerivationReport { failures })
}

/// The derived algebra `C^(D)`: `(g o_lam h) = (D g _lam h)`.
///
/// `D` is expected to be a derivation of a commutative presentation (see
/// [`check_derivation`]); only closure of the images is verified here.
pub fn gelfand(a: &ConfPresentation, d: &DerivationTable) -> Result<ConfPresentation, ConfError> {
    validate_derivation(a, d)?;
    let lam = Sym::lam();
    let mut out = ConfPresentation { generators: a.generators.clone(), bracket: BTreeMap::new() };
    for g in a.generators() {
        let dg = d.image(g);
        for h in a.generators() {
            let value = bracket(a, &dg, &ConfElement::gen(h.clone()), &lam)
                .map_err(|_| ConfError::Closure(g.clone(), h.clone()))?;
            out.set_bracket(g.clone(), h.clone(), value)?;
        }
    }
    Ok(out)
}

/// Dense structure constants of a bilinear product on a `dim`-dimensional
/// space: `e_i * e_j = sum_k c[i][j][k] e_k`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StructureConstants {
    dim: usize,
    data: Vec<Rational>,
}

impl StructureConstants {
    pub fn zero(dim: usize) -> Self {
        StructureConstants { dim, data: vec![Rational::zero(); dim * dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set(&mut self, i: usize, j: usize, value: Vec<Rational>) {
        assert_eq!(value.len(), self.dim);
        let base = (i * self.dim + j) * self.dim;
        self.data[base..base + self.dim].clone_from_slice(&value);
    }

    pub fn get(&self, i: usize, j: usize) -> &[Rational] {
        let base = (i * self.dim + j) * self.dim;
        &self.data[base..base + self.dim]
    }

    pub fn mul(&self, x: &[Rational], y: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.dim];
        for (i, xi) in x.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
            for (j, yj) in y.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                let c = xi * yj;
                for (k, s) in self.get(i, j).iter().enumerate() {
                    if !s.is_zero() {
                        out[k] += &c * s;
                    }
                }
            }
        }
        out
    }

    fn basis(&self, i: usize) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.dim];
        v[i] = Rational::one();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NpAxiom {
    CircRightSymmetric,
    CircLeftCommutative,
    StarAssociative,
    StarCommutative,
    CircStarCompatible,
    StarCircCompatible,
}

impl fmt::Display for NpAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NpAxiom::CircRightSymmetric => "circ_right_symmetric",
            NpAxiom::CircLeftCommutative => "circ_left_commutative",
            NpAxiom::StarAssociative => "star_associative",
            NpAxiom::StarCommutative => "star_commutative",
            NpAxiom::CircStarCompatible => "circ_star_compatible",
            NpAxiom::StarCircCompatible => "star_circ_compatible",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpReport {
    pub failures: Vec<(NpAxiom, (usize, usize, usize))>,
}

impl NpReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn check_np_axioms(circ: &StructureConstants, star: &StructureConstants) -> Result<NpReport, ConfError> {
    if circ.dim != star.dim {
        return Err(ConfError::Dimension { expected: circ.dim, found: star.dim });
    }
    let n = circ.dim;
    let sub = |x: Vec<Rational>, y: Vec<Rational>| -> Vec<Rational> { x.into_iter().zip(y).map(|(a, b)| a - b).collect() };
    let zero = |v: &[Rational]| v.iter().all(Zero::is_zero);
    let c = |x: &[Rational], y: &[Rational]| circ.mul(x, y);
    let s = |x: &[Rational], y: &[Rational]| star.mul(x, y);
    let mut failures = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let (a, b, d) = (circ.basis(i), circ.basis(j), circ.basis(k));
                let checks = [
                    (
                        NpAxiom::CircRightSymmetric,
                        sub(sub(c(&c(&a, &b), &d), c(&a, &c(&b, &d))), sub(c(&c(&a, &d), &b), c(&a, &c(&d, &b)))),
                    ),
                    (NpAxiom::CircLeftCommutative, sub(c(&a, &c(&b, &d)), c(&b, &c(&a, &d)))),
                    (NpAxiom::StarAssociative, sub(s(&s(&a, &b), &d), s(&a, &s(&b, &d)))),
                    (NpAxiom::StarCommutative, sub(s(&a, &b), s(&b, &a))),
                    (NpAxiom::CircStarCompatible, sub(s(&c(&a, &b), &d), c(&a, &s(&b, &d)))),
                    (
                        NpAxiom::StarCircCompatible,
                        sub(sub(c(&s(&a, &b), &d), s(&a, &c(&b, &d))), sub(c(&s(&a, &d), &b), s(&a, &c(&d, &b)))),
                    ),
                ];
                for (axiom, residual) in checks {
                    if !zero(&residual) {
                        failures.push((axiom, (i, j, k)));
                    }
                }
            }
        }
    }
    Ok(NpReport { failures })
}

/// The quadratic conformal algebra `(a_lam b) = a o b + lam (a * b)` on
/// `k[del] (x) P`.
pub fn quadratic_from_np(
    basis: &[Gen],
    circ: &StructureConstants,
    star: &StructureConstants,
) -> Result<ConfPresentation, ConfError> {
    if circ.dim() != basis.len() {
        return Err(ConfError::Dimension { expected: basis.len(), found: circ.dim() });
    }
    let report = check_np_axioms(circ, star)?;
    if let Some(&(axiom, triple)) = report.failures.first() {
        return Err(ConfError::NpAxiom { axiom, triple });
    }
    let mut a = ConfPresentation::new(basis.iter().cloned())?;
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let mut value = ConfElement::zero();
            for k in 0..basis.len() {
                let coeff = OpPoly::constant(circ.get(i, j)[k].clone()).add(&OpPoly::lam().scale(&star.get(i, j)[k]));
                value.add_term(basis[k].clone(), coeff);
            }
            a.set_bracket(basis[i].clone(), basis[j].clone(), value)?;
        }
    }
    Ok(a)
}

pub fn w_generator(k: u32) -> Gen {
    Gen::new(&format!("v{k}"))
}

/// The algebra on `x, v0..v{kmax}` with `(v_k lam x) = (del + lam)^k v_k` and
/// every other bracket zero.
pub fn build_w(kmax: u32) -> ConfPresentation {
    let mut gens = vec![Gen::new("x")];
    gens.extend((0..=kmax).map(w_generator));
    let mut a = ConfPresentation::new(gens).expect("distinct names");
    let del_lam = OpPoly::del().add(&OpPoly::lam());
    for k in 0..=kmax {
        a.set_bracket(w_generator(k), "x", ConfElement::term(w_generator(k), del_lam.pow(k)))
            .expect("valid entry");
    }
    a
}

/// The current algebra over `span{one, t | t^2 = 0}`: `(a_lam b) = ab`.
pub fn dual_numbers_current() -> ConfPresentation {
    let mut a = ConfPresentation::new(["one", "t"]).expect("distinct names");
    a.set_bracket("one", "one", ConfElement::gen("one")).expect("valid");
    a.set_bracket("one", "t", ConfElement::gen("t")).expect("valid");
    a.set_bracket("t", "one", ConfElement::gen("t")).expect("valid");
    a
}
