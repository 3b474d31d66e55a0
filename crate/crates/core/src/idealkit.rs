//! Locality-generator families over finite index windows and a bounded
//! ideal-membership oracle with checkable certificates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::diffpoly::{DiffPoly, DiffVar, Gen, Monomial, Weight};
use crate::exactnum::{choose, fmt_rational, int, sign, solve, LinearSystem, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdealError {
    #[error("locality value {value} for ({a}, {b}) exceeds the uniform bound {bound}")]
    AboveBound { a: Gen, b: Gen, value: u32, bound: u32 },
    #[error("N(a,b) = {n_ab} exceeds M = {m}")]
    BarNBound { n_ab: u32, m: u32 },
    #[error("empty window: {lo} > {hi}")]
    EmptyWindow { lo: i64, hi: i64 },
    #[error("empty generator alphabet")]
    EmptyAlphabet,
    #[error("certificate refers to a generator that was not emitted: {0}")]
    Dangling(GenDescriptor),
}

/// `N: X x X -> Z+`, bounded by `default`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalityFn {
    default: u32,
    overrides: BTreeMap<(Gen, Gen), u32>,
}

impl LocalityFn {
    pub fn constant(m: u32) -> Self {
        LocalityFn { default: m, overrides: BTreeMap::new() }
    }

    pub fn with(mut self, a: impl Into<Gen>, b: impl Into<Gen>, value: u32) -> Result<Self, IdealError> {
        let (a, b) = (a.into(), b.into());
        if value > self.default {
            return Err(IdealError::AboveBound { a, b, value, bound: self.default });
        }
        self.overrides.insert((a, b), value);
        Ok(self)
    }

    pub fn get(&self, a: &Gen, b: &Gen) -> u32 {
        self.overrides.get(&(a.clone(), b.clone())).copied().unwrap_or(self.default)
    }

    /// The uniform bound `M`.
    pub fn bound(&self) -> u32 {
        self.default
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    pub index_lo: i64,
    pub index_hi: i64,
    pub s_max: u32,
    pub max_p: u32,
    pub max_multiplier_degree: u32,
}

impl Window {
    pub fn new(index_lo: i64, index_hi: i64, s_max: u32, max_p: u32, max_multiplier_degree: u32) -> Result<Self, IdealError> {
        if index_lo > index_hi {
            return Err(IdealError::EmptyWindow { lo: index_lo, hi: index_hi });
        }
        Ok(Window { index_lo, index_hi, s_max, max_p, max_multiplier_degree })
    }

    /// Indices widened by `3M` around the target, `s_max = 2`,
    /// `max_p = p + q + 1`, multiplier degree `deg(target) - 2`.
    pub fn around(target: &DiffPoly, m: u32, p: u32, q: u32) -> Self {
        let (lo, hi) = target.index_span().unwrap_or((0, 0));
        let pad = 3 * m as i64;
        let degree = target.degree().unwrap_or(2).saturating_sub(2) as u32;
        Window { index_lo: lo - pad, index_hi: hi + pad, s_max: 2, max_p: p + q + 1, max_multiplier_degree: degree }
    }

    pub fn contains(&self, n: i64) -> bool {
        (self.index_lo..=self.index_hi).contains(&n)
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        self.index_lo <= other.index_lo
            && self.index_hi >= other.index_hi
            && self.s_max >= other.s_max
            && self.max_p >= other.max_p
            && self.max_multiplier_degree >= other.max_multiplier_degree
    }
}

/// User overrides applied on top of a scenario's default window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WindowOverride {
    pub indices: Option<(i64, i64)>,
    pub s_max: Option<u32>,
    pub max_multiplier_degree: Option<u32>,
}

impl WindowOverride {
    pub fn apply(&self, w: Window) -> Result<Window, IdealError> {
        let (lo, hi) = self.indices.unwrap_or((w.index_lo, w.index_hi));
        Window::new(lo, hi, self.s_max.unwrap_or(w.s_max), w.max_p, self.max_multiplier_degree.unwrap_or(w.max_multiplier_degree))
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "indices [{}, {}], s_max {}, max_p {}, multiplier degree <= {}",
            self.index_lo, self.index_hi, self.s_max, self.max_p, self.max_multiplier_degree
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `f_{a,b}(n,m)`: first factor differentiated once.
    F,
    /// `f^{p,q}_{a,b}(n,m)`.
    Fpq,
    /// `sum_s (-1)^s C(N,s) a(n-s) o b(m+s)`.
    J,
}

/// Parameters of `d^deriv` applied to a family member.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GenDescriptor {
    pub family: Family,
    pub a: Gen,
    pub b: Gen,
    pub p: u32,
    pub q: u32,
    pub n: i64,
    pub m: i64,
    pub deriv: u32,
    pub exponent: u32,
}

impl GenDescriptor {
    pub fn f(a: &Gen, b: &Gen, n: i64, m: i64, exponent: u32, deriv: u32) -> Self {
        GenDescriptor { family: Family::F, a: a.clone(), b: b.clone(), p: 1, q: 0, n, m, deriv, exponent }
    }

    pub fn fpq(a: &Gen, b: &Gen, p: u32, q: u32, n: i64, m: i64, exponent: u32, deriv: u32) -> Self {
        GenDescriptor { family: Family::Fpq, a: a.clone(), b: b.clone(), p, q, n, m, deriv, exponent }
    }

    pub fn expand(&self) -> DiffPoly {
        let base = match self.family {
            Family::F => emit_f(&self.a, &self.b, self.n, self.m, self.exponent),
            Family::Fpq => emit_fpq(&self.a, &self.b, self.p, self.q, self.n, self.m, self.exponent),
            Family::J => emit_j(&self.a, &self.b, self.n, self.m, self.exponent),
        };
        base.derive_n(self.deriv)
    }
}

impl fmt::Display for GenDescriptor {
    /// `d^1 f^{1,0}_{x,y}(0,-1; 3)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.family {
            Family::J => "J",
            Family::F | Family::Fpq => "f",
        };
        write!(
            f,
            "d^{} {name}^{{{},{}}}_{{{},{}}}({},{}; {})",
            self.deriv, self.p, self.q, self.a, self.b, self.n, self.m, self.exponent
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub desc: GenDescriptor,
    pub poly: DiffPoly,
}

impl Generator {
    pub fn new(desc: GenDescriptor) -> Self {
        let poly = desc.expand();
        Generator { desc, poly }
    }
}

/// `sum_t (-1)^t C(E,t) a^(p)(n-t) b^(q)(m+t)`.
pub fn emit_fpq(a: &Gen, b: &Gen, p: u32, q: u32, n: i64, m: i64, e: u32) -> DiffPoly {
    let mut out = DiffPoly::zero();
    for t in 0..=e {
        let c = int(&(sign(t as i64) * choose(e as u64, t as u64)));
        let mono = Monomial::from_vars(vec![DiffVar::new(a.clone(), p, n - t as i64), DiffVar::new(b.clone(), q, m + t as i64)]);
        out.add_term(mono, c);
    }
    out
}

pub fn emit_f(a: &Gen, b: &Gen, n: i64, m: i64, e: u32) -> DiffPoly {
    emit_fpq(a, b, 1, 0, n, m, e)
}

/// Built from Novikov products of letters; agrees with [`emit_f`].
pub fn emit_j(a: &Gen, b: &Gen, n: i64, m: i64, big_n: u32) -> DiffPoly {
    let mut out = DiffPoly::zero();
    for s in 0..=big_n {
        let c = int(&(sign(s as i64) * choose(big_n as u64, s as u64)));
        let left = DiffPoly::var(DiffVar::new(a.clone(), 0, n - s as i64));
        let right = DiffPoly::var(DiffVar::new(b.clone(), 0, m + s as i64));
        out.add_scaled(&left.novikov_product(&right), &c);
    }
    out
}

/// Locality bound assigned to the pair `(a^(p), b^(q))`.
pub fn bar_n(p: u32, q: u32, m: u32, n_ab: u32) -> Result<u32, IdealError> {
    if n_ab > m {
        return Err(IdealError::BarNBound { n_ab, m });
    }
    Ok(match (p, q) {
        (0, 0) => 3 * m,
        (1, 0) => n_ab,
        _ => (p + q) * m,
    })
}

/// Outcome of an exact polynomial identity: holds iff the residual is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub residual: DiffPoly,
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        self.residual.is_zero()
    }
}

/// `f(n,m; E) = f(n,m; E-1) - f(n-1,m+1; E-1)`.
pub fn pascal_reduce(a: &Gen, b: &Gen, n: i64, m: i64, e: u32) -> IdentityCheck {
    assert!(e >= 1, "pascal_reduce needs E >= 1");
    let lhs = emit_f(a, b, n, m, e);
    let rhs = &emit_f(a, b, n, m, e - 1) - &emit_f(a, b, n - 1, m + 1, e - 1);
    IdentityCheck { residual: &lhs - &rhs }
}

/// `d f^{p,q}(E) = f^{p+1,q}(E) + f^{p,q+1}(E)` with one exponent throughout.
pub fn leibniz_fpq(a: &Gen, b: &Gen, p: u32, q: u32, n: i64, m: i64, e: u32) -> IdentityCheck {
    let lhs = emit_fpq(a, b, p, q, n, m, e).derive();
    let rhs = &emit_fpq(a, b, p + 1, q, n, m, e) + &emit_fpq(a, b, p, q + 1, n, m, e);
    IdentityCheck { residual: &lhs - &rhs }
}

fn window_pairs(x: &[Gen], w: &Window) -> Result<Vec<(Gen, Gen, i64, i64)>, IdealError> {
    if x.is_empty() {
        return Err(IdealError::EmptyAlphabet);
    }
    if w.index_lo > w.index_hi {
        return Err(IdealError::EmptyWindow { lo: w.index_lo, hi: w.index_hi });
    }
    let mut out = Vec::new();
    for a in x {
        for b in x {
            for n in w.index_lo..=w.index_hi {
                for m in w.index_lo..=w.index_hi {
                    out.push((a.clone(), b.clone(), n, m));
                }
            }
        }
    }
    Ok(out)
}

/// `d^s f_{a,b}(n,m)` at exponent `N(a,b)` over the window.
pub fn generators_i(x: &[Gen], locality: &LocalityFn, w: &Window) -> Result<Vec<Generator>, IdealError> {
    let mut out = Vec::new();
    for (a, b, n, m) in window_pairs(x, w)? {
        let base = emit_f(&a, &b, n, m, locality.get(&a, &b));
        let mut poly = base;
        for s in 0..=w.s_max {
            let desc = GenDescriptor::f(&a, &b, n, m, locality.get(&a, &b), s);
            out.push(Generator { desc, poly: poly.clone() });
            poly = poly.derive();
        }
    }
    Ok(out)
}

/// `d^s f^{p,q}_{a,b}(n,m)` at exponent `bar_n(p, q)` over the window,
/// `p, q <= max_p`.
pub fn generators_k(x: &[Gen], locality: &LocalityFn, m_bound: u32, w: &Window) -> Result<Vec<Generator>, IdealError> {
    let mut out = Vec::new();
    for (a, b, n, m) in window_pairs(x, w)? {
        for p in 0..=w.max_p {
            for q in 0..=w.max_p {
                let e = bar_n(p, q, m_bound, locality.get(&a, &b))?;
                let mut poly = emit_fpq(&a, &b, p, q, n, m, e);
                for s in 0..=w.s_max {
                    let desc = GenDescriptor::fpq(&a, &b, p, q, n, m, e, s);
                    out.push(Generator { desc, poly: poly.clone() });
                    poly = poly.derive();
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateEntry {
    pub multiplier: Monomial,
    pub generator: GenDescriptor,
    pub coeff: Rational,
}

impl fmt::Display for CertificateEntry {
    /// `u * d^s f^{p,q}_{a,b}(n,m; E) * c`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} * {} * {}", self.multiplier, self.generator, fmt_rational(&self.coeff))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MembershipCertificate {
    pub entries: Vec<CertificateEntry>,
}

impl MembershipCertificate {
    pub fn lines(&self) -> Vec<String> {
        self.entries.iter().map(ToString::to_string).collect()
    }

    /// The combination expanded from the descriptors alone.
    pub fn expand(&self) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for e in &self.entries {
            out.add_scaled(&e.generator.expand().mul_monomial(&e.multiplier), &e.coeff);
        }
        out
    }
}

/// Degree, weight, index sum and letter multiset of a monomial. Every
/// family member and all of its derivatives are homogeneous for all four.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Grade {
    degree: usize,
    weight: i64,
    index_sum: i64,
    content: Vec<Gen>,
}

impl Grade {
    fn of(m: &Monomial) -> Self {
        Grade {
            degree: m.degree(),
            weight: m.weight(),
            index_sum: m.index_sum(),
            content: m.factors().iter().map(|v| v.gen.clone()).collect(),
        }
    }
}

/// Letters of `big` left over after removing `small`, if `small` fits.
fn content_difference(big: &[Gen], small: &[Gen]) -> Option<Vec<Gen>> {
    let mut rest = big.to_vec();
    for g in small {
        let pos = rest.iter().position(|h| h == g)?;
        rest.remove(pos);
    }
    Some(rest)
}

/// All monomials over `letters` with derivative orders summing to `p_total`
/// and indices in the window summing to `index_sum`.
fn multipliers(letters: &[Gen], p_total: i64, index_sum: i64, w: &Window) -> BTreeSet<Monomial> {
    let mut out = BTreeSet::new();
    if p_total < 0 {
        return out;
    }
    let d = letters.len() as i64;
    if d == 0 {
        if p_total == 0 && index_sum == 0 {
            out.insert(Monomial::one());
        }
        return out;
    }
    if index_sum < d * w.index_lo || index_sum > d * w.index_hi {
        return out;
    }
    let mut vars = Vec::with_capacity(letters.len());
    fill(letters, 0, p_total, index_sum, w, &mut vars, &mut out);
    out
}

fn fill(
    letters: &[Gen],
    i: usize,
    p_left: i64,
    n_left: i64,
    w: &Window,
    vars: &mut Vec<DiffVar>,
    out: &mut BTreeSet<Monomial>,
) {
    let remaining = (letters.len() - i) as i64;
    if remaining == 1 {
        if w.contains(n_left) {
            vars.push(DiffVar::new(letters[i].clone(), p_left as u32, n_left));
            out.insert(Monomial::from_vars(vars.clone()));
            vars.pop();
        }
        return;
    }
    for p in 0..=p_left {
        for n in w.index_lo..=w.index_hi {
            let rest = n_left - n;
            if rest < (remaining - 1) * w.index_lo || rest > (remaining - 1) * w.index_hi {
                continue;
            }
            vars.push(DiffVar::new(letters[i].clone(), p as u32, n));
            fill(letters, i + 1, p_left - p, rest, w, vars, out);
            vars.pop();
        }
    }
}

/// Searches for `h = sum c_i u_i g_i` with monomial multipliers `u_i` over
/// the window, solved as one exact linear system.
///
/// The system splits along the grading of [`Grade`], so only multipliers
/// that move a generator into a grade of `h` are enumerated, and columns not
/// connected to a monomial of `h` through shared rows are dropped. `None`
/// means no combination exists inside this window, nothing more.
pub fn membership(h: &DiffPoly, gens: &[Generator], w: &Window) -> Option<MembershipCertificate> {
    if h.is_zero() {
        return Some(MembershipCertificate::default());
    }
    let targets: BTreeSet<Grade> = h.terms().map(|(m, _)| Grade::of(m)).collect();

    let mut columns: Vec<(Monomial, usize)> = Vec::new();
    let mut seen: BTreeSet<(Monomial, usize)> = BTreeSet::new();
    for (gi, g) in gens.iter().enumerate() {
        let grades: BTreeSet<Grade> = g.poly.terms().map(|(m, _)| Grade::of(m)).collect();
        for gg in &grades {
            for t in &targets {
                if t.degree < gg.degree || (t.degree - gg.degree) as u32 > w.max_multiplier_degree {
                    continue;
                }
                let Some(letters) = content_difference(&t.content, &gg.content) else { continue };
                let d = letters.len() as i64;
                let p_total = t.weight - gg.weight + d;
                for u in multipliers(&letters, p_total, t.index_sum - gg.index_sum, w) {
                    if seen.insert((u.clone(), gi)) {
                        columns.push((u, gi));
                    }
                }
            }
        }
    }

    let products: Vec<DiffPoly> = columns.iter().map(|(u, gi)| gens[*gi].poly.mul_monomial(u)).collect();
    let mut by_row: BTreeMap<&Monomial, Vec<usize>> = BTreeMap::new();
    for (c, p) in products.iter().enumerate() {
        for (m, _) in p.terms() {
            by_row.entry(m).or_default().push(c);
        }
    }

    // connected component of h's monomials in the row/column incidence graph
    let mut keep_rows: BTreeSet<&Monomial> = BTreeSet::new();
    let mut keep_cols: BTreeSet<usize> = BTreeSet::new();
    let mut queue: VecDeque<&Monomial> = h.terms().map(|(m, _)| m).collect();
    while let Some(m) = queue.pop_front() {
        if !keep_rows.insert(m) {
            continue;
        }
        for &c in by_row.get(m).map(Vec::as_slice).unwrap_or(&[]) {
            if keep_cols.insert(c) {
                queue.extend(products[c].terms().map(|(m2, _)| m2).filter(|m2| !keep_rows.contains(m2)));
            }
        }
    }

    let cols: Vec<usize> = keep_cols.into_iter().collect();
    let col_pos: BTreeMap<usize, usize> = cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let row_pos: BTreeMap<&Monomial, usize> = keep_rows.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut rows: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); row_pos.len()];
    for &c in &cols {
        for (m, v) in products[c].terms() {
            rows[row_pos[m]].insert(col_pos[&c], v.clone());
        }
    }
    let mut rhs = vec![Rational::zero(); row_pos.len()];
    for (m, v) in h.terms() {
        rhs[row_pos[m]] = v.clone();
    }
    let system = LinearSystem::from_rows(cols.len(), rows, rhs).expect("consistent shape");
    let x = solve(&system)?;

    let entries = cols
        .iter()
        .zip(x)
        .filter(|(_, v)| !v.is_zero())
        .map(|(&c, coeff)| {
            let (u, gi) = &columns[c];
            CertificateEntry { multiplier: u.clone(), generator: gens[*gi].desc.clone(), coeff }
        })
        .collect();
    Some(MembershipCertificate { entries })
}

/// Re-expands `cert` from the emitted generators and compares with `h`.
pub fn verify_certificate(h: &DiffPoly, cert: &MembershipCertificate, gens: &[Generator]) -> Result<bool, IdealError> {
    let index: BTreeMap<&GenDescriptor, &DiffPoly> = gens.iter().map(|g| (&g.desc, &g.poly)).collect();
    let mut sum = DiffPoly::zero();
    for e in &cert.entries {
        let poly = index.get(&e.generator).ok_or_else(|| IdealError::Dangling(e.generator.clone()))?;
        sum.add_scaled(&poly.mul_monomial(&e.multiplier), &e.coeff);
    }
    Ok(sum == *h)
}

/// Weight of a generator `d^s f^{p,q}`: `p + q + s - 2`.
pub fn expected_weight(desc: &GenDescriptor) -> i64 {
    desc.p as i64 + desc.q as i64 + desc.deriv as i64 - 2
}

pub fn is_homogeneous(p: &DiffPoly) -> bool {
    !matches!(p.weight(), Weight::Mixed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffpoly::poly_from;
    use crate::distribution::{binom_power, Distribution, FVar};
    use crate::exactnum::rat;

    fn g(s: &str) -> Gen {
        Gen::new(s)
    }

    fn xyz() -> Vec<Gen> {
        vec![g("a"), g("x"), g("y")]
    }

    #[test]
    fn emit_f_examples() {
        assert_eq!(emit_f(&g("a"), &g("b"), 0, 0, 1), poly_from(&[(1, &[("a", 1, 0), ("b", 0, 0)]), (-1, &[("a", 1, -1), ("b", 0, 1)])]));
        assert_eq!(
            emit_f(&g("a"), &g("b"), 0, 0, 2),
            poly_from(&[
                (1, &[("a", 1, 0), ("b", 0, 0)]),
                (-2, &[("a", 1, -1), ("b", 0, 1)]),
                (1, &[("a", 1, -2), ("b", 0, 2)])
            ])
        );
        for e in 0..5 {
            assert_eq!(emit_f(&g("a"), &g("b"), 2, -1, e).weight(), Weight::Homogeneous(-1));
        }
    }

    #[test]
    fn emit_j_agrees_with_f() {
        for e in 0..5 {
            for n in -2..=2 {
                for m in -2..=2 {
                    assert_eq!(emit_j(&g("a"), &g("b"), n, m, e), emit_f(&g("a"), &g("b"), n, m, e));
                    assert_eq!(emit_j(&g("a"), &g("a"), n, m, e), emit_f(&g("a"), &g("a"), n, m, e));
                }
            }
        }
        assert_eq!(emit_j(&g("a"), &g("b"), 3, 4, 0), poly_from(&[(1, &[("a", 1, 3), ("b", 0, 4)])]));
    }

    #[test]
    fn fpq_matches_f_and_distribution() {
        let (w, z) = (FVar::new("w"), FVar::new("z"));
        for p in 0..=2 {
            for q in 0..=2 {
                for e in 0..=3 {
                    let dist = Distribution::series("x", p, &w)
                        .mul(&Distribution::series("y", q, &z))
                        .unwrap()
                        .mul_laurent(&binom_power(&w, &z, e));
                    for n in -2..=2 {
                        for m in -2..=2 {
                            let idx = [(w.clone(), n - e as i64), (z.clone(), m)].into_iter().collect();
                            assert_eq!(dist.coefficient(&idx).unwrap(), emit_fpq(&g("x"), &g("y"), p, q, n, m, e));
                        }
                    }
                }
            }
        }
        assert_eq!(emit_fpq(&g("x"), &g("y"), 1, 0, 1, 2, 3), emit_f(&g("x"), &g("y"), 1, 2, 3));
    }

    #[test]
    fn bar_n_table() {
        assert_eq!(bar_n(0, 0, 2, 1), Ok(6));
        assert_eq!(bar_n(1, 0, 2, 1), Ok(1));
        assert_eq!(bar_n(0, 1, 2, 1), Ok(2));
        assert_eq!(bar_n(2, 3, 2, 0), Ok(10));
        assert_eq!(bar_n(0, 0, 1, 2), Err(IdealError::BarNBound { n_ab: 2, m: 1 }));
    }

    #[test]
    fn pascal_and_leibniz_exhaustive() {
        for e in 1..=6 {
            for n in -3..=3 {
                for m in -3..=3 {
                    assert!(pascal_reduce(&g("a"), &g("b"), n, m, e).holds());
                }
            }
        }
        for p in 0..=3 {
            for q in 0..=3 - p {
                for e in 0..=6 {
                    for n in -2..=2 {
                        for m in -2..=2 {
                            assert!(leibniz_fpq(&g("x"), &g("y"), p, q, n, m, e).holds());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn generator_counts_and_weights() {
        let n1 = LocalityFn::constant(1);
        let w = Window::new(0, 0, 0, 1, 0).unwrap();
        assert_eq!(generators_i(&[g("a")], &n1, &w).unwrap().len(), 1);
        let w = Window::new(-1, 1, 2, 1, 1).unwrap();
        let gi = generators_i(&xyz(), &n1, &w).unwrap();
        assert_eq!(gi.len(), 9 * 9 * 3);
        for gen in &gi {
            assert_eq!(gen.poly.weight(), Weight::Homogeneous(gen.desc.deriv as i64 - 1));
            assert_eq!(gen.poly, gen.desc.expand());
        }
        let gk = generators_k(&xyz(), &n1, 1, &w).unwrap();
        for gen in &gk {
            assert_eq!(gen.poly.weight(), Weight::Homogeneous(expected_weight(&gen.desc)));
            if gen.desc.p == 0 && gen.desc.q == 0 {
                assert_eq!(gen.desc.exponent, 3);
            }
        }
        // the (1,0,0) slice of K is I
        let k_slice: BTreeSet<_> = gk
            .iter()
            .filter(|k| k.desc.p == 1 && k.desc.q == 0)
            .map(|k| (k.desc.a.clone(), k.desc.b.clone(), k.desc.n, k.desc.m, k.desc.deriv, k.poly.to_string()))
            .collect();
        for gen in &gi {
            let d = &gen.desc;
            assert!(k_slice.contains(&(d.a.clone(), d.b.clone(), d.n, d.m, d.deriv, gen.poly.to_string())));
        }
        assert_eq!(generators_i(&[], &n1, &w), Err(IdealError::EmptyAlphabet));
        assert!(Window::new(1, 0, 0, 0, 0).is_err());
        assert!(LocalityFn::constant(1).with("a", "b", 2).is_err());
    }

    #[test]
    fn membership_of_a_generator() {
        let n1 = LocalityFn::constant(1);
        let w = Window::new(-1, 1, 1, 1, 0).unwrap();
        let gens = generators_i(&[g("x"), g("y")], &n1, &w).unwrap();
        let h = gens[5].poly.clone();
        let cert = membership(&h, &gens, &w).unwrap();
        assert_eq!(cert.entries.len(), 1);
        assert!(cert.entries[0].multiplier.is_one());
        assert!(verify_certificate(&h, &cert, &gens).unwrap());
        assert_eq!(cert.expand(), h);
    }

    #[test]
    fn membership_via_pascal() {
        let n1 = LocalityFn::constant(1);
        let w = Window::new(-2, 2, 0, 1, 0).unwrap();
        let gens = generators_i(&[g("x"), g("y")], &n1, &w).unwrap();
        let h = emit_f(&g("x"), &g("y"), 0, 0, 2);
        let cert = membership(&h, &gens, &w).unwrap();
        assert!(verify_certificate(&h, &cert, &gens).unwrap());
        // the Pascal combination f(0,0) - f(-1,1), both at exponent 1
        let mut got: Vec<_> = cert.entries.iter().map(|e| (e.generator.n, e.generator.m, e.coeff.clone())).collect();
        got.sort();
        assert_eq!(got, vec![(-1, 1, rat(-1)), (0, 0, rat(1))]);

        let mut tampered = cert.clone();
        tampered.entries[0].coeff += rat(1);
        assert!(!verify_certificate(&h, &tampered, &gens).unwrap());
        assert!(verify_certificate(&DiffPoly::zero(), &MembershipCertificate::default(), &gens).unwrap());

        let mut dangling = cert.clone();
        dangling.entries[0].generator.n = 40;
        assert!(matches!(verify_certificate(&h, &dangling, &gens), Err(IdealError::Dangling(_))));
    }

    #[test]
    fn membership_absent_outside_ideal() {
        let n1 = LocalityFn::constant(1);
        let w = Window::new(-2, 2, 1, 1, 1).unwrap();
        let gens = generators_i(&[g("x"), g("y")], &n1, &w).unwrap();
        assert!(membership(&poly_from(&[(1, &[("x", 1, 0), ("y", 0, 0)])]), &gens, &w).is_none());
    }

    #[test]
    fn case_one_instance() {
        let n1 = LocalityFn::constant(1);
        let f00 = emit_fpq(&g("x"), &g("y"), 0, 0, 0, 0, 3);
        let h = f00.mul_monomial(&Monomial::var(DiffVar::new("a", 2, 0)));
        let w = Window::new(-5, 5, 2, 1, 1).unwrap();
        let gens = generators_i(&xyz(), &n1, &w).unwrap();
        let cert = membership(&h, &gens, &w).expect("certificate");
        assert!(verify_certificate(&h, &cert, &gens).unwrap());
        assert_eq!(cert.expand(), h);
    }

    #[test]
    fn window_monotonicity_on_a_sample() {
        let n1 = LocalityFn::constant(1);
        let h = emit_f(&g("x"), &g("y"), 0, 0, 3);
        let small = Window::new(-3, 3, 0, 1, 0).unwrap();
        let big = Window::new(-4, 4, 1, 1, 1).unwrap();
        assert!(big.contains_window(&small));
        for w in [small, big] {
            let gens = generators_i(&[g("x"), g("y")], &n1, &w).unwrap();
            assert!(membership(&h, &gens, &w).is_some());
        }
    }

    #[test]
    fn descriptor_rendering() {
        let d = GenDescriptor::fpq(&g("x"), &g("y"), 1, 0, 0, -1, 3, 1);
        assert_eq!(d.to_string(), "d^1 f^{1,0}_{x,y}(0,-1; 3)");
        let entry = CertificateEntry { multiplier: Monomial::var(DiffVar::new("a", 0, 2)), generator: d, coeff: rat(-2) };
        assert_eq!(entry.to_string(), "a^(0)(2) * d^1 f^{1,0}_{x,y}(0,-1; 3) * -2");
    }

    #[test]
    fn default_window_shape() {
        let f00 = emit_fpq(&g("x"), &g("y"), 0, 0, 0, 0, 3);
        let h = f00.mul_monomial(&Monomial::var(DiffVar::new("a", 2, 0)));
        let w = Window::around(&h, 1, 0, 0);
        assert_eq!((w.index_lo, w.index_hi, w.s_max, w.max_p, w.max_multiplier_degree), (-6, 6, 2, 1, 1));
    }
}
