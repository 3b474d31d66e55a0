//! Scenario runners: the series decompositions, the Case 1-3 membership
//! instances, the derivative-family relations, the counterexample algebra
//! and a few small demonstrations.
//!
//! The alphabet is `X = {a, x, y}` with the constant locality function
//! `N = M` unless stated otherwise.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::coeffalg::{self, check_coeff_identities, check_locality_relations, CoeffElement, CoeffError, CoeffIdentity};
use crate::confalg::{
    self, bracket, bracket_at, build_w, check_derivation, check_on_generators, check_on_random, dual_numbers_current,
    gelfand, locality, n_product, quadratic_from_np, w_generator, ConfElement, ConfError, DerivationTable, Identity,
    OpPoly, StructureConstants, Sym,
};
use crate::diffpoly::{DiffPoly, DiffVar, Gen, Monomial};
use crate::distribution::{binom_power, binom_split, DistError, Distribution, FVar};
use crate::exactnum::{choose, int, rat, Rational};
use crate::idealkit::{
    bar_n, emit_f, emit_fpq, generators_i, leibniz_fpq, membership, verify_certificate, IdealError, LocalityFn, Window, WindowOverride,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("invalid scenario parameters: {0}")]
    Usage(String),
    #[error(transparent)]
    Ideal(#[from] IdealError),
    #[error(transparent)]
    Conf(#[from] ConfError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Residuals, certificate lines or computed values.
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub windows: Vec<Window>,
    pub checks: Vec<CheckResult>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ScenarioReport {
    pub fn new(scenario: &str, seed: u64) -> Self {
        ScenarioReport {
            scenario: scenario.to_string(),
            parameters: BTreeMap::new(),
            seed,
            windows: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }

    pub fn param(&mut self, key: &str, value: impl fmt::Display) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, details: Vec<String>) {
        self.checks.push(CheckResult { name: name.into(), passed, details });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render_text(&self, timing: bool) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {}", self.scenario);
        let params: Vec<String> = self.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "  parameters: {}", params.join(" "));
        let _ = writeln!(out, "  seed: {}", self.seed);
        for w in &self.windows {
            let _ = writeln!(out, "  window: {w}");
        }
        for c in &self.checks {
            let _ = writeln!(out, "  [{}] {}", if c.passed { "pass" } else { "FAIL" }, c.name);
            for d in &c.details {
                let _ = writeln!(out, "      {d}");
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        if timing {
            let _ = writeln!(out, "  wall time: {:.3} s", self.wall_time.as_secs_f64());
        }
        let _ = writeln!(out, "  status: {}", if self.passed() { "pass" } else { "FAIL" });
        out
    }
}

fn timed(mut report: ScenarioReport, start: Instant) -> ScenarioReport {
    report.wall_time = start.elapsed();
    report
}

fn alphabet() -> [Gen; 3] {
    [Gen::new("a"), Gen::new("x"), Gen::new("y")]
}

fn fv(name: &str) -> FVar {
    FVar::new(name)
}

fn series(g: &str, p: u32, v: &FVar) -> Distribution {
    Distribution::series(g, p, v)
}

fn residual_check(report: &mut ScenarioReport, name: &str, lhs: &Distribution, rhs: &Distribution) {
    let residual = lhs.sub(rhs);
    let details = if residual.is_zero() {
        vec![format!("{} terms on each side, residual 0", lhs.num_terms())]
    } else {
        vec![format!("residual: {residual}")]
    };
    report.check(name, residual.is_zero(), details);
}

fn require_m(m: u32) -> Result<(), HarnessError> {
    if m == 0 {
        return Err(HarnessError::Usage("M must be at least 1".into()));
    }
    Ok(())
}

/// The split of `a''(zeta) x(w) y(z) (w-z)^(3M)` and the two Leibniz
/// rewritings of its summands.
pub fn run_series00(m: u32) -> Result<ScenarioReport, HarnessError> {
    require_m(m)?;
    let start = Instant::now();
    let mut report = ScenarioReport::new("series00", 0);
    report.param("M", m);
    let (w, z, zeta) = (fv("w"), fv("z"), fv("zeta"));

    let axy = series("a", 2, &zeta).mul(&series("x", 0, &w))?.mul(&series("y", 0, &z))?;
    let lhs = axy.mul_laurent(&binom_power(&w, &z, 3 * m));
    let (p, q) = binom_split(&w, &z, &zeta, m, m);
    let wz_m = binom_power(&w, &z, m);
    let wzeta_m = binom_power(&w, &zeta, m);
    let zetaz_m = binom_power(&zeta, &z, m);
    let first = axy.mul_laurent(&wzeta_m).mul_laurent(&wz_m);
    let second = axy.mul_laurent(&zetaz_m).mul_laurent(&wz_m);
    let rhs = first.mul_laurent(&p).add(&second.mul_laurent(&q));
    residual_check(&mut report, "(w-z)^(3M) split through zeta", &lhs, &rhs);

    let a1 = series("a", 1, &zeta);
    let r1 = a1
        .mul(&series("x", 0, &w))?
        .mul_laurent(&wzeta_m)
        .derive()
        .mul(&series("y", 0, &z))?
        .mul_laurent(&wz_m)
        .sub(&a1.mul_laurent(&wzeta_m).mul(&series("x", 1, &w).mul(&series("y", 0, &z))?.mul_laurent(&wz_m))?);
    residual_check(&mut report, "first summand rewritten via (a' x (w-zeta)^M)'", &first, &r1);

    let r2 = a1
        .mul(&series("y", 0, &z))?
        .mul_laurent(&zetaz_m)
        .derive()
        .mul(&series("x", 0, &w))?
        .mul_laurent(&wz_m)
        .sub(&a1.mul_laurent(&zetaz_m).mul(&series("y", 1, &z).mul(&series("x", 0, &w))?.mul_laurent(&wz_m))?);
    residual_check(&mut report, "second summand rewritten via (a' y (zeta-z)^M)'", &second, &r2);

    // coefficients of the left side are a''(k) f^{0,0}(n,m; 3M)
    let mut bad = Vec::new();
    let (ga, gx, gy) = (Gen::new("a"), Gen::new("x"), Gen::new("y"));
    for k in -1..=1 {
        for n in -1..=1 {
            for mm in -1..=1 {
                let idx = [(zeta.clone(), k), (w.clone(), n - 3 * m as i64), (z.clone(), mm)].into_iter().collect();
                let got = lhs.coefficient(&idx)?;
                let expect = emit_fpq(&gx, &gy, 0, 0, n, mm, 3 * m).mul_monomial(&Monomial::var(DiffVar::new(ga.clone(), 2, k)));
                if got != expect {
                    bad.push(format!("k={k} n={n} m={mm}: {got}"));
                }
            }
        }
    }
    report.check("coefficients equal a''(k) f^{0,0}(n,m; 3M) for k,n,m in [-1,1]", bad.is_empty(), bad);
    Ok(timed(report, start))
}

/// The split of `a(zeta) x^(p)(w) y^(q)(z) (w-z)^((p+q)M)`, plus the
/// one-sided rewriting when `p = 0` or `q = 0`.
pub fn run_series_pq(m: u32, p: u32, q: u32) -> Result<ScenarioReport, HarnessError> {
    require_m(m)?;
    if p + q == 0 {
        return Err(HarnessError::Usage("series_pq needs p + q >= 1".into()));
    }
    let start = Instant::now();
    let mut report = ScenarioReport::new("series_pq", 0);
    report.param("M", m).param("p", p).param("q", q);
    let (w, z, zeta) = (fv("w"), fv("z"), fv("zeta"));

    let a = series("a", 0, &zeta);
    let axy = a.mul(&series("x", p, &w))?.mul(&series("y", q, &z))?;
    let lhs = axy.mul_laurent(&binom_power(&w, &z, (p + q) * m));
    let (pp, qq) = binom_split(&w, &z, &zeta, p * m, q * m);
    let rhs = axy
        .mul_laurent(&binom_power(&w, &zeta, p * m))
        .mul_laurent(&pp)
        .add(&axy.mul_laurent(&binom_power(&zeta, &z, q * m)).mul_laurent(&qq));
    residual_check(&mut report, "(w-z)^((p+q)M) split through zeta", &lhs, &rhs);

    let wz_m = binom_power(&w, &z, m);
    if q == 0 {
        let inner = series("x", p - 1, &w).mul(&series("y", 0, &z))?.mul_laurent(&binom_power(&w, &z, (p - 1) * m));
        let first = a.mul(&inner.derive())?.mul_laurent(&wz_m);
        let second = a.mul(&series("x", p - 1, &w))?.mul(&series("y", 1, &z))?.mul_laurent(&binom_power(&w, &z, p * m));
        residual_check(&mut report, "q = 0 rewriting via (x^(p-1) y (w-z)^((p-1)M))'", &lhs, &first.sub(&second));
    }
    if p == 0 {
        let inner = series("x", 0, &w).mul(&series("y", q - 1, &z))?.mul_laurent(&binom_power(&w, &z, (q - 1) * m));
        let first = a.mul(&inner.derive())?.mul_laurent(&wz_m);
        let second = a.mul(&series("x", 1, &w))?.mul(&series("y", q - 1, &z))?.mul_laurent(&binom_power(&w, &z, q * m));
        residual_check(&mut report, "p = 0 rewriting via (x y^(q-1) (w-z)^((q-1)M))'", &lhs, &first.sub(&second));
    }
    Ok(timed(report, start))
}

/// Runs the membership oracle for `h` against `I(N)` over `window` and
/// records the outcome.
fn membership_check(
    report: &mut ScenarioReport,
    name: &str,
    h: &DiffPoly,
    locality_fn: &LocalityFn,
    window: Window,
) -> Result<(), HarnessError> {
    report.windows.push(window);
    let gens = generators_i(&alphabet(), locality_fn, &window)?;
    match membership(h, &gens, &window) {
        Some(cert) => {
            let ok = verify_certificate(h, &cert, &gens)?;
            let mut details = vec![format!("target: {h}"), format!("{} summands, verified: {ok}", cert.entries.len())];
            details.extend(cert.lines());
            report.check(name, ok, details);
        }
        None => report.check(
            name,
            false,
            vec![
                format!("target: {h}"),
                format!("no certificate within {window} ({} generators)", gens.len()),
            ],
        ),
    }
    Ok(())
}

/// Membership of an arbitrary target in `I(N)` over the letters `a, x, y`.
pub fn run_membership(h: &DiffPoly, locality_fn: &LocalityFn, window: Window) -> Result<ScenarioReport, HarnessError> {
    let start = Instant::now();
    let mut report = ScenarioReport::new("membership", 0);
    report.param("N_default", locality_fn.bound());
    membership_check(&mut report, &format!("{h} in I(N)"), h, locality_fn, window)?;
    Ok(timed(report, start))
}

fn letter(g: &str, p: u32, n: i64) -> Monomial {
    Monomial::var(DiffVar::new(g, p, n))
}

/// `a^(r)(k) f^{0,0}_{x,y}(n,m; 3M)` lies in `I(N)`.
pub fn run_case1(m: u32, k: i64, n: i64, mm: i64, r: u32, window: WindowOverride) -> Result<ScenarioReport, HarnessError> {
    require_m(m)?;
    if r < 2 {
        return Err(HarnessError::Usage("case1 needs a letter a^(r)(k) with r >= 2".into()));
    }
    let start = Instant::now();
    let mut report = ScenarioReport::new("case1", 0);
    report.param("M", m).param("k", k).param("n", n).param("m", mm).param("r", r);
    let [_, x, y] = alphabet();
    let h = emit_fpq(&x, &y, 0, 0, n, mm, 3 * m).mul_monomial(&letter("a", r, k));
    let w = window.apply(Window::around(&h, m, 0, 0))?;
    membership_check(&mut report, &format!("a^({r})({k}) f^{{0,0}}_{{x,y}}({n},{mm}; {}) in I(N)", 3 * m), &h, &LocalityFn::constant(m), w)?;
    Ok(timed(report, start))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Case2Variant {
    F10,
    F01,
    Df00,
}

impl std::str::FromStr for Case2Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "f10" => Ok(Case2Variant::F10),
            "f01" => Ok(Case2Variant::F01),
            "df00" => Ok(Case2Variant::Df00),
            _ => Err(format!("unknown case2 variant `{s}` (expected f10, f01 or df00)")),
        }
    }
}

impl fmt::Display for Case2Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case2Variant::F10 => "f10",
            Case2Variant::F01 => "f01",
            Case2Variant::Df00 => "df00",
        })
    }
}

pub fn run_case2(m: u32, variant: Case2Variant, n: i64, mm: i64, window: WindowOverride) -> Result<ScenarioReport, HarnessError> {
    require_m(m)?;
    let start = Instant::now();
    let mut report = ScenarioReport::new("case2", 0);
    report.param("M", m).param("variant", variant).param("n", n).param("m", mm);
    let locality_fn = LocalityFn::constant(m);
    let [_, x, y] = alphabet();
    match variant {
        Case2Variant::F10 => {
            let e = bar_n(1, 0, m, locality_fn.get(&x, &y))?;
            let lhs = emit_fpq(&x, &y, 1, 0, n, mm, e);
            let rhs = emit_f(&x, &y, n, mm, locality_fn.get(&x, &y));
            report.check("f^{1,0}_{x,y}(n,m) equals f_{x,y}(n,m)", lhs == rhs, vec![format!("{lhs}")]);
            let w = window.apply(Window::around(&lhs, m, 1, 0))?;
            membership_check(&mut report, &format!("f^{{1,0}}_{{x,y}}({n},{mm}; {e}) in I(N)"), &lhs, &locality_fn, w)?;
        }
        Case2Variant::F01 => {
            let e = bar_n(0, 1, m, locality_fn.get(&x, &y))?;
            let h = emit_fpq(&x, &y, 0, 1, n, mm, e);
            let sign = if m % 2 == 0 { rat(1) } else { rat(-1) };
            let reindexed = emit_f(&y, &x, mm + m as i64, n - m as i64, m).scale(&sign);
            report.check(
                format!("f^{{0,1}}_{{x,y}}({n},{mm}; {e}) = (-1)^M f_{{y,x}}({},{}; {m})", mm + m as i64, n - m as i64),
                h == reindexed,
                vec![format!("{h}")],
            );
            let w = window.apply(Window::around(&h, m, 0, 1))?;
            membership_check(&mut report, "f^{0,1}_{x,y} in I(N) with unit multipliers", &h, &locality_fn, w)?;
        }
        Case2Variant::Df00 => {
            let e = bar_n(0, 0, m, locality_fn.get(&x, &y))?;
            let base = emit_fpq(&x, &y, 0, 0, n, mm, e);
            let leib = leibniz_fpq(&x, &y, 0, 0, n, mm, e);
            report.check(
                format!("d f^{{0,0}} = f^{{1,0}} + f^{{0,1}} at common exponent {e}"),
                leib.holds(),
                vec![format!("residual: {}", leib.residual)],
            );
            let h = base.derive();
            let w = window.apply(Window::around(&h, m, 0, 0))?;
            membership_check(&mut report, &format!("d f^{{0,0}}_{{x,y}}({n},{mm}; {e}) in I(N)"), &h, &locality_fn, w)?;
        }
    }
    Ok(timed(report, start))
}

/// `u d^l f^{p,q}_{x,y}(n,m; barN)` lies in `I(N)`, with `u` a product of
/// `p + q + l - 1` letters `a(k)`.
#[allow(clippy::too_many_arguments)]
pub fn run_case3(
    m: u32,
    p: u32,
    q: u32,
    l: u32,
    k: i64,
    n: i64,
    mm: i64,
    window: WindowOverride,
) -> Result<ScenarioReport, HarnessError> {
    require_m(m)?;
    if p + q + l < 2 {
        return Err(HarnessError::Usage("case3 needs p + q + l >= 2".into()));
    }
    let start = Instant::now();
    let mut report = ScenarioReport::new("case3", 0);
    report.param("M", m).param("p", p).param("q", q).param("l", l).param("k", k).param("n", n).param("m", mm);
    let locality_fn = LocalityFn::constant(m);
    let [_, x, y] = alphabet();
    let e = bar_n(p, q, m, locality_fn.get(&x, &y))?;
    let letters = (p + q + l - 1) as usize;
    let u = Monomial::from_vars(vec![DiffVar::new("a", 0, k); letters]);
    debug_assert_eq!(u.weight(), 1 - (p + q + l) as i64);
    let h = emit_fpq(&x, &y, p, q, n, mm, e).derive_n(l).mul_monomial(&u);
    let w = window.apply(Window::around(&h, m, p, q))?;
    membership_check(
        &mut report,
        &format!("{u} * d^{l} f^{{{p},{q}}}_{{x,y}}({n},{mm}; {e}) in I(N)"),
        &h,
        &locality_fn,
        w,
    )?;
    Ok(timed(report, start))
}

/// `sum_s C(d,s) a^(p+s) (*)_n b^(q+d-s)`, kept as a formal sum.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateKRelation {
    pub a: Gen,
    pub b: Gen,
    pub n: u32,
    /// `(C(d,s), p + s, q + d - s)`.
    pub terms: Vec<(Rational, u32, u32)>,
}

impl GenerateKRelation {
    /// Coefficient image: each `a^(i) (*)_n b^(j)` becomes
    /// `f^{i,j}_{a,b}(n0, m0; e)`, all at the common exponent `e`.
    pub fn coefficient_image(&self, n0: i64, m0: i64, e: u32) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (c, i, j) in &self.terms {
            out.add_scaled(&emit_fpq(&self.a, &self.b, *i, *j, n0, m0, e), c);
        }
        out
    }
}

impl fmt::Display for GenerateKRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(c, i, j)| {
                let coeff = if c.is_one() { String::new() } else { format!("{c}*") };
                format!("{coeff}{}^({i}) (*)_{} {}^({j})", self.a, self.n, self.b)
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

pub fn emit_generate_k_relation(a: &Gen, b: &Gen, p: u32, q: u32, d: u32, n: u32) -> GenerateKRelation {
    let terms = (0..=d).map(|s| (int(&choose(d as u64, s as u64)), p + s, q + d - s)).collect();
    GenerateKRelation { a: a.clone(), b: b.clone(), n, terms }
}

/// The relation's coefficient image equals `d^d f^{p,q}` at a common exponent.
pub fn run_generate_k(p: u32, q: u32, d: u32, e: u32) -> ScenarioReport {
    let start = Instant::now();
    let mut report = ScenarioReport::new("generate_k", 0);
    report.param("p", p).param("q", q).param("d", d).param("E", e);
    let [_, x, y] = alphabet();
    let rel = emit_generate_k_relation(&x, &y, p, q, d, e);
    let mut bad = Vec::new();
    for n0 in -2..=2 {
        for m0 in -2..=2 {
            let image = rel.coefficient_image(n0, m0, e);
            if image != emit_fpq(&x, &y, p, q, n0, m0, e).derive_n(d) {
                bad.push(format!("n={n0} m={m0}: {image}"));
            }
        }
    }
    report.check(format!("{rel} matches d^{d} f^{{{p},{q}}}"), bad.is_empty(), bad);
    timed(report, start)
}

/// Identity checks on `W`, the nested brackets, and the obstruction
/// `((v_k (0) x)_lam x) = (-lam)^k (del + lam)^k v_k`.
pub fn run_counterexample(kmax: u32) -> Result<ScenarioReport, HarnessError> {
    if kmax < 1 {
        return Err(HarnessError::Usage("counterexample needs kmax >= 1".into()));
    }
    let start = Instant::now();
    let mut report = ScenarioReport::new("counterexample", 0);
    report.param("kmax", kmax);
    let w = build_w(kmax);
    for which in [Identity::RsymNovikov, Identity::LcomNovikov] {
        let fails = check_on_generators(&w, which)?;
        let triples = w.generators().len().pow(3);
        let details = fails.iter().map(|f| format!("{:?}: {}", f.args, f.residual)).collect();
        report.check(format!("{which} on all {triples} generator triples"), fails.is_empty(), details);
    }

    let lam = Sym::lam();
    let lam_mu = OpPoly::lam().add(&OpPoly::mu());
    let neg_del_mu = OpPoly::del().neg().sub(&OpPoly::mu());
    let x = ConfElement::gen("x");
    let mut intermediates = Vec::new();
    let mut ok = true;
    for k in 0..=kmax {
        let vk = ConfElement::gen(w_generator(k));
        let left = bracket_at(&w, &bracket(&w, &vk, &x, &lam)?, &x, &lam_mu)?;
        let expect_left = vk.scale(&OpPoly::mu().neg().pow(k).mul(&OpPoly::del().add(&lam_mu).pow(k)));
        let right = bracket_at(&w, &bracket(&w, &vk, &x, &lam)?, &x, &neg_del_mu)?;
        let expect_right = vk.scale(&OpPoly::del().add(&OpPoly::mu()).add(&OpPoly::lam()).pow(k).mul(&OpPoly::mu().neg().pow(k)));
        ok &= left == expect_left && right == expect_right && left == right;
        intermediates.push(format!("k={k}: {left}"));
    }
    report.check("((v_k lam x) lam+mu x) = (-mu)^k (del+lam+mu)^k v_k = ((v_k lam x) -del-mu x)", ok, intermediates);

    let mut seq = Vec::new();
    let mut ok = true;
    let mut details = Vec::new();
    for k in 0..=kmax {
        let vk = ConfElement::gen(w_generator(k));
        let zero_prod = n_product(&w, &vk, &x, 0)?;
        let b = bracket(&w, &zero_prod, &x, &lam)?;
        let expect = vk.scale(&OpPoly::lam().neg().pow(k).mul(&OpPoly::del().add(&OpPoly::lam()).pow(k)));
        let loc = locality(&w, &zero_prod, &x)?;
        let top = b.coeff_of(&lam, k);
        let sign = if k % 2 == 0 { rat(1) } else { rat(-1) };
        let expect_top = vk.scale(&OpPoly::del().pow(k).scale(&sign));
        ok &= b == expect && loc == 2 * k + 1 && top == expect_top && !top.is_zero();
        seq.push(loc.to_string());
        details.push(format!("k={k}: locality {loc}, lam^{k} coefficient {top}"));
    }
    details.insert(0, format!("locality sequence: {}", seq.join(",")));
    report.check("((v_k (0) x) lam x) = (-lam)^k (del+lam)^k v_k with locality 2k+1", ok, details);
    Ok(timed(report, start))
}

/// Terms over `X^(omega)` built from letters, n-products and `del`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfTerm {
    Letter(Gen, u32),
    Partial(Box<ConfTerm>),
    Product(u32, Box<ConfTerm>, Box<ConfTerm>),
    Sum(Vec<(Rational, ConfTerm)>),
}

impl ConfTerm {
    pub fn letter(g: &str, p: u32) -> Self {
        ConfTerm::Letter(Gen::new(g), p)
    }

    pub fn product(n: u32, l: ConfTerm, r: ConfTerm) -> Self {
        ConfTerm::Product(n, Box::new(l), Box::new(r))
    }

    pub fn partial(t: ConfTerm) -> Self {
        ConfTerm::Partial(Box::new(t))
    }

    /// The derivation `a^(p) -> a^(p+1)`, commuting with `del` and acting
    /// on products by Leibniz.
    pub fn derivation(&self) -> ConfTerm {
        match self {
            ConfTerm::Letter(g, p) => ConfTerm::Letter(g.clone(), p + 1),
            ConfTerm::Partial(t) => ConfTerm::partial(t.derivation()),
            ConfTerm::Product(n, l, r) => ConfTerm::Sum(vec![
                (Rational::one(), ConfTerm::product(*n, l.derivation(), (**r).clone())),
                (Rational::one(), ConfTerm::product(*n, (**l).clone(), r.derivation())),
            ]),
            ConfTerm::Sum(parts) => ConfTerm::Sum(parts.iter().map(|(c, t)| (c.clone(), t.derivation())).collect()),
        }
    }
}

impl fmt::Display for ConfTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfTerm::Letter(g, p) => write!(f, "{g}^({p})"),
            ConfTerm::Partial(t) => write!(f, "del({t})"),
            ConfTerm::Product(n, l, r) => write!(f, "({l} (*)_{n} {r})"),
            ConfTerm::Sum(parts) => {
                let s: Vec<String> = parts.iter().map(|(c, t)| format!("{c}*{t}")).collect();
                write!(f, "[{}]", s.join(" + "))
            }
        }
    }
}

/// Weight with `wt(a^(p)) = p - 1`, additive on products, unchanged by
/// `del`. `None` for inhomogeneous sums; an empty sum is `None` as well.
pub fn check_wt_conformal(t: &ConfTerm) -> Option<i64> {
    match t {
        ConfTerm::Letter(_, p) => Some(*p as i64 - 1),
        ConfTerm::Partial(inner) => check_wt_conformal(inner),
        ConfTerm::Product(_, l, r) => Some(check_wt_conformal(l)? + check_wt_conformal(r)?),
        ConfTerm::Sum(parts) => {
            let mut ws = parts.iter().filter(|(c, _)| !c.is_zero()).map(|(_, t)| check_wt_conformal(t));
            let first = ws.next()??;
            for w in ws {
                if w? != first {
                    return None;
                }
            }
            Some(first)
        }
    }
}

/// Terms over `X` in the Novikov operations `(u o_n v)` and `del`.
#[derive(Debug, Clone, PartialEq)]
pub enum NovTerm {
    Letter(Gen),
    Partial(Box<NovTerm>),
    Product(u32, Box<NovTerm>, Box<NovTerm>),
}

impl NovTerm {
    /// `(u o_n v) = (D u (*)_n v)`.
    pub fn to_conformal(&self) -> ConfTerm {
        match self {
            NovTerm::Letter(g) => ConfTerm::Letter(g.clone(), 0),
            NovTerm::Partial(t) => ConfTerm::partial(t.to_conformal()),
            NovTerm::Product(n, l, r) => ConfTerm::product(*n, l.to_conformal().derivation(), r.to_conformal()),
        }
    }
}

/// Random Novikov term with `leaves` letters from `a, x, y`.
pub fn random_nov_term<R: rand::Rng>(rng: &mut R, leaves: usize) -> NovTerm {
    if leaves <= 1 {
        let t = NovTerm::Letter(alphabet()[rng.gen_range(0..3)].clone());
        return if rng.gen_bool(0.2) { NovTerm::Partial(Box::new(t)) } else { t };
    }
    let split = rng.gen_range(1..leaves);
    NovTerm::Product(
        rng.gen_range(0..3),
        Box::new(random_nov_term(rng, split)),
        Box::new(random_nov_term(rng, leaves - split)),
    )
}

fn one_dim_np() -> (StructureConstants, StructureConstants) {
    let mut c = StructureConstants::zero(1);
    c.set(0, 0, vec![rat(1)]);
    (c.clone(), c)
}

/// The quadratic conformal algebra of the one-dimensional Novikov-Poisson
/// algebra `e o e = e * e = e`.
pub fn run_quadratic_np(seed: u64) -> Result<ScenarioReport, HarnessError> {
    let start = Instant::now();
    let mut report = ScenarioReport::new("quadratic_np", seed);
    let (circ, star) = one_dim_np();
    let np = confalg::check_np_axioms(&circ, &star)?;
    report.check("Novikov-Poisson axioms on the basis", np.passed(), vec![]);
    let a = quadratic_from_np(&[Gen::new("e")], &circ, &star)?;
    let e = Gen::new("e");
    report.check("(e lam e) = (1 + lam) e", a.table(&e, &e).map(ToString::to_string) == Some("(1 + lam)*e".into()), vec![]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for which in [Identity::RsymNovikov, Identity::LcomNovikov] {
        let gens = check_on_generators(&a, which)?;
        let random = check_on_random(&a, which, 20, &mut rng)?;
        report.check(format!("{which} on generators and 20 random elements"), gens.is_empty() && random.is_empty(), vec![]);
    }
    Ok(timed(report, start))
}

/// The derived algebra of the current algebra over `span{one, t | t^2 = 0}`.
pub fn run_gelfand_demo(seed: u64) -> Result<ScenarioReport, HarnessError> {
    let start = Instant::now();
    let mut report = ScenarioReport::new("gelfand_demo", seed);
    let cur = dual_numbers_current();
    report.check(
        "current algebra is commutative",
        check_on_generators(&cur, Identity::Commutative)?.is_empty(),
        vec![],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d_one = DerivationTable::new();
    d_one.set("t", ConfElement::gen("one"));
    let mut d_euler = DerivationTable::new();
    d_euler.set("t", ConfElement::gen("t"));
    for (label, d) in [("D(t) = one", d_one), ("D(t) = t", d_euler), ("D = del", DerivationTable::partial(&cur))] {
        let derivation = check_derivation(&cur, &d)?;
        if derivation.passed() {
            report.notes.push(format!("{label} is a derivation"));
        } else {
            for (g, h, r) in &derivation.failures {
                report.notes.push(format!("{label} is not a derivation: residual at ({g}, {h}) is {r}"));
            }
        }
        let derived = gelfand(&cur, &d)?;
        let table: Vec<String> = derived.table_entries().map(|((g, h), v)| format!("({g} o_lam {h}) = {v}")).collect();
        for which in [Identity::RsymNovikov, Identity::LcomNovikov] {
            let gens = check_on_generators(&derived, which)?;
            let random = check_on_random(&derived, which, 50, &mut rng)?;
            report.check(
                format!("{label}: {which} on generators and 50 random elements"),
                gens.is_empty() && random.is_empty(),
                table.clone(),
            );
        }
    }
    Ok(timed(report, start))
}

/// Coefficient-algebra products and locality relations for the quadratic
/// algebra and for `W`.
pub fn run_coeff_locality(seed: u64, lo: i64, hi: i64) -> Result<ScenarioReport, HarnessError> {
    if lo > hi {
        return Err(HarnessError::Usage(format!("empty window {lo}:{hi}")));
    }
    let start = Instant::now();
    let mut report = ScenarioReport::new("coeff_locality", seed);
    report.param("window", format!("{lo}:{hi}"));
    let (circ, star) = one_dim_np();
    let a = quadratic_from_np(&[Gen::new("e")], &circ, &star)?;
    let e = Gen::new("e");
    let mut bad = Vec::new();
    for n in lo..=hi {
        for m in lo..=hi {
            let got = coeffalg::product(&a, &CoeffElement::symbol(e.clone(), n), &CoeffElement::symbol(e.clone(), m))?;
            let mut expect = CoeffElement::symbol(e.clone(), n + m);
            expect.add_term(e.clone(), n + m - 1, rat(n));
            if got != expect {
                bad.push(format!("e({n}) e({m}) = {got}"));
            }
        }
    }
    report.check("e(n) e(m) = e(n+m) + n e(n+m-1)", bad.is_empty(), bad);
    let loc = check_locality_relations(&a, &e, &e, 2, lo, hi)?;
    report.check(
        format!("locality relations with N = 2 ({} pairs)", loc.checked),
        loc.passed(),
        loc.failures.iter().map(|f| format!("n={} m={}: {}", f.n, f.m, f.residual)).collect(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nov = check_coeff_identities(&a, CoeffIdentity::Novikov, 100, lo, hi, &mut rng)?;
    report.check("Novikov identities on 100 sampled triples", nov.passed(), vec![]);

    let w = build_w(3);
    let x = Gen::new("x");
    let mut ok = true;
    for k in 0..=3 {
        let vk = w_generator(k);
        ok &= check_locality_relations(&w, &vk, &x, k + 1, lo, hi)?.passed();
    }
    report.check("W: locality relations for (v_k, x) with N = k + 1", ok, vec![]);
    let nov = check_coeff_identities(&w, CoeffIdentity::Novikov, 30, lo, hi, &mut rng)?;
    report.check("W: Novikov identities on 30 sampled triples", nov.passed(), vec![]);
    Ok(timed(report, start))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_identities() {
        for m in 1..=2 {
            assert!(run_series00(m).unwrap().passed());
        }
        for (m, p, q) in [(1, 1, 1), (1, 2, 0), (2, 0, 2), (1, 1, 0), (1, 0, 1)] {
            let r = run_series_pq(m, p, q).unwrap();
            assert!(r.passed(), "{}", r.render_text(false));
        }
        assert!(matches!(run_series00(0), Err(HarnessError::Usage(_))));
        assert!(matches!(run_series_pq(1, 0, 0), Err(HarnessError::Usage(_))));
    }

    #[test]
    fn p0_rewriting_is_checked() {
        let r = run_series_pq(1, 2, 0).unwrap();
        assert_eq!(r.checks.len(), 2);
        let r = run_series_pq(1, 0, 2).unwrap();
        assert_eq!(r.checks.len(), 2);
        assert_eq!(run_series_pq(1, 1, 1).unwrap().checks.len(), 1);
    }

    #[test]
    fn case_scenarios() {
        let r = run_case1(1, 0, 0, 0, 2, WindowOverride::default()).unwrap();
        assert!(r.passed(), "{}", r.render_text(false));
        assert_eq!(r.windows[0].index_lo, -6);
        assert!(matches!(run_case1(1, 0, 0, 0, 1, WindowOverride::default()), Err(HarnessError::Usage(_))));
        for v in [Case2Variant::F10, Case2Variant::F01, Case2Variant::Df00] {
            let r = run_case2(1, v, 0, 0, WindowOverride::default()).unwrap();
            assert!(r.passed(), "{}", r.render_text(false));
        }
        let r = run_case3(1, 1, 0, 1, 0, 0, 0, WindowOverride::default()).unwrap();
        assert!(r.passed(), "{}", r.render_text(false));
        assert!(matches!(run_case3(1, 1, 0, 0, 0, 0, 0, WindowOverride::default()), Err(HarnessError::Usage(_))));
    }

    #[test]
    fn f01_reindexing_example() {
        let [_, x, y] = alphabet();
        assert_eq!(emit_fpq(&x, &y, 0, 1, 0, 0, 1), emit_f(&y, &x, 1, -1, 1).scale(&rat(-1)));
    }

    #[test]
    fn generate_k_relations() {
        let [a, _, b] = alphabet();
        let r0 = emit_generate_k_relation(&a, &b, 2, 1, 0, 3);
        assert_eq!(r0.terms, vec![(rat(1), 2, 1)]);
        let r1 = emit_generate_k_relation(&a, &b, 0, 0, 1, 3);
        assert_eq!(r1.terms, vec![(rat(1), 0, 1), (rat(1), 1, 0)]);
        assert_eq!(r1.to_string(), "a^(0) (*)_3 y^(1) + a^(1) (*)_3 y^(0)");
        for d in 0..4 {
            assert_eq!(emit_generate_k_relation(&a, &b, 1, 1, d, 0).terms.len(), d as usize + 1);
            assert!(run_generate_k(1, 0, d, 2).passed());
        }
    }

    #[test]
    fn counterexample_small() {
        let r = run_counterexample(3).unwrap();
        assert!(r.passed(), "{}", r.render_text(false));
        assert!(r.render_text(false).contains("locality sequence: 1,3,5,7"));
        assert!(run_counterexample(0).is_err());
    }

    #[test]
    fn weights_of_conformal_terms() {
        assert_eq!(check_wt_conformal(&ConfTerm::letter("a", 0)), Some(-1));
        let t = ConfTerm::product(2, ConfTerm::letter("a", 1), ConfTerm::letter("b", 0));
        assert_eq!(check_wt_conformal(&t), Some(-1));
        assert_eq!(check_wt_conformal(&ConfTerm::partial(ConfTerm::letter("a", 2))), Some(1));
        let mixed = ConfTerm::Sum(vec![(rat(1), ConfTerm::letter("a", 0)), (rat(1), ConfTerm::letter("a", 1))]);
        assert_eq!(check_wt_conformal(&mixed), None);
        assert_eq!(check_wt_conformal(&t.derivation()), Some(0));
    }

    #[test]
    fn novikov_terms_land_in_weight_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for leaves in 1..6 {
            for _ in 0..20 {
                let t = random_nov_term(&mut rng, leaves);
                assert_eq!(check_wt_conformal(&t.to_conformal()), Some(-1), "{}", t.to_conformal());
            }
        }
    }

    #[test]
    fn demo_scenarios() {
        assert!(run_quadratic_np(0).unwrap().passed());
        let g = run_gelfand_demo(0).unwrap();
        assert!(g.passed(), "{}", g.render_text(false));
        assert!(g.notes.iter().any(|n| n.contains("D(t) = one is not a derivation")));
        assert!(run_coeff_locality(0, -2, 2).unwrap().passed());
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run_case2(1, Case2Variant::Df00, 0, 0, WindowOverride::default()).unwrap().render_text(false);
        let b = run_case2(1, Case2Variant::Df00, 0, 0, WindowOverride::default()).unwrap().render_text(false);
        assert_eq!(a, b);
    }
}
