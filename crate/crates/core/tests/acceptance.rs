//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the table is printed on every `cargo test`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use novconf::coeffalg::{check_coeff_identities, check_locality_relations, product, CoeffElement, CoeffIdentity};
use novconf::confalg::{
    bracket, bracket_at, build_w, check_on_generators, check_on_random, dual_numbers_current, gelfand, locality, n_product,
    quadratic_from_np, w_generator, ConfElement, DerivationTable, Identity, OpPoly, StructureConstants, Sym,
};
use novconf::diffpoly::check_novikov_axioms;
use novconf::distribution::{binom_power, binom_split};
use novconf::dsl::{parse, print, tokenize, TokenKind};
use novconf::embedharness::{run_case1, run_case2, run_case3, run_series00, run_series_pq, Case2Variant, ScenarioReport};
use novconf::exactnum::{rat, Rational};
use novconf::idealkit::{emit_fpq, leibniz_fpq, pascal_reduce, WindowOverride};
use novconf::sampling::random_weight_minus_one;
use novconf::{DiffPoly, Distribution, FVar, Gen};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn passed(r: &ScenarioReport) -> Result<(), String> {
    ensure(r.passed(), || r.render_text(false))
}

fn counterexample_suite() -> Outcome {
    let w = build_w(8);
    for which in [Identity::RsymNovikov, Identity::LcomNovikov] {
        let f = check_on_generators(&w, which).map_err(|e| e.to_string())?;
        ensure(f.is_empty(), || format!("{which}: {} failing triples", f.len()))?;
    }
    let (lam, mu, del) = (OpPoly::lam(), OpPoly::mu(), OpPoly::del());
    let x = ConfElement::gen("x");
    for k in 0..=8 {
        let vk = ConfElement::gen(w_generator(k));
        let inner = bracket(&w, &vk, &x, &Sym::lam()).map_err(|e| e.to_string())?;
        let left = bracket_at(&w, &inner, &x, &lam.add(&mu)).map_err(|e| e.to_string())?;
        let right = bracket_at(&w, &inner, &x, &del.neg().sub(&mu)).map_err(|e| e.to_string())?;
        // (-mu)^k (del+lam+mu)^k v_k and (del+mu+lam)^k (-mu)^k v_k
        let display_left = vk.scale(&mu.neg().pow(k).mul(&del.add(&lam).add(&mu).pow(k)));
        let display_right = vk.scale(&del.add(&mu).add(&lam).pow(k).mul(&mu.neg().pow(k)));
        ensure(left == display_left, || format!("k={k}: rsym side {left}"))?;
        ensure(right == display_right, || format!("k={k}: lcom side {right}"))?;
    }
    Ok("729 generator triples per identity, residual 0; intermediates equal for k <= 8".into())
}

fn obstruction() -> Outcome {
    let w = build_w(8);
    let x = ConfElement::gen("x");
    let (lam, del) = (OpPoly::lam(), OpPoly::del());
    let mut seq = Vec::new();
    for k in 0..=8u32 {
        let vk = ConfElement::gen(w_generator(k));
        let zero = n_product(&w, &vk, &x, 0).map_err(|e| e.to_string())?;
        let b = bracket(&w, &zero, &x, &Sym::lam()).map_err(|e| e.to_string())?;
        ensure(b == vk.scale(&lam.neg().pow(k).mul(&del.add(&lam).pow(k))), || format!("k={k}: {b}"))?;
        let loc = locality(&w, &zero, &x).map_err(|e| e.to_string())?;
        ensure(loc == 2 * k + 1, || format!("k={k}: locality {loc}"))?;
        let top = b.coeff_of(&Sym::lam(), k);
        let sign = if k % 2 == 0 { rat(1) } else { rat(-1) };
        ensure(!top.is_zero() && top == vk.scale(&del.pow(k).scale(&sign)), || format!("k={k}: top {top}"))?;
        seq.push(loc.to_string());
    }
    Ok(format!("localities {}", seq.join(",")))
}

fn free_novikov() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..200 {
        let f = random_weight_minus_one(&mut rng, 3, 4, 2);
        let g = random_weight_minus_one(&mut rng, 3, 4, 2);
        let h = random_weight_minus_one(&mut rng, 3, 4, 2);
        let r = check_novikov_axioms(&f, &g, &h);
        ensure(r.holds(), || format!("triple {i}: {f} | {g} | {h}"))?;
    }
    let (x, y, z) = (DiffPoly::x("x", 0, 0), DiffPoly::x("y", 0, 0), DiffPoly::x("z", 0, 0));
    let assoc = &x.novikov_product(&y).novikov_product(&z) - &x.novikov_product(&y.novikov_product(&z));
    let expect = &(&DiffPoly::x("x", 2, 0) * &y) * &z;
    ensure(assoc == expect, || format!("associator {assoc}"))?;
    Ok("200 random triples, residual 0; associator x^(2) y z".into())
}

fn series_identities() -> Outcome {
    let (w, z, zeta) = (FVar::new("w"), FVar::new("z"), FVar::new("zeta"));
    for a in 0..=4 {
        for b in 0..=4 {
            let (p, q) = binom_split(&w, &z, &zeta, a, b);
            let lhs = binom_power(&w, &z, a + b);
            let rhs = binom_power(&w, &zeta, a).mul(&p).add(&binom_power(&zeta, &z, b).mul(&q));
            ensure(lhs == rhs, || format!("split fails at a={a}, b={b}"))?;
        }
    }
    let mut runs = 0;
    for m in 1..=3 {
        passed(&run_series00(m).map_err(|e| e.to_string())?)?;
        runs += 1;
        for p in 0..=3u32 {
            for q in 0..=3 - p {
                if p + q == 0 {
                    continue;
                }
                let r = run_series_pq(m, p, q).map_err(|e| e.to_string())?;
                passed(&r)?;
                if p == 0 {
                    ensure(r.checks.iter().any(|c| c.name.starts_with("p = 0 rewriting")), || "missing p = 0 rewriting".into())?;
                }
                runs += 1;
            }
        }
    }
    Ok(format!("25 splits and {runs} series runs, residual 0"))
}

fn case_certificates() -> Outcome {
    let dflt = WindowOverride::default();
    let mut reports = Vec::new();
    for r in [2, 3] {
        reports.push(run_case1(1, 0, 1, -1, r, dflt).map_err(|e| e.to_string())?);
    }
    for v in [Case2Variant::F10, Case2Variant::F01, Case2Variant::Df00] {
        reports.push(run_case2(1, v, 0, 0, dflt).map_err(|e| e.to_string())?);
    }
    for (p, q, l) in [(1, 1, 0), (2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 0, 1)] {
        reports.push(run_case3(1, p, q, l, 0, 0, 0, dflt).map_err(|e| e.to_string())?);
    }
    let mut summands = 0;
    for r in &reports {
        passed(r)?;
        let cert = r.checks.iter().find(|c| c.name.contains(" in I(N)")).ok_or_else(|| format!("{}: no membership check", r.scenario))?;
        ensure(cert.details.iter().any(|d| d.ends_with("verified: true")), || r.render_text(false))?;
        summands += cert.details.len() - 2;
    }
    Ok(format!("{} certificates verified, {summands} summands in total", reports.len()))
}

fn family_identities() -> Outcome {
    let (a, b) = (Gen::new("x"), Gen::new("y"));
    let mut count = 0;
    for e in 1..=6 {
        for n in -3..=3 {
            for m in -3..=3 {
                ensure(pascal_reduce(&a, &b, n, m, e).holds(), || format!("pascal E={e} n={n} m={m}"))?;
                count += 1;
            }
        }
    }
    for p in 0..=3 {
        for q in 0..=3 - p {
            for e in 0..=6 {
                for n in -2..=2 {
                    for m in -2..=2 {
                        ensure(leibniz_fpq(&a, &b, p, q, n, m, e).holds(), || format!("leibniz p={p} q={q} E={e}"))?;
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{count} instances, residual 0"))
}

/// `C(n, s)` for any integer `n`.
fn gbinom(n: i64, s: u32) -> Rational {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..s as i64 {
        num *= n - i;
        den *= i + 1;
    }
    Rational::new(num, den)
}

fn falling(n: i64, j: u32) -> Rational {
    (0..j as i64).fold(Rational::one(), |acc, i| acc * rat(n - i))
}

fn coefficient_algebra() -> Outcome {
    let mut c = StructureConstants::zero(1);
    c.set(0, 0, vec![rat(1)]);
    let e = Gen::new("e");
    let a = quadratic_from_np(&[e.clone()], &c, &c).map_err(|e| e.to_string())?;
    for n in -4..=4 {
        for m in -4..=4 {
            let got = product(&a, &CoeffElement::symbol(e.clone(), n), &CoeffElement::symbol(e.clone(), m)).map_err(|e| e.to_string())?;
            let mut expect = CoeffElement::symbol(e.clone(), n + m);
            expect.add_term(e.clone(), n + m - 1, rat(n));
            ensure(got == expect, || format!("e({n}) e({m}) = {got}"))?;
        }
    }
    let loc = check_locality_relations(&a, &e, &e, 2, -4, 4).map_err(|e| e.to_string())?;
    ensure(loc.passed(), || format!("{} locality failures", loc.failures.len()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let nov = check_coeff_identities(&a, CoeffIdentity::Novikov, 100, -4, 4, &mut rng).map_err(|e| e.to_string())?;
    ensure(nov.passed(), || format!("{} Novikov failures", nov.failures.len()))?;

    // W: v_k(n) x(m) = sum_s C(n,s) s! C(k,s) (del^(k-s) v_k)(n+m-s), with
    // (del^j g)(i) = (-1)^j i(i-1)...(i-j+1) g(i-j); every other product is 0.
    let w = build_w(3);
    let mut checked = 0;
    for g in w.generators() {
        for h in w.generators() {
            for n in -3..=3 {
                for m in -3..=3 {
                    let got = product(&w, &CoeffElement::symbol(g.clone(), n), &CoeffElement::symbol(h.clone(), m)).map_err(|e| e.to_string())?;
                    let mut expect = CoeffElement::zero();
                    if let (Some(k), "x") = (g.as_str().strip_prefix('v').and_then(|s| s.parse::<u32>().ok()), h.as_str()) {
                        let mut total = Rational::zero();
                        for s in 0..=k {
                            let sfact: Rational = (1..=s as i64).fold(Rational::one(), |acc, i| acc * rat(i));
                            let sign = if (k - s) % 2 == 0 { rat(1) } else { rat(-1) };
                            total += gbinom(n, s) * sfact * gbinom(k as i64, s) * sign * falling(n + m - s as i64, k - s);
                        }
                        expect.add_term(g.clone(), n + m - k as i64, total);
                    }
                    ensure(got == expect, || format!("{g}({n}) {h}({m}) = {got}, expected {expect}"))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("81 products, {} locality pairs, 100 Novikov triples, {checked} W products", loc.checked))
}

fn gelfand_construction() -> Outcome {
    let cur = dual_numbers_current();
    let mut d = DerivationTable::new();
    d.set("t", ConfElement::gen("one"));
    let derived = gelfand(&cur, &d).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for which in [Identity::RsymNovikov, Identity::LcomNovikov] {
        let f = check_on_generators(&derived, which).map_err(|e| e.to_string())?;
        ensure(f.is_empty(), || format!("{which} fails on generators"))?;
        let f = check_on_random(&derived, which, 50, &mut rng).map_err(|e| e.to_string())?;
        ensure(f.is_empty(), || format!("{which} fails on random elements"))?;
    }
    Ok("8 generator triples and 50 random triples per identity, residual 0".into())
}

fn cross_module_oracle() -> Outcome {
    let (w, z) = (FVar::new("w"), FVar::new("z"));
    let (x, y) = (Gen::new("x"), Gen::new("y"));
    let mut count = 0;
    for p in 0..=2 {
        for q in 0..=2 {
            let xy = Distribution::series("x", p, &w).mul(&Distribution::series("y", q, &z)).map_err(|e| e.to_string())?;
            for e in 0..=4 {
                let dist = xy.mul_laurent(&binom_power(&w, &z, e));
                for n in -2..=2 {
                    for m in -2..=2 {
                        let idx = [(w.clone(), n - e as i64), (z.clone(), m)].into_iter().collect();
                        let got = dist.coefficient(&idx).map_err(|e| e.to_string())?;
                        ensure(got == emit_fpq(&x, &y, p, q, n, m, e), || format!("p={p} q={q} E={e} n={n} m={m}: {got}"))?;
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{count} coefficients equal"))
}

fn dsl_corpus() -> Outcome {
    let corpus = common::corpus();
    ensure(corpus.len() == 50, || format!("corpus has {} scripts", corpus.len()))?;
    let (mut mutations, mut errors) = (0, 0);
    for script in &corpus {
        let text = print(script);
        let back = parse(&text).map_err(|e| format!("{e}\n{text}"))?;
        ensure(&back == script, || format!("round trip differs:\n{text}"))?;
        let tokens = tokenize(&text).map_err(|e| e.to_string())?;
        for t in tokens.iter().filter(|t| t.kind != TokenKind::Eof) {
            mutations += 1;
            let mutated = format!("{}{}", &text[..t.start], &text[t.end..]);
            let Err(err) = parse(&mutated) else { continue };
            errors += 1;
            let site = match tokenize(&mutated) {
                Ok(ts) => ts.iter().find(|s| s.start >= t.start).map(|s| (s.line, s.column)).unwrap(),
                Err(lex) => (lex.line, lex.column),
            };
            ensure((err.line, err.column) <= site, || format!("deleting {:?} at {}:{}: {err}", t.kind, t.line, t.column))?;
        }
    }
    Ok(format!("50 scripts round-trip; {errors} of {mutations} single-token deletions rejected, all at or before the site"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("counterexample suite, kmax = 8, exact", Duration::from_secs(5), counterexample_suite),
        ("obstruction bracket and locality 2k+1, k <= 8, exact", Duration::from_secs(1), obstruction),
        ("free Novikov identities, 200 random triples, exact", Duration::from_secs(10), free_novikov),
        ("binomial split and series identities, M <= 3, exact", Duration::from_secs(30), series_identities),
        ("embedding case certificates at M = 1, default windows", Duration::from_secs(300), case_certificates),
        ("Pascal and Leibniz family identities, exact", Duration::from_secs(10), family_identities),
        ("coefficient algebra products, locality, Novikov, exact", Duration::from_secs(30), coefficient_algebra),
        ("Gelfand construction with D(t) = one, exact", Duration::from_secs(5), gelfand_construction),
        ("emit_fpq against distribution coefficients, exact", Duration::from_secs(10), cross_module_oracle),
        ("DSL round trip and error positions", Duration::from_secs(5), dsl_corpus),
    ];
    let mut failures = 0;
    println!("acceptance criteria (tolerance: exact equality throughout)");
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let ok = outcome.is_ok() && elapsed < *limit;
        failures += usize::from(!ok);
        let detail = match &outcome {
            Ok(s) => s.clone(),
            Err(e) => format!("error: {e}"),
        };
        println!(
            "[{}] {:>2}. {name}: {:.3} s (limit {} s); {detail}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
