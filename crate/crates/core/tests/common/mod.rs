//! Script corpus shared by the DSL tests and the acceptance suite.
#![allow(dead_code)]

use novconf::dsl::{parse, AlgebraDecl, Arg, ArgValue, BinOp, DerivationDecl, Expr, Item, LocalityDecl, NpDecl, Script, SCENARIOS};
use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HAND_WRITTEN: [&str; 4] = [
    "algebra W { generators: x, v1; bracket(v1, x) = (del + lam)*v1; }\ncheck rsym_novikov W;\n",
    "// quadratic algebra of a one-dimensional Novikov-Poisson table\n\
     npalgebra P { basis: e; circ(e, e) = e; star(e, e) = e; }\n\
     check np_axioms P;\ncheck lcom_novikov P;\nproduct P e(2) e(-1);\nlocality P e e;\n",
    "algebra C { generators: one, t;\n  bracket(one, one) = one; bracket(one, t) = t; bracket(t, one) = t;\n}\n\
     derivation D on C { t = one; }\ncheck gelfand_novikov D;\n",
    "localityfn N { default: 1; pair(a, x) = 0; }\n\
     membership target=[a^(2)(0)*fpq(x, y, 0, 0, 0, 0, 3)] locality=N window=-6:6 smax=2 degree=1;\n\
     scenario case2 M=1 variant=df00;\n",
];

fn num(rng: &mut ChaCha8Rng) -> Expr {
    Expr::Num(BigInt::from(rng.gen_range(0..12)))
}

fn small_int(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Expr {
    let n = rng.gen_range(lo..=hi);
    if n < 0 {
        Expr::Neg(Box::new(Expr::Num(BigInt::from(-n))))
    } else {
        Expr::Num(BigInt::from(n))
    }
}

fn combine(rng: &mut ChaCha8Rng, depth: u32, leaf: &mut dyn FnMut(&mut ChaCha8Rng) -> Expr) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return leaf(rng);
    }
    match rng.gen_range(0..7) {
        0 => Expr::Neg(Box::new(combine(rng, depth - 1, leaf))),
        1 => Expr::Pow(Box::new(combine(rng, depth - 1, leaf)), rng.gen_range(0..4)),
        k => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Mul][k - 2];
            Expr::Bin(op, Box::new(combine(rng, depth - 1, leaf)), Box::new(combine(rng, depth - 1, leaf)))
        }
    }
}

fn op_expr(rng: &mut ChaCha8Rng, gens: &[String]) -> Expr {
    let gens = gens.to_vec();
    combine(rng, 4, &mut |rng: &mut ChaCha8Rng| match rng.gen_range(0..4) {
        0 => num(rng),
        1 => Expr::Name("del".into()),
        2 => Expr::Name("lam".into()),
        _ => Expr::Name(gens.choose(rng).unwrap().clone()),
    })
}

fn linear_expr(rng: &mut ChaCha8Rng, basis: &[String]) -> Expr {
    let basis = basis.to_vec();
    combine(rng, 3, &mut |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.4) {
            num(rng)
        } else {
            Expr::Name(basis.choose(rng).unwrap().clone())
        }
    })
}

fn poly_expr(rng: &mut ChaCha8Rng) -> Expr {
    combine(rng, 3, &mut |rng: &mut ChaCha8Rng| {
        let letter = |rng: &mut ChaCha8Rng| Expr::Name(["a", "x", "y"].choose(rng).unwrap().to_string());
        match rng.gen_range(0..5) {
            0 => num(rng),
            1 | 2 => Expr::Var { gen: ["a", "x", "y"].choose(rng).unwrap().to_string(), p: rng.gen_range(0..3), n: rng.gen_range(-3..=3) },
            3 => {
                let mut args = vec![letter(rng), letter(rng)];
                let fpq = rng.gen_bool(0.5);
                if fpq {
                    args.push(small_int(rng, 0, 2));
                    args.push(small_int(rng, 0, 2));
                }
                args.push(small_int(rng, -3, 3));
                args.push(small_int(rng, -3, 3));
                args.push(small_int(rng, 0, 4));
                Expr::Call(if fpq { "fpq" } else { "f" }.into(), args)
            }
            _ => {
                let mut args = vec![Expr::Var { gen: "x".into(), p: 0, n: rng.gen_range(-2..=2) }];
                if rng.gen_bool(0.5) {
                    args.push(small_int(rng, 0, 3));
                }
                Expr::Call("d".into(), args)
            }
        }
    })
}

fn names(rng: &mut ChaCha8Rng, prefix: &str, max: usize) -> Vec<String> {
    (0..rng.gen_range(1..=max)).map(|i| format!("{prefix}{i}")).collect()
}

fn pairs(rng: &mut ChaCha8Rng, set: &[String], count: usize) -> Vec<(String, String)> {
    (0..count).map(|_| (set.choose(rng).unwrap().clone(), set.choose(rng).unwrap().clone())).collect()
}

fn arg(rng: &mut ChaCha8Rng, key: &str) -> Arg {
    let value = match rng.gen_range(0..4) {
        0 => ArgValue::Int(rng.gen_range(-5..=9)),
        1 => {
            let lo = rng.gen_range(-9..=0);
            ArgValue::Range(lo, lo + rng.gen_range(0..=12))
        }
        2 => ArgValue::Name(["f10", "f01", "df00", "N"].choose(rng).unwrap().to_string()),
        _ => ArgValue::Expr(poly_expr(rng)),
    };
    Arg { key: key.into(), value }
}

/// A random well-formed script; every name is declared before use.
pub fn random_script(rng: &mut ChaCha8Rng, index: usize) -> Script {
    let mut items = Vec::new();
    let mut algebras: Vec<(String, Vec<String>)> = Vec::new();
    let mut nps: Vec<String> = Vec::new();
    let mut derivations: Vec<String> = Vec::new();
    for k in 0..rng.gen_range(1..=5) {
        match rng.gen_range(0..8) {
            0 | 1 => {
                let name = format!("A{index}_{k}");
                let generators = names(rng, "g", 3);
                let count = rng.gen_range(0..4);
                let brackets = pairs(rng, &generators, count).into_iter().map(|(l, r)| (l, r, op_expr(rng, &generators))).collect();
                items.push(Item::Algebra(AlgebraDecl { name: name.clone(), generators: generators.clone(), brackets }));
                algebras.push((name, generators));
            }
            2 => {
                let name = format!("P{index}_{k}");
                let basis = names(rng, "e", 3);
                let (nc, ns) = (rng.gen_range(0..3), rng.gen_range(0..3));
                let circ = pairs(rng, &basis, nc).into_iter().map(|(l, r)| (l, r, linear_expr(rng, &basis))).collect();
                let star = pairs(rng, &basis, ns).into_iter().map(|(l, r)| (l, r, linear_expr(rng, &basis))).collect();
                items.push(Item::NpAlgebra(NpDecl { name: name.clone(), basis: basis.clone(), circ, star }));
                algebras.push((name.clone(), basis));
                nps.push(name);
            }
            3 => {
                let name = format!("N{index}_{k}");
                let count = rng.gen_range(0..3);
                let letters: Vec<String> = ["a", "x", "y"].iter().map(|s| s.to_string()).collect();
                let pairs = pairs(rng, &letters, count).into_iter().map(|(a, b)| (a, b, rng.gen_range(0..4))).collect();
                items.push(Item::LocalityFn(LocalityDecl { name, default: rng.gen_range(0..4), pairs }));
            }
            4 if !algebras.is_empty() => {
                let (on, gens) = algebras.choose(rng).unwrap().clone();
                if nps.contains(&on) {
                    continue;
                }
                let name = format!("D{index}_{k}");
                let mut images = Vec::new();
                for g in &gens {
                    if rng.gen_bool(0.7) {
                        images.push((g.clone(), op_expr(rng, &gens)));
                    }
                }
                items.push(Item::Derivation(DerivationDecl { name: name.clone(), on, images }));
                derivations.push(name);
            }
            5 if !algebras.is_empty() => {
                let (alg, gens) = algebras.choose(rng).unwrap().clone();
                let sym = |rng: &mut ChaCha8Rng| (gens.choose(rng).unwrap().clone(), rng.gen_range(-6..=6));
                items.push(match rng.gen_range(0..4) {
                    0 => Item::Locality { algebra: alg, left: gens.choose(rng).unwrap().clone(), right: gens.choose(rng).unwrap().clone() },
                    1 => {
                        let left = sym(rng);
                        Item::Product { algebra: alg, left, right: sym(rng) }
                    }
                    2 if !nps.is_empty() => Item::Check { kind: "np_axioms".into(), target: nps.choose(rng).unwrap().clone() },
                    _ => {
                        let kinds = ["commutative", "anticommutative", "associative", "jacobi", "rsym_novikov", "lcom_novikov", "coeff_novikov", "coeff_lie"];
                        Item::Check { kind: kinds.choose(rng).unwrap().to_string(), target: alg }
                    }
                });
            }
            6 if !derivations.is_empty() => {
                let kind = if rng.gen_bool(0.5) { "derivation" } else { "gelfand_novikov" };
                items.push(Item::Check { kind: kind.into(), target: derivations.choose(rng).unwrap().clone() });
            }
            _ => {
                let keys = ["M", "r", "p", "q", "window", "target", "seed", "variant"];
                let n = rng.gen_range(0..4);
                let args = keys.choose_multiple(rng, n).map(|k| arg(rng, k)).collect();
                items.push(if rng.gen_bool(0.6) {
                    Item::Scenario { name: SCENARIOS.choose(rng).unwrap().to_string(), args }
                } else {
                    Item::Membership { args }
                });
            }
        }
    }
    Script { items }
}

/// 50 scripts: the hand-written examples, the empty script and seeded random ones.
pub fn corpus() -> Vec<Script> {
    let mut out: Vec<Script> = HAND_WRITTEN.iter().map(|t| parse(t).expect("hand-written script parses")).collect();
    out.push(Script::default());
    let mut rng = ChaCha8Rng::seed_from_u64(0x00c0_ffee);
    let mut i = 0;
    while out.len() < 50 {
        out.push(random_script(&mut rng, i));
        i += 1;
    }
    out
}
