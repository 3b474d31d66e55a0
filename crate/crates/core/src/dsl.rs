//! The `.cnv` language: presentations, tables and check commands.
//!
//! ```text
//! algebra W {
//!     generators: x, v1;
//!     bracket(v1, x) = (del + lam)*v1;
//! }
//! check rsym_novikov W;
//! scenario counterexample kmax=6;
//! ```
//!
//! Errors carry the start of the innermost phrase being parsed (an item, a
//! block entry, an argument, a parenthesised group, a call or a power suffix)
//! together with the offending token and its own position.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::confalg::{quadratic_from_np, ConfElement, ConfError, ConfPresentation, DerivationTable, Identity, OpPoly, StructureConstants, Sym};
use crate::diffpoly::{DiffPoly, DiffVar, Gen};
use crate::exactnum::{int, Rational};
use crate::idealkit::{emit_f, emit_fpq, IdealError, LocalityFn};

/// Built-in scenario names accepted by `scenario`.
pub const SCENARIOS: [&str; 9] = [
    "series00",
    "series_pq",
    "case1",
    "case2",
    "case3",
    "counterexample",
    "quadratic_np",
    "gelfand_demo",
    "coeff_locality",
];

/// Check kinds on algebras besides the lambda-bracket identities.
pub const COEFF_CHECKS: [&str; 4] = ["coeff_novikov", "coeff_commutative", "coeff_associative", "coeff_lie"];

const RESERVED: [&str; 3] = ["del", "lam", "mu"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: expected {}, found {found} at {found_line}:{found_column}", .expected.join(" or "))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
    pub found_line: usize,
    pub found_column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Eval(String),
    #[error(transparent)]
    Conf(#[from] ConfError),
    #[error(transparent)]
    Ideal(#[from] IdealError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(BigInt),
    Punct(char),
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "`{s}`"),
            TokenKind::Int(n) => write!(f, "`{n}`"),
            TokenKind::Punct(c) => write!(f, "`{c}`"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
    /// Byte offsets of the token in the source.
    pub start: usize,
    pub end: usize,
}

const PUNCT: &str = "{}()[],;:=+-*/^";

/// Splits `text` into tokens, ending with an `Eof` token. `//` starts a
/// comment that runs to the end of the line.
pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let (mut line, mut column) = (1, 1);
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
        } else if c.is_whitespace() {
            chars.next();
            column += 1;
        } else if c == '/' && text[i..].starts_with("//") {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let mut end = i;
            while let Some(&(j, c)) = chars.peek() {
                if !(c.is_ascii_alphanumeric() || c == '_') {
                    break;
                }
                end = j + c.len_utf8();
                chars.next();
            }
            out.push(Token { kind: TokenKind::Ident(text[start..end].to_string()), line, column, start, end });
            column += end - start;
        } else if c.is_ascii_digit() {
            let start = i;
            let mut end = i;
            while let Some(&(j, c)) = chars.peek() {
                if !c.is_ascii_digit() {
                    break;
                }
                end = j + 1;
                chars.next();
            }
            let n: BigInt = text[start..end].parse().expect("digits");
            out.push(Token { kind: TokenKind::Int(n), line, column, start, end });
            column += end - start;
        } else if PUNCT.contains(c) {
            chars.next();
            out.push(Token { kind: TokenKind::Punct(c), line, column, start: i, end: i + 1 });
            column += 1;
        } else {
            return Err(ParseError {
                line,
                column,
                expected: vec!["a token".into()],
                found: format!("`{c}`"),
                found_line: line,
                found_column: column,
            });
        }
    }
    out.push(Token { kind: TokenKind::Eof, line, column, start: text.len(), end: text.len() });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Num(BigInt),
    Name(String),
    /// `x^(p)(n)`.
    Var { gen: String, p: u32, n: i64 },
    /// `f(...)`, `fpq(...)` or `d(...)`.
    Call(String, Vec<Expr>),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.prec() < min;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(n) => write!(f, "{n}")?,
            Expr::Name(s) => f.write_str(s)?,
            Expr::Var { gen, p, n } => write!(f, "{gen}^({p})({n})")?,
            Expr::Call(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    a.write(f, 0)?;
                }
                f.write_str(")")?;
            }
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.write(f, 3)?;
            }
            Expr::Bin(op, l, r) => {
                let (sym, p) = match op {
                    BinOp::Add => (" + ", 1),
                    BinOp::Sub => (" - ", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                };
                l.write(f, p)?;
                f.write_str(sym)?;
                r.write(f, p + 1)?;
            }
            Expr::Pow(base, k) => {
                base.write(f, 5)?;
                write!(f, "^{k}")?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgValue {
    Int(i64),
    Name(String),
    Range(i64, i64),
    Expr(Expr),
}

impl fmt::Display for ArgValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgValue::Int(n) => write!(f, "{n}"),
            ArgValue::Name(s) => f.write_str(s),
            ArgValue::Range(lo, hi) => write!(f, "{lo}:{hi}"),
            ArgValue::Expr(e) => write!(f, "[{e}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arg {
    pub key: String,
    pub value: ArgValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraDecl {
    pub name: String,
    pub generators: Vec<String>,
    pub brackets: Vec<(String, String, Expr)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NpDecl {
    pub name: String,
    pub basis: Vec<String>,
    pub circ: Vec<(String, String, Expr)>,
    pub star: Vec<(String, String, Expr)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationDecl {
    pub name: String,
    pub on: String,
    pub images: Vec<(String, Expr)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalityDecl {
    pub name: String,
    pub default: u32,
    pub pairs: Vec<(String, String, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Algebra(AlgebraDecl),
    NpAlgebra(NpDecl),
    Derivation(DerivationDecl),
    LocalityFn(LocalityDecl),
    Check { kind: String, target: String },
    Locality { algebra: String, left: String, right: String },
    Product { algebra: String, left: (String, i64), right: (String, i64) },
    Scenario { name: String, args: Vec<Arg> },
    Membership { args: Vec<Arg> },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Script {
    pub items: Vec<Item>,
}

impl Script {
    pub fn algebra(&self, name: &str) -> Option<&AlgebraDecl> {
        self.items.iter().find_map(|i| match i {
            Item::Algebra(a) if a.name == name => Some(a),
            _ => None,
        })
    }

    pub fn np_algebra(&self, name: &str) -> Option<&NpDecl> {
        self.items.iter().find_map(|i| match i {
            Item::NpAlgebra(a) if a.name == name => Some(a),
            _ => None,
        })
    }

    pub fn derivation(&self, name: &str) -> Option<&DerivationDecl> {
        self.items.iter().find_map(|i| match i {
            Item::Derivation(d) if d.name == name => Some(d),
            _ => None,
        })
    }

    pub fn locality_fn(&self, name: &str) -> Option<&LocalityDecl> {
        self.items.iter().find_map(|i| match i {
            Item::LocalityFn(d) if d.name == name => Some(d),
            _ => None,
        })
    }
}

fn write_table(out: &mut String, key: &str, rows: &[(String, String, Expr)]) {
    for (l, r, e) in rows {
        out.push_str(&format!("    {key}({l}, {r}) = {e};\n"));
    }
}

fn write_args(out: &mut String, args: &[Arg]) {
    for a in args {
        out.push_str(&format!(" {}={}", a.key, a.value));
    }
}

/// Canonical text of a script; `parse(&print(s)) == Ok(s)`.
pub fn print(script: &Script) -> String {
    let mut out = String::new();
    for item in &script.items {
        match item {
            Item::Algebra(a) => {
                out.push_str(&format!("algebra {} {{\n    generators: {};\n", a.name, a.generators.join(", ")));
                write_table(&mut out, "bracket", &a.brackets);
                out.push_str("}\n");
            }
            Item::NpAlgebra(a) => {
                out.push_str(&format!("npalgebra {} {{\n    basis: {};\n", a.name, a.basis.join(", ")));
                write_table(&mut out, "circ", &a.circ);
                write_table(&mut out, "star", &a.star);
                out.push_str("}\n");
            }
            Item::Derivation(d) => {
                out.push_str(&format!("derivation {} on {} {{\n", d.name, d.on));
                for (g, e) in &d.images {
                    out.push_str(&format!("    {g} = {e};\n"));
                }
                out.push_str("}\n");
            }
            Item::LocalityFn(l) => {
                out.push_str(&format!("localityfn {} {{\n    default: {};\n", l.name, l.default));
                for (a, b, v) in &l.pairs {
                    out.push_str(&format!("    pair({a}, {b}) = {v};\n"));
                }
                out.push_str("}\n");
            }
            Item::Check { kind, target } => out.push_str(&format!("check {kind} {target};\n")),
            Item::Locality { algebra, left, right } => out.push_str(&format!("locality {algebra} {left} {right};\n")),
            Item::Product { algebra, left, right } => {
                out.push_str(&format!("product {algebra} {}({}) {}({});\n", left.0, left.1, right.0, right.1))
            }
            Item::Scenario { name, args } => {
                out.push_str(&format!("scenario {name}"));
                write_args(&mut out, args);
                out.push_str(";\n");
            }
            Item::Membership { args } => {
                out.push_str("membership");
                write_args(&mut out, args);
                out.push_str(";\n");
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Algebra,
    NpAlgebra,
    Derivation,
    LocalityFn,
}

/// Which atoms an expression may use.
#[derive(Clone)]
enum Ctx {
    /// Operator coefficients: `del`, `lam` and the listed generators.
    Op(Vec<String>),
    /// Scalars times the listed basis elements.
    Linear(Vec<String>),
    /// Differential polynomials: `x^(p)(n)`, `f`, `fpq`, `d`.
    Poly,
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    phrases: Vec<usize>,
    decls: BTreeMap<String, (Kind, Vec<String>)>,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Token {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn open(&mut self) {
        self.phrases.push(self.pos);
    }

    fn close(&mut self) {
        self.phrases.pop();
    }

    fn error_at(&self, anchor: usize, expected: &[&str]) -> ParseError {
        let found = self.peek();
        let at = &self.tokens[anchor];
        ParseError {
            line: at.line,
            column: at.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found.kind.to_string(),
            found_line: found.line,
            found_column: found.column,
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        self.error_at(self.phrases.last().copied().unwrap_or(self.pos), expected)
    }

    /// Error located at the current token itself.
    fn error_here(&self, expected: &[&str]) -> ParseError {
        self.error_at(self.pos, expected)
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek().kind == TokenKind::Punct(c)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s == w)
    }

    fn expect_punct(&mut self, c: char) -> PResult<()> {
        if self.is_punct(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{c}`")]))
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.is_word(w) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{w}`")]))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match &self.peek().kind {
            TokenKind::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn uint(&mut self, what: &str) -> PResult<BigInt> {
        match &self.peek().kind {
            TokenKind::Int(n) => {
                let n = n.clone();
                self.bump();
                Ok(n)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn small_uint(&mut self, what: &str) -> PResult<u32> {
        let at = self.pos;
        let n = self.uint(what)?;
        n.to_u32().ok_or_else(|| self.error_at(at, &["an integer below 2^32"]))
    }

    fn signed(&mut self, what: &str) -> PResult<i64> {
        let at = self.pos;
        let neg = self.is_punct('-');
        if neg {
            self.bump();
        }
        let n = self.uint(what)?;
        let n = if neg { -n } else { n };
        n.to_i64().ok_or_else(|| self.error_at(at, &["an index within 64 bits"]))
    }

    /// An identifier accepted by `ok`; a rejected one is left unconsumed as
    /// the found token.
    fn ident_where(&mut self, what: &str, ok: impl Fn(&str) -> bool) -> PResult<String> {
        match &self.peek().kind {
            TokenKind::Ident(s) if ok(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            TokenKind::Ident(_) => Err(self.error(&[what])),
            _ => Err(self.error(&[what])),
        }
    }

    /// A fresh name for a declaration.
    fn new_name(&mut self, what: &str) -> PResult<String> {
        let taken: Vec<String> = self.decls.keys().cloned().collect();
        self.ident_where(what, |s| !taken.iter().any(|t| t == s))
    }

    fn declared(&mut self, kinds: &[Kind], what: &str) -> PResult<String> {
        let ok: Vec<String> = self.decls.iter().filter(|(_, (k, _))| kinds.contains(k)).map(|(n, _)| n.clone()).collect();
        self.ident_where(what, |s| ok.iter().any(|t| t == s))
    }

    fn member(&mut self, set: &[String], what: &str) -> PResult<String> {
        self.ident_where(what, |s| set.iter().any(|t| t == s))
    }

    fn name_list(&mut self, what: &str) -> PResult<Vec<String>> {
        let mut names: Vec<String> = Vec::new();
        loop {
            let taken = names.clone();
            let n = self.ident_where(what, |s| !RESERVED.contains(&s) && !taken.iter().any(|t| t == s))?;
            names.push(n);
            if self.is_punct(',') {
                self.bump();
            } else {
                return Ok(names);
            }
        }
    }

    fn script(&mut self) -> PResult<Script> {
        let mut items = Vec::new();
        while self.peek().kind != TokenKind::Eof {
            items.push(self.item()?);
        }
        Ok(Script { items })
    }

    fn item(&mut self) -> PResult<Item> {
        const ITEMS: [&str; 9] =
            ["`algebra`", "`npalgebra`", "`derivation`", "`localityfn`", "`check`", "`locality`", "`product`", "`scenario`", "`membership`"];
        let word = match &self.peek().kind {
            TokenKind::Ident(s) => s.clone(),
            _ => return Err(self.error_here(&ITEMS)),
        };
        self.open();
        let item = match word.as_str() {
            "algebra" => self.algebra()?,
            "npalgebra" => self.np_algebra()?,
            "derivation" => self.derivation_decl()?,
            "localityfn" => self.locality_decl()?,
            "check" => self.check()?,
            "locality" => {
                self.bump();
                let algebra = self.declared(&[Kind::Algebra, Kind::NpAlgebra], "a declared algebra")?;
                let gens = self.decls[&algebra].1.clone();
                let left = self.member(&gens, "a generator")?;
                let right = self.member(&gens, "a generator")?;
                self.expect_punct(';')?;
                Item::Locality { algebra, left, right }
            }
            "product" => {
                self.bump();
                let algebra = self.declared(&[Kind::Algebra, Kind::NpAlgebra], "a declared algebra")?;
                let gens = self.decls[&algebra].1.clone();
                let left = self.coeff_symbol(&gens)?;
                let right = self.coeff_symbol(&gens)?;
                self.expect_punct(';')?;
                Item::Product { algebra, left, right }
            }
            "scenario" => {
                self.bump();
                let name = self.ident_where("a built-in scenario", |s| SCENARIOS.contains(&s))?;
                let args = self.args()?;
                Item::Scenario { name, args }
            }
            "membership" => {
                self.bump();
                Item::Membership { args: self.args()? }
            }
            _ => {
                self.close();
                return Err(self.error_here(&ITEMS));
            }
        };
        self.close();
        Ok(item)
    }

    fn coeff_symbol(&mut self, gens: &[String]) -> PResult<(String, i64)> {
        self.open();
        let g = self.member(gens, "a generator")?;
        self.expect_punct('(')?;
        let n = self.signed("an index")?;
        self.expect_punct(')')?;
        self.close();
        Ok((g, n))
    }

    fn check(&mut self) -> PResult<Item> {
        self.bump();
        let known = |s: &str| s.parse::<Identity>().is_ok() || COEFF_CHECKS.contains(&s) || ["np_axioms", "derivation", "gelfand_novikov"].contains(&s);
        let kind = self.ident_where("an identity, a coefficient check, `np_axioms`, `derivation` or `gelfand_novikov`", known)?;
        let kinds: &[Kind] = if kind.parse::<Identity>().is_ok() || COEFF_CHECKS.contains(&kind.as_str()) {
            &[Kind::Algebra, Kind::NpAlgebra]
        } else if kind == "np_axioms" {
            &[Kind::NpAlgebra]
        } else {
            &[Kind::Derivation]
        };
        let target = self.declared(kinds, "a declared name of the right kind")?;
        self.expect_punct(';')?;
        Ok(Item::Check { kind, target })
    }

    fn algebra(&mut self) -> PResult<Item> {
        self.bump();
        let name = self.new_name("an algebra name")?;
        self.expect_punct('{')?;
        self.open();
        self.expect_word("generators")?;
        self.expect_punct(':')?;
        let generators = self.name_list("a generator name")?;
        self.expect_punct(';')?;
        self.close();
        let mut brackets = Vec::new();
        let ctx = Ctx::Op(generators.clone());
        while !self.is_punct('}') {
            if !self.is_word("bracket") {
                return Err(self.error(&["`bracket`", "`}`"]));
            }
            brackets.push(self.table_entry("bracket", &generators, &ctx)?);
        }
        self.bump();
        self.decls.insert(name.clone(), (Kind::Algebra, generators.clone()));
        Ok(Item::Algebra(AlgebraDecl { name, generators, brackets }))
    }

    fn table_entry(&mut self, key: &str, names: &[String], ctx: &Ctx) -> PResult<(String, String, Expr)> {
        self.open();
        self.expect_word(key)?;
        self.expect_punct('(')?;
        let l = self.member(names, "a declared generator")?;
        self.expect_punct(',')?;
        let r = self.member(names, "a declared generator")?;
        self.expect_punct(')')?;
        self.expect_punct('=')?;
        let e = self.expr(ctx)?;
        self.expect_punct(';')?;
        self.close();
        Ok((l, r, e))
    }

    fn np_algebra(&mut self) -> PResult<Item> {
        self.bump();
        let name = self.new_name("an algebra name")?;
        self.expect_punct('{')?;
        self.open();
        self.expect_word("basis")?;
        self.expect_punct(':')?;
        let basis = self.name_list("a basis element")?;
        self.expect_punct(';')?;
        self.close();
        let ctx = Ctx::Linear(basis.clone());
        let (mut circ, mut star) = (Vec::new(), Vec::new());
        while !self.is_punct('}') {
            if self.is_word("circ") {
                circ.push(self.table_entry("circ", &basis, &ctx)?);
            } else if self.is_word("star") {
                star.push(self.table_entry("star", &basis, &ctx)?);
            } else {
                return Err(self.error(&["`circ`", "`star`", "`}`"]));
            }
        }
        self.bump();
        self.decls.insert(name.clone(), (Kind::NpAlgebra, basis.clone()));
        Ok(Item::NpAlgebra(NpDecl { name, basis, circ, star }))
    }

    fn derivation_decl(&mut self) -> PResult<Item> {
        self.bump();
        let name = self.new_name("a derivation name")?;
        self.expect_word("on")?;
        let on = self.declared(&[Kind::Algebra], "a declared algebra")?;
        let gens = self.decls[&on].1.clone();
        self.expect_punct('{')?;
        let ctx = Ctx::Op(gens.clone());
        let mut images = Vec::new();
        while !self.is_punct('}') {
            self.open();
            let g = self.member(&gens, "a generator of the algebra or `}`")?;
            self.expect_punct('=')?;
            let e = self.expr(&ctx)?;
            self.expect_punct(';')?;
            self.close();
            images.push((g, e));
        }
        self.bump();
        self.decls.insert(name.clone(), (Kind::Derivation, Vec::new()));
        Ok(Item::Derivation(DerivationDecl { name, on, images }))
    }

    fn locality_decl(&mut self) -> PResult<Item> {
        self.bump();
        let name = self.new_name("a locality function name")?;
        self.expect_punct('{')?;
        self.open();
        self.expect_word("default")?;
        self.expect_punct(':')?;
        let default = self.small_uint("a nonnegative integer")?;
        self.expect_punct(';')?;
        self.close();
        let mut pairs = Vec::new();
        while !self.is_punct('}') {
            self.open();
            if !self.is_word("pair") {
                return Err(self.error(&["`pair`", "`}`"]));
            }
            self.bump();
            self.expect_punct('(')?;
            let a = self.ident("a letter")?;
            self.expect_punct(',')?;
            let b = self.ident("a letter")?;
            self.expect_punct(')')?;
            self.expect_punct('=')?;
            let v = self.small_uint("a nonnegative integer")?;
            self.expect_punct(';')?;
            self.close();
            pairs.push((a, b, v));
        }
        self.bump();
        self.decls.insert(name.clone(), (Kind::LocalityFn, Vec::new()));
        Ok(Item::LocalityFn(LocalityDecl { name, default, pairs }))
    }

    fn args(&mut self) -> PResult<Vec<Arg>> {
        let mut args = Vec::new();
        while !self.is_punct(';') {
            if !matches!(self.peek().kind, TokenKind::Ident(_)) {
                return Err(self.error(&["an argument name", "`;`"]));
            }
            self.open();
            let key = self.ident("an argument name")?;
            self.expect_punct('=')?;
            let value = if self.is_punct('[') {
                self.bump();
                let e = self.expr(&Ctx::Poly)?;
                self.expect_punct(']')?;
                ArgValue::Expr(e)
            } else if let TokenKind::Ident(s) = &self.peek().kind {
                let s = s.clone();
                self.bump();
                ArgValue::Name(s)
            } else {
                let lo = self.signed("an integer, a range, a name or `[`")?;
                if self.is_punct(':') {
                    self.bump();
                    let hi = self.signed("the upper end of the range")?;
                    ArgValue::Range(lo, hi)
                } else {
                    ArgValue::Int(lo)
                }
            };
            self.close();
            args.push(Arg { key, value });
        }
        self.bump();
        Ok(args)
    }

    fn expr(&mut self, ctx: &Ctx) -> PResult<Expr> {
        let mut lhs = self.term(ctx)?;
        loop {
            let op = if self.is_punct('+') {
                BinOp::Add
            } else if self.is_punct('-') {
                BinOp::Sub
            } else {
                break;
            };
            self.bump();
            let rhs = self.term(ctx)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self, ctx: &Ctx) -> PResult<Expr> {
        let mut lhs = self.unary(ctx)?;
        loop {
            let op = if self.is_punct('*') {
                BinOp::Mul
            } else if self.is_punct('/') {
                BinOp::Div
            } else {
                break;
            };
            self.bump();
            let rhs = self.unary(ctx)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self, ctx: &Ctx) -> PResult<Expr> {
        if self.is_punct('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary(ctx)?)));
        }
        let base = self.atom(ctx)?;
        if self.is_punct('^') && self.peek_at(1).kind != TokenKind::Punct('(') {
            self.open();
            self.bump();
            let k = self.small_uint("an exponent")?;
            self.close();
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn atom(&mut self, ctx: &Ctx) -> PResult<Expr> {
        let at = self.pos;
        match self.peek().kind.clone() {
            TokenKind::Int(n) => {
                self.bump();
                Ok(Expr::Num(n))
            }
            TokenKind::Punct('(') => {
                self.open();
                self.bump();
                let e = self.expr(ctx)?;
                self.expect_punct(')')?;
                self.close();
                Ok(e)
            }
            TokenKind::Ident(name) => {
                let (ok, what) = match ctx {
                    Ctx::Op(gens) => (name == "del" || name == "lam" || gens.contains(&name), "`del`, `lam` or a declared generator"),
                    Ctx::Linear(basis) => (basis.contains(&name), "a basis element"),
                    Ctx::Poly => (
                        self.peek_at(1).kind == TokenKind::Punct('^') || ["f", "fpq", "d"].contains(&name.as_str()),
                        "`x^(p)(n)`, `f(...)`, `fpq(...)` or `d(...)`",
                    ),
                };
                if !ok {
                    return Err(self.error(&[what]));
                }
                self.bump();
                match ctx {
                    Ctx::Poly => self.poly_atom(at, name),
                    _ => Ok(Expr::Name(name)),
                }
            }
            _ => Err(self.error(&["a number, a name or `(`"])),
        }
    }

    fn poly_atom(&mut self, at: usize, name: String) -> PResult<Expr> {
        if self.is_punct('^') {
            self.phrases.push(at);
            self.bump();
            self.expect_punct('(')?;
            let p = self.small_uint("a derivative order")?;
            self.expect_punct(')')?;
            self.expect_punct('(')?;
            let n = self.signed("an index")?;
            self.expect_punct(')')?;
            self.close();
            return Ok(Expr::Var { gen: name, p, n });
        }
        let arity: &[usize] = match name.as_str() {
            "f" => &[5],
            "fpq" => &[7],
            _ => &[1, 2],
        };
        self.phrases.push(at);
        self.expect_punct('(')?;
        let mut args = Vec::new();
        loop {
            let arg = if name != "d" && args.len() < 2 {
                Expr::Name(self.ident("a letter")?)
            } else {
                self.expr(&Ctx::Poly)?
            };
            args.push(arg);
            if self.is_punct(',') {
                self.bump();
            } else {
                break;
            }
        }
        self.expect_punct(')')?;
        if !arity.contains(&args.len()) {
            return Err(self.error_at(at, &[&format!("{} arguments for `{name}`", arity.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" or "))]));
        }
        self.close();
        Ok(Expr::Call(name, args))
    }
}

pub fn parse(text: &str) -> Result<Script, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens: &tokens, pos: 0, phrases: Vec::new(), decls: BTreeMap::new() };
    p.script()
}

/// `scalar + sum_g coeff_g * g` with operator coefficients.
struct Lin {
    scalar: OpPoly,
    gens: ConfElement,
}

fn eval_lin(e: &Expr) -> Result<Lin, DslError> {
    Ok(match e {
        Expr::Num(n) => Lin { scalar: OpPoly::constant(int(n)), gens: ConfElement::zero() },
        Expr::Name(s) if s == "del" => Lin { scalar: OpPoly::del(), gens: ConfElement::zero() },
        Expr::Name(s) if s == "lam" => Lin { scalar: OpPoly::lam(), gens: ConfElement::zero() },
        Expr::Name(s) => Lin { scalar: OpPoly::zero(), gens: ConfElement::gen(s.as_str()) },
        Expr::Neg(x) => {
            let v = eval_lin(x)?;
            Lin { scalar: v.scalar.neg(), gens: v.gens.scale(&OpPoly::int(-1)) }
        }
        Expr::Bin(op, l, r) => {
            let (a, b) = (eval_lin(l)?, eval_lin(r)?);
            match op {
                BinOp::Add => Lin { scalar: a.scalar.add(&b.scalar), gens: a.gens.add(&b.gens) },
                BinOp::Sub => Lin { scalar: a.scalar.sub(&b.scalar), gens: a.gens.sub(&b.gens) },
                BinOp::Mul => {
                    if !a.gens.is_zero() && !b.gens.is_zero() {
                        return Err(DslError::Eval(format!("`{e}` multiplies two generators")));
                    }
                    Lin {
                        scalar: a.scalar.mul(&b.scalar),
                        gens: a.gens.scale(&b.scalar).add(&b.gens.scale(&a.scalar)),
                    }
                }
                BinOp::Div => {
                    let c = b.scalar.constant_term();
                    if !b.gens.is_zero() || b.scalar != OpPoly::constant(c.clone()) || c.is_zero() {
                        return Err(DslError::Eval(format!("`{e}` divides by something other than a nonzero number")));
                    }
                    let inv = OpPoly::constant(Rational::from_integer(1.into()) / c);
                    Lin { scalar: a.scalar.mul(&inv), gens: a.gens.scale(&inv) }
                }
            }
        }
        Expr::Pow(x, k) => {
            let v = eval_lin(x)?;
            if !v.gens.is_zero() && *k != 1 {
                return Err(DslError::Eval(format!("`{e}` raises a generator to a power")));
            }
            if *k == 1 {
                v
            } else {
                Lin { scalar: v.scalar.pow(*k), gens: ConfElement::zero() }
            }
        }
        Expr::Var { .. } | Expr::Call(..) => return Err(DslError::Eval(format!("`{e}` is not an operator expression"))),
    })
}

/// A `k[del, lam]`-combination of generators.
pub fn eval_element(e: &Expr) -> Result<ConfElement, DslError> {
    let v = eval_lin(e)?;
    if !v.scalar.is_zero() {
        return Err(DslError::Eval(format!("`{e}` has a part without a generator")));
    }
    Ok(v.gens)
}

pub fn build_algebra(decl: &AlgebraDecl) -> Result<ConfPresentation, DslError> {
    let mut a = ConfPresentation::new(decl.generators.iter().map(|g| Gen::new(g)))?;
    for (l, r, e) in &decl.brackets {
        a.set_bracket(l.as_str(), r.as_str(), eval_element(e)?)?;
    }
    Ok(a)
}

pub fn build_np(decl: &NpDecl) -> Result<(Vec<Gen>, StructureConstants, StructureConstants), DslError> {
    let basis: Vec<Gen> = decl.basis.iter().map(|g| Gen::new(g)).collect();
    let dim = basis.len();
    let fill = |rows: &[(String, String, Expr)]| -> Result<StructureConstants, DslError> {
        let mut sc = StructureConstants::zero(dim);
        for (l, r, e) in rows {
            let v = eval_element(e)?;
            let mut out = Vec::with_capacity(dim);
            for g in &basis {
                let c = v.coeff(g);
                if c.only_uses(&[]).is_err() {
                    return Err(DslError::Eval(format!("`{e}` is not a numeric combination")));
                }
                out.push(c.constant_term());
            }
            let i = decl.basis.iter().position(|b| b == l).expect("validated");
            let j = decl.basis.iter().position(|b| b == r).expect("validated");
            sc.set(i, j, out);
        }
        Ok(sc)
    };
    let (circ, star) = (fill(&decl.circ)?, fill(&decl.star)?);
    Ok((basis, circ, star))
}

pub fn build_np_algebra(decl: &NpDecl) -> Result<ConfPresentation, DslError> {
    let (basis, circ, star) = build_np(decl)?;
    Ok(quadratic_from_np(&basis, &circ, &star)?)
}

pub fn build_derivation(decl: &DerivationDecl) -> Result<DerivationTable, DslError> {
    let mut d = DerivationTable::new();
    for (g, e) in &decl.images {
        let image = eval_element(e)?;
        if image.only_uses(&[Sym::Del]).is_err() {
            return Err(DslError::Eval(format!("derivation image `{e}` may only use `del`")));
        }
        d.set(g.as_str(), image);
    }
    Ok(d)
}

pub fn build_locality(decl: &LocalityDecl) -> Result<LocalityFn, DslError> {
    let mut l = LocalityFn::constant(decl.default);
    for (a, b, v) in &decl.pairs {
        l = l.with(a.as_str(), b.as_str(), *v)?;
    }
    Ok(l)
}

fn int_arg(e: &Expr) -> Result<i64, DslError> {
    match e {
        Expr::Num(n) => n.to_i64().ok_or_else(|| DslError::Eval(format!("`{n}` is out of range"))),
        Expr::Neg(x) => Ok(-int_arg(x)?),
        _ => Err(DslError::Eval(format!("`{e}` is not an integer"))),
    }
}

fn uint_arg(e: &Expr) -> Result<u32, DslError> {
    let v = int_arg(e)?;
    u32::try_from(v).map_err(|_| DslError::Eval(format!("`{e}` must be a nonnegative integer")))
}

fn letter_arg(e: &Expr) -> Result<Gen, DslError> {
    match e {
        Expr::Name(s) => Ok(Gen::new(s)),
        _ => Err(DslError::Eval(format!("`{e}` is not a letter"))),
    }
}

/// Evaluates a polynomial expression: `x^(p)(n)`, `f(a, b, n, m, E)`,
/// `fpq(a, b, p, q, n, m, E)`, `d(expr)` and `d(expr, s)`.
pub fn eval_poly(e: &Expr) -> Result<DiffPoly, DslError> {
    Ok(match e {
        Expr::Num(n) => DiffPoly::constant(int(n)),
        Expr::Var { gen, p, n } => DiffPoly::var(DiffVar::new(gen.as_str(), *p, *n)),
        Expr::Call(name, args) => match name.as_str() {
            "f" => emit_f(&letter_arg(&args[0])?, &letter_arg(&args[1])?, int_arg(&args[2])?, int_arg(&args[3])?, uint_arg(&args[4])?),
            "fpq" => emit_fpq(
                &letter_arg(&args[0])?,
                &letter_arg(&args[1])?,
                uint_arg(&args[2])?,
                uint_arg(&args[3])?,
                int_arg(&args[4])?,
                int_arg(&args[5])?,
                uint_arg(&args[6])?,
            ),
            "d" => {
                let s = if args.len() == 2 { uint_arg(&args[1])? } else { 1 };
                eval_poly(&args[0])?.derive_n(s)
            }
            _ => return Err(DslError::Eval(format!("unknown function `{name}`"))),
        },
        Expr::Neg(x) => eval_poly(x)?.scale(&-Rational::from_integer(1.into())),
        Expr::Bin(op, l, r) => {
            let (a, b) = (eval_poly(l)?, eval_poly(r)?);
            match op {
                BinOp::Add => &a + &b,
                BinOp::Sub => &a - &b,
                BinOp::Mul => &a * &b,
                BinOp::Div => {
                    let one = crate::diffpoly::Monomial::one();
                    if b.num_terms() != 1 || b.coeff(&one).is_zero() {
                        return Err(DslError::Eval(format!("`{e}` divides by something other than a nonzero number")));
                    }
                    a.scale(&(Rational::from_integer(1.into()) / b.coeff(&one)))
                }
            }
        }
        Expr::Pow(x, k) => eval_poly(x)?.pow(*k),
        Expr::Name(s) => return Err(DslError::Eval(format!("bare name `{s}` in a polynomial"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confalg::{bracket, build_w, check_on_generators};

    const W_SCRIPT: &str = "algebra W { generators: x, v1; bracket(v1, x) = (del + lam)*v1; }\ncheck rsym_novikov W;\n";

    #[test]
    fn parses_the_w_example() {
        let s = parse(W_SCRIPT).unwrap();
        assert_eq!(s.items.len(), 2);
        let a = build_algebra(s.algebra("W").unwrap()).unwrap();
        assert_eq!(a.table_entries().count(), 1);
        let w = build_w(1);
        let lam = Sym::lam();
        let v1 = ConfElement::gen("v1");
        let x = ConfElement::gen("x");
        assert_eq!(bracket(&a, &v1, &x, &lam).unwrap(), bracket(&w, &v1, &x, &lam).unwrap());
        assert!(check_on_generators(&a, Identity::RsymNovikov).unwrap().is_empty());
        assert_eq!(s.items[1], Item::Check { kind: "rsym_novikov".into(), target: "W".into() });
    }

    #[test]
    fn dangling_power_is_reported_at_the_caret() {
        let text = "algebra A { generators: x;\nbracket(x, x) = lam^";
        let err = parse(text).unwrap_err();
        assert_eq!((err.line, err.column), (2, 20));
        assert_eq!(err.found, "end of input");
    }

    #[test]
    fn round_trips() {
        let scripts = [
            W_SCRIPT,
            "npalgebra P { basis: e; circ(e, e) = e; star(e, e) = e; } check np_axioms P; check lcom_novikov P;",
            "",
            "algebra C { generators: one, t; bracket(one, one) = one; bracket(one, t) = t; bracket(t, one) = t; }\n\
             derivation D on C { t = one; }\ncheck gelfand_novikov D; check derivation D;",
            "localityfn N { default: 1; pair(a, x) = 0; }\n\
             membership target=[a^(2)(0)*fpq(x, y, 0, 0, 0, 0, 3)] locality=N window=-6:6 smax=2 degree=1;",
            "scenario case2 M=1 variant=df00; scenario counterexample kmax=6;",
            "algebra Q { generators: e; bracket(e, e) = -(1/2 - lam^2)*e - -3*del*e; }\nproduct Q e(1) e(-2); locality Q e e;",
            "membership target=[d(f(x, y, 0, -1, 2), 2) - 3/4*x^(1)(-1)*(y^(0)(2) + 1)^2];",
        ];
        for text in scripts {
            let s = parse(text).unwrap_or_else(|e| panic!("{text}: {e}"));
            let printed = print(&s);
            assert_eq!(parse(&printed).unwrap(), s, "{printed}");
            assert_eq!(print(&parse(&printed).unwrap()), printed);
        }
        assert_eq!(print(&Script::default()), "");
    }

    #[test]
    fn printer_keeps_needed_parentheses() {
        let s = parse("algebra A { generators: e; bracket(e, e) = (1 - (lam - del))*(del + 1)^2*e; }").unwrap();
        let text = print(&s);
        assert!(text.contains("(1 - (lam - del))*(del + 1)^2*e"), "{text}");
    }

    #[test]
    fn declaration_errors() {
        let undeclared = parse("check rsym_novikov W;").unwrap_err();
        assert_eq!((undeclared.line, undeclared.column), (1, 1));
        assert_eq!((undeclared.found_line, undeclared.found_column), (1, 20));
        assert_eq!(undeclared.found, "`W`");
        assert!(parse("algebra A { generators: x; } algebra A { generators: y; }").is_err());
        assert!(parse("algebra A { generators: x; bracket(x, y) = x; }").is_err());
        assert!(parse("algebra A { generators: x; bracket(x, x) = mu*x; }").is_err());
        assert!(parse("algebra A { generators: del; }").is_err());
        assert!(parse("check np_axioms A; algebra A { generators: x; }").is_err());
        assert!(parse("scenario nosuch;").is_err());
        assert!(parse("membership target=[g(x)];").is_err());
        assert!(parse("membership target=[f(x, y, 0)];").is_err());
        assert!(parse("algebra A { generators: x; } $").is_err());
    }

    #[test]
    fn evaluation() {
        let s = parse("membership t=[fpq(x, y, 1, 0, 0, 0, 2) - f(x, y, 0, 0, 2)] u=[d(x^(0)(1)*y^(0)(2), 2)/2];").unwrap();
        let Item::Membership { args } = &s.items[0] else { panic!() };
        let ArgValue::Expr(e) = &args[0].value else { panic!() };
        assert!(eval_poly(e).unwrap().is_zero());
        let ArgValue::Expr(e) = &args[1].value else { panic!() };
        let p = eval_poly(e).unwrap();
        assert_eq!(p.to_string(), eval_poly(&parse("membership t=[x^(2)(1)*y^(0)(2)/2 + x^(1)(1)*y^(1)(2) + y^(2)(2)*x^(0)(1)/2];").map(|s| match &s.items[0] {
            Item::Membership { args } => match &args[0].value {
                ArgValue::Expr(e) => e.clone(),
                _ => unreachable!(),
            },
            _ => unreachable!(),
        }).unwrap()).unwrap().to_string());

        let bad = parse("algebra A { generators: x, y; bracket(x, x) = x*y; }").unwrap();
        assert!(matches!(build_algebra(bad.algebra("A").unwrap()), Err(DslError::Eval(_))));
        let bad = parse("algebra A { generators: x; bracket(x, x) = lam; }").unwrap();
        assert!(matches!(build_algebra(bad.algebra("A").unwrap()), Err(DslError::Eval(_))));
        let np = parse("npalgebra P { basis: e, f; circ(e, e) = 2*e - f/3; star(f, f) = f; }").unwrap();
        let (basis, circ, _) = build_np(np.np_algebra("P").unwrap()).unwrap();
        assert_eq!(basis.len(), 2);
        assert_eq!(circ.get(0, 0), &[crate::exactnum::rat(2), crate::exactnum::ratio(-1, 3)]);
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("// header\n  check x;").unwrap();
        assert_eq!((toks[0].line, toks[0].column), (2, 3));
        assert_eq!(toks.last().unwrap().kind, TokenKind::Eof);
    }
}
