//! Command-line driver: built-in scenarios, the embedding cases and `.cnv`
//! scripts, reported as text or JSON.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use novconf::coeffalg::{self, check_coeff_identities, CoeffElement, CoeffIdentity};
use novconf::confalg::{
    check_derivation, check_np_axioms, check_on_generators, check_on_random, gelfand, locality, ConfElement, ConfPresentation, Identity,
    IdentityFailure,
};
use novconf::dsl::{self, ArgValue, DslError, Expr, Item, ParseError, Script, SCENARIOS};
use novconf::embedharness::{self as harness, Case2Variant, HarnessError, ScenarioReport};
use novconf::idealkit::{LocalityFn, Window, WindowOverride};
use novconf::Gen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "novconf", version, about = "Exact checks for Novikov conformal algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the built-in scenarios.
    List,
    /// Run a built-in scenario, `embedding --case ...`, or `script FILE`.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario name, `embedding` or `script`.
    pub target: String,
    /// Script file for `script`.
    pub file: Option<PathBuf>,
    #[arg(long)]
    pub kmax: Option<u32>,
    /// Uniform locality bound.
    #[arg(long = "M")]
    pub big_m: Option<u32>,
    /// case1, case2 or case3 (with `embedding`).
    #[arg(long)]
    pub case: Option<String>,
    /// Index window `lo:hi`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
    pub window: Option<(i64, i64)>,
    #[arg(long)]
    pub smax: Option<u32>,
    /// Multiplier degree bound.
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Include wall times in the report.
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub r: Option<u32>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub l: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub n: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<i64>,
    /// f10, f01 or df00 (case2); all three when omitted.
    #[arg(long)]
    pub variant: Option<String>,
}

pub fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let lo: i64 = lo.trim().parse().map_err(|_| format!("bad lower bound in `{s}`"))?;
    let hi: i64 = hi.trim().parse().map_err(|_| format!("bad upper bound in `{s}`"))?;
    if lo > hi {
        return Err(format!("empty window `{s}`"));
    }
    Ok((lo, hi))
}

/// Anything that stops a run before a verdict: exit status 2.
#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Parse { file: String, error: ParseError },
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Usage(s) => write!(f, "error: {s}"),
            RunError::Parse { file, error: e } => write!(
                f,
                "{file}:{}:{}: parse error: expected {}, found {} at {}:{}",
                e.line,
                e.column,
                e.expected.join(" or "),
                e.found,
                e.found_line,
                e.found_column
            ),
        }
    }
}

impl From<HarnessError> for RunError {
    fn from(e: HarnessError) -> Self {
        RunError::Usage(e.to_string())
    }
}

impl From<DslError> for RunError {
    fn from(e: DslError) -> Self {
        RunError::Usage(e.to_string())
    }
}

fn usage(e: impl fmt::Display) -> RunError {
    RunError::Usage(e.to_string())
}

/// Scenario parameters, from flags or from script arguments.
#[derive(Debug, Clone, Default)]
pub struct Params {
    pub kmax: Option<u32>,
    pub big_m: Option<u32>,
    pub case: Option<String>,
    pub window: WindowOverride,
    pub seed: u64,
    pub r: Option<u32>,
    pub p: Option<u32>,
    pub q: Option<u32>,
    pub l: Option<u32>,
    pub k: Option<i64>,
    pub n: Option<i64>,
    pub m: Option<i64>,
    pub variant: Option<String>,
    pub target: Option<Expr>,
    pub locality: Option<LocalityFn>,
}

impl Params {
    fn from_flags(a: &RunArgs) -> Self {
        Params {
            kmax: a.kmax,
            big_m: a.big_m,
            case: a.case.clone(),
            window: WindowOverride { indices: a.window, s_max: a.smax, max_multiplier_degree: a.degree },
            seed: a.seed,
            r: a.r,
            p: a.p,
            q: a.q,
            l: a.l,
            k: a.k,
            n: a.n,
            m: a.m,
            variant: a.variant.clone(),
            target: None,
            locality: None,
        }
    }

    /// Script arguments on top of the command-line defaults.
    fn from_args(base: &Params, args: &[dsl::Arg], localities: &BTreeMap<String, LocalityFn>) -> Result<Self, RunError> {
        let mut p = base.clone();
        for arg in args {
            let key = arg.key.as_str();
            let bad = || usage(format!("bad value `{}` for `{key}`", arg.value));
            let int = || match arg.value {
                ArgValue::Int(v) => Ok(v),
                _ => Err(bad()),
            };
            let nat = || int().and_then(|v| u32::try_from(v).map_err(|_| bad()));
            let name = || match &arg.value {
                ArgValue::Name(s) => Ok(s.clone()),
                _ => Err(bad()),
            };
            match key {
                "kmax" => p.kmax = Some(nat()?),
                "M" => p.big_m = Some(nat()?),
                "case" => p.case = Some(name()?),
                "seed" => p.seed = u64::try_from(int()?).map_err(|_| bad())?,
                "r" => p.r = Some(nat()?),
                "p" => p.p = Some(nat()?),
                "q" => p.q = Some(nat()?),
                "l" => p.l = Some(nat()?),
                "k" => p.k = Some(int()?),
                "n" => p.n = Some(int()?),
                "m" => p.m = Some(int()?),
                "variant" => p.variant = Some(name()?),
                "smax" => p.window.s_max = Some(nat()?),
                "degree" => p.window.max_multiplier_degree = Some(nat()?),
                "window" => match arg.value {
                    ArgValue::Range(lo, hi) if lo <= hi => p.window.indices = Some((lo, hi)),
                    _ => return Err(bad()),
                },
                "target" => match &arg.value {
                    ArgValue::Expr(e) => p.target = Some(e.clone()),
                    _ => return Err(bad()),
                },
                "locality" => {
                    let n = name()?;
                    p.locality = Some(localities.get(&n).cloned().ok_or_else(|| usage(format!("unknown locality function `{n}`")))?);
                }
                _ => return Err(usage(format!("unknown argument `{key}`"))),
            }
        }
        Ok(p)
    }

    fn big_m(&self) -> u32 {
        self.big_m.unwrap_or(1)
    }
}

pub fn list_scenarios() -> String {
    const ABOUT: [(&str, &str); 9] = [
        ("series00", "split of a''(zeta) x(w) y(z) (w-z)^(3M) and its rewritings"),
        ("series_pq", "split of the (p, q) family and the p = 0, q = 0 rewritings"),
        ("case1", "a^(r)(k) f^{0,0}(n, m; 3M) in I(N)"),
        ("case2", "the N_xy = 0 variants f10, f01, df00 in I(N)"),
        ("case3", "u d^l f^{p,q}(n, m; barN) in I(N)"),
        ("counterexample", "Novikov identities and localities on W"),
        ("quadratic_np", "quadratic algebra of the one-dimensional Novikov-Poisson table"),
        ("gelfand_demo", "derived algebras of the current algebra over the dual numbers"),
        ("coeff_locality", "coefficient products and locality relations"),
    ];
    debug_assert!(ABOUT.iter().map(|(n, _)| *n).eq(SCENARIOS));
    ABOUT.iter().map(|(n, d)| format!("{n:<16}{d}\n")).collect()
}

fn variants(p: &Params) -> Result<Vec<Case2Variant>, RunError> {
    match &p.variant {
        Some(v) => Ok(vec![v.parse().map_err(usage)?]),
        None => Ok(vec![Case2Variant::F10, Case2Variant::F01, Case2Variant::Df00]),
    }
}

pub fn run_scenario(name: &str, p: &Params) -> Result<Vec<ScenarioReport>, RunError> {
    let m = p.big_m();
    let (k, n, mm) = (p.k.unwrap_or(0), p.n.unwrap_or(0), p.m.unwrap_or(0));
    Ok(match name {
        "series00" => vec![harness::run_series00(m)?],
        "series_pq" => vec![harness::run_series_pq(m, p.p.unwrap_or(1), p.q.unwrap_or(1))?],
        "case1" => vec![harness::run_case1(m, k, n, mm, p.r.unwrap_or(2), p.window)?],
        "case2" => variants(p)?.into_iter().map(|v| harness::run_case2(m, v, n, mm, p.window)).collect::<Result<_, _>>()?,
        "case3" => vec![harness::run_case3(m, p.p.unwrap_or(1), p.q.unwrap_or(1), p.l.unwrap_or(0), k, n, mm, p.window)?],
        "counterexample" => vec![harness::run_counterexample(p.kmax.unwrap_or(8))?],
        "quadratic_np" => vec![harness::run_quadratic_np(p.seed)?],
        "gelfand_demo" => vec![harness::run_gelfand_demo(p.seed)?],
        "coeff_locality" => {
            let (lo, hi) = p.window.indices.unwrap_or((-4, 4));
            vec![harness::run_coeff_locality(p.seed, lo, hi)?]
        }
        "embedding" => match p.case.as_deref() {
            Some(c @ ("case1" | "case2" | "case3")) => run_scenario(c, p)?,
            Some(c) => return Err(usage(format!("unknown case `{c}` (expected case1, case2 or case3)"))),
            None => return Err(usage("`embedding` needs --case case1|case2|case3")),
        },
        _ => return Err(usage(format!("unknown scenario `{name}`; see `novconf list`"))),
    })
}

fn failure_lines(failures: &[IdentityFailure]) -> Vec<String> {
    failures
        .iter()
        .map(|f| format!("({}, {}, {}): residual {}", f.args[0], f.args[1], f.args[2], f.residual))
        .collect()
}

/// Declarations seen so far while executing a script.
#[derive(Default)]
struct Env {
    algebras: BTreeMap<String, ConfPresentation>,
    derivations: BTreeMap<String, (String, novconf::confalg::DerivationTable)>,
    localities: BTreeMap<String, LocalityFn>,
}

impl Env {
    fn algebra(&self, name: &str) -> Result<&ConfPresentation, RunError> {
        self.algebras.get(name).ok_or_else(|| usage(format!("`{name}` is not an algebra")))
    }
}

fn run_check(env: &Env, script: &Script, kind: &str, target: &str, p: &Params) -> Result<ScenarioReport, RunError> {
    let start = Instant::now();
    let mut report = ScenarioReport::new("check", p.seed);
    report.param("kind", kind).param("target", target);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    if let Ok(which) = kind.parse::<Identity>() {
        let a = env.algebra(target)?;
        let gens = check_on_generators(a, which).map_err(usage)?;
        report.check(format!("{which} on generator triples"), gens.is_empty(), failure_lines(&gens));
        let random = check_on_random(a, which, 20, &mut rng).map_err(usage)?;
        report.check(format!("{which} on 20 random triples"), random.is_empty(), failure_lines(&random));
    } else if let Some(rest) = kind.strip_prefix("coeff_") {
        let which: CoeffIdentity = rest.parse().map_err(usage)?;
        let (lo, hi) = p.window.indices.unwrap_or((-3, 3));
        report.param("window", format!("{lo}:{hi}"));
        let r = check_coeff_identities(env.algebra(target)?, which, 50, lo, hi, &mut rng).map_err(usage)?;
        let details = r.failures.iter().map(|f| format!("{}({}, {}, {}): residual {}", f.relation, f.args[0], f.args[1], f.args[2], f.residual)).collect();
        report.check(format!("coefficient {} identities on 50 random triples", which.name()), r.passed(), details);
    } else if kind == "np_axioms" {
        let decl = script.np_algebra(target).ok_or_else(|| usage(format!("`{target}` is not a Novikov-Poisson table")))?;
        let (_, circ, star) = dsl::build_np(decl)?;
        let r = check_np_axioms(&circ, &star).map_err(usage)?;
        let details = r.failures.iter().map(|(ax, (i, j, k))| format!("{ax} fails on basis triple ({i}, {j}, {k})")).collect();
        report.check("Novikov-Poisson axioms", r.passed(), details);
    } else {
        let (on, d) = env.derivations.get(target).ok_or_else(|| usage(format!("`{target}` is not a derivation")))?;
        let a = env.algebra(on)?;
        if kind == "derivation" {
            let r = check_derivation(a, d).map_err(usage)?;
            let details = r.failures.iter().map(|(g, h, res)| format!("({g}, {h}): residual {res}")).collect();
            report.check(format!("{target} is a derivation of {on}"), r.passed(), details);
        } else {
            let derived = gelfand(a, d).map_err(usage)?;
            for which in [Identity::RsymNovikov, Identity::LcomNovikov] {
                let mut failures = check_on_generators(&derived, which).map_err(usage)?;
                failures.extend(check_on_random(&derived, which, 50, &mut rng).map_err(usage)?);
                report.check(format!("derived algebra: {which} on generators and 50 random elements"), failures.is_empty(), failure_lines(&failures));
            }
        }
    }
    report.wall_time = start.elapsed();
    Ok(report)
}

fn run_membership(p: &Params) -> Result<ScenarioReport, RunError> {
    let target = p.target.as_ref().ok_or_else(|| usage("membership needs target=[...]"))?;
    let h = dsl::eval_poly(target)?;
    let loc = p.locality.clone().unwrap_or_else(|| LocalityFn::constant(p.big_m()));
    let w = p.window.apply(Window::around(&h, loc.bound(), 0, 0)).map_err(usage)?;
    Ok(harness::run_membership(&h, &loc, w)?)
}

/// Executes every item of `script` in order.
pub fn run_script(script: &Script, base: &Params) -> Result<Vec<ScenarioReport>, RunError> {
    let mut env = Env::default();
    let mut reports = Vec::new();
    for item in &script.items {
        match item {
            Item::Algebra(decl) => {
                env.algebras.insert(decl.name.clone(), dsl::build_algebra(decl)?);
            }
            Item::NpAlgebra(decl) => {
                env.algebras.insert(decl.name.clone(), dsl::build_np_algebra(decl)?);
            }
            Item::Derivation(decl) => {
                env.derivations.insert(decl.name.clone(), (decl.on.clone(), dsl::build_derivation(decl)?));
            }
            Item::LocalityFn(decl) => {
                env.localities.insert(decl.name.clone(), dsl::build_locality(decl)?);
            }
            Item::Check { kind, target } => reports.push(run_check(&env, script, kind, target, base)?),
            Item::Locality { algebra, left, right } => {
                let a = env.algebra(algebra)?;
                let value = locality(a, &ConfElement::gen(left.as_str()), &ConfElement::gen(right.as_str())).map_err(usage)?;
                let mut report = ScenarioReport::new("locality", base.seed);
                report.param("algebra", algebra).param("pair", format!("{left},{right}"));
                report.check(format!("N({left}, {right})"), true, vec![format!("locality = {value}")]);
                reports.push(report);
            }
            Item::Product { algebra, left, right } => {
                let a = env.algebra(algebra)?;
                let x = CoeffElement::symbol(Gen::new(&left.0), left.1);
                let y = CoeffElement::symbol(Gen::new(&right.0), right.1);
                let value = coeffalg::product(a, &x, &y).map_err(usage)?;
                let mut report = ScenarioReport::new("product", base.seed);
                report.param("algebra", algebra);
                report.check(format!("{x} {y}"), true, vec![format!("= {value}")]);
                reports.push(report);
            }
            Item::Scenario { name, args } => {
                let p = Params::from_args(base, args, &env.localities)?;
                reports.extend(run_scenario(name, &p)?);
            }
            Item::Membership { args } => {
                let p = Params::from_args(base, args, &env.localities)?;
                reports.push(run_membership(&p)?);
            }
        }
    }
    Ok(reports)
}

#[derive(Serialize)]
struct JsonReport<'a> {
    passed: bool,
    reports: &'a [ScenarioReport],
}

pub fn render(reports: &[ScenarioReport], format: ReportFormat, timing: bool) -> String {
    match format {
        ReportFormat::Text => reports.iter().map(|r| r.render_text(timing)).collect(),
        ReportFormat::Json => {
            let doc = JsonReport { passed: reports.iter().all(ScenarioReport::passed), reports };
            let mut value = serde_json::to_value(&doc).expect("reports serialize");
            if timing {
                for (slot, r) in value["reports"].as_array_mut().expect("array").iter_mut().zip(reports) {
                    slot["wall_time_seconds"] = serde_json::json!(r.wall_time.as_secs_f64());
                }
            }
            let mut text = serde_json::to_string_pretty(&value).expect("json");
            text.push('\n');
            text
        }
    }
}

/// Runs one invocation; returns the exit status, standard output and
/// standard error.
pub fn execute(cli: &Cli) -> (i32, String, String) {
    let args = match &cli.command {
        Command::List => return (0, list_scenarios(), String::new()),
        Command::Run(args) => args,
    };
    let params = Params::from_flags(args);
    let result = if args.target == "script" {
        match &args.file {
            None => Err(usage("`script` needs a file")),
            Some(path) => std::fs::read_to_string(path)
                .map_err(|e| usage(format!("{}: {e}", path.display())))
                .and_then(|text| {
                    dsl::parse(&text).map_err(|error| RunError::Parse { file: path.display().to_string(), error })
                })
                .and_then(|script| run_script(&script, &params)),
        }
    } else if args.file.is_some() {
        Err(usage(format!("`{}` takes no file argument", args.target)))
    } else {
        run_scenario(&args.target, &params)
    };
    match result {
        Ok(reports) => {
            let code = if reports.iter().all(ScenarioReport::passed) { 0 } else { 1 };
            (code, render(&reports, args.report, args.timing), String::new())
        }
        Err(e) => (2, String::new(), format!("{e}\n")),
    }
}
