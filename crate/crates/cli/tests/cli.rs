use std::io::Write;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_novconf");

fn novconf(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn script(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".cnv").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn list_is_stable_and_complete() {
    let a = novconf(&["list"]);
    let b = novconf(&["list"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let names: Vec<String> = stdout(&a).lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect();
    assert_eq!(
        names,
        ["series00", "series_pq", "case1", "case2", "case3", "counterexample", "quadratic_np", "gelfand_demo", "coeff_locality"]
    );
}

#[test]
fn every_listed_scenario_runs() {
    let extra: &[(&str, &[&str])] = &[
        ("counterexample", &["--kmax", "3"]),
        ("coeff_locality", &["--window", "-2:2"]),
        ("case2", &["--variant", "df00"]),
    ];
    for line in stdout(&novconf(&["list"])).lines() {
        let name = line.split_whitespace().next().unwrap();
        let mut args = vec!["run", name];
        if let Some((_, more)) = extra.iter().find(|(n, _)| *n == name) {
            args.extend_from_slice(more);
        }
        let out = novconf(&args);
        assert_eq!(out.status.code(), Some(0), "{name}: {}{}", stdout(&out), stderr(&out));
        assert!(stdout(&out).contains("status: pass"), "{name}");
    }
}

#[test]
fn counterexample_reports_the_locality_sequence() {
    let out = novconf(&["run", "counterexample", "--kmax", "6"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("1,3,5,7,9,11,13"), "{}", stdout(&out));
}

#[test]
fn embedding_case1_has_a_certificate() {
    let out = novconf(&["run", "embedding", "--M", "1", "--case", "case1", "--r", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("verified: true"), "{text}");
    assert!(text.contains("window: indices"), "{text}");
    assert!(text.contains("seed: 0"));
}

#[test]
fn window_overrides_are_reported() {
    let out = novconf(&["run", "case1", "--window", "-7:7", "--smax", "3", "--n", "1", "--m", "-1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("indices [-7, 7], s_max 3"), "{}", stdout(&out));
}

#[test]
fn syntax_errors_exit_2_with_a_position() {
    let f = script("algebra A { generators: x;\n  bracket(x, x) = lam^\n}\n");
    let out = novconf(&["run", "script", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains(":2:22: parse error: expected an exponent, found `}` at 3:1"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(novconf(&["run", "nosuch"]).status.code(), Some(2));
    assert_eq!(novconf(&["run", "series00", "--M", "0"]).status.code(), Some(2));
    assert_eq!(novconf(&["run", "embedding"]).status.code(), Some(2));
    assert_eq!(novconf(&["run", "script"]).status.code(), Some(2));
    assert_eq!(novconf(&["run", "case1", "--window", "3:1"]).status.code(), Some(2));
    assert_eq!(novconf(&["run", "case1", "--bogus"]).status.code(), Some(2));
    let f = script("scenario case1 colour=3;");
    assert_eq!(novconf(&["run", "script", f.path().to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn failed_checks_exit_1() {
    let f = script(
        "algebra W { generators: x, v1; bracket(v1, x) = (del + lam)*v1; }\n\
         check rsym_novikov W;\n\
         check commutative W;\n",
    );
    let out = novconf(&["run", "script", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("[pass] rsym_novikov on generator triples"), "{text}");
    assert!(text.contains("[FAIL] commutative on generator triples"), "{text}");
}

#[test]
fn script_commands_run_in_order() {
    let f = script(
        "npalgebra P { basis: e; circ(e, e) = e; star(e, e) = e; }\n\
         check np_axioms P;\n\
         check lcom_novikov P;\n\
         check coeff_novikov P;\n\
         product P e(2) e(-1);\n\
         locality P e e;\n\
         algebra C { generators: one, t; bracket(one, one) = one; bracket(one, t) = t; bracket(t, one) = t; }\n\
         derivation D on C { t = one; }\n\
         check gelfand_novikov D;\n\
         localityfn N { default: 1; }\n\
         membership target=[a^(2)(0)*f(x, y, 0, 0, 3)] locality=N;\n\
         scenario case2 variant=f01;\n",
    );
    let out = novconf(&["run", "script", f.path().to_str().unwrap(), "--report", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}{}", stdout(&out), stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["passed"], true);
    let kinds: Vec<&str> = doc["reports"].as_array().unwrap().iter().map(|r| r["scenario"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["check", "check", "check", "product", "locality", "check", "membership", "case2"]);
    let product = &doc["reports"][3]["checks"][0]["details"][0];
    assert_eq!(product, "= 2*e(0) + e(1)");
    assert_eq!(doc["reports"][4]["checks"][0]["details"][0], "locality = 2");
}

#[test]
fn json_reports_are_replayable() {
    let args = ["run", "gelfand_demo", "--seed", "17", "--report", "json"];
    let a = novconf(&args);
    let b = novconf(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let r = &doc["reports"][0];
    assert_eq!(r["seed"], 17);
    for key in ["scenario", "parameters", "windows", "checks", "notes"] {
        assert!(r.get(key).is_some(), "{key}");
    }
    for c in r["checks"].as_array().unwrap() {
        assert!(c["name"].is_string() && c["passed"].is_boolean() && c["details"].is_array());
    }

    let timed = novconf(&["run", "case1", "--report", "json", "--timing"]);
    let doc: serde_json::Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(doc["reports"][0]["wall_time_seconds"].is_number());
    assert!(doc["reports"][0]["windows"][0]["index_lo"].is_number());
}
