use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value as Json;

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name)
}

fn eqsmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqsmt"))
        .args(args)
        .env_remove("EQSMT_BACKEND_CMD")
        .output()
        .expect("run eqsmt")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn z3_on_path() -> bool {
    std::env::var_os("PATH").is_some_and(|p| std::env::split_paths(&p).any(|d| d.join("z3").is_file()))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn sat_exits_zero() {
    let o = eqsmt(&["solve", problem("two-colors.eqsmt").to_str().unwrap()]);
    assert_eq!(stdout(&o).trim(), "sat");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn unsat_exits_one() {
    let o = eqsmt(&["solve", problem("no-escape.eqsmt").to_str().unwrap()]);
    assert_eq!(stdout(&o).trim(), "unsat");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn parse_error_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "bad.eqsmt",
        "(declare-sort FG :foreground)\n(assert-eqsmt (exists ((a FG))\n",
    );
    let o = eqsmt(&["solve", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let o = eqsmt(&["solve", "--json", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let v: Json = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["error"].is_object());
}

#[test]
fn validation_error_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "fg-range.eqsmt",
        "(declare-sort FG :foreground)\n(assert-eqsmt (exists ((a FG) (F (-> FG FG))) (= (F a) a)))\n",
    );
    let o = eqsmt(&["solve", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("existential functions"), "{}", stderr(&o));
}

#[test]
fn missing_backend_names_the_theory() {
    let o = eqsmt(&["solve", problem("lia-threshold.eqsmt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("lia"), "{}", stderr(&o));
}

#[test]
fn json_output() {
    let o = eqsmt(&["solve", "--json", problem("two-colors.eqsmt").to_str().unwrap()]);
    let v: Json = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(v["command"], "solve");
    assert_eq!(v["verdict"], "sat");
    assert_eq!(v["witness_check"]["status"], "pass");
}

#[test]
fn model_out_writes_witness() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("model.json");
    let o = eqsmt(&[
        "solve",
        problem("two-colors.eqsmt").to_str().unwrap(),
        "--model-out",
        m.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Json = serde_json::from_str(&fs::read_to_string(&m).unwrap()).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(v["foreground"]["universe"].as_array().unwrap().len(), 2);
    let c = v["functions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|f| f["name"] == "C")
        .unwrap();
    assert_eq!(c["table"].as_array().unwrap().len(), 2);
}

#[test]
fn trace_dir_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("trace");
    let o = eqsmt(&[
        "solve",
        problem("two-colors.eqsmt").to_str().unwrap(),
        "--trace",
        t.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    for f in [
        "01-norel.eqsmt",
        "02-restrict.eqsmt",
        "03-nofun.eqsmt",
        "04-ack.eqsmt",
        "05-cnf.eqsmt",
        "contracts.log",
    ] {
        assert!(t.join(f).is_file(), "{f} missing");
    }
    let o = eqsmt(&["trace-replay", "--json", t.to_str().unwrap()]);
    let v: Json = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["agree"], true);
    assert_eq!(v["verdict"], "sat");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn oracle_bounds() {
    let o = eqsmt(&[
        "oracle",
        "--bound",
        "FG=2,Bool=2",
        problem("two-colors.eqsmt").to_str().unwrap(),
    ]);
    assert_eq!(stdout(&o).trim(), "sat");
    assert_eq!(o.status.code(), Some(0));
    let o = eqsmt(&[
        "oracle",
        "--bound",
        "FG=1",
        problem("two-colors.eqsmt").to_str().unwrap(),
    ]);
    assert_eq!(stdout(&o).trim(), "unsat");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn external_backend_queries_are_traced() {
    if !z3_on_path() {
        eprintln!("z3 not on PATH; skipped");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("trace");
    let o = eqsmt(&[
        "solve",
        problem("lia-threshold.eqsmt").to_str().unwrap(),
        "--backend",
        "z3 -in",
        "--trace",
        t.to_str().unwrap(),
    ]);
    assert_eq!(stdout(&o).trim(), "sat", "{}", stderr(&o));
    let queries = fs::read_dir(&t)
        .unwrap()
        .filter(|e| {
            let n = e.as_ref().unwrap().file_name().into_string().unwrap();
            n.starts_with("query-") && n.ends_with(".smt2")
        })
        .count();
    assert!(queries > 0);
}

#[test]
fn synthesizes_a_small_program() {
    if !z3_on_path() {
        eprintln!("z3 not on PATH; skipped");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "plus5.json",
        r#"{
            "name": "plus5", "max_depth": 1, "input": "x", "constants": ["c1"],
            "operators": [
                {"label": "ADD", "arity": 2, "kind": "term", "children": ["term", "term"],
                 "semantics": "(= val (+ arg0 arg1))", "render": "(+ arg0 arg1)"},
                {"label": "INPUT", "kind": "term", "semantics": "(= val in)", "render": "x"},
                {"label": "C1", "kind": "term", "semantics": "(= val c1)", "render": "c1"}
            ],
            "valuations": ["x"], "spec": "(= (g 0) (+ x 5))"
        }"#,
    );
    let o = eqsmt(&["synth", "--json", "--backend", "z3 -in", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Json = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "sat");
    assert!(v["program"].as_str().unwrap().contains('+'));
}
