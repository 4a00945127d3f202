use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use irw_core::cli::main_with;
use serde_json::Value;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn irw(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = main_with(std::iter::once("irw").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("irw-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bundled_corpus_passes() {
    let (code, out) = irw(&["corpus"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().next().unwrap().ends_with("cases, 0 failed"), "{out}");
    let (code, shuffled) = irw(&["corpus", "--seed", "7"]);
    assert_eq!(code, 0);
    let sorted = |s: &str| {
        let mut v: Vec<String> = s.lines().skip(1).map(str::to_string).collect();
        v.sort();
        v
    };
    assert_eq!(sorted(&out), sorted(&shuffled));
}

#[test]
fn edited_expectation_fails() {
    let dir = scratch("edited");
    fs::copy(corpus_dir().join("mconfl.trs"), dir.join("mconfl.trs")).unwrap();
    let expected = fs::read_to_string(corpus_dir().join("mconfl.expected")).unwrap();
    fs::write(dir.join("mconfl.expected"), expected.replace("=> mu x. g(x)", "=> mu x. f(x)")).unwrap();
    let (code, out) = irw(&["corpus", path(&dir)]);
    assert_eq!(code, 1, "{out}");
    assert!(out.lines().next().unwrap().ends_with("1 failed"), "{out}");
    assert!(out.contains("FAIL mconfl:2: expected `mu x. f(x)`, got `mu x. g(x)`"), "{out}");
}

#[test]
fn empty_corpus() {
    let dir = scratch("empty");
    assert_eq!(irw(&["corpus", path(&dir)]), (0, "0 cases, 0 failed\n".to_string()));
}

#[test]
fn malformed_rules_report_the_location() {
    let dir = scratch("malformed");
    let file = dir.join("bad.trs");
    fs::write(&file, "rule r1: a -> f(a\n").unwrap();
    let (code, out) = irw(&["check", path(&file)]);
    assert_eq!(code, 1);
    assert!(out.starts_with("error[parse-error]: 1:18:"), "{out}");
    let (code, out) = irw(&["check", path(&file), "--json"]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["error"]["code"], "parse-error");
    assert_eq!(v["schema"], 1);
}

#[test]
fn json_reports_carry_schema_and_command() {
    let file = corpus_dir().join("prsconv.trs");
    for (cmd, key) in [("limit", "limit"), ("boehm", "tree"), ("develop", "limit")] {
        let (code, out) = irw(&[cmd, path(&file), "--json"]);
        assert_eq!(code, 0, "{cmd}: {out}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["command"], cmd);
        assert!(v.get(key).is_some(), "{cmd} lacks {key}: {out}");
    }
}

#[test]
fn exit_codes() {
    let mconfl = corpus_dir().join("mconfl.trs");
    assert_eq!(irw(&["boehm", path(&mconfl)]).0, 0);
    // Too little fuel to decide root-activeness.
    let (code, out) = irw(&["boehm", path(&mconfl), "--fuel", "1"]);
    assert_eq!(code, 2, "{out}");
    let (code, out) = irw(&["limit", path(&mconfl), "--strategy", "sideways"]);
    assert_eq!(code, 1, "{out}");
    assert!(out.starts_with("error["), "{out}");
    let (code, out) = irw(&["frobnicate"]);
    assert_eq!(code, 1, "{out}");
    assert_eq!(irw(&["--help"]).0, 0);
}

#[test]
fn binary_runs() {
    let out = Command::new(env!("CARGO_BIN_EXE_irw"))
        .args(["limit", path(&corpus_dir().join("growth.trs"))])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(!String::from_utf8(out.stdout).unwrap().is_empty());
}
