use pebres::dag::LayeredDag;
use pebres::formula::pebbling_contradiction;
use pebres::pebbling::{exact_price, Mode, SearchLimits};
use pebres::resolution::{build_linear, replay};
use serde_json::Value;
use std::io::Write;
use std::process::{Command, Output, Stdio};

fn pebres(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_pebres"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    if let Some(s) = stdin {
        child.stdin.take().unwrap().write_all(s.as_bytes()).unwrap();
    }
    child.wait_with_output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn gen_matches_golden_and_library() {
    let out = pebres(&["gen", "--graph", "pyramid:2", "--degree", "2"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, golden("pyramid2_d2.cnf"));
    let f = pebbling_contradiction(&LayeredDag::pyramid(2).unwrap(), 2).unwrap();
    assert_eq!(text, f.cnf.to_dimacs());
    assert!(text.lines().any(|l| l == "p cnf 12 17"));
}

#[test]
fn build_matches_golden() {
    let out = pebres(&["build", "pyramid:1", "--degree", "2", "--no-targets"], None);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden("pyramid1_d2_star_linear.drv"));
}

#[test]
fn build_check_pipeline() {
    let dir = std::env::temp_dir().join(format!("pebres-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cnf = dir.join("f.cnf");
    let cnf = cnf.to_str().unwrap();
    assert!(pebres(&["gen", "--graph", "pyramid:2", "--degree", "2", "--out", cnf], None).status.success());
    let trace = pebres(&["build", "--graph", "pyramid:2", "--degree", "2", "--strategy", "linear"], None);
    let out = pebres(&["check", "--cnf", cnf, "--trace", "-"], Some(&String::from_utf8(trace.stdout).unwrap()));
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["verdict"], "pass");
    let f = pebbling_contradiction(&LayeredDag::pyramid(2).unwrap(), 2).unwrap();
    let m = replay(&f.cnf, &build_linear(&f)).unwrap();
    assert_eq!(r["results"]["metrics"]["clause_space"], m.clause_space);
    assert_eq!(r["results"]["metrics"]["width"], m.width);
    assert_eq!(r["results"]["metrics"]["length"], m.length);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn check_reports_bad_traces() {
    let cnf = golden("pyramid2_d2.cnf");
    let dir = std::env::temp_dir().join(format!("pebres-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("f.cnf");
    std::fs::write(&path, cnf).unwrap();
    let out = pebres(&["check", "--cnf", path.to_str().unwrap(), "--trace", "-"], Some("p drv f\nd 1\n"));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["verdict"], "fail");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn prices_match_library() {
    for (mode, lib) in [("black", Some(Mode::Black)), ("bw", Some(Mode::Bw)), ("blob", None)] {
        let out = pebres(&["price", "--graph", "pyramid:2", "--mode", mode], None);
        assert!(out.status.success(), "{mode}");
        let p = report(&out)["results"]["price"].as_u64().unwrap() as usize;
        let g = LayeredDag::pyramid(2).unwrap();
        let expected = match lib {
            Some(m) => exact_price(&g, m, SearchLimits::with_budget(5)).unwrap().price,
            None => 4,
        };
        assert_eq!(p, expected, "{mode}");
    }
    let out = pebres(&["price", "--graph", "pyramid:3", "--mode", "black"], None);
    assert_eq!(report(&out)["results"]["price"], 5);
}

#[test]
fn translate_and_bounds() {
    let trace = String::from_utf8(pebres(&["build", "pyramid:2", "--degree", "2", "--no-targets"], None).stdout).unwrap();
    let out = pebres(&["translate", "pyramid:2", "--degree", "2", "--trace", "-"], Some(&trace));
    assert!(out.status.success());
    let r = report(&out);
    assert!(r["results"]["max_cost"].as_u64().unwrap() <= r["results"]["clause_space"].as_u64().unwrap() + 4);
    let out = pebres(&["verify-bounds", "pyramid:2", "--degree", "2", "--no-targets", "--trace", "-"], Some(&trace));
    assert!(out.status.success());
    assert_eq!(report(&out)["results"]["violations"], Value::Array(vec![]));
}

#[test]
fn potential_and_spreading() {
    let out = pebres(&["potential", "pyramid:6", "--black", "z", "--white", "y1,y2"], None);
    assert_eq!(report(&out)["results"]["potential"], 0);
    let out = pebres(&["potential", "pyramid:3", "--blob", "z/"], None);
    assert_eq!(report(&out)["results"]["potential"], 5);
    let out = pebres(&["spreading", "pyramid:2"], None);
    assert_eq!(report(&out)["results"]["verdict"], "pass");
    let out = pebres(&["spreading", "pyramid:2", "--format", "text"], None);
    assert!(String::from_utf8(out.stdout).unwrap().contains("verdict: \"pass\""));
}

#[test]
fn exit_codes() {
    assert_eq!(pebres(&["gen", "--graph", "cube:3"], None).status.code(), Some(2));
    assert_eq!(pebres(&["gen", "pyramid:2", "--degree", "5"], None).status.code(), Some(2));
    assert_eq!(pebres(&["nope"], None).status.code(), Some(2));
    assert_eq!(pebres(&["check", "--cnf", "/nonexistent", "--trace", "-"], Some("")).status.code(), Some(2));
    assert_eq!(pebres(&["price", "pyramid:3", "--budget", "3"], None).status.code(), Some(3));
    let out = Command::new(env!("CARGO_BIN_EXE_pebres"))
        .args(["price", "pyramid:3", "--mode", "bw"])
        .env("PEBRES_BUDGET_STATES", "5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn graph_files() {
    let g = LayeredDag::pyramid(2).unwrap().to_text();
    let out = pebres(&["price", "--graph", "-", "--mode", "black"], Some(&g));
    assert_eq!(report(&out)["results"]["price"], 4);
}
