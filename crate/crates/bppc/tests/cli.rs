use std::path::Path;
use std::process::{Command, Output};

fn bppc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bppc")).args(args).current_dir(dir).output().expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn generate_solve_validate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = bppc(&["generate", "--class", "uniform", "--n", "40", "--density", "0.2", "--seed", "4", "-o", "inst.txt"], d);
    assert!(out.status.success(), "{}", text(&out.stderr));

    let out = bppc(&["solve", "inst.txt", "-o", "inst.sol", "--report", "run.json", "--trace", "trace.jsonl", "--seed", "2"], d);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("run.json")).unwrap()).unwrap();
    assert_eq!(report["feasible"], true);
    assert_eq!(report["seed"], 2);
    assert_eq!(report["mode"], "complete");
    let bins = report["bins"].as_u64().unwrap() as usize;
    assert_eq!(std::fs::read_to_string(d.join("inst.sol")).unwrap().lines().count(), bins);

    let out = bppc(&["validate", "inst.txt", "inst.sol"], d);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    assert!(text(&out.stdout).contains("feasible"));

    let out = bppc(&["validate", "inst.txt", "inst.sol", "--json"], d);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["bins"].as_u64(), Some(bins as u64));
}

#[test]
fn validate_reports_violations_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("i.txt"), "3 10\n1 5 2\n2 5\n3 6\n").unwrap();
    std::fs::write(d.join("conflict.sol"), "1 2\n3\n").unwrap();
    std::fs::write(d.join("overload.sol"), "1\n2 3\n").unwrap();
    std::fs::write(d.join("missing.sol"), "1\n2\n").unwrap();
    std::fs::write(d.join("ok.sol"), "1\n2\n3\n").unwrap();

    let out = bppc(&["validate", "i.txt", "conflict.sol"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stdout).contains("items 1 and 2 conflict"));
    let out = bppc(&["validate", "i.txt", "overload.sol"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stdout).contains("load 11 exceeds capacity 10"));
    assert_eq!(bppc(&["validate", "i.txt", "missing.sol"], d).status.code(), Some(1));
    let out = bppc(&["validate", "i.txt", "ok.sol"], d);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
}

#[test]
fn usage_and_input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(bppc(&["frobnicate"], d).status.code(), Some(2));
    assert_eq!(bppc(&["solve", "absent.txt"], d).status.code(), Some(2));
    std::fs::write(d.join("bad.txt"), "2 10\n1 4\n2 12\n").unwrap();
    let out = bppc(&["solve", "bad.txt"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("line 3: weight exceeds capacity"), "{}", text(&out.stderr));
    std::fs::write(d.join("ok.txt"), "1 10\n1 4\n").unwrap();
    std::fs::write(d.join("cfg.toml"), "n_shakes = 4\n").unwrap();
    assert_eq!(bppc(&["solve", "ok.txt", "--config", "cfg.toml"], d).status.code(), Some(2));
    assert_eq!(bppc(&["--help"], d).status.code(), Some(0));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("i.txt"), "4 10\n1 5 2\n2 5\n3 5\n4 5\n").unwrap();
    std::fs::write(d.join("cfg.toml"), "mode = \"simple\"\nseed = 3\n").unwrap();
    let out = bppc(&["solve", "i.txt", "--config", "cfg.toml", "--seed", "8", "--report", "r.json", "-o", "s.sol"], d);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(report["mode"], "simple");
    assert_eq!(report["seed"], 8);
    assert_eq!(report["bins"], 2);
}

#[test]
fn oracle_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::create_dir(d.join("set")).unwrap();
    std::fs::write(d.join("set/a.txt"), "4 10\n1 5 2\n2 5\n3 5\n4 5\n").unwrap();
    std::fs::write(d.join("set/b.txt"), "3 10\n1 5 2 3\n2 5 3\n3 5\n").unwrap();
    std::fs::write(d.join("bks.csv"), "name,z_bks,opt\na,2,1\nb,3,1\n").unwrap();

    let out = bppc(&["oracle", "set/b.txt"], d);
    assert_eq!(text(&out.stdout).trim(), "3");

    let out = bppc(&["bench", "set", "--bks", "bks.csv", "--repeats", "2", "-o", "rows.csv", "--group-by", "size"], d);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let rows = std::fs::read_to_string(d.join("rows.csv")).unwrap();
    let lines: Vec<&str> = rows.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("a,4,"));
    assert!(lines[4].starts_with("b,3,"));
    assert!(lines[1..].iter().all(|l| l.contains(",0.0,") || l.contains(",0,")), "{rows}");
    assert!(text(&out.stdout).starts_with("class,key,runs,mean_bins,mean_gap,mean_elapsed"));
}
