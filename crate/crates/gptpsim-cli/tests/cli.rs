//! End-to-end checks of the binary: exit codes, output files, and the
//! run -> analyze pipeline on its own artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gptpsim"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn gptpsim");
    assert!(
        out.status.success(),
        "gptpsim {args:?} failed: {}\n{}",
        stdout(&out),
        stderr(&out)
    );
    out
}

#[test]
fn list_prints_exactly_three_stable_builtins() {
    let out = run_ok(&["list"]);
    let text = stdout(&out);
    let names: Vec<&str> = text
        .lines()
        .filter_map(|l| l.split_whitespace().next())
        .collect();
    assert_eq!(names, vec!["normal", "gm-failover", "blackhole"]);
}

#[test]
fn run_writes_three_files_and_exits_zero() {
    let dir = tmp("run_normal");
    run_ok(&[
        "run",
        "--builtin",
        "normal",
        "--seed",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    for name in ["trace.csv", "summary.json", "events.log"] {
        let path = dir.join(name);
        assert!(path.exists(), "{} missing", path.display());
        assert!(path.metadata().unwrap().len() > 0);
    }
    let summary = std::fs::read_to_string(dir.join("summary.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&summary).expect("valid JSON");
    assert_eq!(parsed["scenario"], "normal");
    assert_eq!(parsed["seed"], 1);
}

#[test]
fn same_command_twice_is_byte_identical() {
    let a = tmp("det_a");
    let b = tmp("det_b");
    run_ok(&[
        "run",
        "--builtin",
        "normal",
        "--seed",
        "7",
        "--out",
        a.to_str().unwrap(),
    ]);
    run_ok(&[
        "run",
        "--builtin",
        "normal",
        "--seed",
        "7",
        "--out",
        b.to_str().unwrap(),
    ]);
    let ta = std::fs::read(a.join("trace.csv")).unwrap();
    let tb = std::fs::read(b.join("trace.csv")).unwrap();
    assert_eq!(ta, tb);
}

#[test]
fn env_seed_is_used_as_fallback() {
    let a = tmp("env_a");
    let b = tmp("env_b");
    let out = bin()
        .env("GPTPSIM_SEED", "99")
        .args(["run", "--builtin", "normal", "--out", a.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains("seed 99"));
    run_ok(&[
        "run",
        "--builtin",
        "normal",
        "--seed",
        "99",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(a.join("trace.csv")).unwrap(),
        std::fs::read(b.join("trace.csv")).unwrap()
    );
}

#[test]
fn malformed_scenario_exits_two_naming_the_line() {
    let dir = tmp("bad_scn");
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("bad.conf");
    std::fs::write(&file, "[general]\nname = x\nduration = junk\n").unwrap();
    let out = bin()
        .args([
            "run",
            "--scenario",
            file.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn unknown_builtin_exits_two() {
    let out = bin().args(["run", "--builtin", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_out_dir_exits_one() {
    let out = bin()
        .args(["run", "--builtin", "normal", "--out", "/dev/null/nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn analyze_on_own_run_output_succeeds_for_every_builtin() {
    for name in ["normal", "gm-failover", "blackhole"] {
        let dir = tmp(&format!("pipeline_{name}"));
        run_ok(&["run", "--builtin", name, "--out", dir.to_str().unwrap()]);
        let out = run_ok(&[
            "analyze",
            "--trace",
            dir.join("trace.csv").to_str().unwrap(),
        ]);
        let text = stdout(&out);
        assert!(
            text.contains("domain 0: grandmaster body"),
            "{name}: {text}"
        );
    }
    let dir = tmp("pipeline_normal_counts");
    run_ok(&["run", "--builtin", "normal", "--out", dir.to_str().unwrap()]);
    let out = run_ok(&[
        "analyze",
        "--trace",
        dir.join("trace.csv").to_str().unwrap(),
    ]);
    assert!(
        stdout(&out).contains("38/38 clocks converged"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn run_without_a_scenario_source_exits_two() {
    let out = bin().args(["run"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_blackhole_reports_victim_unconverged_with_slope() {
    let dir = tmp("bh");
    run_ok(&[
        "run",
        "--builtin",
        "blackhole",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let out = run_ok(&[
        "analyze",
        "--trace",
        dir.join("trace.csv").to_str().unwrap(),
    ]);
    let text = stdout(&out);
    let victim_lines: Vec<&str> = text.lines().filter(|l| l.starts_with("ecu_fl")).collect();
    assert_eq!(victim_lines.len(), 4);
    for line in victim_lines {
        assert!(line.contains("not converged"), "{line}");
        assert!(line.contains("slope 10.0"), "{line}");
    }
}

#[test]
fn analyze_header_only_trace_exits_two_empty_trace() {
    let dir = tmp("empty_trace");
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("trace.csv");
    std::fs::write(&file, "time_ns,node,domain,clock_time_ns,diff_ns,cause\n").unwrap();
    let out = bin()
        .args(["analyze", "--trace", file.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("empty trace"), "{}", stderr(&out));
}

#[test]
fn run_accepts_scenario_file_roundtripped_from_builtin() {
    // A shipped scenario file and the builtin of the same name must
    // produce identical traces under the same seed.
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let dir_file = tmp("file_normal");
    let dir_builtin = tmp("builtin_normal");
    run_ok(&[
        "run",
        "--scenario",
        scenarios.join("normal.conf").to_str().unwrap(),
        "--out",
        dir_file.to_str().unwrap(),
    ]);
    run_ok(&[
        "run",
        "--builtin",
        "normal",
        "--out",
        dir_builtin.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(dir_file.join("trace.csv")).unwrap(),
        std::fs::read(dir_builtin.join("trace.csv")).unwrap()
    );
}

#[test]
fn sweep_reports_k_and_witness() {
    let out = run_ok(&["sweep", "--builtin", "normal", "--family", "gm-clocks"]);
    let text = stdout(&out);
    assert!(text.contains("k = 1"), "{text}");
    assert!(
        text.contains("clock_failure(body) + clock_failure(main)"),
        "{text}"
    );
}

#[test]
fn duration_override_shortens_the_run() {
    let dir = tmp("short");
    let out = run_ok(&[
        "run",
        "--builtin",
        "normal",
        "--duration",
        "2s",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(stdout(&out).contains("simulated 2s"));
}

#[test]
fn sweep_with_injection_time_past_horizon_exits_two() {
    let out = bin()
        .args([
            "sweep",
            "--builtin",
            "normal",
            "--family",
            "gm-clocks",
            "--at",
            "25s",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}
