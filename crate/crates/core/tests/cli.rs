use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_rvv-backport");

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn corpus(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("corpus")
        .join(rel)
        .display()
        .to_string()
}

#[test]
fn translate_writes_default_output() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("k.s"),
        "\tvsetvli t0, a0, e32, m1, ta, ma\n\tvle32.v v1, (a1)\n",
    )
    .unwrap();
    let out = run(&["translate", "k.s"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("k.v07.s")).unwrap();
    assert_eq!(text, "\tvsetvli t0, a0, e32, m1\n\tvle.v v1, (a1)\n");
}

#[test]
fn stdout_output_and_json_report() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("k.s"), "vmandn.mm v1, v2, v3\n").unwrap();
    let out = run(
        &["translate", "k.s", "-o", "-", "--report", "r.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "vmandnot.mm v1, v2, v3\n"
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "ok");
    assert_eq!(report["rules"]["rename-mask-logical"], 1);
}

#[test]
fn strict_failure_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("k.s"), "vsetvli t0, a0, e8, mf2\n").unwrap();
    let out = run(&["translate", "k.s", "--report", "-"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("k.v07.s").exists());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["errors"][0]["code"], "fractional-lmul");
    assert!(!out.stderr.is_empty());
}

#[test]
fn lenient_failure_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("k.s"), "vzext.vf2 v1, v2\nvnot.v v3, v4\n").unwrap();
    let out = run(&["translate", "--lenient", "k.s"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("k.v07.s").exists());
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&[], dir.path()).status.code(), Some(2));
    assert_eq!(
        run(&["translate", "missing.s"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["check", "--vlen", "100", "missing.s"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn multiple_inputs_give_report_array() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.s"), "vfirst.m a0, v1\n").unwrap();
    fs::write(dir.path().join("b.s"), "addi a0, a0, 1\n").unwrap();
    let out = run(&["translate", "a.s", "b.s", "--report", "-"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.as_array().map(Vec::len), Some(2));
}

#[test]
fn check_reports_match() {
    let dir = tempfile::tempdir().unwrap();
    let kernel = corpus("diff/axpy_i32.s");
    for vlen in ["128", "256"] {
        let out = run(
            &["check", &kernel, "--vlen", vlen, "--seed", "3"],
            dir.path(),
        );
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stdout)
        );
        assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "MATCH");
    }
}

#[test]
fn check_with_init_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("k.s"),
        "vsetvli t0, a0, e32, m1\nvle32.v v1, (a1)\nvadd.vv v1, v1, v1\nvse32.v v1, (a1)\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("init"),
        "a0=3\na1=0x100\nmem 0x100 01000000020000000300000004000000\n",
    )
    .unwrap();
    let out = run(&["check", "k.s", "--init", "init"], dir.path());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "MATCH");
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn check_rejected_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("k.s"), "vsetvli t0, a0, e8, mf4\n").unwrap();
    let out = run(&["check", "k.s"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_ne!(String::from_utf8_lossy(&out.stdout).trim(), "MATCH");
}

/// `vsetvli x0, x0` cannot be translated faithfully; the tool warns and
/// the oracle shows the difference.
#[test]
fn vl_reset_is_warned_and_observable() {
    let dir = tempfile::tempdir().unwrap();
    let src = "\
\tvsetvli\tt0, a0, e32, m1
\tvsetvli\tx0, x0, e32, m1
\tcsrr\ta2, vl
";
    fs::write(dir.path().join("k.s"), src).unwrap();
    fs::write(dir.path().join("init"), "a0=2\n").unwrap();
    let out = run(
        &["translate", "k.s", "-o", "-", "--report", "r.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["warnings"][0]["code"], "vl-reset");
    let out = run(&["check", "k.s", "--init", "init"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("x12: 0x2 (v1.0) vs 0x4 (v0.7.1)"));
}

#[test]
fn selftest_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["selftest"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 failed"));
}
