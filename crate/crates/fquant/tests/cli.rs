//! End-to-end tests of the `fquant` binary: determinism, exit codes and
//! artifact layout.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fquant")
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fquant-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

const SMALL_CURVE: &str = r#"
kind = "haar-curve"
seed = 42

[process]
family = "brownian"

[budgets]
log2 = [4, 5, 6, 7]

[paths]
train = 5000
eval = 2000

[grid]
level = 8
"#;

#[test]
fn run_twice_is_byte_identical_across_thread_counts() {
    let dir = tmpdir("determinism");
    let cfg = write_config(&dir, "curve.toml", SMALL_CURVE);
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    let ra = run(&["run", cfg.to_str().unwrap(), "--out", out_a.to_str().unwrap()]);
    assert_eq!(exit_code(&ra), 0, "{}", String::from_utf8_lossy(&ra.stderr));
    let rb = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert_eq!(exit_code(&rb), 0);

    let mut rel_paths: Vec<PathBuf> = Vec::new();
    collect_files(&out_a, &out_a, &mut rel_paths);
    assert!(rel_paths.iter().any(|p| p.ends_with("curve.csv")));
    assert!(rel_paths.iter().any(|p| p.ends_with("manifest.txt")));
    for rel in rel_paths {
        let a = fs::read(out_a.join(&rel)).unwrap();
        let b = fs::read(out_b.join(&rel)).unwrap();
        assert_eq!(a, b, "file {} differs between runs", rel.display());
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
    for entry in fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out);
        } else {
            out.push(path.strip_prefix(root).unwrap().to_path_buf());
        }
    }
}

#[test]
fn manifest_covers_all_outputs() {
    let dir = tmpdir("manifest");
    let cfg = write_config(&dir, "curve.toml", SMALL_CURVE);
    let out = dir.join("out");
    let r = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(exit_code(&r), 0);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    let mut files = Vec::new();
    collect_files(&out, &out, &mut files);
    for rel in files {
        if rel.ends_with("manifest.txt") {
            continue;
        }
        assert!(
            manifest.contains(rel.to_str().unwrap()),
            "manifest missing {}",
            rel.display()
        );
    }
}

#[test]
fn unknown_key_is_config_error_naming_the_key() {
    let dir = tmpdir("badkey");
    let cfg = write_config(
        &dir,
        "bad.toml",
        "kind = \"haar-curve\"\nseed = 1\nfrobnicate = 3\n",
    );
    let r = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("frobnicate"));
}

#[test]
fn p_above_r_is_rejected_naming_p() {
    let dir = tmpdir("badp");
    let cfg = write_config(
        &dir,
        "bad.toml",
        r#"
kind = "cpp-curve"
seed = 1

[process]
family = "poisson"
lambda = 1.0

[exponents]
r = 1.0
p = 2.0

[budgets]
log2 = [8, 10, 12]
"#,
    );
    let r = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("exponents.p"));
}

#[test]
fn truncated_budget_list_fails_check_with_runtime_error() {
    let dir = tmpdir("short");
    let cfg = write_config(
        &dir,
        "short.toml",
        r#"
kind = "haar-curve"
seed = 42

[process]
family = "brownian"

[budgets]
log2 = [5, 6]

[paths]
train = 2000
eval = 1000

[grid]
level = 8
"#,
    );
    // running is fine (the curve itself has no minimum length)
    let out = dir.join("out");
    let r = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(exit_code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    // checking needs the fit, which requires four points
    let r = run(&["check", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&r), 3);
    assert!(String::from_utf8_lossy(&r.stderr).contains("insufficient points"));
}

#[test]
fn failing_threshold_exits_four() {
    let dir = tmpdir("fail4");
    // far too few samples for the 1% uniform tolerance
    let cfg = write_config(
        &dir,
        "uniform.toml",
        r#"
kind = "scalar-pierce"
seed = 42

[scalar]
law = "uniform"
sizes = [4, 8, 16, 32]

[paths]
train = 300
eval = 400
"#,
    );
    let r = run(&["check", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&r), 4, "{}", String::from_utf8_lossy(&r.stdout));
    assert!(String::from_utf8_lossy(&r.stdout).contains("FAIL"));
}

#[test]
fn poisson_report_flags_disagreement_and_passes_check() {
    let dir = tmpdir("report");
    let cfg = write_config(
        &dir,
        "report.toml",
        r#"
kind = "report"
seed = 42

[process]
family = "poisson"
lambda = 1.0

[exponents]
r = 1.0
p = 1.0
rho = 1.0

[budgets]
log2 = [6, 8, 10, 12]

[paths]
train = 20000
eval = 5000
regularity = 5000

[grid]
level = 10
"#,
    );
    let out = dir.join("out");
    let r = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(exit_code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    let row = report.lines().nth(1).expect("one data row");
    assert!(row.ends_with("false"), "jump family must disagree: {row}");
    // the check expects exactly that disagreement
    let r = run(&["check", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&r), 0, "{}", String::from_utf8_lossy(&r.stdout));
}

#[test]
fn dump_paths_writes_per_path_csvs() {
    let dir = tmpdir("dump");
    let cfg = write_config(&dir, "curve.toml", SMALL_CURVE);
    let out = dir.join("out");
    let r =
        run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--dump-paths"]);
    assert_eq!(exit_code(&r), 0);
    let first = fs::read_to_string(out.join("paths").join("path0.csv")).unwrap();
    assert!(first.starts_with("t,value\n"));
    assert_eq!(first.lines().count(), 2 + (1 << 8)); // header + 2^8 + 1 points
}
