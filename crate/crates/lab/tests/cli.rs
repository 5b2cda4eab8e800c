use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

fn rru(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rru"));
    cmd.args(args).env_remove("RRU_OUTPUT_ROOT");
    cmd
}

fn text(out: &Output) -> (String, String) {
    (String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn validate_accepts_every_shipped_config() {
    for entry in fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")).unwrap() {
        let path = entry.unwrap().path();
        let out = rru(&["validate", path.to_str().unwrap()]).output().unwrap();
        let (stdout, stderr) = text(&out);
        assert_eq!(out.status.code(), Some(0), "{}: {stderr}", path.display());
        assert!(stdout.starts_with("ok "), "{stdout}");
        assert!(stdout.contains("sha256 "));
    }
}

#[test]
fn validate_hash_follows_overrides() {
    let c = config("polya");
    let hash = |extra: &[&str]| {
        let mut args = vec!["validate", c.to_str().unwrap()];
        args.extend_from_slice(extra);
        let out = rru(&args).output().unwrap();
        text(&out).0.split_whitespace().last().unwrap().to_string()
    };
    assert_eq!(hash(&[]), hash(&[]));
    assert_ne!(hash(&[]), hash(&["--seed", "8"]));
}

#[test]
fn bad_config_exits_two_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let original = fs::read_to_string(config("polya")).unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, original.replace("replicates = ", "replicas = ")).unwrap();
    let out = rru(&["validate", path.to_str().unwrap()]).output().unwrap();
    let (_, stderr) = text(&out);
    assert_eq!(out.status.code(), Some(2), "{stderr}");
    assert!(stderr.contains("run"), "{stderr}");
    assert!(stderr.contains("replicas"), "{stderr}");
}

#[test]
fn missing_config_is_an_io_error() {
    let out = rru(&["validate", "/nonexistent/rru.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_writes_outputs_and_reports_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("nested/smoke");
    let out = rru(&["run", config("smoke").to_str().unwrap(), "-o", target.to_str().unwrap()]).output().unwrap();
    let (stdout, stderr) = text(&out);
    // Smoke verdicts are underpowered, so either status is legitimate.
    assert!(matches!(out.status.code(), Some(0 | 1)), "{stderr}");
    assert!(stdout.lines().any(|l| l.starts_with("PASS ") || l.starts_with("FAIL ")));
    for f in ["config.toml", "manifest.json", "summary.json", "report.txt", "pivot-clt-equal.csv"] {
        assert!(target.join(f).is_file(), "missing {f}");
    }
    assert!(target.join("plots").is_dir());
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = rru(&["run", config("smoke").to_str().unwrap(), "--replicates", "20"])
        .env("RRU_OUTPUT_ROOT", dir.path())
        .output()
        .unwrap();
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", text(&out).1);
    assert!(dir.path().join("smoke/manifest.json").is_file());
}

#[test]
fn unwritable_output_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"").unwrap();
    let target = blocker.join("out");
    let out = rru(&["run", config("smoke").to_str().unwrap(), "--replicates", "20", "-o", target.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", text(&out).1);
}

#[test]
fn oracle_prints_the_exact_law() {
    let out = rru(&["oracle", config("polya").to_str().unwrap(), "-n", "2"]).output().unwrap();
    let (stdout, stderr) = text(&out);
    assert_eq!(out.status.code(), Some(0), "{stderr}");
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("y1,y2,z,n1,probability"));
    let rows: Vec<Vec<f64>> =
        lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    let total: f64 = rows.iter().map(|r| r[4]).sum();
    assert!((total - 1.0).abs() < 1e-12);
    for r in &rows {
        assert!((r[4] - 1.0 / 3.0).abs() < 1e-12);
    }
}

#[test]
fn oracle_refuses_large_enumerations() {
    let out = rru(&["oracle", config("equal-two-point").to_str().unwrap(), "-n", "100000"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn embed_runs_only_embedding_tests() {
    let dir = tempfile::tempdir().unwrap();
    let out = rru(&["embed", config("smoke").to_str().unwrap(), "-o", dir.path().to_str().unwrap()]).output().unwrap();
    let (stdout, stderr) = text(&out);
    assert!(matches!(out.status.code(), Some(0 | 1)), "{stderr}");
    let verdicts: Vec<&str> = stdout.lines().filter(|l| l.starts_with("PASS ") || l.starts_with("FAIL ")).collect();
    assert_eq!(verdicts.len(), 2, "{stdout}");
    assert!(verdicts.iter().all(|l| l.contains("embedding-")));
}
