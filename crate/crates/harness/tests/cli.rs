use std::path::Path;
use std::process::{Command, Output};

use glnn_lab::results::strip_timing_columns;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glnn-lab"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

const SMALL: &str = "[scenario]\nphase_table = 6:30\n[glnn]\nwarmup_samples = 10\n\
                     [experiment]\neval_samples = 8\npower_sweep_dbm = 0, 5, 10\n";

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("lab.cfg");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn selftest_passes_and_reports_runtimes() {
    let out = lab(&["selftest"]);
    let stdout = text(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("5 of 5 suites passed"));
    assert!(stdout.contains("time_ms"));
    for suite in ["gradients", "power", "cee", "liquid-cell", "wmmse"] {
        assert!(stdout.contains(suite), "{suite} missing from\n{stdout}");
    }
}

#[test]
fn corrupted_adjoint_fails_selftest_by_name() {
    let out = lab(&["selftest", "--inject-fault", "logdet-hpd"]);
    let stdout = text(&out.stdout);
    assert!(!out.status.success());
    assert!(stdout.contains("gradients    FAIL"), "{stdout}");
    assert!(stdout.contains("op `logdet-hpd`"), "{stdout}");
    assert!(stdout.contains("power        PASS"), "{stdout}");
}

#[test]
fn unknown_config_key_is_reported_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[glnn]\nalpah = 0.1\n");
    let out = lab(&["se-vs-power", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("alpah"), "{}", text(&out.stderr));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_algorithm_flag_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["se-vs-cee", "--algorithms", "glnn,zf", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("zf"));
}

#[test]
fn power_sweep_writes_artifacts_and_replays_from_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let first = dir.path().join("first");
    let out = lab(&["se-vs-power", "--config", &cfg, "--seed", "3", "--out", first.to_str().unwrap(), "--parallel", "2"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    for f in ["results.csv", "summary.csv", "plot_se_vs_power.svg", "run_meta.txt"] {
        assert!(first.join(f).is_file(), "{f} missing");
    }

    let summary = std::fs::read_to_string(first.join("summary.csv")).unwrap();
    assert!(summary.starts_with("# schema: glnn-lab-results/1\n"));
    let data: Vec<&str> = summary.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(data.len(), 6, "one row per (algorithm, P)");
    assert!(data.iter().all(|l| l.split(',').nth(3) == Some("8")));

    let results = std::fs::read_to_string(first.join("results.csv")).unwrap();
    let rows: Vec<&str> = results.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    let glnn = rows.iter().filter(|l| l.starts_with("se-vs-power,glnn,")).count();
    let wmmse = rows.iter().filter(|l| l.starts_with("se-vs-power,wmmse,")).count();
    assert_eq!((glnn, wmmse), (3 * 18, 3 * 8));
    assert!(rows.iter().all(|l| l.split(',').nth(3) == Some("3")));

    let meta = first.join("run_meta.txt");
    let meta_text = std::fs::read_to_string(&meta).unwrap();
    assert!(meta_text.contains("# host: "));
    assert!(meta_text.contains("seed = 3"));
    let second = dir.path().join("second");
    let out = lab(&["se-vs-power", "--config", meta.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    for f in ["results.csv", "summary.csv"] {
        let a = std::fs::read_to_string(first.join(f)).unwrap();
        let b = std::fs::read_to_string(second.join(f)).unwrap();
        assert_eq!(strip_timing_columns(&a), strip_timing_columns(&b), "{f}");
    }
}

#[test]
fn restarts_flag_adds_upper_bound_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = lab(&["se-vs-power", "--config", &cfg, "--algorithms", "glnn", "--restarts", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.matches(",upper_bound,").count(), 3);
    assert_eq!(summary.matches(",wmmse,").count(), 0);
    let out = lab(&["se-vs-power", "--restarts", "101", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
