//! End-to-end runs of the command-line tool.

use std::fs;
use std::process::Command;

fn kronfilter() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kronfilter"))
}

#[test]
fn sweep_from_config_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("desk.toml");
    fs::write(
        &cfg,
        "m1 = 3\nm2 = 4\nr = 2\nn_samples = 50\nn_realizations = 2\nir_source = \"lowrank:2:0.5\"\n\
         methods = [\"full_rank_press\", \"kron_alo:2\"]\n",
    )
    .unwrap();
    let out = dir.path().join("out.csv");
    let status = kronfilter()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--n-realizations", "3", "--snr-db", "20", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "kind,method,r,alpha,misalignment_db,rank_hat,nuclear_norm,seed,wall_time_s,error");
    assert_eq!(lines.len(), 1 + 2 * 3 + 2);
    assert_eq!(lines.iter().filter(|l| l.starts_with("detail,kron_alo,2,")).count(), 3);
}

#[test]
fn sweep_rank_and_alpha_method_sets() {
    let rank = kronfilter()
        .args(["sweep-rank", "--m1", "2", "--m2", "3", "--n-samples", "40", "--n-realizations", "1"])
        .args(["--oracle-grid", "5", "--ir-source", "lowrank:1:0.5"])
        .output()
        .unwrap();
    assert!(rank.status.success(), "{}", String::from_utf8_lossy(&rank.stderr));
    let text = String::from_utf8(rank.stdout).unwrap();
    // PRESS plus three methods for each of R = 1, 2.
    assert_eq!(text.lines().filter(|l| l.starts_with("summary,")).count(), 7);

    let alpha = kronfilter()
        .args(["sweep-alpha", "--m1", "2", "--m2", "3", "--n-samples", "40"])
        .args(["--n-realizations", "1", "--ranks", "1,2", "--alpha-points", "4", "--ir-source", "sparse:1:0.2"])
        .output()
        .unwrap();
    assert!(alpha.status.success(), "{}", String::from_utf8_lossy(&alpha.stderr));
    let text = String::from_utf8(alpha.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("summary,")).count(), 12);
}

#[test]
fn validate_reports_both_suites() {
    let out = kronfilter().args(["validate", "--alo-seeds", "2"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 2, "{text}");
}

#[test]
fn invalid_configuration_exits_with_error() {
    let out = kronfilter()
        .args(["sweep", "--methods", "kron_alo:9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = kronfilter().args(["sweep", "--ar-coeff", "1.2", "--methods", "full_rank_press"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
