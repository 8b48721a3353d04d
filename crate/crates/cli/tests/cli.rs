//! End-to-end tests driving the `rdd` binary.

use std::path::Path;
use std::process::{Command, Output};

fn rdd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdd"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn dgp_sample_writes_csv_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdd(
        &["dgp", "sample", "--preset", "lee", "--n", "1000", "--seed", "7", "--out", "a.csv"],
        dir.path(),
    );
    assert_success(&out);
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let text = String::from_utf8(a.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "y,x1,d");
    assert_eq!(text.lines().count(), 1001);

    let out = rdd(
        &["dgp", "sample", "--preset", "lee", "--n", "1000", "--seed", "7", "--out", "b.csv"],
        dir.path(),
    );
    assert_success(&out);
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b, "same seed must be byte-identical");
}

#[test]
fn true_effect_prints_the_lee_jump() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdd(&["true-effect", "--preset", "lee", "--at", "0"], dir.path());
    assert_success(&out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.trim().starts_with("0.0400"), "got {stdout:?}");
}

#[test]
fn estimate_llr_emits_a_json_report() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&rdd(
        &["dgp", "sample", "--preset", "lee", "--n", "4000", "--seed", "3", "--out", "d.csv"],
        dir.path(),
    ));
    let out = rdd(
        &["estimate", "--data", "d.csv", "--method", "llr", "--at", "0", "--bandwidth", "rot"],
        dir.path(),
    );
    assert_success(&out);
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is a JSON report");
    let estimate = report["estimate"].as_f64().unwrap();
    assert!((estimate - 0.04).abs() < 0.1, "llr estimate {estimate} near the truth");
    assert!(report["std_error"].as_f64().unwrap() > 0.0);
    assert_eq!(report["level"].as_f64().unwrap(), 0.95);
}

#[test]
fn estimate_forest_runs_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&rdd(
        &["dgp", "sample", "--preset", "lee", "--n", "800", "--seed", "5", "--out", "d.csv"],
        dir.path(),
    ));
    let out = rdd(
        &[
            "estimate", "--data", "d.csv", "--method", "rf", "--at", "0", "--trees", "60",
            "--seed", "11", "--out", "report.json",
        ],
        dir.path(),
    );
    assert_success(&out);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert!(report["estimate"].as_f64().unwrap().is_finite());
    assert!(report["ci_upper"].as_f64().unwrap() >= report["ci_lower"].as_f64().unwrap());
}

#[test]
fn collapse_then_diagnose_flags_zero_density() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("rule.json"),
        r#"{"kind":"curve_boundary","vertices":[[-1.0,0.0],[1.0,0.0]],"treated_side":"below"}"#,
    )
    .unwrap();
    assert_success(&rdd(
        &["dgp", "sample", "--preset", "kt-age", "--n", "60000", "--seed", "2", "--out", "d.csv"],
        dir.path(),
    ));
    assert_success(&rdd(
        &[
            "collapse", "--data", "d.csv", "--center", "0,0", "--rule", "rule.json", "--out",
            "collapsed.csv",
        ],
        dir.path(),
    ));
    let out = rdd(
        &["diagnose-density", "--data", "collapsed.csv", "--bins", "5000"],
        dir.path(),
    );
    assert_success(&out);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["flagged"].as_bool(), Some(true), "collapsed square must flag");
}

#[test]
fn mc_outputs_are_thread_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("study.json"),
        r#"{
          "dgp": "lee",
          "boundary_point": [0.0],
          "methods": [
            {"name": "llr-fixed", "method": "llr", "bandwidth": 0.3},
            {"method": "rf", "trees": 24}
          ],
          "sample_sizes": [300],
          "replications": 6,
          "seed": 99,
          "level": 0.95
        }"#,
    )
    .unwrap();
    let out = rdd(
        &["--threads", "1", "mc", "--config", "study.json", "--out", "r1.csv"],
        dir.path(),
    );
    assert_success(&out);
    let out = rdd(
        &["--threads", "8", "mc", "--config", "study.json", "--out", "r8.csv"],
        dir.path(),
    );
    assert_success(&out);
    let r1 = std::fs::read(dir.path().join("r1.csv")).unwrap();
    let r8 = std::fs::read(dir.path().join("r8.csv")).unwrap();
    assert_eq!(r1, r8, "results must not depend on worker count");
    let text = String::from_utf8(r1).unwrap();
    assert!(text.starts_with("method,n,mean_bias,variance,coverage,mean_ci_length,failures,wall_time\n"));
    assert_eq!(text.lines().count(), 3);
    // Default timing mode reports zero wall time so files stay reproducible.
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",0"), "wall_time column should be 0, got {line}");
    }
}

#[test]
fn study_files_reject_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("study.json"),
        r#"{
          "dgp": "lee",
          "boundary_point": [0.0],
          "methods": [{"method": "llr", "bandwit": 0.3}],
          "sample_sizes": [100],
          "replications": 4,
          "seed": 1
        }"#,
    )
    .unwrap();
    let out = rdd(&["mc", "--config", "study.json", "--out", "r.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1), "typo'd key is a usage error");
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("error[E_USAGE]"), "got {stderr}");
}

#[test]
fn exit_codes_distinguish_usage_from_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown flag: usage error, code 1, before any computation.
    let out = rdd(&["estimate", "--nope"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    // Kernel flag on a forest method: usage error.
    assert_success(&rdd(
        &["dgp", "sample", "--preset", "lee", "--n", "200", "--seed", "1", "--out", "d.csv"],
        dir.path(),
    ));
    let out = rdd(
        &["estimate", "--data", "d.csv", "--method", "rf", "--at", "0", "--bandwidth", "0.5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));

    // llr on bivariate data: data/method error, code 2, machine-parseable.
    assert_success(&rdd(
        &["dgp", "sample", "--preset", "kt-age", "--n", "500", "--seed", "1", "--out", "biv.csv"],
        dir.path(),
    ));
    std::fs::write(
        dir.path().join("rule.json"),
        r#"{"kind":"curve_boundary","vertices":[[-1.0,0.0],[1.0,0.0]],"treated_side":"below"}"#,
    )
    .unwrap();
    let out = rdd(
        &[
            "estimate", "--data", "biv.csv", "--method", "llr", "--at", "0,0", "--rule",
            "rule.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("error[E_METHOD]"), "got {stderr}");
}

#[test]
fn dgp_spec_files_mirror_the_preset_schema() {
    let dir = tempfile::tempdir().unwrap();
    // Inline spec equivalent to a noiseless univariate design.
    std::fs::write(
        dir.path().join("spec.json"),
        r#"{
          "score_law": {"kind": "uniform_square", "dim": 1},
          "cef": {
            "degree": 1,
            "basis": "raw_powers_1d",
            "coeffs_treated": [1.0, 0.5],
            "coeffs_control": [0.0, 0.5],
            "centers": [0.0]
          },
          "outcome_kind": {"kind": "gaussian_noise", "sigma": 0.0},
          "rule": {"kind": "univariate_threshold", "cutoff": 0.0}
        }"#,
    )
    .unwrap();
    let out = rdd(
        &["dgp", "sample", "--spec", "spec.json", "--n", "100", "--seed", "4", "--out", "d.csv"],
        dir.path(),
    );
    assert_success(&out);
    let out = rdd(&["true-effect", "--spec", "spec.json", "--at", "0"], dir.path());
    assert_success(&out);
    assert!(String::from_utf8(out.stdout).unwrap().trim().starts_with("1.00000"));

    // Unknown keys in a spec file are rejected before any computation.
    std::fs::write(dir.path().join("bad.json"), r#"{"score_la": {"kind": "beta_transform"}}"#)
        .unwrap();
    let out = rdd(
        &["dgp", "sample", "--spec", "bad.json", "--n", "10", "--seed", "1", "--out", "x.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn estimate_is_idempotent_given_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&rdd(
        &["dgp", "sample", "--preset", "lee", "--n", "600", "--seed", "9", "--out", "d.csv"],
        dir.path(),
    ));
    let args = [
        "estimate", "--data", "d.csv", "--method", "llf", "--at", "0", "--trees", "40",
        "--seed", "21", "--lambda", "auto",
    ];
    let first = rdd(&args, dir.path());
    assert_success(&first);
    let second = rdd(&args, dir.path());
    assert_success(&second);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn version_reports_defaults_fingerprint() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdd(&["--version"], dir.path());
    assert_success(&out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("rdd 0.1.0"));
    assert!(stdout.contains("fingerprint"));
    assert!(stdout.contains("c-scale=0.4"));
}
