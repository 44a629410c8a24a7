//! Golden files and the exit-code contract of the `fracgal` binary.
//!
//! Run with `FRACGAL_BLESS=1` to rewrite the golden files.

mod common;

use common::*;

#[test]
fn outputs_match_golden_files() {
    for (name, args) in GOLDEN {
        let args = expand(args);
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        check_golden(name, &stdout_of(&args));
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    for (_, args) in GOLDEN {
        let args = expand(args);
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(stdout_of(&args), stdout_of(&args), "{args:?}");
    }
}

#[test]
fn mittag_leffler_prints_seventeen_digits() {
    let out = String::from_utf8(stdout_of(&["mlf", "--alpha", "1", "--beta", "1", "--z", "1"])).unwrap();
    assert_eq!(out.trim().parse::<f64>().unwrap(), std::f64::consts::E);
    assert_eq!(out.trim().chars().filter(char::is_ascii_digit).count(), 17);
}

#[test]
fn scalar_problem_matches_closed_form() {
    let csv = String::from_utf8(stdout_of(&["solve", &fixture("scalar.prob")])).unwrap();
    let last = csv.lines().last().unwrap();
    let c1: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    // 1 − E_{1/2}(−1) = 1 − e·erfc(1)
    let exact = 1.0 - 1f64.exp() * statrs::function::erf::erfc(1.0);
    assert!((c1 - exact).abs() < 5e-3, "{c1} vs {exact}");
}

#[test]
fn out_directory_holds_data_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let status = run(&["verify", &fixture("variable.prob"), "--out", &out]);
    assert!(status.status.success());
    assert!(status.stdout.is_empty());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 5);
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "verify");
    assert!(meta["timings"]["total_s"].as_f64().unwrap() >= 0.0);

    assert_eq!(
        code(&["solve", &fixture("variable.prob"), "--steps", "16", "--out", &out]),
        0
    );
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("trajectory.meta.json")).unwrap()).unwrap();
    assert!(meta["picard"]["observed_ratio"].as_f64().unwrap() <= 0.55);
    assert!(dir.path().join("trajectory.csv").exists());
}

#[test]
fn zero_forcing_gives_zero_trajectory() {
    let csv = String::from_utf8(stdout_of(&["solve", &fixture("zero_forcing.prob")])).unwrap();
    for line in csv.lines().skip(1) {
        assert!(line.split(',').skip(1).all(|v| v == "0"), "{line}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["verify", &fixture("zero_forcing.prob")]), 0);
    assert_eq!(code(&["verify", &fixture("negative_reaction.prob"), "--nu", "0"]), 1);
    for bad in ["degenerate.prob", "spatial_forcing.prob", "unbounded.prob"] {
        assert_eq!(code(&["solve", &fixture(bad)]), 2, "{bad}");
    }
    assert_eq!(code(&["solve", &fixture("missing.prob")]), 2);
    assert_eq!(
        code(&["solve", &fixture("laplace.prob"), "--scheme", "picard", "--gamma", "0"]),
        2
    );
    assert_eq!(code(&["solve", &fixture("laplace.prob"), "--gamma", "10"]), 2);
    assert_eq!(
        code(&["converge", &fixture("laplace.prob"), "--modes", "2,x", "--steps", "32"]),
        2
    );
    assert_eq!(
        code(&["converge", &fixture("laplace.prob"), "--modes", "0", "--steps", "32"]),
        2
    );
    assert_eq!(code(&["yosida", &fixture("laplace.prob"), "--n", "0"]), 2);
    assert_eq!(code(&["mlf", "--alpha", "0", "--beta", "1", "--z", "1"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
}

#[test]
fn assumption_violations_are_named() {
    let cases = [
        ("degenerate.prob", "(a3)"),
        ("spatial_forcing.prob", "(a4)"),
        ("unbounded.prob", "(a1)"),
    ];
    for (file, label) in cases {
        let err = String::from_utf8(run(&["solve", &fixture(file)]).stderr).unwrap();
        assert!(err.contains(label), "{file}: {err}");
    }
}

#[test]
fn picard_nonconvergence_exits_three() {
    let out = run(&["solve", &fixture("variable.prob"), "--max-iters", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ratio"));
    assert_eq!(code(&["solve", &fixture("laplace.prob"), "--max-iters", "5"]), 2);
    assert_eq!(code(&["solve", &fixture("variable.prob"), "--max-iters", "0"]), 2);
}
