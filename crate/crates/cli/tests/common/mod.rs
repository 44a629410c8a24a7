//! Shared helpers for the binary-level test targets.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracgal"))
}

pub fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn fracgal")
}

pub fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

pub fn check_golden(name: &str, bytes: &[u8]) {
    let path = golden_path(name);
    if std::env::var_os("FRACGAL_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, bytes).unwrap();
        return;
    }
    let want = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(
        want == bytes,
        "{name} differs from golden:\n--- golden\n{}\n--- got\n{}",
        String::from_utf8_lossy(&want),
        String::from_utf8_lossy(bytes)
    );
}

pub fn stdout_of(args: &[&str]) -> Vec<u8> {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

pub const GOLDEN: &[(&str, &[&str])] = &[
    ("mlf_exp.txt", &["mlf", "--alpha", "1", "--beta", "1", "--z", "1"]),
    ("mlf_half.txt", &["mlf", "--alpha", "0.5", "--beta", "1", "--z", "-1"]),
    (
        "mlf_large.txt",
        &["mlf", "--alpha", "0.7", "--beta", "1.3", "--z", "-40"],
    ),
    ("solve_laplace.csv", &["solve", "@laplace.prob"]),
    ("solve_variable.csv", &["solve", "@variable.prob", "--steps", "32"]),
    ("verify_laplace.json", &["verify", "@laplace.prob"]),
    (
        "converge_laplace.csv",
        &["converge", "@laplace.prob", "--modes", "2,4", "--steps", "32,64"],
    ),
    ("yosida_laplace.csv", &["yosida", "@laplace.prob", "--n", "1,10,100"]),
];

pub fn expand(args: &[&str]) -> Vec<String> {
    args.iter()
        .map(|a| match a.strip_prefix('@') {
            Some(f) => fixture(f),
            None => a.to_string(),
        })
        .collect()
}
