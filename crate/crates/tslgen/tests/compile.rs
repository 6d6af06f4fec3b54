//! Builds and runs the generated tests with the host C++ compiler. Skipped
//! when none is found.

mod common;

use std::path::Path;
use std::process::Command;

use common::{corpus_dir, generate_args, run_tool};

fn compiler() -> Option<String> {
    let candidates = std::env::var("CXX")
        .into_iter()
        .chain(["g++".to_owned(), "clang++".to_owned()]);
    candidates.into_iter().find(|c| {
        Command::new(c)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
    })
}

fn build_and_run(cxx: &str, out: &Path, sources: &[&str]) -> String {
    let binary = out.join("tsl_tests");
    let status = Command::new(cxx)
        .current_dir(out)
        .args(["-std=c++17", "-O1", "-Wall", "-Werror", "-o"])
        .arg(&binary)
        .args(sources)
        .status()
        .expect("compiler runs");
    assert!(status.success(), "compilation failed");
    let run = Command::new(&binary).output().expect("test binary runs");
    let stdout = String::from_utf8_lossy(&run.stdout).into_owned();
    assert!(
        run.status.success(),
        "generated tests failed:\n{stdout}\n{}",
        String::from_utf8_lossy(&run.stderr)
    );
    stdout
}

#[test]
fn scalar_and_fpga_tests_compile_and_pass() {
    let Some(cxx) = compiler() else {
        eprintln!("no C++ compiler found, skipping");
        return;
    };
    let out = tempfile::tempdir().unwrap();
    let run = run_tool(&generate_args(
        &corpus_dir(),
        out.path(),
        &["--extensions", "fpga_generic", "--sizes", "256", "-q"],
    ));
    assert_eq!(run.code, 0, "{}", run.stderr);
    let stdout = build_and_run(
        &cxx,
        out.path(),
        &["tests/test_scalar.cpp", "tests/test_fpga_generic.cpp", "tests/main.cpp"],
    );
    assert!(stdout.contains("passed"), "{stdout}");
}
