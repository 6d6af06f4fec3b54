mod common;

use std::path::Path;

use common::{corpus_dir, fixture, generate_args, read, run_tool, FULL_TARGETS};

fn corpus_args(out: &Path, extra: &[&str]) -> Vec<String> {
    generate_args(&corpus_dir(), out, extra)
}

#[test]
fn help_and_version_exit_zero() {
    let run = run_tool(&["--help"]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.contains("generate"));
    let run = run_tool(&["--version"]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.contains("0.1.0 (data model schema 1)"));
}

#[test]
fn argument_errors_exit_four() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_tool(&["generate", "--data", "x"]).code, 4);
    assert_eq!(run_tool(&["generate", "--data", "x", "--out", "y", "--bogus"]).code, 4);
    for extra in [
        &["--types", "int128_t"][..],
        &["--primitives", "nope"],
        &["--sizes", "100"],
        &["--targets", "sse", "--detect-host"],
        &["-v", "-q"],
    ] {
        let run = run_tool(&corpus_args(out.path(), extra));
        assert_eq!(run.code, 4, "{extra:?}: {}", run.stderr);
    }
}

#[test]
fn missing_data_dir_exits_three() {
    let out = tempfile::tempdir().unwrap();
    let run = run_tool(&generate_args(Path::new("/nonexistent/tslgen"), out.path(), &[]));
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("ERROR load:"));
}

#[test]
fn yaml_syntax_error_exits_one() {
    let data = fixture(&["primitive_name: [unclosed\n"]);
    let out = tempfile::tempdir().unwrap();
    let run = run_tool(&generate_args(data.path(), out.path(), &[]));
    assert_eq!(run.code, 1, "{}", run.stderr);
    assert!(run.stderr.contains("primitives/fixture.yaml"));
}

#[test]
fn schema_file_errors() {
    let out = tempfile::tempdir().unwrap();
    let run = run_tool(&corpus_args(out.path(), &["--schema", "/nonexistent/schema.yaml"]));
    assert_eq!(run.code, 3);
    let bad = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(bad.path(), "version: 1\nextension: 7\n").unwrap();
    let run = run_tool(&corpus_args(out.path(), &["--schema", bad.path().to_str().unwrap()]));
    assert_eq!(run.code, 1, "{}", run.stderr);
}

#[test]
fn builtin_schema_file_is_accepted_explicitly() {
    let out = tempfile::tempdir().unwrap();
    let schema = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/tsl_schema.yaml");
    let run = run_tool(&corpus_args(out.path(), &["--schema", schema.to_str().unwrap(), "-q"]));
    assert_eq!(run.code, 0, "{}", run.stderr);
}

#[test]
fn unknown_template_name_exits_two() {
    let data = fixture(&[r#"
primitive_name: odd
parameters: []
returns: {ctype: void}
definitions:
  - {target_extension: scalar, ctypes: [uint32_t], implementation: "return {{ no_such_name }};"}
"#]);
    let out = tempfile::tempdir().unwrap();
    let run = run_tool(&generate_args(data.path(), out.path(), &[]));
    assert_eq!(run.code, 2, "{}", run.stderr);
    assert!(run.stderr.contains("no_such_name"));
    assert!(!out.path().join("generated").exists());
}

#[test]
fn banners_mark_every_generated_file() {
    let out = tempfile::tempdir().unwrap();
    let run = run_tool(&corpus_args(out.path(), &["--targets", "sse,sse2", "-q"]));
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stderr.is_empty(), "quiet run printed: {}", run.stderr);
    let header = read(&out.path().join("include/tsl/tsl.hpp"));
    let mut lines = header.lines();
    assert_eq!(lines.next(), Some("#pragma once"));
    assert_eq!(lines.next(), Some("// Generated by tslgen 0.1.0. Do not edit."));
    let hash = lines.next().unwrap().strip_prefix("// Data model sha256: ").unwrap();
    assert_eq!(hash.len(), 64);
    let cmake = read(&out.path().join("CMakeLists.txt"));
    assert!(cmake.starts_with("# Generated by tslgen 0.1.0. Do not edit.\n"));
    assert!(cmake.contains(&format!("# Data model sha256: {hash}")));
    assert!(cmake.contains("-msse2"));
}

#[test]
fn model_hash_follows_the_data() {
    let hash_of = |dir: &Path| {
        let out = tempfile::tempdir().unwrap();
        let run = run_tool(&generate_args(dir, out.path(), &["-q", "--no-tests"]));
        assert_eq!(run.code, 0, "{}", run.stderr);
        let text = read(&out.path().join("include/tsl/tsl.hpp"));
        text.lines().nth(2).unwrap().to_owned()
    };
    let doc = r#"
primitive_name: p
parameters: []
returns: {ctype: void}
definitions:
  - {target_extension: scalar, ctypes: [uint32_t], implementation: "return;"}
"#;
    let a = fixture(&[doc]);
    let b = fixture(&[doc]);
    let c = fixture(&[&doc.replace("uint32_t", "uint64_t")]);
    assert_eq!(hash_of(a.path()), hash_of(b.path()));
    assert_ne!(hash_of(a.path()), hash_of(c.path()));
}

#[test]
fn output_switches() {
    let out = tempfile::tempdir().unwrap();
    let run = run_tool(&corpus_args(out.path(), &["--no-tests", "--no-cmake", "-q"]));
    assert_eq!(run.code, 0);
    assert!(!out.path().join("tests").exists());
    assert!(!out.path().join("CMakeLists.txt").exists());
    assert!(out.path().join("include/tsl/tsl.hpp").exists());

    let out = tempfile::tempdir().unwrap();
    let run = run_tool(&corpus_args(out.path(), &["--no-tests", "--with-driver", "-q"]));
    assert_eq!(run.code, 0);
    let cmake = read(&out.path().join("CMakeLists.txt"));
    assert!(!cmake.contains("tsl_tests"));
    assert!(out.path().join("cmake/tsl_generate.cmake").exists());
}

#[test]
fn template_override_is_used() {
    let templates = tempfile::tempdir().unwrap();
    std::fs::write(templates.path().join("license_header.txt"), "Example license line\n").unwrap();
    let out = tempfile::tempdir().unwrap();
    let run = run_tool(&corpus_args(
        out.path(),
        &["--templates", templates.path().to_str().unwrap(), "--no-tests"],
    ));
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stderr.contains("using template override license_header.txt"));
    let header = read(&out.path().join("include/tsl/tsl.hpp"));
    let mut lines = header.lines();
    assert_eq!(lines.next(), Some("#pragma once"));
    assert_eq!(lines.next(), Some("// Example license line"));
}

#[test]
fn types_filter_limits_the_plan() {
    let out = tempfile::tempdir().unwrap();
    let run = run_tool(&corpus_args(
        out.path(),
        &["--targets", FULL_TARGETS, "--types", "float", "--emit-plan", "-q"],
    ));
    assert_eq!(run.code, 0);
    let plan = read(&out.path().join("generation_plan.yaml"));
    let doc: serde_yaml::Value = serde_yaml::from_str(&plan).unwrap();
    let entries = doc["entries"].as_sequence().unwrap();
    assert!(!entries.is_empty());
    assert!(entries.iter().all(|e| e["ctype"].as_str() == Some("float")));
    assert!(!plan.contains("binary_and"));
}

#[test]
fn unknown_opt_in_is_reported() {
    let out = tempfile::tempdir().unwrap();
    let run = run_tool(&corpus_args(out.path(), &["--extensions", "warp_drive", "--no-tests"]));
    assert_eq!(run.code, 0);
    assert!(run
        .stderr
        .lines()
        .any(|l| l.starts_with("WARN") && l.contains("warp_drive")));
}
