//! Shared helpers for the integration tests.
#![allow(dead_code)]

use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::Command;

use sha2::{Digest, Sha256};
use tempfile::TempDir;
use tslgen::cli::builtin_schema;
use tslgen::loader::{build_model, load_raw};
use tslgen_core::DataModel;

pub const FULL_TARGETS: &str = "sse,sse2,ssse3,sse4_1,sse4_2,avx,avx2,bmi2,avx512f,avx512bw,avx512dq";

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/data")
}

pub fn corpus_model() -> DataModel {
    let (raw, _) = load_raw(&corpus_dir()).expect("corpus loads");
    build_model(&raw, &builtin_schema(), false).expect("corpus is valid").0
}

pub fn run_tool<S: AsRef<OsStr>>(args: &[S]) -> Run {
    let output = Command::new(env!("CARGO_BIN_EXE_tslgen"))
        .args(args)
        .env_remove("TSLGEN_DATA_DIR")
        .output()
        .expect("tslgen runs");
    Run {
        code: output.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}

pub fn generate_args(data: &Path, out: &Path, extra: &[&str]) -> Vec<String> {
    let mut args: Vec<String> = vec![
        "generate".into(),
        "--data".into(),
        data.display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

const FIXTURE_SCALAR: &str = r#"
vendor: scalar
extension_name: scalar
lscpu_flags: []
includes: ["<cstdint>"]
register_type: "{{ ctype }}"
mask_type: bool
imask_type: uint8_t
default_size_bits: 0
ext_tag: ext_marker
"#;

/// A data directory with a scalar extension and one primitive file,
/// category `fixture`, holding `primitives` as documents.
pub fn fixture(primitives: &[&str]) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("extensions")).unwrap();
    std::fs::create_dir_all(dir.path().join("primitives")).unwrap();
    std::fs::write(dir.path().join("extensions/scalar.yaml"), FIXTURE_SCALAR).unwrap();
    let mut text = String::from("---\ncategory_name: fixture\ndescription: Test fixture.\n");
    for p in primitives {
        text.push_str("---\n");
        text.push_str(p.trim_start());
    }
    std::fs::write(dir.path().join("primitives/fixture.yaml"), text).unwrap();
    dir
}

/// Regular files below `root`, sorted.
pub fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut pending = vec![root.to_path_buf()];
    while let Some(dir) = pending.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                pending.push(path);
            } else {
                out.push(path);
            }
        }
    }
    out.sort();
    out
}

/// File count and a sha256 over relative paths and contents.
pub fn tree_digest(root: &Path) -> (usize, String) {
    let files = files_under(root);
    let mut hasher = Sha256::new();
    for path in &files {
        hasher.update(path.strip_prefix(root).unwrap().to_string_lossy().as_bytes());
        hasher.update([0]);
        hasher.update(std::fs::read(path).unwrap());
        hasher.update([0]);
    }
    let hex: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    (files.len(), hex)
}
