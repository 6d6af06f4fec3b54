//! Structural templates (the first rendering stage).

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use tslgen_core::Diagnostic;

/// Templates and verbatim support files that shape the emitted tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub core_header: String,
    pub extension: String,
    pub declaration: String,
    pub definition: String,
    pub umbrella: String,
    pub test_file: String,
    pub test_main: String,
    /// Copied verbatim.
    pub test_harness: String,
    /// Copied verbatim.
    pub test_helpers: String,
    pub cmake: String,
    pub driver: String,
    /// Prepended (commented) to every emitted file when non-empty.
    pub license_header: String,
}

macro_rules! builtin {
    ($file:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/templates/", $file))
    };
}

type Slot = fn(&mut TemplateSet) -> &mut String;

/// File names inside a template directory, with accessors.
const FILES: [(&str, Slot); 12] = [
    ("core.hpp.jinja", |t| &mut t.core_header),
    ("extension.hpp.jinja", |t| &mut t.extension),
    ("declaration.hpp.jinja", |t| &mut t.declaration),
    ("definition.hpp.jinja", |t| &mut t.definition),
    ("umbrella.hpp.jinja", |t| &mut t.umbrella),
    ("test_file.cpp.jinja", |t| &mut t.test_file),
    ("test_main.cpp.jinja", |t| &mut t.test_main),
    ("tsl_test.hpp", |t| &mut t.test_harness),
    ("tsl_test_helpers.hpp", |t| &mut t.test_helpers),
    ("CMakeLists.txt.jinja", |t| &mut t.cmake),
    ("driver.cmake.jinja", |t| &mut t.driver),
    ("license_header.txt", |t| &mut t.license_header),
];

impl TemplateSet {
    pub fn builtin() -> Self {
        Self {
            core_header: builtin!("core.hpp.jinja").into(),
            extension: builtin!("extension.hpp.jinja").into(),
            declaration: builtin!("declaration.hpp.jinja").into(),
            definition: builtin!("definition.hpp.jinja").into(),
            umbrella: builtin!("umbrella.hpp.jinja").into(),
            test_file: builtin!("test_file.cpp.jinja").into(),
            test_main: builtin!("test_main.cpp.jinja").into(),
            test_harness: builtin!("tsl_test.hpp").into(),
            test_helpers: builtin!("tsl_test_helpers.hpp").into(),
            cmake: builtin!("CMakeLists.txt.jinja").into(),
            driver: builtin!("driver.cmake.jinja").into(),
            license_header: builtin!("license_header.txt").into(),
        }
    }

    /// Loads overrides from `dir`; files that are absent keep the built-in
    /// version.
    pub fn from_dir(dir: &Path) -> Result<(Self, Vec<Diagnostic>), (PathBuf, io::Error)> {
        if !dir.is_dir() {
            return Err((
                dir.to_owned(),
                io::Error::new(io::ErrorKind::NotFound, "template directory not found"),
            ));
        }
        let mut set = Self::builtin();
        let mut diagnostics = Vec::new();
        for (name, slot) in FILES {
            let path = dir.join(name);
            if path.is_file() {
                *slot(&mut set) = fs::read_to_string(&path).map_err(|e| (path.clone(), e))?;
                diagnostics.push(Diagnostic::info("render", format!("using template override {name}")));
            }
        }
        Ok((set, diagnostics))
    }

    /// (name, source) of every template that goes through the engine.
    pub fn rendered_templates(&self) -> [(&'static str, &str); 9] {
        [
            ("core.hpp.jinja", &self.core_header),
            ("extension.hpp.jinja", &self.extension),
            ("declaration.hpp.jinja", &self.declaration),
            ("definition.hpp.jinja", &self.definition),
            ("umbrella.hpp.jinja", &self.umbrella),
            ("test_file.cpp.jinja", &self.test_file),
            ("test_main.cpp.jinja", &self.test_main),
            ("CMakeLists.txt.jinja", &self.cmake),
            ("driver.cmake.jinja", &self.driver),
        ]
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}
