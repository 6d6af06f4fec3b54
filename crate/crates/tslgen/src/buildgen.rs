//! CMake build files.

use tslgen_core::{DataModel, Diagnostic, GenerationPlan, HardwareTarget};

use crate::manifest::{FileManifest, FileRole};
use crate::render::{add_with_banner, Context, Engine, RenderError};
use crate::templates::TemplateSet;

const STAGE: &str = "buildgen";

pub const CMAKE_PATH: &str = "CMakeLists.txt";
pub const DRIVER_PATH: &str = "cmake/tsl_generate.cmake";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildConfig {
    pub library_name: String,
    pub cxx_standard: u32,
    /// Emit the `tsl_tests` executable (only when tests were generated).
    pub test_target_enabled: bool,
    pub driver_enabled: bool,
    /// Data directory baked into the driver.
    pub data_dir: String,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            library_name: "tsl".into(),
            cxx_standard: 17,
            test_target_enabled: true,
            driver_enabled: false,
            data_dir: String::new(),
        }
    }
}

/// Compiler options for the enabled extensions, in extension name order,
/// without duplicates. Target flags that no extension maps produce one
/// warning.
pub fn compile_options(
    model: &DataModel,
    plan: &GenerationPlan,
    target: &HardwareTarget,
) -> (Vec<String>, Vec<Diagnostic>) {
    let mut names: Vec<&str> = plan.enabled_extensions.iter().map(String::as_str).collect();
    names.sort_unstable();
    let mut options: Vec<String> = Vec::new();
    let mut mapped = std::collections::BTreeSet::new();
    for name in names {
        let Some(extension) = model.extension(name) else {
            continue;
        };
        for (flag, flag_options) in &extension.arch_flag_map {
            if extension.lscpu_flags.contains(flag) || target.flags.contains(flag) {
                mapped.insert(flag.clone());
                for option in flag_options {
                    if !options.contains(option) {
                        options.push(option.clone());
                    }
                }
            }
        }
    }
    let unmapped: Vec<&String> = target.flags.iter().filter(|f| !mapped.contains(*f)).collect();
    let mut diagnostics = Vec::new();
    if !unmapped.is_empty() {
        let shown: Vec<&str> = unmapped.iter().take(8).map(|s| s.as_str()).collect();
        let more = if unmapped.len() > 8 {
            format!(" and {} more", unmapped.len() - 8)
        } else {
            String::new()
        };
        diagnostics.push(Diagnostic::warn(
            STAGE,
            format!(
                "{} target flag(s) map to no compiler option: {}{more}",
                unmapped.len(),
                shown.join(", ")
            ),
        ));
    }
    (options, diagnostics)
}

/// Adds `CMakeLists.txt` (and the optional driver) to `manifest`.
/// `test_files` are the emitted test sources; empty means no test target.
#[allow(clippy::too_many_arguments)]
pub fn emit_build_files(
    engine: &Engine,
    model: &DataModel,
    plan: &GenerationPlan,
    target: &HardwareTarget,
    templates: &TemplateSet,
    config: &BuildConfig,
    test_files: &[String],
    model_hash: &str,
    manifest: &mut FileManifest,
) -> Result<Vec<Diagnostic>, RenderError> {
    let (options, diagnostics) = compile_options(model, plan, target);
    let mut library_files: Vec<String> = manifest
        .files()
        .iter()
        .filter(|f| f.role.is_library())
        .map(|f| f.path.clone())
        .collect();
    library_files.sort_unstable();
    let tests_enabled = config.test_target_enabled && !test_files.is_empty();

    let mut ctx = Context::new();
    let mut put = |key: &str, value: minijinja::Value| {
        ctx.insert(key.to_owned(), value);
    };
    put("library_name", config.library_name.as_str().into());
    put("library_files", library_files.into());
    put("cxx_standard", config.cxx_standard.into());
    put("compile_options", options.into());
    put("tests_enabled", tests_enabled.into());
    put(
        "test_option",
        format!("{}_BUILD_TESTS", config.library_name.to_uppercase()).into(),
    );
    put("test_target", format!("{}_tests", config.library_name).into());
    put("test_files", test_files.to_vec().into());
    put("driver_enabled", config.driver_enabled.into());
    put("driver_file", DRIVER_PATH.into());
    let text = engine.render("CMakeLists.txt.jinja", &templates.cmake, &ctx)?;
    add_with_banner(manifest, CMAKE_PATH, &text, FileRole::Build, templates, model_hash)?;

    if config.driver_enabled {
        let mut ctx = Context::new();
        ctx.insert("tool".into(), "tslgen".into());
        ctx.insert("library_name".into(), config.library_name.as_str().into());
        ctx.insert("data_dir".into(), config.data_dir.as_str().into());
        let text = engine.render("driver.cmake.jinja", &templates.driver, &ctx)?;
        add_with_banner(manifest, DRIVER_PATH, &text, FileRole::Build, templates, model_hash)?;
    }
    Ok(diagnostics)
}
