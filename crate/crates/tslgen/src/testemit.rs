//! Dependency-ordered unit tests.

use std::collections::{BTreeMap, BTreeSet};

use tslgen_core::testgraph::{build_dependency_graph, collect_tests, order_tests};
use tslgen_core::{BaseType, DataModel, Diagnostic, GenerationPlan, HardwareTarget, TestGraphError, TestNode};

use crate::manifest::{FileManifest, FileRole};
use crate::render::{self, add_with_banner, indent, render_context, Context, Engine, RenderError};
use crate::templates::TemplateSet;

const STAGE: &str = "testgen";

pub const HARNESS_PATH: &str = "tests/include/tsl_test.hpp";
pub const HELPERS_PATH: &str = "tests/include/tsl_test_helpers.hpp";
pub const MAIN_PATH: &str = "tests/main.cpp";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TestEmitError {
    #[error(transparent)]
    Cycle(#[from] TestGraphError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

pub fn test_file_path(extension: &str) -> String {
    format!("tests/test_{extension}.cpp")
}

/// Collects, links and orders the test nodes of `plan`.
pub fn ordered_tests(
    plan: &GenerationPlan,
    model: &DataModel,
) -> Result<(Vec<TestNode>, Vec<Diagnostic>), TestGraphError> {
    let (nodes, mut diagnostics) = collect_tests(plan, model);
    let graph = build_dependency_graph(nodes)?;
    diagnostics.extend(graph.diagnostics.iter().cloned());
    Ok((order_tests(&graph), diagnostics))
}

/// Removes cases that call a primitive without a definition for their
/// (extension, ctype, size); they cannot compile. Cases that require a
/// removed case's primitive become unsafe. Expects topological order.
pub fn drop_unbuildable(ordered: Vec<TestNode>, plan: &GenerationPlan) -> (Vec<TestNode>, Vec<Diagnostic>) {
    let defined: BTreeSet<(&str, &str, BaseType, u32)> = plan
        .entries
        .iter()
        .map(|e| (e.primitive.as_str(), e.extension.as_str(), e.ctype, e.size_bits))
        .collect();
    let mut removed: BTreeSet<(String, String, BaseType, u32)> = BTreeSet::new();
    let mut skipped: BTreeMap<(String, String, String), Vec<String>> = BTreeMap::new();
    let mut kept = Vec::with_capacity(ordered.len());
    for mut node in ordered {
        let undefined: Vec<String> = node
            .requires
            .iter()
            .filter(|r| !defined.contains(&(r.as_str(), node.extension_name.as_str(), node.ctype, node.size_bits)))
            .cloned()
            .collect();
        if !undefined.is_empty() {
            skipped
                .entry((
                    node.primitive_name.clone(),
                    node.extension_name.clone(),
                    undefined.join(", "),
                ))
                .or_default()
                .push(format!("{}/{}", node.ctype, node.size_bits));
            removed.insert((node.primitive_name, node.extension_name, node.ctype, node.size_bits));
            continue;
        }
        for r in &node.requires {
            let key = (r.clone(), node.extension_name.clone(), node.ctype, node.size_bits);
            if removed.contains(&key) && !node.untested_requirements.contains(r) {
                node.untested_requirements.push(r.clone());
                node.is_unsafe = true;
            }
        }
        kept.push(node);
    }
    let diagnostics = skipped
        .into_iter()
        .map(|((primitive, extension, missing), types)| {
            Diagnostic::warn(
                STAGE,
                format!(
                    "tests of `{primitive}` on {extension} skipped for {}: required primitive(s) {missing} have no definition there",
                    types.join(", ")
                ),
            )
        })
        .collect();
    (kept, diagnostics)
}

fn put(ctx: &mut Context, key: &str, value: impl Into<minijinja::Value>) {
    ctx.insert(key.to_owned(), value.into());
}

/// Renders test files into `manifest`. Returns the test file paths in
/// execution order.
pub fn emit_tests(
    engine: &Engine,
    model: &DataModel,
    plan: &GenerationPlan,
    target: &HardwareTarget,
    templates: &TemplateSet,
    model_hash: &str,
    manifest: &mut FileManifest,
) -> Result<(Vec<String>, Vec<Diagnostic>), TestEmitError> {
    let (ordered, mut diagnostics) = ordered_tests(plan, model)?;
    let (ordered, skip_diagnostics) = drop_unbuildable(ordered, plan);
    diagnostics.extend(skip_diagnostics);
    if ordered.is_empty() {
        diagnostics.push(Diagnostic::info(STAGE, "no tests to emit"));
        return Ok((Vec::new(), diagnostics));
    }

    // Partition by extension, keeping the global order inside each file.
    let mut files: Vec<(String, Vec<minijinja::Value>)> = Vec::new();
    let mut slot: BTreeMap<String, usize> = BTreeMap::new();
    for node in &ordered {
        let extension = model
            .extension(&node.extension_name)
            .expect("test nodes come from plan entries");
        let primitive = model
            .primitives_named(&node.primitive_name)
            .find(|p| p.category == node.category)
            .expect("test nodes come from plan entries");
        let definition = plan
            .entries
            .iter()
            .find(|e| {
                e.category == node.category
                    && e.primitive == node.primitive_name
                    && e.extension == node.extension_name
                    && e.ctype == node.ctype
                    && e.size_bits == node.size_bits
            })
            .and_then(|e| e.definition(model));
        let ctx = render_context(extension, primitive, definition, node.ctype, node.size_bits, target);
        let name = node.case_name(extension.is_size_polymorphic());
        let body = engine.render(&format!("test {name}"), &node.implementation, &ctx)?;

        let mut case = Context::new();
        put(&mut case, "name", name.as_str());
        put(
            &mut case,
            "tags",
            format!("[{}][{}][{}]", node.category, node.primitive_name, node.extension_name),
        );
        put(
            &mut case,
            "simd_type",
            render::simd_type(&node.extension_name, node.ctype, node.size_bits),
        );
        put(&mut case, "unsafe", node.is_unsafe);
        put(&mut case, "missing", node.untested_requirements.join(", "));
        put(&mut case, "body", indent(&body, 2));

        let index = *slot.entry(node.extension_name.clone()).or_insert_with(|| {
            files.push((node.extension_name.clone(), Vec::new()));
            files.len() - 1
        });
        files[index].1.push(minijinja::Value::from(case));
    }

    let mut paths = Vec::new();
    for (extension, cases) in files {
        let path = test_file_path(&extension);
        let mut ctx = Context::new();
        put(&mut ctx, "library_include", format!("../{}", render::UMBRELLA_PATH));
        put(&mut ctx, "extension_name", extension.as_str());
        put(&mut ctx, "cases", cases);
        let text = engine.render(&format!("tests for `{extension}`"), &templates.test_file, &ctx)?;
        add_with_banner(manifest, &path, &text, FileRole::Test, templates, model_hash)?;
        paths.push(path);
    }

    let mut ctx = Context::new();
    put(&mut ctx, "test_files", paths.clone());
    let text = engine.render("test_main.cpp.jinja", &templates.test_main, &ctx)?;
    add_with_banner(manifest, MAIN_PATH, &text, FileRole::Test, templates, model_hash)?;
    manifest
        .add(HARNESS_PATH, &templates.test_harness, FileRole::Test)
        .map_err(RenderError::from)?;
    manifest
        .add(HELPERS_PATH, &templates.test_helpers, FileRole::Test)
        .map_err(RenderError::from)?;

    diagnostics.push(Diagnostic::info(
        STAGE,
        format!("{} test cases in {} files", ordered.len(), paths.len()),
    ));
    let mut sources = paths;
    sources.push(MAIN_PATH.to_owned());
    Ok((sources, diagnostics))
}
