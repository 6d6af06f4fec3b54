//! Two-stage rendering of the library headers.
//!
//! Stage two renders each selected definition body for one base type and
//! register width. Stage one places the rendered bodies into the structural
//! templates of a [`TemplateSet`].

use std::collections::{BTreeMap, BTreeSet};

use minijinja::{Environment, ErrorKind, UndefinedBehavior};
use tslgen_core::{
    BaseType, DataModel, DefinitionSpec, Diagnostic, ExtensionSpec, GenerationPlan, HardwareTarget, PlanEntry,
    PlanOptions, PrimitiveSpec, Value,
};

use crate::manifest::{FileManifest, FileRole, ManifestError};
use crate::templates::TemplateSet;

const STAGE: &str = "render";

/// C++ namespace of the generated library.
pub const NAMESPACE: &str = "tsl";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const UMBRELLA_PATH: &str = "include/tsl/tsl.hpp";
pub const CORE_PATH: &str = "include/tsl/tsl_core.hpp";

pub type Context = BTreeMap<String, minijinja::Value>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{context}: {message}")]
pub struct RenderError {
    /// What was being rendered.
    pub context: String,
    pub message: String,
}

impl From<ManifestError> for RenderError {
    fn from(e: ManifestError) -> Self {
        Self {
            context: "manifest".into(),
            message: e.to_string(),
        }
    }
}

/// Names the engine provides itself.
const ENGINE_GLOBALS: [&str; 5] = ["range", "dict", "namespace", "debug", "loop"];

/// Template engine configured for the documented dialect.
pub struct Engine {
    env: Environment<'static>,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new()
    }
}

fn describe(err: &minijinja::Error) -> String {
    let mut out = err.kind().to_string();
    if let Some(detail) = err.detail() {
        out.push_str(": ");
        out.push_str(detail);
    }
    if let Some(line) = err.line() {
        out.push_str(&format!(" (template line {line})"));
    }
    out
}

impl Engine {
    pub fn new() -> Self {
        let mut env = Environment::new();
        env.set_undefined_behavior(UndefinedBehavior::SemiStrict);
        Self { env }
    }

    /// Parses `source` without rendering it.
    pub fn check(&self, what: &str, source: &str) -> Result<(), RenderError> {
        self.env.template_from_str(source).map(|_| ()).map_err(|e| RenderError {
            context: what.into(),
            message: describe(&e),
        })
    }

    /// Renders `source`. Fails on unresolved names and when template
    /// delimiters survive in the output.
    pub fn render(&self, what: &str, source: &str, ctx: &Context) -> Result<String, RenderError> {
        let err = |message: String| RenderError {
            context: what.into(),
            message,
        };
        let template = self.env.template_from_str(source).map_err(|e| err(describe(&e)))?;
        match template.render(minijinja::Value::from(ctx.clone())) {
            Ok(out) => {
                if out.contains("{{") || out.contains("{%") {
                    Err(err("template delimiters survive in the rendered output".into()))
                } else {
                    Ok(out)
                }
            }
            Err(e) if e.kind() == ErrorKind::UndefinedError => {
                let mut missing: Vec<String> = template
                    .undeclared_variables(false)
                    .into_iter()
                    .filter(|n| !ctx.contains_key(n) && !ENGINE_GLOBALS.contains(&n.as_str()))
                    .collect();
                missing.sort();
                if missing.is_empty() {
                    Err(err(describe(&e)))
                } else {
                    let names: Vec<String> = missing.iter().map(|n| format!("`{n}`")).collect();
                    let line = e.line().map(|l| format!(" (template line {l})")).unwrap_or_default();
                    Err(err(format!("undefined name {}{line}", names.join(", "))))
                }
            }
            Err(e) => Err(err(describe(&e))),
        }
    }
}

pub fn to_template_value(value: &Value) -> minijinja::Value {
    match value {
        Value::Null => minijinja::Value::from(()),
        Value::Bool(b) => minijinja::Value::from(*b),
        Value::Integer(i) => minijinja::Value::from(*i),
        Value::Float(f) => minijinja::Value::from(*f),
        Value::String(s) => minijinja::Value::from(s.as_str()),
        Value::Sequence(items) => minijinja::Value::from(items.iter().map(to_template_value).collect::<Vec<_>>()),
        Value::Mapping(m) => minijinja::Value::from(
            m.iter()
                .map(|(k, v)| (k.to_owned(), to_template_value(v)))
                .collect::<BTreeMap<String, minijinja::Value>>(),
        ),
    }
}

fn put(ctx: &mut Context, key: &str, value: impl Into<minijinja::Value>) {
    ctx.insert(key.to_owned(), value.into());
}

fn flatten(ctx: &mut Context, doc: &Value, skip: &[&str]) {
    if let Some(m) = doc.as_mapping() {
        for (k, v) in m.iter() {
            if !skip.contains(&k) {
                ctx.insert(k.to_owned(), to_template_value(v));
            }
        }
    }
}

/// `tsl::<extension><<ctype>, <bits>>`
pub fn simd_type(extension: &str, ctype: BaseType, size_bits: u32) -> String {
    format!("{NAMESPACE}::{extension}<{ctype}, {size_bits}>")
}

fn put_ctype(ctx: &mut Context, ctype: BaseType) {
    put(ctx, "ctype", ctype.name());
    put(ctx, "ctype_bits", ctype.bits());
    put(ctx, "ctype_bytes", ctype.bytes());
    put(ctx, "ctype_is_float", ctype.is_float());
    put(ctx, "ctype_is_signed", ctype.is_signed());
}

fn put_size(ctx: &mut Context, extension: &ExtensionSpec, ctype: BaseType, size_bits: u32) {
    put(ctx, "register_size_bits", size_bits);
    put(ctx, "vec_elem_count", size_bits / ctype.bits());
    put(ctx, "simd_type", simd_type(&extension.extension_name, ctype, size_bits));
}

fn extension_context(extension: &ExtensionSpec, target: &HardwareTarget) -> Context {
    let mut ctx = Context::new();
    let doc = extension.to_document();
    flatten(&mut ctx, &doc, &[]);
    put(&mut ctx, "extension", to_template_value(&doc));
    put(&mut ctx, "is_size_polymorphic", extension.is_size_polymorphic());
    put(
        &mut ctx,
        "target_flags",
        target.flags.iter().cloned().collect::<Vec<_>>(),
    );
    ctx
}

/// Data visible to a definition or test body: extension fields and custom
/// fields, primitive fields, unknown definition fields, target flags, and
/// the base type / register width being rendered.
pub fn render_context(
    extension: &ExtensionSpec,
    primitive: &PrimitiveSpec,
    definition: Option<&DefinitionSpec>,
    ctype: BaseType,
    size_bits: u32,
    target: &HardwareTarget,
) -> Context {
    let mut ctx = extension_context(extension, target);
    flatten(&mut ctx, &primitive.to_document(), &["definitions", "tests"]);
    put(&mut ctx, "category", primitive.category.as_str());
    if let Some(d) = definition {
        let doc = d.to_document();
        put(&mut ctx, "definition", to_template_value(&doc));
        put(&mut ctx, "is_native", d.is_native);
        put(&mut ctx, "note", d.note.as_str());
        flatten(&mut ctx, &Value::Mapping(d.extra.clone()), &[]);
    }
    put_ctype(&mut ctx, ctype);
    put_size(&mut ctx, extension, ctype, size_bits);
    ctx
}

/// Renders one definition body for the context's base type and width.
pub fn render_inner(
    engine: &Engine,
    definition: &DefinitionSpec,
    ctx: &Context,
    what: &str,
) -> Result<String, RenderError> {
    engine.render(what, &definition.implementation, ctx)
}

/// Trims surrounding blank lines and indents every non-blank line.
pub fn indent(text: &str, spaces: usize) -> String {
    let pad = " ".repeat(spaces);
    let lines: Vec<&str> = text.lines().collect();
    let start = lines.iter().position(|l| !l.trim().is_empty());
    let end = lines.iter().rposition(|l| !l.trim().is_empty());
    let (Some(start), Some(end)) = (start, end) else {
        return String::new();
    };
    lines[start..=end]
        .iter()
        .map(|l| {
            let l = l.trim_end();
            if l.is_empty() {
                String::new()
            } else {
                format!("{pad}{l}")
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn cpp_string(text: &str) -> String {
    let mut out = String::from("\"");
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Comment prefix for a generated path.
pub fn comment_prefix(path: &str) -> &'static str {
    if path.ends_with(".txt") || path.ends_with(".cmake") {
        "#"
    } else {
        "//"
    }
}

/// Auto-generation banner plus the optional license header.
pub fn banner(path: &str, license_header: &str, model_hash: &str) -> String {
    let prefix = comment_prefix(path);
    let mut out = String::new();
    for line in license_header.lines() {
        if line.trim().is_empty() {
            out.push_str(prefix);
        } else {
            out.push_str(&format!("{prefix} {line}"));
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "{prefix} Generated by tslgen {TOOL_VERSION}. Do not edit.\n{prefix} Data model sha256: {model_hash}\n"
    ));
    out
}

/// Adds `content` to the manifest behind the banner. Content that starts
/// with `#pragma once` keeps it as its first line.
pub fn add_with_banner(
    manifest: &mut FileManifest,
    path: &str,
    content: &str,
    role: FileRole,
    templates: &TemplateSet,
    model_hash: &str,
) -> Result<(), RenderError> {
    let banner = banner(path, &templates.license_header, model_hash);
    let content = content.trim_start_matches('\n');
    let text = match content.strip_prefix("#pragma once\n") {
        Some(rest) => format!("#pragma once\n{banner}{rest}"),
        None => format!("{banner}\n{content}"),
    };
    manifest.add(path, collapse_blank_lines(&text), role)?;
    Ok(())
}

/// At most one consecutive blank line.
fn collapse_blank_lines(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut blank = 0;
    for line in text.lines() {
        if line.trim().is_empty() {
            blank += 1;
            if blank > 1 {
                continue;
            }
            out.push('\n');
        } else {
            blank = 0;
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

pub fn extension_path(extension: &ExtensionSpec) -> String {
    format!(
        "generated/extensions/{}/{}.hpp",
        extension.vendor, extension.extension_name
    )
}

pub fn declaration_path(category: &str) -> String {
    format!("generated/declarations/{category}.hpp")
}

pub fn definition_path(category: &str, extension: &str) -> String {
    format!("generated/definitions/{category}/{category}_{extension}.hpp")
}

/// Renders the SRU header of one extension for the given base types.
pub fn render_extension(
    engine: &Engine,
    templates: &TemplateSet,
    extension: &ExtensionSpec,
    ctypes: &[BaseType],
    target: &HardwareTarget,
) -> Result<String, RenderError> {
    let base = extension_context(extension, target);
    let mut types = Vec::new();
    for &ctype in ctypes {
        let mut ctx = base.clone();
        put_ctype(&mut ctx, ctype);
        if let [size] = target.sizes_for(extension, ctype)[..] {
            if !extension.is_size_polymorphic() {
                put_size(&mut ctx, extension, ctype, size);
            }
        }
        let what = |field: &str| format!("extension `{}` {field} for {ctype}", extension.extension_name);
        let mut t = Context::new();
        put(&mut t, "ctype", ctype.name());
        for (key, source) in [
            ("register_type", &extension.register_type_expr),
            ("mask_type", &extension.mask_type_expr),
            ("imask_type", &extension.imask_type_expr),
        ] {
            let text = engine.render(&what(key), source, &ctx)?;
            put(&mut t, key, one_line(&text));
        }
        types.push(minijinja::Value::from(t));
    }

    let mut ctx = base;
    put(&mut ctx, "namespace", NAMESPACE);
    put(&mut ctx, "types", types);
    put(&mut ctx, "description", one_line(&extension.description));
    let default_size = if extension.is_scalar() {
        " = sizeof(BaseType) * 8".to_owned()
    } else if extension.is_size_polymorphic() {
        String::new()
    } else {
        format!(" = {}", extension.default_size_bits)
    };
    put(&mut ctx, "default_size", default_size);
    put(
        &mut ctx,
        "is_size_polymorphic",
        if extension.is_size_polymorphic() {
            "true"
        } else {
            "false"
        },
    );
    put(&mut ctx, "flag_count", extension.lscpu_flags.len());
    let literals: Vec<String> = extension.lscpu_flags.iter().map(|f| cpp_string(f)).collect();
    put(&mut ctx, "flag_initializer", format!("{{{}}}", literals.join(", ")));
    let preamble = extension
        .custom_fields
        .get("preamble")
        .and_then(Value::as_str)
        .unwrap_or("")
        .trim()
        .to_owned();
    put(&mut ctx, "preamble", preamble);
    engine.render(
        &format!("extension template for `{}`", extension.extension_name),
        &templates.extension,
        &ctx,
    )
}

/// Parameter list of a primitive; `generic` selects the dispatch-function
/// spelling, otherwise the helper-specialization spelling.
pub fn parameter_list(primitive: &PrimitiveSpec, generic: bool) -> String {
    primitive
        .parameters
        .iter()
        .map(|p| {
            let ty = if generic {
                p.ctype.generic("SimdT")
            } else {
                p.ctype.specialized()
            };
            let mut text = ty;
            if !p.attributes.trim().is_empty() {
                text.push(' ');
                text.push_str(p.attributes.trim());
            }
            text.push(' ');
            text.push_str(&p.name);
            if generic && !p.declaration_attributes.trim().is_empty() {
                text.push(' ');
                text.push_str(p.declaration_attributes.trim());
            }
            text
        })
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn argument_list(primitive: &PrimitiveSpec) -> String {
    primitive
        .parameters
        .iter()
        .map(|p| p.name.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

fn type_aliases(simd: &str) -> String {
    format!(
        "  using simd_type = {simd};\n  using base_t = typename simd_type::base_type;\n  using register_t = typename simd_type::register_type;\n  using mask_t = typename simd_type::mask_type;\n  using imask_t = typename simd_type::imask_type;"
    )
}

/// Everything needed to declare and define one primitive.
pub struct RenderedPrimitive {
    /// Stage-one context for the declaration template.
    pub declaration: minijinja::Value,
    /// Stage-one contexts of the helper specializations, per extension, in
    /// plan order.
    pub definitions: BTreeMap<String, Vec<minijinja::Value>>,
}

/// Renders every plan entry of `primitive`.
pub fn render_primitive(
    engine: &Engine,
    model: &DataModel,
    primitive: &PrimitiveSpec,
    entries: &[&PlanEntry],
    target: &HardwareTarget,
) -> Result<RenderedPrimitive, RenderError> {
    let mut decl = Context::new();
    put(&mut decl, "primitive_name", primitive.primitive_name.as_str());
    put(&mut decl, "functor_name", primitive.functor_name.as_str());
    put(&mut decl, "brief_description", one_line(&primitive.brief_description));
    let params: Vec<minijinja::Value> = primitive
        .parameters
        .iter()
        .map(|p| {
            let mut m = Context::new();
            put(&mut m, "name", p.name.as_str());
            put(&mut m, "description", one_line(&p.description));
            minijinja::Value::from(m)
        })
        .collect();
    put(&mut decl, "parameters", params);
    put(&mut decl, "return_type", primitive.returns.ctype.generic("SimdT"));
    put(&mut decl, "has_return", primitive.returns.ctype.token() != "void");
    put(
        &mut decl,
        "return_description",
        one_line(&primitive.returns.description),
    );
    put(&mut decl, "parameter_list", parameter_list(primitive, true));
    put(&mut decl, "argument_list", argument_list(primitive));

    let specialized_params = parameter_list(primitive, false);
    let arguments = argument_list(primitive);
    let mut definitions: BTreeMap<String, Vec<minijinja::Value>> = BTreeMap::new();
    for entry in entries {
        let extension = entry.extension_spec(model).ok_or_else(|| RenderError {
            context: format!("{}::{}", entry.category, entry.primitive),
            message: format!("unknown extension `{}`", entry.extension),
        })?;
        let definition = &primitive.definitions[entry.definition_index];
        let ctx = render_context(
            extension,
            primitive,
            Some(definition),
            entry.ctype,
            entry.size_bits,
            target,
        );
        let what = format!(
            "{}::{} for {}/{}/{}",
            entry.category, entry.primitive, entry.extension, entry.ctype, entry.size_bits
        );
        let body = render_inner(engine, definition, &ctx, &what)?;
        let simd = simd_type(&entry.extension, entry.ctype, entry.size_bits);
        let flags = if definition.lscpu_flags.is_empty() {
            "none".to_owned()
        } else {
            definition.lscpu_flags.iter().cloned().collect::<Vec<_>>().join(", ")
        };
        let provenance = format!(
            "{}::{} for {}: definitions[{}], extra flags: {}, is_native: {}",
            entry.category,
            entry.primitive,
            simd.trim_start_matches("tsl::"),
            entry.definition_index,
            flags,
            definition.is_native
        );
        let mut s = Context::new();
        put(&mut s, "provenance", provenance);
        put(&mut s, "is_native", definition.is_native);
        put(&mut s, "functor_name", primitive.functor_name.as_str());
        put(&mut s, "simd_type", simd.as_str());
        put(&mut s, "type_aliases", type_aliases(&simd));
        put(&mut s, "return_type", primitive.returns.ctype.specialized());
        put(&mut s, "parameter_list", specialized_params.as_str());
        put(&mut s, "argument_list", arguments.as_str());
        put(&mut s, "body", indent(&body, 4));
        definitions
            .entry(entry.extension.clone())
            .or_default()
            .push(minijinja::Value::from(s));
    }
    Ok(RenderedPrimitive {
        declaration: minijinja::Value::from(decl),
        definitions,
    })
}

/// Primitives that pass the primitive filter, grouped by category; both
/// levels sorted by name.
pub fn selected_primitives<'m>(
    model: &'m DataModel,
    options: &PlanOptions,
) -> BTreeMap<&'m str, Vec<&'m PrimitiveSpec>> {
    let mut out: BTreeMap<&str, Vec<&PrimitiveSpec>> = BTreeMap::new();
    for category in &model.categories {
        for p in &category.primitives {
            if options
                .primitive_filter
                .as_ref()
                .is_none_or(|f| f.contains(&p.primitive_name))
            {
                out.entry(category.name.as_str()).or_default().push(p);
            }
        }
    }
    for prims in out.values_mut() {
        prims.sort_by(|a, b| a.primitive_name.cmp(&b.primitive_name));
    }
    out
}

pub struct LibraryInput<'a> {
    pub model: &'a DataModel,
    pub plan: &'a GenerationPlan,
    pub target: &'a HardwareTarget,
    pub options: &'a PlanOptions,
    pub templates: &'a TemplateSet,
    pub model_hash: &'a str,
}

/// Renders the complete header-only library. Nothing is written to disk.
pub fn emit_library(engine: &Engine, input: &LibraryInput<'_>) -> Result<(FileManifest, Vec<Diagnostic>), RenderError> {
    let LibraryInput {
        model,
        plan,
        target,
        options,
        templates,
        model_hash,
    } = *input;
    for (name, source) in templates.rendered_templates() {
        engine.check(name, source)?;
    }
    let mut manifest = FileManifest::new();
    let mut diagnostics = Vec::new();
    let mut includes: Vec<String> = vec!["tsl_core.hpp".into()];

    let mut ctx = Context::new();
    put(&mut ctx, "namespace", NAMESPACE);
    let core = engine.render("core.hpp.jinja", &templates.core_header, &ctx)?;
    add_with_banner(
        &mut manifest,
        CORE_PATH,
        &core,
        FileRole::Umbrella,
        templates,
        model_hash,
    )?;

    let enabled: Vec<&ExtensionSpec> = plan
        .enabled_extensions
        .iter()
        .filter_map(|n| model.extension(n))
        .collect();
    for extension in &enabled {
        let ctypes: BTreeSet<BaseType> = plan
            .entries
            .iter()
            .filter(|e| e.extension == extension.extension_name)
            .map(|e| e.ctype)
            .collect();
        let ctypes: Vec<BaseType> = ctypes.into_iter().collect();
        let text = render_extension(engine, templates, extension, &ctypes, target)?;
        let path = extension_path(extension);
        add_with_banner(
            &mut manifest,
            &path,
            &text,
            FileRole::ExtensionHeader,
            templates,
            model_hash,
        )?;
        includes.push(format!("../../{path}"));
    }

    let mut definition_includes = Vec::new();
    for (category, primitives) in selected_primitives(model, options) {
        let mut declarations = Vec::new();
        let mut per_extension: BTreeMap<String, Vec<minijinja::Value>> = BTreeMap::new();
        for primitive in primitives {
            let entries: Vec<&PlanEntry> = plan
                .entries
                .iter()
                .filter(|e| e.category == category && e.primitive == primitive.primitive_name)
                .collect();
            if entries.is_empty() {
                diagnostics.push(Diagnostic::warn(
                    STAGE,
                    format!(
                        "primitive `{category}::{}` has no plan entries; only its declaration is emitted",
                        primitive.primitive_name
                    ),
                ));
            }
            let rendered = render_primitive(engine, model, primitive, &entries, target)?;
            declarations.push(rendered.declaration);
            for (ext, specs) in rendered.definitions {
                per_extension.entry(ext).or_default().extend(specs);
            }
        }

        let decl_path = declaration_path(category);
        let mut ctx = Context::new();
        put(&mut ctx, "namespace", NAMESPACE);
        put(&mut ctx, "category", category);
        put(&mut ctx, "core_include", format!("../../{CORE_PATH}"));
        put(&mut ctx, "primitives", declarations);
        let text = engine.render(&format!("declarations of `{category}`"), &templates.declaration, &ctx)?;
        add_with_banner(
            &mut manifest,
            &decl_path,
            &text,
            FileRole::Declaration,
            templates,
            model_hash,
        )?;
        includes.push(format!("../../{decl_path}"));

        for (ext_name, specializations) in per_extension {
            let extension = model.extension(&ext_name).expect("plan extension exists");
            let path = definition_path(category, &ext_name);
            let mut ctx = Context::new();
            put(&mut ctx, "namespace", NAMESPACE);
            put(&mut ctx, "category", category);
            put(&mut ctx, "extension_name", ext_name.as_str());
            put(
                &mut ctx,
                "declaration_include",
                format!("../../declarations/{category}.hpp"),
            );
            put(
                &mut ctx,
                "extension_include",
                format!("../../extensions/{}/{}.hpp", extension.vendor, ext_name),
            );
            put(&mut ctx, "specializations", specializations);
            let text = engine.render(
                &format!("definitions of `{category}` for `{ext_name}`"),
                &templates.definition,
                &ctx,
            )?;
            add_with_banner(&mut manifest, &path, &text, FileRole::Definition, templates, model_hash)?;
            definition_includes.push(format!("../../{path}"));
        }
    }
    includes.extend(definition_includes);

    let mut ctx = Context::new();
    put(&mut ctx, "namespace", NAMESPACE);
    put(&mut ctx, "includes", includes);
    let flags = target.flag_texts();
    put(
        &mut ctx,
        "target_flags",
        if flags.is_empty() {
            "none".to_owned()
        } else {
            flags.join(" ")
        },
    );
    put(&mut ctx, "extensions", plan.enabled_extensions.join(" "));
    let text = engine.render("umbrella.hpp.jinja", &templates.umbrella, &ctx)?;
    add_with_banner(
        &mut manifest,
        UMBRELLA_PATH,
        &text,
        FileRole::Umbrella,
        templates,
        model_hash,
    )?;
    Ok((manifest, diagnostics))
}
