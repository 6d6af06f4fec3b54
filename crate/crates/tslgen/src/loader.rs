//! Reading the user-provided data directory.
//!
//! Layout: `<data>/extensions/**/*.yaml` (one extension per document) and
//! `<data>/primitives/*.yaml` (one category per file, one primitive per
//! document). Files are visited in sorted path order so the resulting model
//! does not depend on directory iteration order.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use tslgen_core::schema::{enrich, fill_defaults, validate, ValidationReport};
use tslgen_core::{Category, DataModel, Diagnostic, ExtensionSpec, Mapping, ModelError, PrimitiveSpec, Schema, Value};

use crate::yaml::{parse_stream, YamlError};

const STAGE: &str = "load";

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{label}: {source}")]
    Parse { label: String, source: YamlError },
}

/// One parsed YAML document and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDocument {
    /// `<relative path>#<document number>`, 1-based.
    pub label: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveFile {
    /// Path relative to the data directory.
    pub label: String,
    pub stem: String,
    pub documents: Vec<SourceDocument>,
}

/// Unvalidated contents of a data directory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawData {
    pub extensions: Vec<SourceDocument>,
    pub primitive_files: Vec<PrimitiveFile>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> LoadError + '_ {
    move |source| LoadError::Io {
        path: path.to_owned(),
        source,
    }
}

fn is_yaml(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("yaml" | "yml"))
}

fn yaml_files(dir: &Path, recursive: bool, out: &mut Vec<PathBuf>) -> Result<(), LoadError> {
    let mut entries = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(io_err(dir))?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            if recursive {
                yaml_files(&path, true, out)?;
            }
        } else if is_yaml(&path) {
            out.push(path);
        }
    }
    Ok(())
}

fn relative_label(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn read_documents(root: &Path, path: &Path) -> Result<(String, Vec<SourceDocument>), LoadError> {
    let label = relative_label(root, path);
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let docs = parse_stream(&text).map_err(|source| LoadError::Parse {
        label: label.clone(),
        source,
    })?;
    let docs = docs
        .into_iter()
        .enumerate()
        .map(|(i, value)| SourceDocument {
            label: format!("{label}#{}", i + 1),
            value,
        })
        .collect();
    Ok((label, docs))
}

/// Parses every YAML file below `<data>/extensions` and `<data>/primitives`.
pub fn load_raw(data_dir: &Path) -> Result<(RawData, Vec<Diagnostic>), LoadError> {
    let mut raw = RawData::default();
    let mut diagnostics = Vec::new();

    let mut files = Vec::new();
    yaml_files(&data_dir.join("extensions"), true, &mut files)?;
    for path in &files {
        let (label, docs) = read_documents(data_dir, path)?;
        if docs.is_empty() {
            diagnostics.push(Diagnostic::warn(STAGE, format!("{label}: no documents")));
        }
        raw.extensions.extend(docs);
    }

    let mut files = Vec::new();
    yaml_files(&data_dir.join("primitives"), false, &mut files)?;
    for path in &files {
        let (label, documents) = read_documents(data_dir, path)?;
        if documents.is_empty() {
            diagnostics.push(Diagnostic::warn(
                STAGE,
                format!("{label}: no documents, category is empty"),
            ));
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        raw.primitive_files.push(PrimitiveFile { label, stem, documents });
    }
    Ok((raw, diagnostics))
}

/// Everything that can be wrong with the documents themselves.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelIssues {
    pub report: ValidationReport,
    pub model_errors: Vec<(String, ModelError)>,
}

impl ModelIssues {
    pub fn is_empty(&self) -> bool {
        self.report.errors.is_empty() && self.model_errors.is_empty()
    }

    /// One line per problem, in input order.
    pub fn messages(&self) -> Vec<String> {
        let mut out: Vec<String> = self.report.errors.iter().map(|i| i.to_string()).collect();
        out.extend(self.model_errors.iter().map(|(label, e)| {
            if label.is_empty() {
                e.to_string()
            } else {
                format!("{label}: {e}")
            }
        }));
        out
    }
}

fn checked(
    doc: &SourceDocument,
    rules: &[tslgen_core::FieldRule],
    skip_validation: bool,
    issues: &mut ModelIssues,
) -> Option<Value> {
    if skip_validation {
        return Some(fill_defaults(&doc.value, rules));
    }
    let report = validate(&doc.label, &doc.value, rules);
    let ok = report.is_ok();
    issues.report.merge(report);
    if ok {
        Some(enrich(&doc.value, rules).expect("validated document enriches"))
    } else {
        None
    }
}

/// Validates, enriches and converts the extension documents. Sorted by name.
pub fn build_extensions(
    docs: &[SourceDocument],
    schema: &Schema,
    skip_validation: bool,
    issues: &mut ModelIssues,
) -> Vec<ExtensionSpec> {
    let mut out = Vec::new();
    for doc in docs {
        if let Some(value) = checked(doc, &schema.extension_rules, skip_validation, issues) {
            match ExtensionSpec::from_document(&value) {
                Ok(e) => out.push(e),
                Err(e) => issues.model_errors.push((doc.label.clone(), e)),
            }
        }
    }
    out.sort_by(|a, b| a.extension_name.cmp(&b.extension_name));
    out
}

/// Category header: a first document with `category_name` and no
/// `primitive_name`.
fn split_header(file: &PrimitiveFile) -> (String, Mapping, &[SourceDocument]) {
    let Some(first) = file.documents.first() else {
        return (file.stem.clone(), Mapping::new(), &[]);
    };
    let Some(m) = first.value.as_mapping() else {
        return (file.stem.clone(), Mapping::new(), &file.documents);
    };
    let name = m.get("category_name").and_then(Value::as_str);
    match name {
        Some(name) if !m.contains_key("primitive_name") => {
            let mut header = m.clone();
            header.remove("category_name");
            (name.to_owned(), header, &file.documents[1..])
        }
        Some(name) => (name.to_owned(), Mapping::new(), &file.documents),
        None => (file.stem.clone(), Mapping::new(), &file.documents),
    }
}

/// Validates, enriches and converts the primitive files, one category each.
pub fn build_categories(
    files: &[PrimitiveFile],
    schema: &Schema,
    skip_validation: bool,
    issues: &mut ModelIssues,
) -> Vec<Category> {
    let mut out = Vec::new();
    for file in files {
        let (name, header, docs) = split_header(file);
        let mut category = Category {
            name,
            header,
            primitives: Vec::new(),
        };
        for doc in docs {
            if let Some(value) = checked(doc, &schema.primitive_rules, skip_validation, issues) {
                match PrimitiveSpec::from_document(&category.name, &value) {
                    Ok(p) => category.primitives.push(p),
                    Err(e) => issues.model_errors.push((doc.label.clone(), e)),
                }
            }
        }
        out.push(category);
    }
    out
}

/// Builds the data model from raw documents. Collects every problem before
/// giving up.
pub fn build_model(
    raw: &RawData,
    schema: &Schema,
    skip_validation: bool,
) -> Result<(DataModel, ValidationReport), ModelIssues> {
    let mut issues = ModelIssues::default();
    let extensions = build_extensions(&raw.extensions, schema, skip_validation, &mut issues);
    let categories = build_categories(&raw.primitive_files, schema, skip_validation, &mut issues);
    if !issues.is_empty() {
        return Err(issues);
    }
    match DataModel::new(extensions, categories) {
        Ok(model) => Ok((model, issues.report)),
        Err(errors) => Err(ModelIssues {
            report: issues.report,
            model_errors: errors.into_iter().map(|e| (String::new(), e)).collect(),
        }),
    }
}

/// Loads and validates `<dir>/*.yaml` (recursively) as extensions.
pub fn load_extensions(dir: &Path, schema: &Schema) -> Result<Vec<ExtensionSpec>, LoadOrModelError> {
    let mut files = Vec::new();
    yaml_files(dir, true, &mut files)?;
    let mut docs = Vec::new();
    for path in &files {
        docs.extend(read_documents(dir, path)?.1);
    }
    let mut issues = ModelIssues::default();
    let out = build_extensions(&docs, schema, false, &mut issues);
    if issues.is_empty() {
        Ok(out)
    } else {
        Err(LoadOrModelError::Model(issues))
    }
}

/// Loads and validates `<dir>/*.yaml` as primitive categories.
pub fn load_primitives(dir: &Path, schema: &Schema) -> Result<Vec<Category>, LoadOrModelError> {
    let mut files = Vec::new();
    yaml_files(dir, false, &mut files)?;
    let mut prim_files = Vec::new();
    for path in &files {
        let (label, documents) = read_documents(dir, path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        prim_files.push(PrimitiveFile { label, stem, documents });
    }
    let mut issues = ModelIssues::default();
    let out = build_categories(&prim_files, schema, false, &mut issues);
    if issues.is_empty() {
        Ok(out)
    } else {
        Err(LoadOrModelError::Model(issues))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadOrModelError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{} problem(s) in the data model", .0.messages().len())]
    Model(ModelIssues),
}
