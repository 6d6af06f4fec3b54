//! Explicit schema for the user-provided data model.
//!
//! A schema is a list of [`FieldRule`]s for extension documents and one for
//! primitive documents. Validation collects every problem in a document
//! instead of stopping at the first, and enrichment fills in defaults for
//! optional fields the user left out. Fields the schema does not mention are
//! always accepted and carried through unchanged.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::value::{Mapping, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Text,
    Integer,
    Boolean,
    FlagList,
    TextList,
    IntegerList,
    Mapping,
    Record,
    RecordList,
}

impl FieldKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "text" => Self::Text,
            "integer" => Self::Integer,
            "boolean" => Self::Boolean,
            "flag-list" => Self::FlagList,
            "text-list" => Self::TextList,
            "integer-list" => Self::IntegerList,
            "mapping" => Self::Mapping,
            "record" => Self::Record,
            "record-list" => Self::RecordList,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Text => "text",
            Self::Integer => "integer",
            Self::Boolean => "boolean",
            Self::FlagList => "flag-list",
            Self::TextList => "text-list",
            Self::IntegerList => "integer-list",
            Self::Mapping => "mapping",
            Self::Record => "record",
            Self::RecordList => "record-list",
        }
    }

    pub fn has_children(self) -> bool {
        matches!(self, Self::Record | Self::RecordList)
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRule {
    pub name: String,
    pub kind: FieldKind,
    pub required: bool,
    /// Present iff `required` is false.
    pub default: Option<Value>,
    /// Non-empty iff `kind` is a record or record list.
    pub children: Vec<FieldRule>,
}

impl FieldRule {
    pub fn required(name: &str, kind: FieldKind) -> Self {
        Self {
            name: name.into(),
            kind,
            required: true,
            default: None,
            children: Vec::new(),
        }
    }

    pub fn optional(name: &str, kind: FieldKind, default: Value) -> Self {
        Self {
            name: name.into(),
            kind,
            required: false,
            default: Some(default),
            children: Vec::new(),
        }
    }

    pub fn with_children(mut self, children: Vec<FieldRule>) -> Self {
        self.children = children;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schema {
    pub version: u32,
    pub extension_rules: Vec<FieldRule>,
    pub primitive_rules: Vec<FieldRule>,
}

impl Schema {
    /// Unknown fields are never rejected.
    pub const fn allow_unknown_fields(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("schema error at `{rule}`: {message}")]
pub struct SchemaError {
    pub rule: String,
    pub message: String,
}

impl SchemaError {
    fn new(rule: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            rule: rule.into(),
            message: message.into(),
        }
    }
}

/// Parses the schema meta-document: a mapping with `extension` and
/// `primitive` rule lists and an optional integer `version`.
pub fn load_schema(document: &Value) -> Result<Schema, SchemaError> {
    let root = document
        .as_mapping()
        .ok_or_else(|| SchemaError::new("<root>", "schema document must be a mapping"))?;
    let version = match root.get("version") {
        None => 1,
        Some(Value::Integer(v)) if *v >= 0 => *v as u32,
        Some(other) => {
            return Err(SchemaError::new(
                "version",
                format!("expected a non-negative integer, found {}", other.type_name()),
            ))
        }
    };
    let mut schema = Schema {
        version,
        ..Schema::default()
    };
    for (section, slot) in [
        ("extension", &mut schema.extension_rules),
        ("primitive", &mut schema.primitive_rules),
    ] {
        match root.get(section) {
            None | Some(Value::Null) => {}
            Some(Value::Sequence(items)) => *slot = parse_rules(section, items)?,
            Some(other) => {
                return Err(SchemaError::new(
                    section,
                    format!("expected a list of rules, found {}", other.type_name()),
                ))
            }
        }
    }
    Ok(schema)
}

fn parse_rules(parent: &str, items: &[Value]) -> Result<Vec<FieldRule>, SchemaError> {
    let mut rules: Vec<FieldRule> = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let here = format!("{parent}[{i}]");
        let rule = parse_rule(&here, item)?;
        if rules.iter().any(|r| r.name == rule.name) {
            return Err(SchemaError::new(
                format!("{parent}.{}", rule.name),
                "duplicate rule name",
            ));
        }
        rules.push(rule);
    }
    Ok(rules)
}

fn parse_rule(here: &str, item: &Value) -> Result<FieldRule, SchemaError> {
    let m = item
        .as_mapping()
        .ok_or_else(|| SchemaError::new(here, "rule must be a mapping"))?;
    let name = m
        .get("name")
        .and_then(Value::as_str)
        .filter(|s| !s.trim().is_empty())
        .ok_or_else(|| SchemaError::new(here, "rule needs a non-empty text `name`"))?
        .to_owned();
    let here = format!("{here}({name})");
    let kind_text = m
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| SchemaError::new(&*here, "rule needs a text `kind`"))?;
    let kind =
        FieldKind::parse(kind_text).ok_or_else(|| SchemaError::new(&*here, format!("unknown kind `{kind_text}`")))?;
    let required = m
        .get("required")
        .and_then(Value::as_bool)
        .ok_or_else(|| SchemaError::new(&*here, "rule needs a boolean `required`"))?;
    let children = match m.get("children") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Sequence(items)) => parse_rules(&here, items)?,
        Some(other) => {
            return Err(SchemaError::new(
                &*here,
                format!("`children` must be a list, found {}", other.type_name()),
            ))
        }
    };
    if kind.has_children() && children.is_empty() {
        return Err(SchemaError::new(
            &*here,
            format!("kind `{kind}` requires a non-empty `children` list"),
        ));
    }
    if !kind.has_children() && !children.is_empty() {
        return Err(SchemaError::new(
            &*here,
            format!("kind `{kind}` must not declare `children`"),
        ));
    }
    let default = m.get("default").cloned();
    match (required, &default) {
        (true, Some(_)) => return Err(SchemaError::new(&*here, "mandatory rule must not declare a default")),
        (false, None) => {
            return Err(SchemaError::new(&*here, "optional rule needs a `default`"));
        }
        _ => {}
    }
    let rule = FieldRule {
        name,
        kind,
        required,
        default,
        children,
    };
    if let Some(default) = &rule.default {
        let mut issues = Vec::new();
        check_value(&rule, default, &rule.name, "", &mut issues);
        if let Some(first) = issues.first() {
            return Err(SchemaError::new(
                &*here,
                format!("default is not a valid {}: {}", rule.kind, first.message),
            ));
        }
    }
    Ok(rule)
}

/// One validation finding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    /// Which document: file path plus document index, as supplied by the caller.
    pub document: String,
    /// Dotted field path with bracketed list indices, e.g. `definitions[1].lscpu_flags`.
    pub field: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.document.is_empty(), self.field.is_empty()) {
            (true, true) => f.write_str(&self.message),
            (true, false) => write!(f, "{}: {}", self.field, self.message),
            (false, true) => write!(f, "{}: {}", self.document, self.message),
            (false, false) => write!(f, "{}: {}: {}", self.document, self.field, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
    pub enriched_documents: Vec<Value>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.errors.extend(other.errors);
        self.warnings.extend(other.warnings);
        self.enriched_documents.extend(other.enriched_documents);
    }
}

/// Checks `document` against `rules`, collecting every missing mandatory
/// field and every kind mismatch. On success the report carries the
/// enriched document.
pub fn validate(document_label: &str, document: &Value, rules: &[FieldRule]) -> ValidationReport {
    let mut report = ValidationReport::default();
    match document.as_mapping() {
        Some(m) => check_mapping(rules, m, "", document_label, &mut report.errors),
        None => report.errors.push(Issue {
            document: document_label.into(),
            field: String::new(),
            message: format!("document must be a mapping, found {}", document.type_name()),
        }),
    }
    if report.errors.is_empty() {
        report.enriched_documents.push(fill_defaults(document, rules));
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot enrich an invalid document ({count} validation error(s), first: {first})")]
pub struct EnrichError {
    pub count: usize,
    pub first: String,
}

/// Inserts defaults for every absent optional field. Fields that are present
/// are never modified. The document must validate cleanly.
pub fn enrich(document: &Value, rules: &[FieldRule]) -> Result<Value, EnrichError> {
    let report = validate("", document, rules);
    match report.errors.first() {
        Some(first) => Err(EnrichError {
            count: report.errors.len(),
            first: first.to_string(),
        }),
        None => Ok(fill_defaults(document, rules)),
    }
}

/// Default insertion without the validity precondition. Used when the
/// validation stage is skipped; malformed parts are left as they are.
pub fn fill_defaults(document: &Value, rules: &[FieldRule]) -> Value {
    let mut out = document.clone();
    if let Some(m) = out.as_mapping_mut() {
        fill_mapping(m, rules);
    }
    out
}

fn fill_mapping(m: &mut Mapping, rules: &[FieldRule]) {
    for rule in rules {
        match m.get_mut(&rule.name) {
            Some(present) => fill_nested(present, rule),
            None => {
                if let Some(default) = &rule.default {
                    let mut value = default.clone();
                    fill_nested(&mut value, rule);
                    m.insert(rule.name.clone(), value);
                }
            }
        }
    }
}

fn fill_nested(value: &mut Value, rule: &FieldRule) {
    match (rule.kind, value) {
        (FieldKind::Record, Value::Mapping(inner)) => fill_mapping(inner, &rule.children),
        (FieldKind::RecordList, Value::Sequence(items)) => {
            for item in items {
                if let Value::Mapping(inner) = item {
                    fill_mapping(inner, &rule.children);
                }
            }
        }
        _ => {}
    }
}

fn join_path(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_owned()
    } else {
        format!("{prefix}.{name}")
    }
}

fn check_mapping(rules: &[FieldRule], m: &Mapping, prefix: &str, doc: &str, out: &mut Vec<Issue>) {
    for rule in rules {
        let path = join_path(prefix, &rule.name);
        match m.get(&rule.name) {
            Some(value) => check_value(rule, value, &path, doc, out),
            None if rule.required => out.push(Issue {
                document: doc.into(),
                field: path,
                message: format!("missing mandatory field of kind {}", rule.kind),
            }),
            None => {}
        }
    }
}

pub(crate) fn is_flag_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c.is_uppercase())
}

fn check_value(rule: &FieldRule, value: &Value, path: &str, doc: &str, out: &mut Vec<Issue>) {
    let mismatch = |out: &mut Vec<Issue>, path: &str, expected: &str, found: &Value| {
        out.push(Issue {
            document: doc.into(),
            field: path.into(),
            message: format!("expected {expected}, found {}", found.type_name()),
        })
    };
    match rule.kind {
        FieldKind::Text => {
            if !matches!(value, Value::String(_)) {
                mismatch(out, path, "text", value);
            }
        }
        FieldKind::Integer => {
            if !matches!(value, Value::Integer(_)) {
                mismatch(out, path, "integer", value);
            }
        }
        FieldKind::Boolean => {
            if !matches!(value, Value::Bool(_)) {
                mismatch(out, path, "boolean", value);
            }
        }
        FieldKind::Mapping => {
            if !matches!(value, Value::Mapping(_)) {
                mismatch(out, path, "mapping", value);
            }
        }
        FieldKind::TextList | FieldKind::FlagList | FieldKind::IntegerList => {
            let Some(items) = value.as_sequence() else {
                mismatch(out, path, rule.kind.as_str(), value);
                return;
            };
            for (i, item) in items.iter().enumerate() {
                let item_path = format!("{path}[{i}]");
                match (rule.kind, item) {
                    (FieldKind::IntegerList, Value::Integer(_)) => {}
                    (FieldKind::IntegerList, other) => mismatch(out, &item_path, "integer", other),
                    (FieldKind::TextList, Value::String(_)) => {}
                    (FieldKind::FlagList, Value::String(s)) if is_flag_token(s) => {}
                    (FieldKind::FlagList, Value::String(s)) => out.push(Issue {
                        document: doc.into(),
                        field: item_path,
                        message: format!("flag `{s}` must be lowercase, non-empty and free of whitespace"),
                    }),
                    (_, other) => mismatch(out, &item_path, "text", other),
                }
            }
        }
        FieldKind::Record => match value.as_mapping() {
            Some(m) => check_mapping(&rule.children, m, path, doc, out),
            None => mismatch(out, path, "record", value),
        },
        FieldKind::RecordList => {
            let Some(items) = value.as_sequence() else {
                mismatch(out, path, "record-list", value);
                return;
            };
            for (i, item) in items.iter().enumerate() {
                let item_path = format!("{path}[{i}]");
                match item.as_mapping() {
                    Some(m) => check_mapping(&rule.children, m, &item_path, doc, out),
                    None => mismatch(out, &item_path, "record", item),
                }
            }
        }
    }
}
