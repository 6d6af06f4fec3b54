//! Conversion between YAML text and the core [`Value`] tree.

use serde::Deserialize;
use tslgen_core::{Mapping, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}{message}{}", location(.line, .column), hint(.tab_hint))]
pub struct YamlError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
    pub tab_hint: bool,
}

fn location(line: &Option<usize>, column: &Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!("line {l}, column {c}: "),
        (Some(l), None) => format!("line {l}: "),
        _ => String::new(),
    }
}

fn hint(tab: &bool) -> &'static str {
    if *tab {
        " (hint: YAML does not allow tabs for indentation; use spaces)"
    } else {
        ""
    }
}

impl YamlError {
    fn from_serde(err: &serde_yaml::Error, source: &str) -> Self {
        let (line, column) = match err.location() {
            Some(loc) => (Some(loc.line()), Some(loc.column())),
            None => (None, None),
        };
        let message = err.to_string();
        let near_tab = match line {
            Some(l) => source
                .lines()
                .skip(l.saturating_sub(2))
                .take(3)
                .any(|text| text.contains('\t')),
            None => source.contains('\t'),
        };
        // serde_yaml appends its own location to the message; keep ours only.
        let message = match message.rfind(" at line ") {
            Some(i) if line.is_some() => message[..i].to_owned(),
            _ => message,
        };
        Self {
            line,
            column,
            tab_hint: near_tab || message.contains("tab"),
            message,
        }
    }

    fn plain(message: impl Into<String>) -> Self {
        Self {
            line: None,
            column: None,
            message: message.into(),
            tab_hint: false,
        }
    }
}

/// Converts a parsed YAML node. Mapping keys must be scalars.
pub fn from_yaml(node: serde_yaml::Value) -> Result<Value, YamlError> {
    Ok(match node {
        serde_yaml::Value::Null => Value::Null,
        serde_yaml::Value::Bool(b) => Value::Bool(b),
        serde_yaml::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Value::Integer(i)
            } else if let Some(f) = n.as_f64() {
                Value::Float(f)
            } else {
                return Err(YamlError::plain(format!("number {n} is out of range")));
            }
        }
        serde_yaml::Value::String(s) => Value::String(s),
        serde_yaml::Value::Sequence(items) => {
            Value::Sequence(items.into_iter().map(from_yaml).collect::<Result<_, _>>()?)
        }
        serde_yaml::Value::Mapping(map) => {
            let mut out = Mapping::new();
            for (k, v) in map {
                let key = match k {
                    serde_yaml::Value::String(s) => s,
                    serde_yaml::Value::Number(n) => n.to_string(),
                    serde_yaml::Value::Bool(b) => b.to_string(),
                    other => {
                        return Err(YamlError::plain(format!(
                            "mapping keys must be scalars, found {other:?}"
                        )))
                    }
                };
                out.insert(key, from_yaml(v)?);
            }
            Value::Mapping(out)
        }
        serde_yaml::Value::Tagged(tagged) => from_yaml(tagged.value)?,
    })
}

pub fn to_yaml(value: &Value) -> serde_yaml::Value {
    match value {
        Value::Null => serde_yaml::Value::Null,
        Value::Bool(b) => serde_yaml::Value::Bool(*b),
        Value::Integer(i) => serde_yaml::Value::Number((*i).into()),
        Value::Float(f) => serde_yaml::Value::Number((*f).into()),
        Value::String(s) => serde_yaml::Value::String(s.clone()),
        Value::Sequence(items) => serde_yaml::Value::Sequence(items.iter().map(to_yaml).collect()),
        Value::Mapping(m) => serde_yaml::Value::Mapping(
            m.iter()
                .map(|(k, v)| (serde_yaml::Value::String(k.to_owned()), to_yaml(v)))
                .collect(),
        ),
    }
}

/// Parses a single-document YAML text.
pub fn parse_document(text: &str) -> Result<Value, YamlError> {
    let node: serde_yaml::Value = serde_yaml::from_str(text).map_err(|e| YamlError::from_serde(&e, text))?;
    from_yaml(node)
}

/// Parses a multi-document stream. Empty documents are dropped.
pub fn parse_stream(text: &str) -> Result<Vec<Value>, YamlError> {
    let mut docs = Vec::new();
    for de in serde_yaml::Deserializer::from_str(text) {
        let node = serde_yaml::Value::deserialize(de).map_err(|e| YamlError::from_serde(&e, text))?;
        match from_yaml(node)? {
            Value::Null => {}
            doc => docs.push(doc),
        }
    }
    Ok(docs)
}

pub fn to_string(value: &Value) -> String {
    serde_yaml::to_string(&to_yaml(value)).expect("YAML serialization of plain data cannot fail")
}
