//! Typed view of the user-provided data model.
//!
//! Documents are converted after enrichment, so optional fields are expected
//! to be present. Conversion still checks every shape itself because the
//! validation stage can be switched off. Fields the model does not know are
//! kept in `extra` / `custom_fields` and survive a round trip through
//! [`ExtensionSpec::to_document`] and friends.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::schema::is_flag_token;
use crate::value::{Mapping, Value};

/// Element types a primitive can be instantiated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseType {
    U8,
    U16,
    U32,
    U64,
    I8,
    I16,
    I32,
    I64,
    F32,
    F64,
}

impl BaseType {
    pub const ALL: [BaseType; 10] = [
        BaseType::U8,
        BaseType::U16,
        BaseType::U32,
        BaseType::U64,
        BaseType::I8,
        BaseType::I16,
        BaseType::I32,
        BaseType::I64,
        BaseType::F32,
        BaseType::F64,
    ];

    pub fn parse(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == token)
    }

    /// C++ spelling.
    pub fn name(self) -> &'static str {
        match self {
            BaseType::U8 => "uint8_t",
            BaseType::U16 => "uint16_t",
            BaseType::U32 => "uint32_t",
            BaseType::U64 => "uint64_t",
            BaseType::I8 => "int8_t",
            BaseType::I16 => "int16_t",
            BaseType::I32 => "int32_t",
            BaseType::I64 => "int64_t",
            BaseType::F32 => "float",
            BaseType::F64 => "double",
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            BaseType::U8 | BaseType::I8 => 8,
            BaseType::U16 | BaseType::I16 => 16,
            BaseType::U32 | BaseType::I32 | BaseType::F32 => 32,
            BaseType::U64 | BaseType::I64 | BaseType::F64 => 64,
        }
    }

    pub fn bytes(self) -> u32 {
        self.bits() / 8
    }

    pub fn is_float(self) -> bool {
        matches!(self, BaseType::F32 | BaseType::F64)
    }

    pub fn is_signed(self) -> bool {
        !matches!(self, BaseType::U8 | BaseType::U16 | BaseType::U32 | BaseType::U64)
    }
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameter / return type written against the extension's types. Resolved
/// to concrete C++ when a primitive is rendered for an extension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeToken {
    Register,
    Mask,
    IntegralMask,
    Base,
    ConstBasePtr,
    BasePtr,
    Size,
    /// Anything else, passed through verbatim (e.g. `uint64_t`, `bool`).
    Raw(String),
}

impl TypeToken {
    /// Returns `None` for blank input.
    pub fn parse(text: &str) -> Option<Self> {
        let words: Vec<&str> = text.split_whitespace().collect();
        if words.is_empty() {
            return None;
        }
        let normalized = words.join(" ").replace(" *", "*");
        Some(match normalized.as_str() {
            "register_t" => TypeToken::Register,
            "mask_t" => TypeToken::Mask,
            "imask_t" => TypeToken::IntegralMask,
            "base_t" => TypeToken::Base,
            "const base_t*" | "base_t const*" => TypeToken::ConstBasePtr,
            "base_t*" => TypeToken::BasePtr,
            "size_t" | "std::size_t" => TypeToken::Size,
            _ => TypeToken::Raw(normalized),
        })
    }

    /// Token spelling as written in the data model.
    pub fn token(&self) -> &str {
        match self {
            TypeToken::Register => "register_t",
            TypeToken::Mask => "mask_t",
            TypeToken::IntegralMask => "imask_t",
            TypeToken::Base => "base_t",
            TypeToken::ConstBasePtr => "const base_t*",
            TypeToken::BasePtr => "base_t*",
            TypeToken::Size => "size_t",
            TypeToken::Raw(s) => s,
        }
    }

    /// Spelling inside a helper specialization, which declares the
    /// `register_t`/`mask_t`/`imask_t`/`base_t` aliases itself.
    pub fn specialized(&self) -> String {
        match self {
            TypeToken::Size => "std::size_t".into(),
            other => other.token().into(),
        }
    }

    /// Spelling inside the generic dispatch function, in terms of the
    /// extension type parameter `sru`.
    pub fn generic(&self, sru: &str) -> String {
        match self {
            TypeToken::Register => format!("typename {sru}::register_type"),
            TypeToken::Mask => format!("typename {sru}::mask_type"),
            TypeToken::IntegralMask => format!("typename {sru}::imask_type"),
            TypeToken::Base => format!("typename {sru}::base_type"),
            TypeToken::ConstBasePtr => format!("typename {sru}::base_type const*"),
            TypeToken::BasePtr => format!("typename {sru}::base_type*"),
            TypeToken::Size => "std::size_t".into(),
            TypeToken::Raw(s) => s.clone(),
        }
    }
}

impl fmt::Display for TypeToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("{context}: field `{field}`: {message}")]
    Field {
        context: String,
        field: String,
        message: String,
    },
    #[error("extension `{0}` is defined more than once")]
    DuplicateExtension(String),
    #[error("primitive `{primitive}` is defined more than once in category `{category}`")]
    DuplicatePrimitive { category: String, primitive: String },
    #[error("{context}: unknown base type `{token}`")]
    UnknownBaseType { context: String, token: String },
    #[error("extension `{extension}`: default_size_bits {bits} must be 0 or a multiple of 8")]
    InvalidRegisterSize { extension: String, bits: i64 },
    #[error("{context}: implementation must not be empty")]
    EmptyImplementation { context: String },
    #[error("primitive `{primitive}`: parameter `{parameter}` is declared more than once")]
    DuplicateParameter { primitive: String, parameter: String },
    #[error("primitive `{primitive}`: test `{test}` is declared more than once")]
    DuplicateTest { primitive: String, test: String },
    #[error("primitive `{category}::{primitive}`: definitions[{index}] targets unknown extension `{extension}`")]
    UnknownExtension {
        category: String,
        primitive: String,
        index: usize,
        extension: String,
    },
}

fn field_err(context: &str, field: &str, message: impl Into<String>) -> ModelError {
    ModelError::Field {
        context: context.into(),
        field: field.into(),
        message: message.into(),
    }
}

fn req_text(m: &Mapping, key: &str, ctx: &str) -> Result<String, ModelError> {
    match m.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(field_err(
            ctx,
            key,
            format!("expected text, found {}", other.type_name()),
        )),
        None => Err(field_err(ctx, key, "missing")),
    }
}

fn opt_text(m: &Mapping, key: &str, ctx: &str) -> Result<String, ModelError> {
    match m.get(key) {
        None | Some(Value::Null) => Ok(String::new()),
        Some(_) => req_text(m, key, ctx),
    }
}

fn opt_bool(m: &Mapping, key: &str, ctx: &str, default: bool) -> Result<bool, ModelError> {
    match m.get(key) {
        None => Ok(default),
        Some(Value::Bool(b)) => Ok(*b),
        Some(other) => Err(field_err(
            ctx,
            key,
            format!("expected boolean, found {}", other.type_name()),
        )),
    }
}

fn text_list(m: &Mapping, key: &str, ctx: &str) -> Result<Vec<String>, ModelError> {
    match m.get(key) {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Sequence(items)) => items
            .iter()
            .enumerate()
            .map(|(i, item)| {
                item.as_str().map(str::to_owned).ok_or_else(|| {
                    field_err(
                        ctx,
                        &format!("{key}[{i}]"),
                        format!("expected text, found {}", item.type_name()),
                    )
                })
            })
            .collect(),
        Some(other) => Err(field_err(
            ctx,
            key,
            format!("expected a list, found {}", other.type_name()),
        )),
    }
}

fn flag_set(m: &Mapping, key: &str, ctx: &str) -> Result<BTreeSet<String>, ModelError> {
    let flags = text_list(m, key, ctx)?;
    for flag in &flags {
        if !is_flag_token(flag) {
            return Err(field_err(
                ctx,
                key,
                format!("flag `{flag}` must be lowercase and free of whitespace"),
            ));
        }
    }
    Ok(flags.into_iter().collect())
}

fn extra_fields(m: &Mapping, known: &[&str]) -> Mapping {
    m.iter()
        .filter(|(k, _)| !known.contains(k))
        .map(|(k, v)| (k.to_owned(), v.clone()))
        .collect()
}

fn mapping_of<'a>(value: &'a Value, ctx: &str) -> Result<&'a Mapping, ModelError> {
    value.as_mapping().ok_or_else(|| {
        field_err(
            ctx,
            "<document>",
            format!("expected a mapping, found {}", value.type_name()),
        )
    })
}

fn ctype_list(m: &Mapping, key: &str, ctx: &str) -> Result<Vec<BaseType>, ModelError> {
    let tokens = text_list(m, key, ctx)?;
    if tokens.is_empty() {
        return Err(field_err(ctx, key, "at least one base type is required"));
    }
    let mut out = Vec::with_capacity(tokens.len());
    for token in tokens {
        let t = BaseType::parse(token.trim()).ok_or_else(|| ModelError::UnknownBaseType {
            context: ctx.into(),
            token: token.clone(),
        })?;
        if !out.contains(&t) {
            out.push(t);
        }
    }
    Ok(out)
}

fn type_token(m: &Mapping, key: &str, ctx: &str) -> Result<TypeToken, ModelError> {
    let text = req_text(m, key, ctx)?;
    TypeToken::parse(&text).ok_or_else(|| field_err(ctx, key, "type must not be empty"))
}

/// One SIMD instruction-set extension (an SRU in the generated library).
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionSpec {
    pub vendor: String,
    pub extension_name: String,
    pub description: String,
    /// Base requirements; the extension is usable iff all are present.
    pub lscpu_flags: BTreeSet<String>,
    pub includes: Vec<String>,
    /// Template text rendered once per base type.
    pub register_type_expr: String,
    pub mask_type_expr: String,
    pub imask_type_expr: String,
    /// 0 marks a size-polymorphic extension.
    pub default_size_bits: u32,
    /// Target flag -> compiler options enabling it.
    pub arch_flag_map: BTreeMap<String, Vec<String>>,
    pub custom_fields: Mapping,
}

impl ExtensionSpec {
    const KNOWN: &'static [&'static str] = &[
        "vendor",
        "extension_name",
        "description",
        "lscpu_flags",
        "includes",
        "register_type",
        "mask_type",
        "imask_type",
        "default_size_bits",
        "arch_flag_map",
    ];

    /// Name of the always-available fallback extension.
    pub const SCALAR: &'static str = "scalar";

    pub fn from_document(document: &Value) -> Result<Self, ModelError> {
        let m = mapping_of(document, "extension")?;
        let name = req_text(m, "extension_name", "extension")?;
        let ctx = format!("extension `{name}`");
        let bits = match m.get("default_size_bits") {
            Some(Value::Integer(b)) => *b,
            Some(other) => {
                return Err(field_err(
                    &ctx,
                    "default_size_bits",
                    format!("expected integer, found {}", other.type_name()),
                ))
            }
            None => return Err(field_err(&ctx, "default_size_bits", "missing")),
        };
        if bits < 0 || bits % 8 != 0 || bits > i64::from(u32::MAX) {
            return Err(ModelError::InvalidRegisterSize { extension: name, bits });
        }
        let mut arch_flag_map = BTreeMap::new();
        match m.get("arch_flag_map") {
            None | Some(Value::Null) => {}
            Some(Value::Mapping(map)) => {
                for (flag, options) in map.iter() {
                    let options = match options {
                        Value::String(s) => alloc::vec![s.clone()],
                        Value::Sequence(_) => {
                            let mut tmp = Mapping::new();
                            tmp.insert("o", options.clone());
                            text_list(&tmp, "o", &ctx)?
                        }
                        other => {
                            return Err(field_err(
                                &ctx,
                                &format!("arch_flag_map.{flag}"),
                                format!("expected text or list of text, found {}", other.type_name()),
                            ))
                        }
                    };
                    arch_flag_map.insert(flag.to_owned(), options);
                }
            }
            Some(other) => {
                return Err(field_err(
                    &ctx,
                    "arch_flag_map",
                    format!("expected mapping, found {}", other.type_name()),
                ))
            }
        }
        Ok(Self {
            vendor: req_text(m, "vendor", &ctx)?,
            description: opt_text(m, "description", &ctx)?,
            lscpu_flags: flag_set(m, "lscpu_flags", &ctx)?,
            includes: text_list(m, "includes", &ctx)?,
            register_type_expr: req_text(m, "register_type", &ctx)?,
            mask_type_expr: req_text(m, "mask_type", &ctx)?,
            imask_type_expr: match m.get("imask_type") {
                None => "uint64_t".into(),
                Some(_) => req_text(m, "imask_type", &ctx)?,
            },
            default_size_bits: bits as u32,
            arch_flag_map,
            custom_fields: extra_fields(m, Self::KNOWN),
            extension_name: name,
        })
    }

    pub fn to_document(&self) -> Value {
        let mut m = Mapping::new();
        m.insert("vendor", self.vendor.as_str().into());
        m.insert("extension_name", self.extension_name.as_str().into());
        m.insert("description", self.description.as_str().into());
        m.insert("lscpu_flags", Value::string_list(self.lscpu_flags.iter().cloned()));
        m.insert("includes", Value::string_list(self.includes.iter().cloned()));
        m.insert("register_type", self.register_type_expr.as_str().into());
        m.insert("mask_type", self.mask_type_expr.as_str().into());
        m.insert("imask_type", self.imask_type_expr.as_str().into());
        m.insert("default_size_bits", self.default_size_bits.into());
        let arch: Mapping = self
            .arch_flag_map
            .iter()
            .map(|(k, v)| (k.clone(), Value::string_list(v.iter().cloned())))
            .collect();
        m.insert("arch_flag_map", arch.into());
        m.merge_from(&self.custom_fields);
        Value::Mapping(m)
    }

    pub fn is_scalar(&self) -> bool {
        self.extension_name == Self::SCALAR
    }

    pub fn is_size_polymorphic(&self) -> bool {
        self.default_size_bits == 0 && !self.is_scalar()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpec {
    pub name: String,
    pub ctype: TypeToken,
    /// e.g. `const`
    pub attributes: String,
    pub declaration_attributes: String,
    pub description: String,
    pub extra: Mapping,
}

impl ParameterSpec {
    const KNOWN: &'static [&'static str] = &["name", "ctype", "attributes", "declaration_attributes", "description"];

    fn from_mapping(m: &Mapping, ctx: &str) -> Result<Self, ModelError> {
        Ok(Self {
            name: req_text(m, "name", ctx)?,
            ctype: type_token(m, "ctype", ctx)?,
            attributes: opt_text(m, "attributes", ctx)?,
            declaration_attributes: opt_text(m, "declaration_attributes", ctx)?,
            description: opt_text(m, "description", ctx)?,
            extra: extra_fields(m, Self::KNOWN),
        })
    }

    fn to_document(&self) -> Value {
        let mut m = Mapping::new();
        m.insert("name", self.name.as_str().into());
        m.insert("ctype", self.ctype.token().into());
        m.insert("attributes", self.attributes.as_str().into());
        m.insert("declaration_attributes", self.declaration_attributes.as_str().into());
        m.insert("description", self.description.as_str().into());
        m.merge_from(&self.extra);
        Value::Mapping(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSpec {
    pub ctype: TypeToken,
    pub description: String,
    pub extra: Mapping,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefinitionSpec {
    pub target_extension: String,
    pub ctypes: Vec<BaseType>,
    /// Flags needed on top of the extension's base flags.
    pub lscpu_flags: BTreeSet<String>,
    pub is_native: bool,
    /// Template text, rendered per (base type, register size).
    pub implementation: String,
    /// Register widths this definition is restricted to; empty means all.
    pub vector_length_bits: Vec<u32>,
    pub note: String,
    pub extra: Mapping,
}

impl DefinitionSpec {
    const KNOWN: &'static [&'static str] = &[
        "target_extension",
        "ctypes",
        "lscpu_flags",
        "is_native",
        "implementation",
        "vector_length_bits",
        "note",
    ];

    fn from_mapping(m: &Mapping, ctx: &str) -> Result<Self, ModelError> {
        let implementation = req_text(m, "implementation", ctx)?;
        if implementation.trim().is_empty() {
            return Err(ModelError::EmptyImplementation { context: ctx.into() });
        }
        let vector_length_bits = match m.get("vector_length_bits") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Sequence(items)) => {
                let mut out = Vec::new();
                for (i, item) in items.iter().enumerate() {
                    match item {
                        Value::Integer(b) if *b > 0 && b % 8 == 0 && *b <= i64::from(u32::MAX) => out.push(*b as u32),
                        other => {
                            return Err(field_err(
                                ctx,
                                &format!("vector_length_bits[{i}]"),
                                format!("expected a positive multiple of 8, found {other}"),
                            ))
                        }
                    }
                }
                out
            }
            Some(other) => {
                return Err(field_err(
                    ctx,
                    "vector_length_bits",
                    format!("expected a list of integers, found {}", other.type_name()),
                ))
            }
        };
        Ok(Self {
            target_extension: req_text(m, "target_extension", ctx)?,
            ctypes: ctype_list(m, "ctypes", ctx)?,
            lscpu_flags: flag_set(m, "lscpu_flags", ctx)?,
            is_native: opt_bool(m, "is_native", ctx, true)?,
            implementation,
            vector_length_bits,
            note: opt_text(m, "note", ctx)?,
            extra: extra_fields(m, Self::KNOWN),
        })
    }

    pub fn to_document(&self) -> Value {
        let mut m = Mapping::new();
        m.insert("target_extension", self.target_extension.as_str().into());
        m.insert("ctypes", Value::string_list(self.ctypes.iter().map(|c| c.name())));
        m.insert("lscpu_flags", Value::string_list(self.lscpu_flags.iter().cloned()));
        m.insert("is_native", self.is_native.into());
        m.insert("implementation", self.implementation.as_str().into());
        m.insert(
            "vector_length_bits",
            Value::Sequence(self.vector_length_bits.iter().map(|b| (*b).into()).collect()),
        );
        m.insert("note", self.note.as_str().into());
        m.merge_from(&self.extra);
        Value::Mapping(m)
    }

    /// Variant-selection score: number of declared extra flags.
    pub fn score(&self) -> usize {
        self.lscpu_flags.len()
    }

    /// Non-blank lines of the raw implementation text.
    pub fn line_count(&self) -> usize {
        self.implementation.lines().filter(|l| !l.trim().is_empty()).count()
    }

    pub fn supports_size(&self, bits: u32) -> bool {
        self.vector_length_bits.is_empty() || self.vector_length_bits.contains(&bits)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSpec {
    pub test_name: String,
    /// Names of primitives this test relies on.
    pub requires: Vec<String>,
    pub implementation: String,
    pub extra: Mapping,
}

impl TestSpec {
    const KNOWN: &'static [&'static str] = &["test_name", "requires", "implementation"];

    fn from_mapping(m: &Mapping, ctx: &str) -> Result<Self, ModelError> {
        let implementation = req_text(m, "implementation", ctx)?;
        if implementation.trim().is_empty() {
            return Err(ModelError::EmptyImplementation { context: ctx.into() });
        }
        let test_name = match m.get("test_name") {
            None => "default".to_owned(),
            Some(_) => req_text(m, "test_name", ctx)?,
        };
        Ok(Self {
            test_name,
            requires: text_list(m, "requires", ctx)?,
            implementation,
            extra: extra_fields(m, Self::KNOWN),
        })
    }

    fn to_document(&self) -> Value {
        let mut m = Mapping::new();
        m.insert("test_name", self.test_name.as_str().into());
        m.insert("requires", Value::string_list(self.requires.iter().cloned()));
        m.insert("implementation", self.implementation.as_str().into());
        m.merge_from(&self.extra);
        Value::Mapping(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveSpec {
    pub primitive_name: String,
    /// Name of the helper class; falls back to `primitive_name`.
    pub functor_name: String,
    pub category: String,
    pub brief_description: String,
    pub parameters: Vec<ParameterSpec>,
    pub returns: ReturnSpec,
    pub definitions: Vec<DefinitionSpec>,
    pub tests: Vec<TestSpec>,
    pub extra: Mapping,
}

impl PrimitiveSpec {
    const KNOWN: &'static [&'static str] = &[
        "primitive_name",
        "functor_name",
        "brief_description",
        "parameters",
        "returns",
        "definitions",
        "tests",
    ];

    pub fn from_document(category: &str, document: &Value) -> Result<Self, ModelError> {
        let m = mapping_of(document, "primitive")?;
        let name = req_text(m, "primitive_name", "primitive")?;
        let ctx = format!("primitive `{category}::{name}`");

        let records = |key: &str| -> Result<Vec<&Mapping>, ModelError> {
            match m.get(key) {
                None | Some(Value::Null) => Ok(Vec::new()),
                Some(Value::Sequence(items)) => items
                    .iter()
                    .enumerate()
                    .map(|(i, item)| {
                        item.as_mapping().ok_or_else(|| {
                            field_err(
                                &ctx,
                                &format!("{key}[{i}]"),
                                format!("expected a record, found {}", item.type_name()),
                            )
                        })
                    })
                    .collect(),
                Some(other) => Err(field_err(
                    &ctx,
                    key,
                    format!("expected a list, found {}", other.type_name()),
                )),
            }
        };

        let mut parameters: Vec<ParameterSpec> = Vec::new();
        for (i, p) in records("parameters")?.into_iter().enumerate() {
            let param = ParameterSpec::from_mapping(p, &format!("{ctx}: parameters[{i}]"))?;
            if parameters.iter().any(|q| q.name == param.name) {
                return Err(ModelError::DuplicateParameter {
                    primitive: name,
                    parameter: param.name,
                });
            }
            parameters.push(param);
        }

        let returns = match m.get("returns") {
            Some(Value::Mapping(r)) => {
                let rctx = format!("{ctx}: returns");
                ReturnSpec {
                    ctype: type_token(r, "ctype", &rctx)?,
                    description: opt_text(r, "description", &rctx)?,
                    extra: extra_fields(r, &["ctype", "description"]),
                }
            }
            Some(other) => {
                return Err(field_err(
                    &ctx,
                    "returns",
                    format!("expected a record, found {}", other.type_name()),
                ))
            }
            None => return Err(field_err(&ctx, "returns", "missing")),
        };

        let definitions = records("definitions")?
            .into_iter()
            .enumerate()
            .map(|(i, d)| DefinitionSpec::from_mapping(d, &format!("{ctx}: definitions[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;

        let mut tests: Vec<TestSpec> = Vec::new();
        for (i, t) in records("tests")?.into_iter().enumerate() {
            let test = TestSpec::from_mapping(t, &format!("{ctx}: tests[{i}]"))?;
            if tests.iter().any(|u| u.test_name == test.test_name) {
                return Err(ModelError::DuplicateTest {
                    primitive: name,
                    test: test.test_name,
                });
            }
            tests.push(test);
        }

        let functor_name = match opt_text(m, "functor_name", &ctx)? {
            s if s.trim().is_empty() => name.clone(),
            s => s,
        };

        Ok(Self {
            functor_name,
            category: category.into(),
            brief_description: opt_text(m, "brief_description", &ctx)?,
            parameters,
            returns,
            definitions,
            tests,
            extra: extra_fields(m, Self::KNOWN),
            primitive_name: name,
        })
    }

    pub fn to_document(&self) -> Value {
        let mut m = Mapping::new();
        m.insert("primitive_name", self.primitive_name.as_str().into());
        m.insert("functor_name", self.functor_name.as_str().into());
        m.insert("brief_description", self.brief_description.as_str().into());
        m.insert(
            "parameters",
            Value::Sequence(self.parameters.iter().map(ParameterSpec::to_document).collect()),
        );
        let mut r = Mapping::new();
        r.insert("ctype", self.returns.ctype.token().into());
        r.insert("description", self.returns.description.as_str().into());
        r.merge_from(&self.returns.extra);
        m.insert("returns", r.into());
        m.insert(
            "definitions",
            Value::Sequence(self.definitions.iter().map(DefinitionSpec::to_document).collect()),
        );
        m.insert(
            "tests",
            Value::Sequence(self.tests.iter().map(TestSpec::to_document).collect()),
        );
        m.merge_from(&self.extra);
        Value::Mapping(m)
    }

    /// Base types any definition of this primitive mentions, in universe order.
    pub fn ctypes(&self) -> Vec<BaseType> {
        let set: BTreeSet<BaseType> = self.definitions.iter().flat_map(|d| d.ctypes.iter().copied()).collect();
        set.into_iter().collect()
    }

    /// Union of all `requires` lists of the tests.
    pub fn test_requirements(&self) -> BTreeSet<&str> {
        self.tests
            .iter()
            .flat_map(|t| t.requires.iter().map(String::as_str))
            .collect()
    }
}

/// Primitives loaded from one category file (or several files sharing a
/// `category_name`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Category {
    pub name: String,
    /// Extra fields from the category header document, if any.
    pub header: Mapping,
    pub primitives: Vec<PrimitiveSpec>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DataModel {
    /// Sorted by name.
    pub extensions: Vec<ExtensionSpec>,
    /// In load order.
    pub categories: Vec<Category>,
}

impl DataModel {
    /// Assembles a model, sorting extensions by name and checking name
    /// uniqueness. Categories with the same name are merged.
    pub fn new(mut extensions: Vec<ExtensionSpec>, categories: Vec<Category>) -> Result<Self, Vec<ModelError>> {
        let mut errors = Vec::new();
        extensions.sort_by(|a, b| a.extension_name.cmp(&b.extension_name));
        for pair in extensions.windows(2) {
            if pair[0].extension_name == pair[1].extension_name {
                errors.push(ModelError::DuplicateExtension(pair[0].extension_name.clone()));
            }
        }
        let mut merged: Vec<Category> = Vec::new();
        for cat in categories {
            let slot = match merged.iter_mut().position(|c| c.name == cat.name) {
                Some(i) => &mut merged[i],
                None => {
                    merged.push(Category {
                        name: cat.name.clone(),
                        header: Mapping::new(),
                        primitives: Vec::new(),
                    });
                    merged.last_mut().unwrap()
                }
            };
            slot.header.merge_from(&cat.header);
            for p in cat.primitives {
                if slot.primitives.iter().any(|q| q.primitive_name == p.primitive_name) {
                    errors.push(ModelError::DuplicatePrimitive {
                        category: slot.name.clone(),
                        primitive: p.primitive_name.clone(),
                    });
                } else {
                    slot.primitives.push(p);
                }
            }
        }
        if errors.is_empty() {
            Ok(Self {
                extensions,
                categories: merged,
            })
        } else {
            Err(errors)
        }
    }

    pub fn extension(&self, name: &str) -> Option<&ExtensionSpec> {
        self.extensions.iter().find(|e| e.extension_name == name)
    }

    pub fn primitives(&self) -> impl Iterator<Item = &PrimitiveSpec> {
        self.categories.iter().flat_map(|c| c.primitives.iter())
    }

    pub fn primitives_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a PrimitiveSpec> {
        self.primitives().filter(move |p| p.primitive_name == name)
    }

    /// One error per definition that names an extension the model lacks.
    pub fn check_extension_references(&self) -> Vec<ModelError> {
        let mut errors = Vec::new();
        for p in self.primitives() {
            for (index, d) in p.definitions.iter().enumerate() {
                if self.extension(&d.target_extension).is_none() {
                    errors.push(ModelError::UnknownExtension {
                        category: p.category.clone(),
                        primitive: p.primitive_name.clone(),
                        index,
                        extension: d.target_extension.clone(),
                    });
                }
            }
        }
        errors
    }

    /// Every flag mentioned by any extension or definition.
    pub fn flag_universe(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = BTreeSet::new();
        for e in &self.extensions {
            out.extend(e.lscpu_flags.iter().cloned());
        }
        for p in self.primitives() {
            for d in &p.definitions {
                out.extend(d.lscpu_flags.iter().cloned());
            }
        }
        out
    }

    /// Adds the primitives reachable through test `requires` edges. Unknown
    /// names are returned in the error.
    pub fn test_dependency_closure(&self, roots: &BTreeSet<String>) -> Result<BTreeSet<String>, Vec<String>> {
        let unknown: Vec<String> = roots
            .iter()
            .filter(|r| self.primitives_named(r).next().is_none())
            .cloned()
            .collect();
        if !unknown.is_empty() {
            return Err(unknown);
        }
        let mut closure = roots.clone();
        let mut stack: Vec<String> = roots.iter().cloned().collect();
        while let Some(name) = stack.pop() {
            for p in self.primitives_named(&name) {
                for dep in p.test_requirements() {
                    if closure.insert(dep.to_owned()) {
                        stack.push(dep.to_owned());
                    }
                }
            }
        }
        Ok(closure)
    }
}
