//! The generation pipeline: a chain of typed stages over one shared state.
//!
//! Each stage consumes one artifact kind and produces another. The chain is
//! type-checked before any stage runs, and the first failing stage halts it.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use tslgen_core::select::build_plan;
use tslgen_core::{DataModel, Diagnostic, GenerationPlan, HardwareTarget, PlanOptions, Schema};

use crate::buildgen::{emit_build_files, BuildConfig};
use crate::loader::{build_model, load_raw, LoadError, RawData};
use crate::manifest::FileManifest;
use crate::render::{emit_library, Engine, LibraryInput};
use crate::templates::TemplateSet;
use crate::testemit::emit_tests;
use crate::yaml;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactKind {
    /// Raw YAML documents.
    Documents,
    /// Validated data model.
    Model,
    /// Generation plan.
    Plan,
    /// Rendered files.
    Library,
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Documents => "documents",
            Self::Model => "model",
            Self::Plan => "plan",
            Self::Library => "library",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Generation,
    Io,
    Configuration,
    Arguments,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Validation => 1,
            Self::Generation | Self::Configuration => 2,
            Self::Io => 3,
            Self::Arguments => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{stage}: {}", .messages.join("; "))]
pub struct StageError {
    pub stage: String,
    pub kind: ErrorKind,
    /// One entry per problem.
    pub messages: Vec<String>,
}

impl StageError {
    pub fn new(stage: &str, kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            stage: stage.into(),
            kind,
            messages: vec![message.into()],
        }
    }
}

/// Inputs that do not change while the pipeline runs.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub data_dir: PathBuf,
    pub schema: Schema,
    pub templates: TemplateSet,
    pub target: HardwareTarget,
    /// Primitive names as requested; expanded by the select stage.
    pub primitives: Option<BTreeSet<String>>,
    pub options: PlanOptions,
    pub skip_validation: bool,
    pub emit_tests: bool,
    pub emit_cmake: bool,
    pub build: BuildConfig,
}

#[derive(Debug, Clone, Default)]
pub struct PipelineState {
    pub raw: RawData,
    pub model: Option<DataModel>,
    pub plan: Option<GenerationPlan>,
    /// Options after primitive closure expansion.
    pub options: PlanOptions,
    pub manifest: FileManifest,
    /// Test sources in execution order, `tests/main.cpp` last.
    pub test_files: Vec<String>,
    /// sha256 of the input documents, hex.
    pub model_hash: String,
    /// Diagnostics of completed stages, in order.
    pub diagnostics: Vec<Diagnostic>,
}

impl PipelineState {
    fn model(&self, stage: &str) -> Result<&DataModel, StageError> {
        self.model
            .as_ref()
            .ok_or_else(|| StageError::new(stage, ErrorKind::Configuration, "no data model"))
    }

    fn plan(&self, stage: &str) -> Result<&GenerationPlan, StageError> {
        self.plan
            .as_ref()
            .ok_or_else(|| StageError::new(stage, ErrorKind::Configuration, "no generation plan"))
    }
}

pub trait PipelineStage {
    fn name(&self) -> &'static str;
    fn input(&self) -> ArtifactKind;
    fn output(&self) -> ArtifactKind;
    fn run(&self, config: &PipelineConfig, state: &mut PipelineState) -> Result<(), StageError>;
}

/// Checks that every stage consumes what its predecessor produces.
pub fn check_chain(stages: &[&dyn PipelineStage], start: ArtifactKind) -> Result<(), StageError> {
    let mut current = start;
    for stage in stages {
        if stage.input() != current {
            return Err(StageError::new(
                "pipeline",
                ErrorKind::Configuration,
                format!(
                    "stage `{}` consumes {} but receives {}",
                    stage.name(),
                    stage.input(),
                    current
                ),
            ));
        }
        current = stage.output();
    }
    Ok(())
}

/// Runs `stages` in order on `state`, which must hold raw documents.
pub fn run_pipeline(
    stages: &[&dyn PipelineStage],
    config: &PipelineConfig,
    state: &mut PipelineState,
) -> Result<(), StageError> {
    check_chain(stages, ArtifactKind::Documents)?;
    for stage in stages {
        stage.run(config, state)?;
    }
    Ok(())
}

/// sha256 over the document labels and canonical document text.
pub fn model_hash(raw: &RawData) -> String {
    let mut hasher = Sha256::new();
    let docs = raw
        .extensions
        .iter()
        .chain(raw.primitive_files.iter().flat_map(|f| f.documents.iter()));
    for doc in docs {
        hasher.update(doc.label.as_bytes());
        hasher.update([0]);
        hasher.update(yaml::to_string(&doc.value).as_bytes());
        hasher.update([0]);
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Validate;
pub struct Select;
pub struct Render;
pub struct Testgen;
/// Reserved for benchmark generation; passes the library through.
pub struct Benchmark;
pub struct Buildgen;

impl PipelineStage for Validate {
    fn name(&self) -> &'static str {
        "validate"
    }
    fn input(&self) -> ArtifactKind {
        ArtifactKind::Documents
    }
    fn output(&self) -> ArtifactKind {
        ArtifactKind::Model
    }
    fn run(&self, config: &PipelineConfig, state: &mut PipelineState) -> Result<(), StageError> {
        state.model_hash = model_hash(&state.raw);
        match build_model(&state.raw, &config.schema, config.skip_validation) {
            Ok((model, report)) => {
                for w in &report.warnings {
                    state.diagnostics.push(Diagnostic::warn(self.name(), w.to_string()));
                }
                state.diagnostics.push(Diagnostic::info(
                    self.name(),
                    format!(
                        "{} extensions, {} primitives in {} categories",
                        model.extensions.len(),
                        model.primitives().count(),
                        model.categories.len()
                    ),
                ));
                state.model = Some(model);
                Ok(())
            }
            Err(issues) => Err(StageError {
                stage: self.name().into(),
                kind: ErrorKind::Validation,
                messages: issues.messages(),
            }),
        }
    }
}

impl PipelineStage for Select {
    fn name(&self) -> &'static str {
        "select"
    }
    fn input(&self) -> ArtifactKind {
        ArtifactKind::Model
    }
    fn output(&self) -> ArtifactKind {
        ArtifactKind::Plan
    }
    fn run(&self, config: &PipelineConfig, state: &mut PipelineState) -> Result<(), StageError> {
        let model = state
            .model
            .as_ref()
            .ok_or_else(|| StageError::new(self.name(), ErrorKind::Configuration, "no data model"))?;
        let mut options = config.options.clone();
        if let Some(roots) = &config.primitives {
            let closure = model.test_dependency_closure(roots).map_err(|unknown| {
                StageError::new(
                    self.name(),
                    ErrorKind::Arguments,
                    format!("unknown primitive(s): {}", unknown.join(", ")),
                )
            })?;
            let added: Vec<&String> = closure.difference(roots).collect();
            if !added.is_empty() {
                let added: Vec<&str> = added.iter().map(|s| s.as_str()).collect();
                state.diagnostics.push(Diagnostic::info(
                    self.name(),
                    format!("added test dependencies: {}", added.join(", ")),
                ));
            }
            options.primitive_filter = Some(closure);
        }
        for name in config.target.unmatched_opt_ins(model) {
            state.diagnostics.push(Diagnostic::warn(
                self.name(),
                format!("requested extension `{name}` is not a size-polymorphic extension of the data model"),
            ));
        }
        let plan = build_plan(model, &config.target, &options).map_err(|errors| StageError {
            stage: self.name().into(),
            kind: ErrorKind::Validation,
            messages: errors.iter().map(|e| e.to_string()).collect(),
        })?;
        state.diagnostics.extend(plan.diagnostics.iter().cloned());
        state.diagnostics.push(Diagnostic::info(
            self.name(),
            format!(
                "{} plan entries over extensions [{}]",
                plan.entries.len(),
                plan.enabled_extensions.join(", ")
            ),
        ));
        state.options = options;
        state.plan = Some(plan);
        Ok(())
    }
}

impl PipelineStage for Render {
    fn name(&self) -> &'static str {
        "render"
    }
    fn input(&self) -> ArtifactKind {
        ArtifactKind::Plan
    }
    fn output(&self) -> ArtifactKind {
        ArtifactKind::Library
    }
    fn run(&self, config: &PipelineConfig, state: &mut PipelineState) -> Result<(), StageError> {
        let input = LibraryInput {
            model: state.model(self.name())?,
            plan: state.plan(self.name())?,
            target: &config.target,
            options: &state.options,
            templates: &config.templates,
            model_hash: &state.model_hash,
        };
        let (manifest, diagnostics) = emit_library(&Engine::new(), &input)
            .map_err(|e| StageError::new(self.name(), ErrorKind::Generation, e.to_string()))?;
        state.manifest = manifest;
        state.diagnostics.extend(diagnostics);
        Ok(())
    }
}

impl PipelineStage for Testgen {
    fn name(&self) -> &'static str {
        "testgen"
    }
    fn input(&self) -> ArtifactKind {
        ArtifactKind::Library
    }
    fn output(&self) -> ArtifactKind {
        ArtifactKind::Library
    }
    fn run(&self, config: &PipelineConfig, state: &mut PipelineState) -> Result<(), StageError> {
        if !config.emit_tests {
            return Ok(());
        }
        let model = state.model.as_ref().expect("checked by the chain");
        let plan = state.plan.as_ref().expect("checked by the chain");
        let result = emit_tests(
            &Engine::new(),
            model,
            plan,
            &config.target,
            &config.templates,
            &state.model_hash,
            &mut state.manifest,
        );
        let (files, diagnostics) =
            result.map_err(|e| StageError::new(self.name(), ErrorKind::Generation, e.to_string()))?;
        state.test_files = files;
        state.diagnostics.extend(diagnostics);
        Ok(())
    }
}

impl PipelineStage for Benchmark {
    fn name(&self) -> &'static str {
        "benchmark"
    }
    fn input(&self) -> ArtifactKind {
        ArtifactKind::Library
    }
    fn output(&self) -> ArtifactKind {
        ArtifactKind::Library
    }
    fn run(&self, _: &PipelineConfig, _: &mut PipelineState) -> Result<(), StageError> {
        Ok(())
    }
}

impl PipelineStage for Buildgen {
    fn name(&self) -> &'static str {
        "buildgen"
    }
    fn input(&self) -> ArtifactKind {
        ArtifactKind::Library
    }
    fn output(&self) -> ArtifactKind {
        ArtifactKind::Library
    }
    fn run(&self, config: &PipelineConfig, state: &mut PipelineState) -> Result<(), StageError> {
        if !config.emit_cmake {
            return Ok(());
        }
        let model = state.model.as_ref().expect("checked by the chain");
        let plan = state.plan.as_ref().expect("checked by the chain");
        let diagnostics = emit_build_files(
            &Engine::new(),
            model,
            plan,
            &config.target,
            &config.templates,
            &config.build,
            &state.test_files,
            &state.model_hash,
            &mut state.manifest,
        )
        .map_err(|e| StageError::new(self.name(), ErrorKind::Generation, e.to_string()))?;
        state.diagnostics.extend(diagnostics);
        Ok(())
    }
}

/// validate, select, render, testgen, benchmark, buildgen.
pub fn default_stages() -> [&'static dyn PipelineStage; 6] {
    [&Validate, &Select, &Render, &Testgen, &Benchmark, &Buildgen]
}

impl From<LoadError> for StageError {
    fn from(e: LoadError) -> Self {
        let kind = match e {
            LoadError::Io { .. } => ErrorKind::Io,
            LoadError::Parse { .. } => ErrorKind::Validation,
        };
        StageError::new("load", kind, e.to_string())
    }
}

/// Loads the data directory and runs the default stages. On failure the
/// diagnostics gathered so far are returned with the error.
pub fn generate(config: &PipelineConfig) -> Result<PipelineState, (StageError, Vec<Diagnostic>)> {
    let mut state = PipelineState::default();
    let (raw, diagnostics) = load_raw(&config.data_dir).map_err(|e| (e.into(), Vec::new()))?;
    state.raw = raw;
    state.diagnostics = diagnostics;
    match run_pipeline(&default_stages(), config, &mut state) {
        Ok(()) => Ok(state),
        Err(e) => Err((e, state.diagnostics)),
    }
}
