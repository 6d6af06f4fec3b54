//! Command-line front end.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use tslgen_core::schema::load_schema;
use tslgen_core::target::parse_target;
use tslgen_core::{BaseType, Diagnostic, HardwareTarget, Level, PlanOptions, Schema};

use crate::buildgen::BuildConfig;
use crate::host::detect_host;
use crate::pipeline::{generate, ErrorKind, PipelineConfig, StageError};
use crate::templates::TemplateSet;
use crate::yaml;

pub const SCHEMA_VERSION: u32 = 1;
pub const BUILTIN_SCHEMA: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/tsl_schema.yaml"));
pub const PLAN_FILE: &str = "generation_plan.yaml";

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (data model schema 1)");

#[derive(Debug, Parser)]
#[command(name = "tslgen", version = VERSION, about = "Generates a header-only C++ SIMD library from a YAML data model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Debug output.
    #[arg(short, long, global = true, conflicts_with = "quiet")]
    pub verbose: bool,
    /// Errors only.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the library, its tests and build files.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Data model directory with `extensions/` and `primitives/`.
    #[arg(long, env = "TSLGEN_DATA_DIR")]
    pub data: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Template directory overriding the built-in templates.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Schema file replacing the built-in schema.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Target capability flags, comma-separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "detect_host")]
    pub targets: Vec<String>,
    /// Use the capability flags of this machine.
    #[arg(long)]
    pub detect_host: bool,
    /// Size-polymorphic extensions to enable, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub extensions: Vec<String>,
    /// Register sizes in bits for size-polymorphic extensions.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<u32>,
    /// Restrict to these base types.
    #[arg(long, value_delimiter = ',')]
    pub types: Vec<String>,
    /// Restrict to these primitives (their test dependencies are added).
    #[arg(long, value_delimiter = ',')]
    pub primitives: Vec<String>,
    #[arg(long)]
    pub no_tests: bool,
    #[arg(long)]
    pub no_cmake: bool,
    /// Also write `generation_plan.yaml` to the output directory.
    #[arg(long)]
    pub emit_plan: bool,
    /// Fill defaults without validating.
    #[arg(long)]
    pub skip_validation: bool,
    /// Emit the CMake regeneration driver.
    #[arg(long)]
    pub with_driver: bool,
}

/// Prints diagnostics at or above the chosen verbosity to stderr.
#[derive(Debug, Clone, Copy)]
pub struct Logger {
    pub min: Level,
}

impl Logger {
    pub fn log(&self, d: &Diagnostic) {
        if d.level >= self.min {
            eprintln!("{d}");
        }
    }

    fn error(&self, e: &StageError) {
        for m in &e.messages {
            self.log(&Diagnostic::error(e.stage.as_str(), m.as_str()));
        }
    }
}

pub fn builtin_schema() -> Schema {
    let doc = yaml::parse_document(BUILTIN_SCHEMA).expect("built-in schema parses");
    load_schema(&doc).expect("built-in schema is valid")
}

fn read_schema(path: &Path) -> Result<Schema, StageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| StageError::new("schema", ErrorKind::Io, format!("{}: {e}", path.display())))?;
    let doc = yaml::parse_document(&text)
        .map_err(|e| StageError::new("schema", ErrorKind::Validation, format!("{}: {e}", path.display())))?;
    load_schema(&doc).map_err(|e| StageError::new("schema", ErrorKind::Validation, format!("{}: {e}", path.display())))
}

fn build_target(args: &GenerateArgs) -> Result<HardwareTarget, StageError> {
    let mut target = if args.detect_host {
        let mut t = detect_host().map_err(|e| StageError::new("target", ErrorKind::Io, e.to_string()))?;
        t = parse_target(&t.flag_texts(), &args.sizes)
            .map(|p| HardwareTarget { source: t.source, ..p })
            .map_err(|e| StageError::new("target", ErrorKind::Arguments, e.to_string()))?;
        t
    } else {
        parse_target(&args.targets, &args.sizes)
            .map_err(|e| StageError::new("target", ErrorKind::Arguments, e.to_string()))?
    };
    target = target.with_opt_in(args.extensions.iter().map(|s| s.trim()));
    Ok(target)
}

fn parse_types(names: &[String]) -> Result<Option<BTreeSet<BaseType>>, StageError> {
    if names.is_empty() {
        return Ok(None);
    }
    let mut out = BTreeSet::new();
    let mut unknown = Vec::new();
    for name in names {
        match BaseType::parse(name.trim()) {
            Some(t) => {
                out.insert(t);
            }
            None => unknown.push(name.trim()),
        }
    }
    if unknown.is_empty() {
        Ok(Some(out))
    } else {
        Err(StageError::new(
            "arguments",
            ErrorKind::Arguments,
            format!("unknown base type(s): {}", unknown.join(", ")),
        ))
    }
}

fn run_generate(args: &GenerateArgs, logger: Logger) -> Result<(), StageError> {
    let schema = match &args.schema {
        Some(path) => read_schema(path)?,
        None => builtin_schema(),
    };
    let templates = match &args.templates {
        Some(dir) => {
            let (set, diagnostics) = TemplateSet::from_dir(dir)
                .map_err(|(path, e)| StageError::new("templates", ErrorKind::Io, format!("{}: {e}", path.display())))?;
            diagnostics.iter().for_each(|d| logger.log(d));
            set
        }
        None => TemplateSet::builtin(),
    };
    let target = build_target(args)?;
    if target.flags.is_empty() {
        logger.log(&Diagnostic::info(
            "target",
            "no target flags given; only scalar and opted-in extensions are enabled",
        ));
    }
    let primitives: BTreeSet<String> = args.primitives.iter().map(|s| s.trim().to_owned()).collect();
    let config = PipelineConfig {
        data_dir: args.data.clone(),
        schema,
        templates,
        target,
        primitives: (!primitives.is_empty()).then_some(primitives),
        options: PlanOptions {
            ctype_filter: parse_types(&args.types)?,
            primitive_filter: None,
        },
        skip_validation: args.skip_validation,
        emit_tests: !args.no_tests,
        emit_cmake: !args.no_cmake,
        build: BuildConfig {
            driver_enabled: args.with_driver,
            data_dir: args.data.display().to_string(),
            ..BuildConfig::default()
        },
    };
    let state = match generate(&config) {
        Ok(state) => state,
        Err((e, diagnostics)) => {
            diagnostics.iter().for_each(|d| logger.log(d));
            return Err(e);
        }
    };
    state.diagnostics.iter().for_each(|d| logger.log(d));

    let io =
        |path: &Path, e: std::io::Error| StageError::new("write", ErrorKind::Io, format!("{}: {e}", path.display()));
    state.manifest.write_to(&args.out).map_err(|(path, e)| io(&path, e))?;
    if args.emit_plan {
        let plan = state.plan.as_ref().expect("generation produced a plan");
        let path = args.out.join(PLAN_FILE);
        std::fs::write(&path, yaml::to_string(&plan.to_report())).map_err(|e| io(&path, e))?;
    }
    logger.log(&Diagnostic::info(
        "write",
        format!("{} files written to {}", state.manifest.len(), args.out.display()),
    ));
    Ok(())
}

/// Runs the tool on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ErrorKind::Arguments.exit_code()
            } else {
                0
            };
        }
    };
    let logger = Logger {
        min: if cli.quiet {
            Level::Error
        } else if cli.verbose {
            Level::Debug
        } else {
            Level::Info
        },
    };
    let Command::Generate(args) = &cli.command;
    match run_generate(args, logger) {
        Ok(()) => 0,
        Err(e) => {
            logger.error(&e);
            e.kind.exit_code()
        }
    }
}
