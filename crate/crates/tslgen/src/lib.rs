//! File-system, template and command-line side of the TSL generator.
//!
//! [`pipeline::generate`] turns a data directory into an in-memory
//! [`manifest::FileManifest`]; [`cli::run`] wraps it with argument parsing,
//! logging and writing.

pub mod buildgen;
pub mod cli;
pub mod host;
pub mod loader;
pub mod manifest;
pub mod pipeline;
pub mod render;
pub mod templates;
pub mod testemit;
pub mod yaml;
