//! Pure generation logic for the TSL generator.
//!
//! Everything here works on in-memory values: the dynamic [`Value`] tree the
//! YAML front-end produces, the schema used to validate and enrich it, the
//! typed data model, hardware targets, the variant-selection plan and the
//! dependency-ordered test graph. File IO, host probing and template
//! rendering live in the `tslgen` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod diag;
pub mod model;
pub mod schema;
pub mod select;
pub mod target;
pub mod testgraph;
pub mod value;

pub use diag::{Diagnostic, Level};
pub use model::{
    BaseType, Category, DataModel, DefinitionSpec, ExtensionSpec, ModelError, ParameterSpec, PrimitiveSpec, TestSpec,
    TypeToken,
};
pub use schema::{FieldKind, FieldRule, Issue, Schema, SchemaError, ValidationReport};
pub use select::{GenerationPlan, Omission, PlanEntry, PlanOptions, VariantStrategy};
pub use target::{HardwareTarget, TargetError, TargetSource};
pub use testgraph::{TestGraph, TestGraphError, TestNode};
pub use value::{Mapping, Value};
