//! Relevance filtering and variant selection.
//!
//! Given a data model and a hardware target this decides which extensions
//! are generated and, for every (primitive, extension, base type, register
//! width), which of the user's definitions ends up in the library. Only one
//! definition may win per key, otherwise the generated C++ would contain
//! conflicting specializations.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::diag::Diagnostic;
use crate::model::{BaseType, DataModel, DefinitionSpec, ExtensionSpec, ModelError, PrimitiveSpec};
use crate::target::HardwareTarget;
use crate::value::{Mapping, Value};

const STAGE: &str = "select";

/// Restricts a plan to a subset of base types and/or primitives.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlanOptions {
    pub ctype_filter: Option<BTreeSet<BaseType>>,
    /// Primitive names; callers expand this to the test-dependency closure.
    pub primitive_filter: Option<BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanEntry {
    pub category: String,
    pub primitive: String,
    pub extension: String,
    pub ctype: BaseType,
    pub size_bits: u32,
    /// Index into the primitive's `definitions`.
    pub definition_index: usize,
    pub score: usize,
    pub is_native: bool,
    pub line_count: usize,
    pub lscpu_flags: BTreeSet<String>,
}

impl PlanEntry {
    /// Canonical ordering key.
    pub fn key(&self) -> (&str, &str, &str, BaseType, u32) {
        (
            &self.category,
            &self.primitive,
            &self.extension,
            self.ctype,
            self.size_bits,
        )
    }

    pub fn primitive_spec<'m>(&self, model: &'m DataModel) -> Option<&'m PrimitiveSpec> {
        model
            .categories
            .iter()
            .find(|c| c.name == self.category)?
            .primitives
            .iter()
            .find(|p| p.primitive_name == self.primitive)
    }

    pub fn definition<'m>(&self, model: &'m DataModel) -> Option<&'m DefinitionSpec> {
        self.primitive_spec(model)?.definitions.get(self.definition_index)
    }

    pub fn extension_spec<'m>(&self, model: &'m DataModel) -> Option<&'m ExtensionSpec> {
        model.extension(&self.extension)
    }

    /// Number of lanes of the register this entry is generated for.
    pub fn element_count(&self) -> u32 {
        self.size_bits / self.ctype.bits()
    }
}

/// A (primitive, extension, base type) the plan could not cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Omission {
    pub category: String,
    pub primitive: String,
    pub extension: String,
    pub ctype: BaseType,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GenerationPlan {
    /// Ordered by (category, primitive, extension, ctype, size).
    pub entries: Vec<PlanEntry>,
    pub omitted: Vec<Omission>,
    /// Names, sorted.
    pub enabled_extensions: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
}

impl GenerationPlan {
    pub fn entries_for<'a>(&'a self, category: &'a str, primitive: &'a str) -> impl Iterator<Item = &'a PlanEntry> {
        self.entries
            .iter()
            .filter(move |e| e.category == category && e.primitive == primitive)
    }

    /// Report used by `--emit-plan`.
    pub fn to_report(&self) -> Value {
        let mut root = Mapping::new();
        root.insert(
            "enabled_extensions",
            Value::string_list(self.enabled_extensions.iter().cloned()),
        );
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let mut m = Mapping::new();
                m.insert("category", e.category.as_str().into());
                m.insert("primitive", e.primitive.as_str().into());
                m.insert("extension", e.extension.as_str().into());
                m.insert("ctype", e.ctype.name().into());
                m.insert("size_bits", e.size_bits.into());
                m.insert("definition_index", Value::Integer(e.definition_index as i64));
                m.insert("score", Value::Integer(e.score as i64));
                m.insert("lscpu_flags", Value::string_list(e.lscpu_flags.iter().cloned()));
                m.insert("is_native", e.is_native.into());
                m.insert("line_count", Value::Integer(e.line_count as i64));
                Value::Mapping(m)
            })
            .collect();
        root.insert("entries", Value::Sequence(entries));
        let omitted = self
            .omitted
            .iter()
            .map(|o| {
                let mut m = Mapping::new();
                m.insert("category", o.category.as_str().into());
                m.insert("primitive", o.primitive.as_str().into());
                m.insert("extension", o.extension.as_str().into());
                m.insert("ctype", o.ctype.name().into());
                m.insert("reason", o.reason.as_str().into());
                Value::Mapping(m)
            })
            .collect();
        root.insert("omitted", Value::Sequence(omitted));
        Value::Mapping(root)
    }
}

/// Extensions the target enables, sorted by name. Scalar is always in.
pub fn filter_extensions<'m>(model: &'m DataModel, target: &HardwareTarget) -> Vec<&'m ExtensionSpec> {
    model.extensions.iter().filter(|e| target.enables(e)).collect()
}

/// Definitions of `primitive` for `extension` that cover `ctype` and whose
/// extra flags the target provides, in input order.
pub fn admissible_definitions<'p>(
    primitive: &'p PrimitiveSpec,
    extension: &ExtensionSpec,
    ctype: BaseType,
    target: &HardwareTarget,
) -> Vec<(usize, &'p DefinitionSpec)> {
    primitive
        .definitions
        .iter()
        .enumerate()
        .filter(|(_, d)| {
            d.target_extension == extension.extension_name
                && d.ctypes.contains(&ctype)
                && target.has_all(&d.lscpu_flags)
        })
        .collect()
}

/// Result of a selection among candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    /// Position in the candidate slice.
    pub index: usize,
    /// More than one candidate had the winning score and line count.
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelectError {
    #[error("variant selection called without candidates")]
    NoCandidates,
    #[error("candidate {0} requires flags the target lacks")]
    Inadmissible(usize),
}

/// Exchangeable variant-selection policy.
pub trait VariantStrategy {
    fn select(&self, candidates: &[&DefinitionSpec], target: &HardwareTarget) -> Result<Selection, SelectError>;
}

/// Picks the definition matching the most target flags; among equals the one
/// with the fewest non-blank implementation lines; then the first.
#[derive(Debug, Clone, Copy, Default)]
pub struct HighestMatch;

impl VariantStrategy for HighestMatch {
    fn select(&self, candidates: &[&DefinitionSpec], target: &HardwareTarget) -> Result<Selection, SelectError> {
        select_variant(candidates, target)
    }
}

/// Default strategy as a free function.
pub fn select_variant(candidates: &[&DefinitionSpec], target: &HardwareTarget) -> Result<Selection, SelectError> {
    if candidates.is_empty() {
        return Err(SelectError::NoCandidates);
    }
    if let Some(i) = candidates.iter().position(|d| !target.has_all(&d.lscpu_flags)) {
        return Err(SelectError::Inadmissible(i));
    }
    let score = |d: &DefinitionSpec| d.lscpu_flags.intersection(&target.flags).count();
    // Higher score first, then shorter body; min_by_key keeps the first of equals.
    let rank = |d: &DefinitionSpec| (core::cmp::Reverse(score(d)), d.line_count());
    let (index, best) = candidates
        .iter()
        .enumerate()
        .min_by_key(|(_, d)| rank(d))
        .expect("non-empty");
    let best_rank = rank(best);
    let tie = candidates
        .iter()
        .enumerate()
        .any(|(i, d)| i != index && rank(d) == best_rank);
    Ok(Selection { index, tie })
}

/// Builds the generation plan with the default strategy.
pub fn build_plan(
    model: &DataModel,
    target: &HardwareTarget,
    options: &PlanOptions,
) -> Result<GenerationPlan, Vec<ModelError>> {
    build_plan_with(model, target, options, &HighestMatch)
}

pub fn build_plan_with(
    model: &DataModel,
    target: &HardwareTarget,
    options: &PlanOptions,
    strategy: &dyn VariantStrategy,
) -> Result<GenerationPlan, Vec<ModelError>> {
    let errors = model.check_extension_references();
    if !errors.is_empty() {
        return Err(errors);
    }
    let enabled = filter_extensions(model, target);
    let mut plan = GenerationPlan {
        enabled_extensions: enabled.iter().map(|e| e.extension_name.clone()).collect(),
        ..GenerationPlan::default()
    };

    let mut categories: Vec<_> = model.categories.iter().collect();
    categories.sort_by(|a, b| a.name.cmp(&b.name));
    for category in categories {
        let mut primitives: Vec<_> = category.primitives.iter().collect();
        primitives.sort_by(|a, b| a.primitive_name.cmp(&b.primitive_name));
        for primitive in primitives {
            if let Some(filter) = &options.primitive_filter {
                if !filter.contains(&primitive.primitive_name) {
                    continue;
                }
            }
            let ctypes: Vec<BaseType> = primitive
                .ctypes()
                .into_iter()
                .filter(|c| options.ctype_filter.as_ref().is_none_or(|f| f.contains(c)))
                .collect();
            for extension in &enabled {
                for &ctype in &ctypes {
                    plan_key(&mut plan, primitive, extension, ctype, target, strategy).map_err(|e| {
                        alloc::vec![ModelError::Field {
                            context: format!("primitive `{}::{}`", primitive.category, primitive.primitive_name),
                            field: "definitions".into(),
                            message: format!("{e}"),
                        }]
                    })?;
                }
            }
        }
    }
    Ok(plan)
}

fn plan_key(
    plan: &mut GenerationPlan,
    primitive: &PrimitiveSpec,
    extension: &ExtensionSpec,
    ctype: BaseType,
    target: &HardwareTarget,
    strategy: &dyn VariantStrategy,
) -> Result<(), SelectError> {
    let omit = |plan: &mut GenerationPlan, reason: String| {
        plan.omitted.push(Omission {
            category: primitive.category.clone(),
            primitive: primitive.primitive_name.clone(),
            extension: extension.extension_name.clone(),
            ctype,
            reason,
        })
    };
    let candidates = admissible_definitions(primitive, extension, ctype, target);
    if candidates.is_empty() {
        omit(plan, "no admissible definition".into());
        return Ok(());
    }
    let sizes = target.sizes_for(extension, ctype);
    if sizes.is_empty() {
        omit(plan, "no requested register size fits this base type".into());
        return Ok(());
    }
    let mut tie_reported = false;
    for size_bits in sizes {
        let sized: Vec<(usize, &DefinitionSpec)> = candidates
            .iter()
            .copied()
            .filter(|(_, d)| d.supports_size(size_bits))
            .collect();
        if sized.is_empty() {
            omit(plan, format!("no admissible definition for {size_bits}-bit registers"));
            continue;
        }
        let defs: Vec<&DefinitionSpec> = sized.iter().map(|(_, d)| *d).collect();
        let selection = strategy.select(&defs, target)?;
        let (definition_index, chosen) = sized[selection.index];
        if selection.tie && !tie_reported {
            tie_reported = true;
            plan.diagnostics.push(Diagnostic::warn(
                STAGE,
                format!(
                    "{}::{} for {}/{}: several definitions share score {} and {} line(s); using definitions[{}] (first in input order)",
                    primitive.category,
                    primitive.primitive_name,
                    extension.extension_name,
                    ctype,
                    chosen.lscpu_flags.intersection(&target.flags).count(),
                    chosen.line_count(),
                    definition_index
                ),
            ));
        }
        plan.entries.push(PlanEntry {
            category: primitive.category.clone(),
            primitive: primitive.primitive_name.clone(),
            extension: extension.extension_name.clone(),
            ctype,
            size_bits,
            definition_index,
            score: chosen.lscpu_flags.intersection(&target.flags).count(),
            is_native: chosen.is_native,
            line_count: chosen.line_count(),
            lscpu_flags: chosen.lscpu_flags.clone(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Category, DataModel};
    use crate::target::parse_target;
    use alloc::string::ToString;
    use alloc::vec;

    fn def(ext: &str, flags: &[&str], body: &str) -> DefinitionSpec {
        DefinitionSpec {
            target_extension: ext.into(),
            ctypes: vec![BaseType::U16],
            lscpu_flags: flags.iter().map(|f| f.to_string()).collect(),
            is_native: false,
            implementation: body.into(),
            vector_length_bits: vec![],
            note: String::new(),
            extra: Mapping::new(),
        }
    }

    const PEXT: &str = "return _pext_u64(_mm_movemask_epi8(mask), 0xAAAA);";
    const PACK: &str = "return _mm_movemask_epi8(_mm_packs_epi16(mask, _mm_setzero_si128()));";

    #[test]
    fn pext_wins_with_bmi2() {
        let t = parse_target(&["sse", "sse2", "bmi2"], &[]).unwrap();
        let pext = def("sse", &["bmi2"], PEXT);
        let pack = def("sse", &[], PACK);
        let s = select_variant(&[&pext, &pack], &t).unwrap();
        assert_eq!(s, Selection { index: 0, tie: false });
    }

    #[test]
    fn single_candidate() {
        let t = parse_target::<&str>(&[], &[]).unwrap();
        let d = def("sse", &[], PACK);
        assert_eq!(select_variant(&[&d], &t).unwrap().index, 0);
    }

    #[test]
    fn shorter_body_breaks_score_tie() {
        let t = parse_target(&["sse", "sse2", "ssse3", "bmi2"], &[]).unwrap();
        let seven = def("sse", &["ssse3"], "a;\nb;\nc;\nd;\ne;\nf;\ng;");
        let three = def("sse", &["bmi2"], "a;\n\n b;\nc;\n");
        let s = select_variant(&[&seven, &three], &t).unwrap();
        assert_eq!(s, Selection { index: 1, tie: false });
    }

    #[test]
    fn full_tie_takes_first_and_flags_it() {
        let t = parse_target::<&str>(&[], &[]).unwrap();
        let a = def("sse", &[], "x;\ny;");
        let b = def("sse", &[], "u;\nv;");
        assert_eq!(
            select_variant(&[&a, &b], &t).unwrap(),
            Selection { index: 0, tie: true }
        );
    }

    #[test]
    fn precondition_violations() {
        let t = parse_target::<&str>(&[], &[]).unwrap();
        assert_eq!(select_variant(&[], &t), Err(SelectError::NoCandidates));
        let needs_bmi2 = def("sse", &["bmi2"], PEXT);
        assert_eq!(select_variant(&[&needs_bmi2], &t), Err(SelectError::Inadmissible(0)));
    }

    fn ext(name: &str, flags: &[&str], bits: u32) -> ExtensionSpec {
        ExtensionSpec {
            vendor: "v".into(),
            extension_name: name.into(),
            description: String::new(),
            lscpu_flags: flags.iter().map(|f| f.to_string()).collect(),
            includes: vec![],
            register_type_expr: "r".into(),
            mask_type_expr: "m".into(),
            imask_type_expr: "uint64_t".into(),
            default_size_bits: bits,
            arch_flag_map: Default::default(),
            custom_fields: Mapping::new(),
        }
    }

    fn to_integral(defs: Vec<DefinitionSpec>) -> PrimitiveSpec {
        PrimitiveSpec {
            primitive_name: "to_integral".into(),
            functor_name: "to_integral".into(),
            category: "mask".into(),
            brief_description: String::new(),
            parameters: vec![],
            returns: crate::model::ReturnSpec {
                ctype: crate::model::TypeToken::IntegralMask,
                description: String::new(),
                extra: Mapping::new(),
            },
            definitions: defs,
            tests: vec![],
            extra: Mapping::new(),
        }
    }

    fn model() -> DataModel {
        let mut scalar_def = def("scalar", &[], "return mask;");
        scalar_def.is_native = true;
        let mut fpga_def = def("fpga_generic", &[], "loop");
        fpga_def.ctypes = vec![BaseType::U16];
        DataModel::new(
            vec![
                ext("scalar", &[], 64),
                ext("sse", &["sse", "sse2"], 128),
                ext("avx2", &["avx", "avx2"], 256),
                ext("fpga_generic", &[], 0),
            ],
            vec![Category {
                name: "mask".into(),
                header: Mapping::new(),
                primitives: vec![to_integral(vec![
                    def("sse", &["bmi2"], PEXT),
                    def("sse", &[], PACK),
                    scalar_def,
                    fpga_def,
                ])],
            }],
        )
        .unwrap()
    }

    #[test]
    fn extension_enablement() {
        let m = model();
        let names = |t: &HardwareTarget| -> Vec<String> {
            filter_extensions(&m, t)
                .iter()
                .map(|e| e.extension_name.clone())
                .collect()
        };
        assert_eq!(names(&parse_target(&["sse", "sse2"], &[]).unwrap()), ["scalar", "sse"]);
        assert_eq!(names(&parse_target::<&str>(&[], &[]).unwrap()), ["scalar"]);
        let opt = parse_target::<&str>(&[], &[]).unwrap().with_opt_in(["fpga_generic"]);
        assert_eq!(names(&opt), ["fpga_generic", "scalar"]);
    }

    #[test]
    fn admissibility_follows_target_flags() {
        let m = model();
        let p = &m.categories[0].primitives[0];
        let sse = m.extension("sse").unwrap();
        let with = parse_target(&["sse", "sse2", "bmi2"], &[]).unwrap();
        let without = parse_target(&["sse", "sse2"], &[]).unwrap();
        let idx = |t| -> Vec<usize> {
            admissible_definitions(p, sse, BaseType::U16, t)
                .iter()
                .map(|(i, _)| *i)
                .collect()
        };
        assert_eq!(idx(&with), [0, 1]);
        assert_eq!(idx(&without), [1]);
        let avx2 = m.extension("avx2").unwrap();
        assert!(admissible_definitions(p, avx2, BaseType::U16, &with).is_empty());
    }

    #[test]
    fn plan_picks_pext_and_records_omissions() {
        let m = model();
        let t = parse_target(&["sse", "sse2", "avx", "avx2", "bmi2"], &[]).unwrap();
        let plan = build_plan(&m, &t, &PlanOptions::default()).unwrap();
        let sse = plan.entries.iter().find(|e| e.extension == "sse").unwrap();
        assert_eq!(sse.definition_index, 0);
        assert_eq!(sse.score, 1);
        assert_eq!(plan.omitted.len(), 1);
        assert_eq!(plan.omitted[0].extension, "avx2");
        let scalar = plan.entries.iter().find(|e| e.extension == "scalar").unwrap();
        assert_eq!(scalar.size_bits, 16);
        assert_eq!(scalar.element_count(), 1);
    }

    #[test]
    fn size_polymorphic_gets_five_sizes() {
        let m = model();
        let t = parse_target::<&str>(&[], &[128, 256, 512, 1024, 2048])
            .unwrap()
            .with_opt_in(["fpga_generic"]);
        let plan = build_plan(&m, &t, &PlanOptions::default()).unwrap();
        let sizes: Vec<u32> = plan
            .entries
            .iter()
            .filter(|e| e.extension == "fpga_generic")
            .map(|e| e.size_bits)
            .collect();
        assert_eq!(sizes, [128, 256, 512, 1024, 2048]);
    }

    #[test]
    fn empty_model_gives_empty_plan() {
        let plan = build_plan(
            &DataModel::default(),
            &parse_target(&["sse"], &[]).unwrap(),
            &PlanOptions::default(),
        )
        .unwrap();
        assert!(plan.entries.is_empty());
        assert!(plan.omitted.is_empty());
    }

    #[test]
    fn filters_restrict_plan() {
        let m = model();
        let t = parse_target(&["sse", "sse2"], &[]).unwrap();
        let opts = PlanOptions {
            ctype_filter: Some([BaseType::U32].into_iter().collect()),
            primitive_filter: None,
        };
        assert!(build_plan(&m, &t, &opts).unwrap().entries.is_empty());
        let opts = PlanOptions {
            ctype_filter: None,
            primitive_filter: Some(["hadd".to_string()].into_iter().collect()),
        };
        assert!(build_plan(&m, &t, &opts).unwrap().entries.is_empty());
    }
}
