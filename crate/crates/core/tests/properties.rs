use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use tslgen_core::schema::{enrich, validate};
use tslgen_core::select::{admissible_definitions, build_plan};
use tslgen_core::target::parse_target;
use tslgen_core::testgraph::{build_dependency_graph, order_tests};
use tslgen_core::{
    BaseType, Category, DataModel, ExtensionSpec, FieldKind, FieldRule, HardwareTarget, Mapping, PlanOptions,
    PrimitiveSpec, TestNode, Value,
};

const FLAG_POOL: [&str; 8] = ["sse", "sse2", "ssse3", "avx", "avx2", "avx512f", "bmi2", "popcnt"];
const CTYPES: [BaseType; 4] = [BaseType::U8, BaseType::U16, BaseType::U32, BaseType::F64];

fn map(entries: Vec<(&str, Value)>) -> Value {
    let mut m = Mapping::new();
    for (k, v) in entries {
        m.insert(k, v);
    }
    Value::Mapping(m)
}

fn extension(name: &str, flags: &[&str], bits: i64) -> ExtensionSpec {
    ExtensionSpec::from_document(&map(vec![
        ("vendor", "test".into()),
        ("extension_name", name.into()),
        ("lscpu_flags", Value::string_list(flags.iter().copied())),
        ("register_type", "reg".into()),
        ("mask_type", "mask".into()),
        ("default_size_bits", bits.into()),
    ]))
    .unwrap()
}

fn extensions() -> Vec<ExtensionSpec> {
    vec![
        extension("scalar", &[], 64),
        extension("sse", &["sse", "sse2"], 128),
        extension("avx2", &["avx", "avx2"], 256),
        extension("avx512", &["avx512f"], 512),
        extension("fpga", &[], 0),
    ]
}

const EXT_NAMES: [&str; 5] = ["scalar", "sse", "avx2", "avx512", "fpga"];

#[derive(Debug, Clone)]
struct DefShape {
    ext: usize,
    ctypes: Vec<usize>,
    flags: Vec<usize>,
    lines: usize,
    sizes: Vec<u32>,
}

fn def_shape() -> impl Strategy<Value = DefShape> {
    (
        0..EXT_NAMES.len(),
        prop::collection::btree_set(0..CTYPES.len(), 1..=3),
        prop::collection::btree_set(0..FLAG_POOL.len(), 0..=2),
        1usize..5,
        prop_oneof![
            3 => Just(vec![]),
            1 => prop::collection::vec(prop::sample::select(vec![128u32, 256, 512, 1024]), 1..=2),
        ],
    )
        .prop_map(|(ext, ctypes, flags, lines, sizes)| DefShape {
            ext,
            ctypes: ctypes.into_iter().collect(),
            flags: flags.into_iter().collect(),
            lines,
            sizes,
        })
}

fn primitive(name: &str, defs: &[DefShape]) -> PrimitiveSpec {
    let defs = defs
        .iter()
        .map(|d| {
            let body: Vec<String> = (0..d.lines).map(|i| format!("line{i};")).collect();
            map(vec![
                ("target_extension", EXT_NAMES[d.ext].into()),
                ("ctypes", Value::string_list(d.ctypes.iter().map(|&c| CTYPES[c].name()))),
                ("lscpu_flags", Value::string_list(d.flags.iter().map(|&f| FLAG_POOL[f]))),
                ("implementation", body.join("\n").into()),
                (
                    "vector_length_bits",
                    Value::Sequence(d.sizes.iter().map(|&s| s.into()).collect()),
                ),
            ])
        })
        .collect();
    PrimitiveSpec::from_document(
        "cat",
        &map(vec![
            ("primitive_name", name.into()),
            ("returns", map(vec![("ctype", "register_t".into())])),
            ("definitions", Value::Sequence(defs)),
        ]),
    )
    .unwrap()
}

fn model_strategy() -> impl Strategy<Value = DataModel> {
    prop::collection::vec(prop::collection::vec(def_shape(), 1..6), 1..4).prop_map(|prims| {
        let primitives = prims
            .iter()
            .enumerate()
            .map(|(i, defs)| primitive(&format!("p{i}"), defs))
            .collect();
        DataModel::new(
            extensions(),
            vec![Category {
                name: "cat".into(),
                header: Mapping::new(),
                primitives,
            }],
        )
        .unwrap()
    })
}

fn target_strategy() -> impl Strategy<Value = HardwareTarget> {
    (
        prop::collection::btree_set(prop::sample::select(FLAG_POOL.to_vec()), 0..=FLAG_POOL.len()),
        any::<bool>(),
        prop::collection::btree_set(prop::sample::select(vec![128u32, 256, 512, 1024, 2048]), 0..3),
    )
        .prop_map(|(flags, fpga, sizes)| {
            let flags: Vec<&str> = flags.into_iter().collect();
            let sizes: Vec<u32> = sizes.into_iter().collect();
            let target = parse_target(&flags, &sizes).unwrap();
            if fpga {
                target.with_opt_in(["fpga"])
            } else {
                target
            }
        })
}

/// Oracle for enablement, written from the rule rather than the code.
fn oracle_enabled(ext: &ExtensionSpec, target: &HardwareTarget) -> bool {
    match (ext.extension_name.as_str(), ext.default_size_bits) {
        ("scalar", _) => true,
        (name, 0) => target.opt_in_extensions.contains(name),
        _ => ext.lscpu_flags.iter().all(|f| target.flags.contains(f)),
    }
}

fn oracle_sizes(ext: &ExtensionSpec, ctype: BaseType, target: &HardwareTarget) -> Vec<u32> {
    if ext.extension_name == "scalar" {
        return vec![ctype.bits()];
    }
    if ext.default_size_bits != 0 {
        return vec![ext.default_size_bits];
    }
    let base: Vec<u32> = if target.requested_sizes_bits.is_empty() {
        vec![128, 256, 512, 1024, 2048]
    } else {
        target.requested_sizes_bits.clone()
    };
    base.into_iter().filter(|s| s % ctype.bits() == 0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn plan_entries_are_admissible_unique_and_optimal(
        model in model_strategy(),
        target in target_strategy(),
    ) {
        let plan = build_plan(&model, &target, &PlanOptions::default()).unwrap();
        let mut keys = BTreeSet::new();
        for entry in &plan.entries {
            prop_assert!(keys.insert((
                entry.primitive.clone(),
                entry.extension.clone(),
                entry.ctype,
                entry.size_bits
            )));
            let ext = model.extension(&entry.extension).unwrap();
            prop_assert!(oracle_enabled(ext, &target));
            let prim = entry.primitive_spec(&model).unwrap();
            let chosen = &prim.definitions[entry.definition_index];
            prop_assert_eq!(&chosen.target_extension, &entry.extension);
            prop_assert!(chosen.ctypes.contains(&entry.ctype));
            prop_assert!(chosen.lscpu_flags.is_subset(&target.flags));
            prop_assert!(oracle_sizes(ext, entry.ctype, &target).contains(&entry.size_bits));

            // Independent arg-max: highest score, then fewest lines, then first.
            let mut best: Option<(usize, usize, usize)> = None;
            for (i, d) in prim.definitions.iter().enumerate() {
                let ok = d.target_extension == entry.extension
                    && d.ctypes.contains(&entry.ctype)
                    && d.lscpu_flags.iter().all(|f| target.flags.contains(f))
                    && (d.vector_length_bits.is_empty()
                        || d.vector_length_bits.contains(&entry.size_bits));
                if !ok {
                    continue;
                }
                let score = d.lscpu_flags.iter().filter(|f| target.flags.contains(*f)).count();
                let lines = d.implementation.lines().filter(|l| !l.trim().is_empty()).count();
                let better = match best {
                    None => true,
                    Some((_, s, l)) => score > s || (score == s && lines < l),
                };
                if better {
                    best = Some((i, score, lines));
                }
            }
            prop_assert_eq!(best.map(|b| b.0), Some(entry.definition_index));
        }
    }

    #[test]
    fn plan_is_complete(model in model_strategy(), target in target_strategy()) {
        let plan = build_plan(&model, &target, &PlanOptions::default()).unwrap();
        for ext in model.extensions.iter().filter(|e| oracle_enabled(e, &target)) {
            for prim in model.primitives() {
                for ctype in prim.ctypes() {
                    let admissible = admissible_definitions(prim, ext, ctype, &target);
                    for size in oracle_sizes(ext, ctype, &target) {
                        let fits = admissible.iter().any(|(_, d)| d.supports_size(size));
                        let present = plan.entries.iter().any(|e| {
                            e.primitive == prim.primitive_name
                                && e.extension == ext.extension_name
                                && e.ctype == ctype
                                && e.size_bits == size
                        });
                        prop_assert_eq!(fits, present);
                    }
                }
            }
        }
    }

    #[test]
    fn adding_flags_never_disables_an_extension(
        model in model_strategy(),
        target in target_strategy(),
        extra in prop::sample::select(FLAG_POOL.to_vec()),
    ) {
        let before = build_plan(&model, &target, &PlanOptions::default()).unwrap();
        let mut bigger = target.clone();
        bigger.flags.insert(extra.to_string());
        let after = build_plan(&model, &bigger, &PlanOptions::default()).unwrap();
        let before: BTreeSet<_> = before.enabled_extensions.into_iter().collect();
        let after: BTreeSet<_> = after.enabled_extensions.into_iter().collect();
        prop_assert!(before.is_subset(&after));
    }

    #[test]
    fn plan_is_deterministic(model in model_strategy(), target in target_strategy()) {
        let a = build_plan(&model, &target, &PlanOptions::default()).unwrap();
        let b = build_plan(&model, &target, &PlanOptions::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn target_parsing_is_idempotent(
        flags in prop::collection::vec("[A-Za-z0-9_]{1,8}", 0..10),
        pad in " {0,2}",
    ) {
        let padded: Vec<String> = flags.iter().map(|f| format!("{pad}{f}{pad}")).collect();
        let once = parse_target(&padded, &[]).unwrap();
        let twice = parse_target(&once.flag_texts(), &[]).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert!(once.flags.iter().all(|f| f.chars().all(|c| !c.is_uppercase())));
    }
}

fn rules() -> Vec<FieldRule> {
    vec![
        FieldRule::required("name", FieldKind::Text),
        FieldRule::optional("count", FieldKind::Integer, 0i64.into()),
        FieldRule::optional("enabled", FieldKind::Boolean, true.into()),
        FieldRule::optional("flags", FieldKind::FlagList, Value::Sequence(vec![])),
        FieldRule::optional("items", FieldKind::RecordList, Value::Sequence(vec![])).with_children(vec![
            FieldRule::required("id", FieldKind::Text),
            FieldRule::optional("note", FieldKind::Text, "".into()),
        ]),
    ]
}

fn document_strategy() -> impl Strategy<Value = Value> {
    (
        "[a-z]{1,6}",
        prop::option::of(any::<i32>()),
        prop::option::of(any::<bool>()),
        prop::option::of(prop::collection::vec("[a-z0-9]{1,5}", 0..3)),
        prop::option::of(prop::collection::vec(
            ("[a-z]{1,4}", prop::option::of("[a-z ]{0,6}")),
            0..3,
        )),
        prop::collection::btree_map("x_[a-z]{1,5}", "[a-z]{0,5}", 0..3),
    )
        .prop_map(|(name, count, enabled, flags, items, unknown)| {
            let mut m = Mapping::new();
            m.insert("name", name.into());
            if let Some(c) = count {
                m.insert("count", i64::from(c).into());
            }
            if let Some(e) = enabled {
                m.insert("enabled", e.into());
            }
            if let Some(f) = flags {
                m.insert("flags", Value::string_list(f));
            }
            if let Some(items) = items {
                let seq = items
                    .into_iter()
                    .map(|(id, note)| {
                        let mut item = Mapping::new();
                        item.insert("id", id.into());
                        if let Some(n) = note {
                            item.insert("note", n.into());
                        }
                        Value::Mapping(item)
                    })
                    .collect();
                m.insert("items", Value::Sequence(seq));
            }
            for (k, v) in unknown {
                m.insert(k, v.into());
            }
            Value::Mapping(m)
        })
}

proptest! {
    #[test]
    fn enrichment_is_idempotent(doc in document_strategy()) {
        let rules = rules();
        prop_assert!(validate("doc", &doc, &rules).is_ok());
        let once = enrich(&doc, &rules).unwrap();
        let twice = enrich(&once, &rules).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert!(validate("doc", &once, &rules).is_ok());
    }

    #[test]
    fn enrichment_keeps_present_and_unknown_fields(doc in document_strategy()) {
        let rules = rules();
        let enriched = enrich(&doc, &rules).unwrap();
        let before = doc.as_mapping().unwrap();
        let after = enriched.as_mapping().unwrap();
        for (key, value) in before.iter() {
            if key == "items" {
                continue;
            }
            prop_assert_eq!(after.get(key), Some(value));
        }
        for rule in &rules {
            prop_assert!(after.contains_key(&rule.name));
        }
    }

    #[test]
    fn missing_mandatory_field_is_named(doc in document_strategy()) {
        let mut doc = doc;
        doc.as_mapping_mut().unwrap().remove("name");
        let report = validate("doc", &doc, &rules());
        prop_assert_eq!(report.errors.len(), 1);
        prop_assert_eq!(report.errors[0].field.as_str(), "name");
    }
}

fn graph_node(primitive: &str, ext: &str, requires: &[String]) -> TestNode {
    TestNode {
        category: "cat".into(),
        primitive_name: primitive.into(),
        test_name: "default".into(),
        extension_name: ext.into(),
        ctype: BaseType::U32,
        size_bits: 128,
        implementation: String::new(),
        requires: requires.to_vec(),
        is_unsafe: false,
        untested_requirements: vec![],
    }
}

/// Repeatedly picks the smallest ready node by a full scan.
fn oracle_order(nodes: &[TestNode]) -> Option<Vec<(String, String)>> {
    let configs: BTreeSet<(String, String)> = nodes
        .iter()
        .map(|n| (n.extension_name.clone(), n.primitive_name.clone()))
        .collect();
    let deps: Vec<BTreeSet<(String, String)>> = nodes
        .iter()
        .map(|n| {
            n.requires
                .iter()
                .filter(|r| **r != n.primitive_name)
                .map(|r| (n.extension_name.clone(), r.clone()))
                .filter(|k| configs.contains(k))
                .collect()
        })
        .collect();
    let mut done: BTreeSet<(String, String)> = BTreeSet::new();
    let mut emitted = vec![false; nodes.len()];
    let mut out = Vec::new();
    while out.len() < nodes.len() {
        let next = (0..nodes.len())
            .filter(|&i| !emitted[i] && deps[i].is_subset(&done))
            .min_by_key(|&i| (nodes[i].primitive_name.clone(), nodes[i].extension_name.clone()))?;
        emitted[next] = true;
        let key = (nodes[next].extension_name.clone(), nodes[next].primitive_name.clone());
        out.push(key.clone());
        if nodes
            .iter()
            .enumerate()
            .filter(|(i, n)| n.extension_name == key.0 && n.primitive_name == key.1 && !emitted[*i])
            .count()
            == 0
        {
            done.insert(key);
        }
    }
    Some(out)
}

fn graph_strategy() -> impl Strategy<Value = Vec<TestNode>> {
    let names: Vec<String> = (0..6).map(|i| format!("p{i}")).collect();
    prop::collection::btree_map(
        (0..6usize, prop::sample::select(vec!["sse", "avx2"])),
        prop::collection::btree_set(0..7usize, 0..3),
        1..10,
    )
    .prop_map(move |spec| {
        spec.into_iter()
            .map(|((p, ext), reqs)| {
                // index 6 names a primitive that never has a test
                let reqs: Vec<String> = reqs
                    .into_iter()
                    .map(|r| names.get(r).cloned().unwrap_or_else(|| "ghost".into()))
                    .collect();
                graph_node(&names[p], ext, &reqs)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn test_order_matches_oracle(nodes in graph_strategy()) {
        let expected = oracle_order(&nodes);
        match build_dependency_graph(nodes.clone()) {
            Ok(graph) => {
                let got: Vec<(String, String)> = order_tests(&graph)
                    .into_iter()
                    .map(|n| (n.extension_name, n.primitive_name))
                    .collect();
                prop_assert_eq!(Some(got), expected);
                let present: BTreeMap<(String, String), ()> = nodes
                    .iter()
                    .map(|n| ((n.extension_name.clone(), n.primitive_name.clone()), ()))
                    .collect();
                for n in &graph.nodes {
                    let lacks = n.requires.iter().any(|r| {
                        *r != n.primitive_name
                            && !present.contains_key(&(n.extension_name.clone(), r.clone()))
                    });
                    prop_assert_eq!(n.is_unsafe, lacks);
                }
            }
            Err(err) => {
                prop_assert!(expected.is_none(), "unexpected cycle: {err}");
                prop_assert!(err.to_string().contains(" -> "));
            }
        }
    }
}
